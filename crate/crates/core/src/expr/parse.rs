//! Recursive-descent parser for the textual expression grammar:
//!
//! ```text
//! expr    := term (('+'|'-') term)*
//! term    := factor ('*' factor)*
//! factor  := ('+'|'-') factor | atom ('^' uint)*
//! atom    := scalar | 'I' | gen | 'adj(' expr ')' | '(' expr ')'
//! gen     := 'R' '(' complex ',' vector ')'
//! vector  := '[' real (',' real)* ']'
//! complex := real | real 'i' | real ('+'|'-') real 'i'
//! ```
//!
//! Whitespace is ignored everywhere. A scalar is a real number optionally
//! followed by `i`.

use num_complex::Complex64;

use super::{Expr, ExprError, Generator};
use crate::symplectic::TestVector;

/// Parses `text` into a merged (but not simplified) expression.
pub fn parse(text: &str) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src: text,
        bytes: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            position: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{}'", c as char)))
        }
    }

    fn starts_with(&mut self, kw: &str) -> bool {
        self.skip_ws();
        self.src[self.pos..].starts_with(kw)
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.term()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.factor()?;
        while self.eat(b'*') {
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            return Ok(-&self.factor()?);
        }
        if self.eat(b'+') {
            return self.factor();
        }
        let mut base = self.atom()?;
        while self.eat(b'^') {
            let k = self.uint()?;
            base = base.pow(k);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'I') => {
                self.pos += 1;
                Ok(Expr::identity())
            }
            Some(b'R') => self.generator().map(Expr::generator),
            Some(b'a') if self.starts_with("adj") => {
                self.pos += 3;
                self.expect(b'(')?;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e.adjoint())
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let x = self.number()?;
                if self.eat(b'i') {
                    Ok(Expr::scalar(Complex64::new(0.0, x)))
                } else {
                    Ok(Expr::scalar(Complex64::new(x, 0.0)))
                }
            }
            Some(c) => Err(self.error(format!("unexpected character '{}'", c as char))),
        }
    }

    fn generator(&mut self) -> Result<Generator, ExprError> {
        self.skip_ws();
        let start = self.pos;
        self.expect(b'R')?;
        self.expect(b'(')?;
        let z = self.complex()?;
        self.expect(b',')?;
        let f = self.vector()?;
        self.expect(b')')?;
        Generator::new(z, f).map_err(|e| match e {
            ExprError::Domain { .. } => ExprError::Domain {
                generator: self.src[start..self.pos].split_whitespace().collect(),
            },
            other => other,
        })
    }

    fn complex(&mut self) -> Result<Complex64, ExprError> {
        let a = self.real()?;
        if self.eat(b'i') {
            return Ok(Complex64::new(0.0, a));
        }
        let sign = if self.eat(b'+') {
            1.0
        } else if self.eat(b'-') {
            -1.0
        } else {
            return Ok(Complex64::new(a, 0.0));
        };
        let b = self.number()?;
        if !self.eat(b'i') {
            return Err(self.error("expected 'i' after imaginary part"));
        }
        Ok(Complex64::new(a, sign * b))
    }

    fn vector(&mut self) -> Result<TestVector, ExprError> {
        self.expect(b'[')?;
        let mut coords = vec![self.real()?];
        while self.eat(b',') {
            coords.push(self.real()?);
        }
        self.expect(b']')?;
        Ok(TestVector::new(coords))
    }

    fn real(&mut self) -> Result<f64, ExprError> {
        if self.eat(b'-') {
            Ok(-self.number()?)
        } else {
            self.eat(b'+');
            self.number()
        }
    }

    fn number(&mut self) -> Result<f64, ExprError> {
        self.skip_ws();
        let start = self.pos;
        let b = self.bytes;
        let digits = |p: &mut usize| {
            let s = *p;
            while *p < b.len() && b[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - s
        };
        let mut p = self.pos;
        let mut n = digits(&mut p);
        if p < b.len() && b[p] == b'.' {
            p += 1;
            n += digits(&mut p);
        }
        if n == 0 {
            return Err(self.error("expected a number"));
        }
        if p < b.len() && (b[p] == b'e' || b[p] == b'E') {
            let mut q = p + 1;
            if q < b.len() && (b[q] == b'+' || b[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) > 0 {
                p = q;
            }
        }
        self.pos = p;
        let x: f64 = self.src[start..p].parse().map_err(|_| ExprError::Syntax {
            position: start,
            message: "malformed number".into(),
        })?;
        if !x.is_finite() {
            return Err(ExprError::Syntax {
                position: start,
                message: "number out of range".into(),
            });
        }
        Ok(x)
    }

    fn uint(&mut self) -> Result<u32, ExprError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.src[start..self.pos].parse().map_err(|_| ExprError::Syntax {
            position: start,
            message: "expected an unsigned integer exponent".into(),
        })
    }
}
