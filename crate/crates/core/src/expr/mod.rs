//! Noncommutative *-algebra expressions over resolvent symbols `R(z, f)`.
//!
//! An [`Expr`] is a finite sum of complex coefficients times ordered words of
//! [`Generator`]s; the empty word is the identity `I`. Terms are always kept
//! merged and sorted (lexicographically on words), so structural equality is
//! plain `==`.
//!
//! Only identities that shorten words or canonicalize generators are used for
//! rewriting (see [`simplify`]); the commutation and additivity relations are
//! exported as residual expressions in [`relations`] and certified
//! numerically by the `verify` module.

mod parse;
mod print;
pub mod relations;
pub mod sample;
mod simplify;

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

use crate::symplectic::{SymplecticError, SymplecticSpace, TestVector};

pub use parse::parse;
pub use simplify::{equal_symbolic, simplify, SymbolicEquality};

/// Absolute cutoff below which a merged coefficient counts as cancelled.
pub const MERGE_CUTOFF: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("domain error in {generator}: Re(z) must be nonzero")]
    Domain { generator: String },
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
    #[error("parameters must satisfy {0}")]
    Parameter(&'static str),
    #[error(transparent)]
    Space(#[from] SymplecticError),
}

pub(crate) fn clean(c: Complex64) -> Complex64 {
    Complex64::new(c.re + 0.0, c.im + 0.0)
}

/// The symbol `R(z, f)`: the pseudo-resolvent in direction `f`, analytically
/// continued to `z ∈ ℂ ∖ iℝ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    z: Complex64,
    f: TestVector,
}

impl Eq for Generator {}

impl Generator {
    pub fn new(z: Complex64, f: TestVector) -> Result<Self, ExprError> {
        if !z.re.is_finite() || !z.im.is_finite() || f.coords().iter().any(|x| !x.is_finite()) {
            return Err(ExprError::NonFinite {
                context: format!("R({z},{f})"),
            });
        }
        let g = Generator { z: clean(z), f };
        if g.z.re == 0.0 {
            return Err(ExprError::Domain {
                generator: g.to_string(),
            });
        }
        Ok(g)
    }

    /// Real spectral parameter shorthand.
    pub fn real(lambda: f64, f: TestVector) -> Result<Self, ExprError> {
        Self::new(Complex64::new(lambda, 0.0), f)
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn f(&self) -> &TestVector {
        &self.f
    }

    /// `R(z, f)* = R(-z̄, f)`.
    pub fn adjoint(&self) -> Generator {
        Generator {
            z: clean(-self.z.conj()),
            f: self.f.clone(),
        }
    }

    fn total_cmp(&self, other: &Generator) -> Ordering {
        self.z
            .re
            .total_cmp(&other.z.re)
            .then(self.z.im.total_cmp(&other.z.im))
            .then_with(|| self.f.total_cmp(&other.f))
    }
}

impl Ord for Generator {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }
}

impl PartialOrd for Generator {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Coefficient times an ordered product of generators.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: Complex64,
    pub word: Vec<Generator>,
}

impl Term {
    pub fn new(coeff: Complex64, word: Vec<Generator>) -> Self {
        Term {
            coeff: clean(coeff),
            word,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Expr {
    terms: Vec<Term>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr { terms: Vec::new() }
    }

    pub fn identity() -> Self {
        Expr::scalar(Complex64::new(1.0, 0.0))
    }

    pub fn scalar(c: Complex64) -> Self {
        Expr::from_terms(vec![Term::new(c, Vec::new())])
    }

    pub fn generator(g: Generator) -> Self {
        Expr::from_terms(vec![Term::new(Complex64::new(1.0, 0.0), vec![g])])
    }

    pub fn word(coeff: Complex64, word: Vec<Generator>) -> Self {
        Expr::from_terms(vec![Term::new(coeff, word)])
    }

    /// Sorts terms into canonical order and merges equal words.
    ///
    /// A single term is dropped only if its coefficient is exactly zero;
    /// a merged group is dropped if its sum falls below [`MERGE_CUTOFF`].
    pub fn from_terms(mut terms: Vec<Term>) -> Self {
        terms.sort_by(|a, b| a.word.cmp(&b.word));
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        let mut group = 1usize;
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.word == t.word => {
                    last.coeff += t.coeff;
                    group += 1;
                }
                _ => {
                    Self::retire(&mut merged, group);
                    group = 1;
                    merged.push(t);
                }
            }
        }
        Self::retire(&mut merged, group);
        Expr { terms: merged }
    }

    fn retire(merged: &mut Vec<Term>, group: usize) {
        if let Some(last) = merged.last_mut() {
            last.coeff = clean(last.coeff);
            let dead = if group > 1 {
                last.coeff.norm() <= MERGE_CUTOFF
            } else {
                last.coeff == Complex64::new(0.0, 0.0)
            };
            if dead {
                merged.pop();
            }
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Longest word length appearing in the expression.
    pub fn degree(&self) -> usize {
        self.terms.iter().map(|t| t.word.len()).max().unwrap_or(0)
    }

    /// Every generator appearing anywhere, in canonical order, deduplicated.
    pub fn generators(&self) -> Vec<Generator> {
        let mut out: Vec<Generator> = self.terms.iter().flat_map(|t| t.word.iter().cloned()).collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn scale(&self, c: Complex64) -> Expr {
        Expr::from_terms(
            self.terms
                .iter()
                .map(|t| Term::new(t.coeff * c, t.word.clone()))
                .collect(),
        )
    }

    pub fn pow(&self, k: u32) -> Expr {
        (0..k).fold(Expr::identity(), |acc, _| &acc * self)
    }

    /// Anti-linear, word-reversing involution with `R(z,f) ↦ R(-z̄,f)`.
    pub fn adjoint(&self) -> Expr {
        Expr::from_terms(
            self.terms
                .iter()
                .map(|t| Term::new(t.coeff.conj(), t.word.iter().rev().map(Generator::adjoint).collect()))
                .collect(),
        )
    }

    /// Applies `δ_f` by the Leibniz rule with `δ_f(R(w,g)) = σ(f,g) R(w,g)²`.
    pub fn derivation(&self, space: &SymplecticSpace, f: &TestVector) -> Result<Expr, ExprError> {
        space.check_vector(f)?;
        let mut out = Vec::new();
        for t in &self.terms {
            for (k, g) in t.word.iter().enumerate() {
                let s = space.pair(f, g.f())?;
                if s == 0.0 {
                    continue;
                }
                let mut word = Vec::with_capacity(t.word.len() + 1);
                word.extend_from_slice(&t.word[..=k]);
                word.extend_from_slice(&t.word[k..]);
                out.push(Term::new(t.coeff * s, word));
            }
        }
        Ok(Expr::from_terms(out))
    }

    /// Coefficient-tolerant comparison: same words, coefficients within
    /// `tol * max(1, |a|, |b|)`.
    pub fn approx_eq(&self, other: &Expr, tol: f64) -> bool {
        self.terms.len() == other.terms.len()
            && self.terms.iter().zip(&other.terms).all(|(a, b)| {
                let scale = 1.0f64.max(a.coeff.norm()).max(b.coeff.norm());
                a.word == b.word && (a.coeff - b.coeff).norm() <= tol * scale
            })
    }
}

impl From<Generator> for Expr {
    fn from(g: Generator) -> Self {
        Expr::generator(g)
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::from_terms(self.terms.iter().chain(&rhs.terms).cloned().collect())
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self + &(-rhs)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr {
            terms: self.terms.iter().map(|t| Term::new(-t.coeff, t.word.clone())).collect(),
        }
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        let mut out = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                let mut word = a.word.clone();
                word.extend_from_slice(&b.word);
                out.push(Term::new(a.coeff * b.coeff, word));
            }
        }
        Expr::from_terms(out)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}
