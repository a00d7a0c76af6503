use std::fmt;

use num_complex::Complex64;

use super::{Expr, Generator};

// f64's Display is the shortest string that parses back to the same bits.
fn write_spectral(f: &mut fmt::Formatter<'_>, z: Complex64) -> fmt::Result {
    if z.im == 0.0 {
        write!(f, "{}", z.re)
    } else if z.im.is_sign_negative() {
        write!(f, "{}-{}i", z.re, -z.im)
    } else {
        write!(f, "{}+{}i", z.re, z.im)
    }
}

pub(super) fn write_coeff(f: &mut fmt::Formatter<'_>, c: Complex64) -> fmt::Result {
    if c.im.is_sign_negative() {
        write!(f, "({}-{}i)", c.re, -c.im)
    } else {
        write!(f, "({}+{}i)", c.re, c.im)
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R(")?;
        write_spectral(f, self.z)?;
        write!(f, ",{})", self.f)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write_coeff(f, t.coeff)?;
            if t.word.is_empty() {
                write!(f, "*I")?;
            }
            for g in &t.word {
                write!(f, "*{g}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::TestVector;

    #[test]
    fn generator_forms() {
        let f = TestVector::from(&[1.0, -0.5][..]);
        let g = Generator::new(Complex64::new(1.0, 0.0), f.clone()).unwrap();
        assert_eq!(g.to_string(), "R(1,[1,-0.5])");
        let g = Generator::new(Complex64::new(-2.5, 3.0), f.clone()).unwrap();
        assert_eq!(g.to_string(), "R(-2.5+3i,[1,-0.5])");
        let g = Generator::new(Complex64::new(2.0, -0.25), f).unwrap();
        assert_eq!(g.to_string(), "R(2-0.25i,[1,-0.5])");
    }

    #[test]
    fn expression_forms() {
        assert_eq!(Expr::zero().to_string(), "0");
        let e = Expr::scalar(Complex64::new(0.0, -1.0 / 3.0));
        assert_eq!(e.to_string(), "(0-0.3333333333333333i)*I");
    }
}
