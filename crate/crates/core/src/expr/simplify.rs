//! Terminating rewriter.
//!
//! Rules, applied per term until none fires:
//!
//! * zero direction: `R(z,0) → (-i/z)·I`
//! * homogeneity: `R(z,f) → (1/c)·R(z/c, f/c)` with `c = s‖f‖`, `s` the sign
//!   of the first nonzero coordinate, so the new direction has unit norm and
//!   a positive leading coordinate
//! * partial fractions: `R(z,f) R(w,f) → (i(w-z))⁻¹ (R(z,f) - R(w,f))` for
//!   adjacent equal directions with `z ≠ w`
//!
//! followed by merging in canonical term order. The first and last rules
//! shorten the word; homogeneity only fires on non-canonical generators and
//! produces canonical ones, so `(word length, non-canonical count)` decreases
//! lexicographically and the loop terminates.

use num_complex::Complex64;

use super::{clean, Expr, Generator, Term};
use crate::symplectic::TestVector;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

// Unit vectors are recognized up to a few ulps so that canonical generators
// stay fixed under a second pass.
const UNIT_SLACK: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolicEquality {
    Equal,
    Unknown,
}

/// `Equal` iff `simplify(a - b)` is the zero expression. Never claims
/// inequality: the rule set does not decide the full relation ideal.
pub fn equal_symbolic(a: &Expr, b: &Expr) -> SymbolicEquality {
    if a == b || simplify(&(a - b)).is_zero() {
        SymbolicEquality::Equal
    } else {
        SymbolicEquality::Unknown
    }
}

pub fn simplify(e: &Expr) -> Expr {
    let mut pending: Vec<Term> = e.terms().to_vec();
    let mut done = Vec::with_capacity(pending.len());
    while let Some(mut t) = pending.pop() {
        drop_zero_directions(&mut t);
        canonicalize(&mut t);
        match partial_fraction(&t) {
            Some((a, b)) => {
                pending.push(a);
                pending.push(b);
            }
            None => done.push(t),
        }
    }
    Expr::from_terms(done)
}

fn drop_zero_directions(t: &mut Term) {
    if !t.word.iter().any(|g| g.f().is_zero()) {
        return;
    }
    let mut coeff = t.coeff;
    t.word.retain(|g| {
        if g.f().is_zero() {
            coeff *= -I / g.z();
            false
        } else {
            true
        }
    });
    t.coeff = clean(coeff);
}

/// Scale factor `c` taking `f` to its canonical representative, or `None`
/// if `f` already is canonical.
fn canonical_scale(f: &TestVector) -> Option<f64> {
    let lead = *f.coords().iter().find(|&&x| x != 0.0)?;
    let norm = f.norm();
    if lead > 0.0 && (norm - 1.0).abs() <= UNIT_SLACK {
        return None;
    }
    Some(lead.signum() * norm)
}

pub(super) fn canonical_form(g: &Generator) -> Option<(f64, Generator)> {
    let c = canonical_scale(g.f())?;
    let u = TestVector::new(g.f().coords().iter().map(|x| x / c).collect());
    let z = clean(g.z() / c);
    Some((c, Generator { z, f: u }))
}

fn canonicalize(t: &mut Term) {
    for g in t.word.iter_mut() {
        if let Some((c, canon)) = canonical_form(g) {
            t.coeff = clean(t.coeff / c);
            *g = canon;
        }
    }
}

fn partial_fraction(t: &Term) -> Option<(Term, Term)> {
    let k = t
        .word
        .windows(2)
        .position(|p| p[0].f() == p[1].f() && p[0].z() != p[1].z())?;
    let (z, w) = (t.word[k].z(), t.word[k + 1].z());
    let factor = (I * (w - z)).inv();
    let keep = |drop: usize| {
        let mut word = t.word.clone();
        word.remove(drop);
        word
    };
    // R(z)R(w) = k (R(z) - R(w)): dropping R(w) leaves R(z) and vice versa.
    let a = Term::new(t.coeff * factor, keep(k + 1));
    let b = Term::new(-(t.coeff * factor), keep(k));
    Some((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn partial_fraction_instance() {
        let e = parse("R(1,[1,0])*R(2,[1,0])").unwrap();
        let expected = parse("-1i*(R(1,[1,0]) - R(2,[1,0]))").unwrap();
        assert_eq!(simplify(&e), expected);
        assert_eq!(simplify(&e).to_string(), "(0-1i)*R(1,[1,0]) + (0+1i)*R(2,[1,0])");
    }

    #[test]
    fn zero_direction() {
        let e = parse("R(3,[0,0])").unwrap();
        let s = simplify(&e);
        assert_eq!(s, Expr::scalar(c(0.0, -1.0 / 3.0)));
        assert_eq!(s.to_string(), "(0-0.3333333333333333i)*I");
    }

    #[test]
    fn homogeneity_instance() {
        let e = parse("R(2,[2,0])").unwrap();
        assert_eq!(simplify(&e), parse("0.5*R(1,[1,0])").unwrap());
        // negative leading coordinate flips the spectral parameter
        let e = parse("R(2,[-1,0])").unwrap();
        assert_eq!(simplify(&e), parse("-1*R(-2,[1,0])").unwrap());
        // already canonical generators are left alone
        let e = parse("R(1,[0.6,0.8])").unwrap();
        assert_eq!(simplify(&e), e);
    }

    #[test]
    fn runs_of_one_direction_reduce_to_powers() {
        let e = parse("R(1,[1,0])*R(1,[1,0])*R(2,[1,0])").unwrap();
        let s = simplify(&e);
        assert!(s.degree() <= 2);
        assert!(s.terms().iter().all(|t| t.word.windows(2).all(|p| p[0] == p[1])));
    }

    #[test]
    fn equal_symbolic_examples() {
        let a = parse("R(1,[1,0])*R(2,[1,0])").unwrap();
        let b = parse("-1i*(R(1,[1,0])-R(2,[1,0]))").unwrap();
        assert_eq!(equal_symbolic(&a, &b), SymbolicEquality::Equal);
        let a = parse("R(1,[1,0])*R(1,[0,1])").unwrap();
        let b = parse("R(1,[0,1])*R(1,[1,0])").unwrap();
        assert_eq!(equal_symbolic(&a, &b), SymbolicEquality::Unknown);
        assert_eq!(equal_symbolic(&a, &a), SymbolicEquality::Equal);
        // homogeneity-equivalent generators are recognized
        let a = parse("R(2,[2,0])").unwrap();
        let b = parse("0.5*R(1,[1,0])").unwrap();
        assert_eq!(equal_symbolic(&a, &b), SymbolicEquality::Equal);
    }

    #[test]
    fn same_spectral_parameter_is_not_split() {
        let e = parse("R(1,[1,0])^2").unwrap();
        assert_eq!(simplify(&e), e);
    }
}
