//! Residual expressions `LHS - RHS` for the algebraic relations.
//!
//! None of these is used as a rewrite rule; they evaluate to (numerically)
//! zero operators in any representation where the relation holds.

use num_complex::Complex64;

use super::{Expr, ExprError, Generator, Term};
use crate::symplectic::{SymplecticSpace, TestVector};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

fn word(coeff: Complex64, gens: &[&Generator]) -> Term {
    Term::new(coeff, gens.iter().map(|g| (*g).clone()).collect())
}

/// `R(z,f)R(w,f)·i(w-z) - (R(z,f) - R(w,f))`.
pub fn pseudo_resolvent(z: Complex64, w: Complex64, f: &TestVector) -> Result<Expr, ExprError> {
    let a = Generator::new(z, f.clone())?;
    let b = Generator::new(w, f.clone())?;
    Ok(Expr::from_terms(vec![
        word(I * (w - z), &[&a, &b]),
        word(-ONE, &[&a]),
        word(ONE, &[&b]),
    ]))
}

/// `[R(λ,f), R(μ,g)] - iσ(f,g) R(λ,f) R(μ,g)² R(λ,f)`.
pub fn commutator(
    space: &SymplecticSpace,
    lambda: Complex64,
    f: &TestVector,
    mu: Complex64,
    g: &TestVector,
) -> Result<Expr, ExprError> {
    let s = space.pair(f, g)?;
    let a = Generator::new(lambda, f.clone())?;
    let b = Generator::new(mu, g.clone())?;
    Ok(Expr::from_terms(vec![
        word(ONE, &[&a, &b]),
        word(-ONE, &[&b, &a]),
        word(-I * s, &[&a, &b, &b, &a]),
    ]))
}

/// `R(λ+μ,f+g)(R(λ,f) + R(μ,g) + iσ(f,g) R(λ,f)² R(μ,g)) - R(λ,f)R(μ,g)`.
pub fn additivity(
    space: &SymplecticSpace,
    lambda: Complex64,
    f: &TestVector,
    mu: Complex64,
    g: &TestVector,
) -> Result<Expr, ExprError> {
    if lambda + mu == Complex64::new(0.0, 0.0) {
        return Err(ExprError::Parameter("λ + μ ≠ 0"));
    }
    let s = space.pair(f, g)?;
    let a = Generator::new(lambda, f.clone())?;
    let b = Generator::new(mu, g.clone())?;
    let sum = Generator::new(lambda + mu, f.add(g))?;
    Ok(Expr::from_terms(vec![
        word(ONE, &[&sum, &a]),
        word(ONE, &[&sum, &b]),
        word(I * s, &[&sum, &a, &a, &b]),
        word(-ONE, &[&a, &b]),
    ]))
}

/// `c·R(cλ, cf) - R(λ, f)`.
pub fn homogeneity(lambda: Complex64, f: &TestVector, c: f64) -> Result<Expr, ExprError> {
    if c == 0.0 {
        return Err(ExprError::Parameter("c ≠ 0"));
    }
    let scaled = Generator::new(lambda * c, f.scaled(c))?;
    let plain = Generator::new(lambda, f.clone())?;
    Ok(Expr::from_terms(vec![
        word(Complex64::new(c, 0.0), &[&scaled]),
        word(-ONE, &[&plain]),
    ]))
}
