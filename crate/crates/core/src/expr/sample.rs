//! Seeded random expressions for property checks.

use num_complex::Complex64;
use rand::Rng;

use super::{Expr, Generator, Term};
use crate::symplectic::TestVector;

/// Generators over a two-dimensional space chosen so that every rewrite rule
/// gets exercised: repeated directions, scaled and negated directions, the
/// zero vector and a complex spectral parameter.
pub fn default_pool() -> Vec<Generator> {
    let dirs: [[f64; 2]; 7] = [
        [1.0, 0.0],
        [0.0, 1.0],
        [2.0, 0.0],
        [-1.0, 0.0],
        [1.0, 1.0],
        [0.0, -3.0],
        [0.0, 0.0],
    ];
    let zs = [
        Complex64::new(1.0, 0.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(2.0, 0.0),
        Complex64::new(0.5, 0.3),
    ];
    let mut pool = Vec::new();
    for d in dirs {
        for z in zs {
            pool.push(Generator::new(z, TestVector::from(&d[..])).expect("pool entries are valid"));
        }
    }
    pool
}

/// A sum of up to `max_terms` words, each of length at most `max_word`,
/// drawn uniformly from `pool` with coefficients in the unit square.
pub fn random_expr<R: Rng + ?Sized>(rng: &mut R, pool: &[Generator], max_word: usize, max_terms: usize) -> Expr {
    let n_terms = rng.random_range(1..=max_terms.max(1));
    let terms = (0..n_terms)
        .map(|_| {
            let len = rng.random_range(0..=max_word);
            let word = (0..len)
                .map(|_| pool[rng.random_range(0..pool.len())].clone())
                .collect();
            let coeff = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            Term::new(coeff, word)
        })
        .collect();
    Expr::from_terms(terms)
}
