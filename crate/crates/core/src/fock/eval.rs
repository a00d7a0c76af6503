//! Evaluation of operator words on blocks of vectors.
//!
//! Words are applied right to left to a block of columns, so compressing an
//! operator to `M^n` low states costs `M^n` solves per resolvent factor
//! instead of a full inverse and dense products.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{c64, Mat, MatRef};
use num_complex::Complex64;

use super::{check_domain, FockError, FockRep, OperatorMatrix, OperatorTag, SOLVE_TOLERANCE};
use crate::expr::{Expr, Generator};
use crate::symplectic::TestVector;

const CACHE_BYTES: usize = 1 << 30;

#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    Resolvent(Generator),
    /// `G_f` itself, unbounded in the continuum.
    Generator(TestVector),
    /// `Q_k`, zero-based mode index.
    Position(usize),
    /// `P_k`, zero-based mode index.
    Momentum(usize),
}

impl Factor {
    fn adjoint(&self) -> Factor {
        match self {
            Factor::Resolvent(g) => Factor::Resolvent(g.adjoint()),
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpTerm {
    pub coeff: Complex64,
    pub word: Vec<Factor>,
}

/// Linear combination of words in resolvents, generators and canonical
/// operators. No simplification is attempted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorExpr {
    terms: Vec<OpTerm>,
}

impl OperatorExpr {
    pub fn zero() -> Self {
        OperatorExpr { terms: Vec::new() }
    }

    pub fn identity() -> Self {
        Self::scalar(Complex64::new(1.0, 0.0))
    }

    pub fn scalar(c: Complex64) -> Self {
        OperatorExpr {
            terms: vec![OpTerm {
                coeff: c,
                word: Vec::new(),
            }],
        }
    }

    pub fn factor(f: Factor) -> Self {
        OperatorExpr {
            terms: vec![OpTerm {
                coeff: Complex64::new(1.0, 0.0),
                word: vec![f],
            }],
        }
    }

    pub fn resolvent(g: Generator) -> Self {
        Self::factor(Factor::Resolvent(g))
    }

    pub fn generator(f: TestVector) -> Self {
        Self::factor(Factor::Generator(f))
    }

    pub fn from_expr(e: &Expr) -> Self {
        OperatorExpr {
            terms: e
                .terms()
                .iter()
                .map(|t| OpTerm {
                    coeff: t.coeff,
                    word: t.word.iter().cloned().map(Factor::Resolvent).collect(),
                })
                .collect(),
        }
    }

    pub fn terms(&self) -> &[OpTerm] {
        &self.terms
    }

    pub fn scale(&self, c: Complex64) -> Self {
        OperatorExpr {
            terms: self
                .terms
                .iter()
                .map(|t| OpTerm {
                    coeff: t.coeff * c,
                    word: t.word.clone(),
                })
                .collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        OperatorExpr {
            terms: self
                .terms
                .iter()
                .map(|t| OpTerm {
                    coeff: t.coeff.conj(),
                    word: t.word.iter().rev().map(Factor::adjoint).collect(),
                })
                .collect(),
        }
    }

    /// `[a, b] = ab − ba`
    pub fn commutator(a: &OperatorExpr, b: &OperatorExpr) -> Self {
        &(a * b) - &(b * a)
    }
}

impl Add for &OperatorExpr {
    type Output = OperatorExpr;
    fn add(self, rhs: &OperatorExpr) -> OperatorExpr {
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().cloned());
        OperatorExpr { terms }
    }
}

impl Neg for &OperatorExpr {
    type Output = OperatorExpr;
    fn neg(self) -> OperatorExpr {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Sub for &OperatorExpr {
    type Output = OperatorExpr;
    fn sub(self, rhs: &OperatorExpr) -> OperatorExpr {
        self + &(-rhs)
    }
}

impl Mul for &OperatorExpr {
    type Output = OperatorExpr;
    fn mul(self, rhs: &OperatorExpr) -> OperatorExpr {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                let mut word = a.word.clone();
                word.extend(b.word.iter().cloned());
                terms.push(OpTerm {
                    coeff: a.coeff * b.coeff,
                    word,
                });
            }
        }
        OperatorExpr { terms }
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for OperatorExpr {
            type Output = OperatorExpr;
            fn $m(self, rhs: OperatorExpr) -> OperatorExpr {
                (&self).$m(&rhs)
            }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

type Key = (u64, u64, Vec<u64>);

fn key(g: &Generator) -> Key {
    (g.z().re.to_bits(), g.z().im.to_bits(), g.f().key())
}

/// Applies operator expressions in one representation, caching the LU
/// factorization of every `iz + G_f` it meets.
pub struct Evaluator<'r> {
    rep: &'r FockRep,
    cache: HashMap<Key, PartialPivLu<c64>>,
}

impl<'r> Evaluator<'r> {
    pub fn new(rep: &'r FockRep) -> Self {
        Evaluator {
            rep,
            cache: HashMap::new(),
        }
    }

    pub fn rep(&self) -> &'r FockRep {
        self.rep
    }

    fn solve(&mut self, g: &Generator, x: Mat<c64>) -> Result<Mat<c64>, FockError> {
        let z = g.z();
        check_domain(z)?;
        if g.f().is_zero() {
            self.rep.space().check_vector(g.f())?;
            let d = c64::new(0.0, -1.0) / z;
            return Ok(Mat::from_fn(x.nrows(), x.ncols(), |i, j| d * x[(i, j)]));
        }
        let coeffs = self.rep.mode_coefficients(g.f())?;
        let k = key(g);
        if !self.cache.contains_key(&k) {
            let bytes = self.rep.dim() * self.rep.dim() * 16;
            if (self.cache.len() + 1) * bytes > CACHE_BYTES {
                self.cache.clear();
            }
            let a = self.rep.shifted_generator(z, g.f())?;
            self.cache.insert(k.clone(), a.partial_piv_lu());
        }
        let y = self.cache[&k].solve(&x);
        let residual = self.rep.solve_residual(&coeffs, z, y.as_ref(), x.as_ref());
        if !(residual <= SOLVE_TOLERANCE) {
            return Err(FockError::Solver {
                residual,
                condition: f64::NAN,
            });
        }
        Ok(y)
    }

    fn apply_factor(&mut self, f: &Factor, x: Mat<c64>) -> Result<Mat<c64>, FockError> {
        match f {
            Factor::Resolvent(g) => self.solve(g, x),
            Factor::Generator(v) => self.rep.apply_generator(v, x.as_ref()),
            Factor::Position(k) | Factor::Momentum(k) if *k >= self.rep.modes() => Err(FockError::Embedding(format!(
                "mode {k} out of range for {} modes",
                self.rep.modes()
            ))),
            Factor::Position(k) => Ok(self.rep.apply_position(*k, x.as_ref())),
            Factor::Momentum(k) => Ok(self.rep.apply_momentum(*k, x.as_ref())),
        }
    }

    /// `op · x` for a `dim × k` block.
    pub fn apply(&mut self, op: &OperatorExpr, x: MatRef<'_, c64>) -> Result<Mat<c64>, FockError> {
        if x.nrows() != self.rep.dim() {
            return Err(FockError::Shape {
                rows: x.nrows(),
                cols: x.ncols(),
                expected: self.rep.dim(),
            });
        }
        let mut acc = Mat::<c64>::zeros(x.nrows(), x.ncols());
        for t in &op.terms {
            let mut y = x.to_owned();
            for f in t.word.iter().rev() {
                y = self.apply_factor(f, y)?;
            }
            for j in 0..y.ncols() {
                for i in 0..y.nrows() {
                    acc[(i, j)] += t.coeff * y[(i, j)];
                }
            }
        }
        Ok(acc)
    }

    pub fn full(&mut self, op: &OperatorExpr) -> Result<OperatorMatrix, FockError> {
        let n = self.rep.dim();
        let m = self.apply(op, Mat::<c64>::identity(n, n).as_ref())?;
        Ok(OperatorMatrix::new(OperatorTag::Expression, m))
    }

    /// `compress(op, cutoff)` without forming `op`.
    pub fn compressed(&mut self, op: &OperatorExpr, cutoff: usize) -> Result<OperatorMatrix, FockError> {
        let idx = self.rep.low_indices(cutoff)?;
        let k = idx.len();
        let mut x = Mat::<c64>::zeros(self.rep.dim(), k);
        for (j, &i) in idx.iter().enumerate() {
            x[(i, j)] = c64::new(1.0, 0.0);
        }
        let y = self.apply(op, x.as_ref())?;
        let block = Mat::from_fn(k, k, |i, j| y[(idx[i], j)]);
        let tag = if k == self.rep.dim() {
            OperatorTag::Expression
        } else {
            OperatorTag::Compressed
        };
        Ok(OperatorMatrix::new(tag, block))
    }
}

/// Homomorphic image of `e` in the representation.
pub fn eval(rep: &FockRep, e: &Expr) -> Result<OperatorMatrix, FockError> {
    Evaluator::new(rep).full(&OperatorExpr::from_expr(e))
}
