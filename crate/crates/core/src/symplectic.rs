//! Finite-dimensional real (pre-)symplectic spaces.
//!
//! A [`SymplecticSpace`] stores its antisymmetric form as an explicit matrix,
//! so degenerate forms are representable; non-degeneracy is something you
//! check with [`SymplecticSpace::is_nondegenerate`], not an invariant.

use std::fmt;

use faer::Mat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative singular-value cutoff used when computing the rank of a form.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymplecticError {
    #[error("number of modes must be at least 1")]
    ZeroModes,
    #[error("form must be a non-empty square matrix of even size, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },
    #[error("form is not antisymmetric at ({row}, {col}): {upper} vs {lower}")]
    NotAntisymmetric {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },
    #[error("form entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: space has dimension {expected}, vector has length {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// An element of the underlying real vector space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TestVector(Vec<f64>);

impl TestVector {
    /// Builds a vector, replacing negative zeros by positive ones so that
    /// bitwise comparisons agree with numeric ones.
    pub fn new(coords: Vec<f64>) -> Self {
        TestVector(coords.into_iter().map(|x| x + 0.0).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        TestVector(vec![0.0; dim])
    }

    /// The `index`-th standard basis vector (zero-based).
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut coords = vec![0.0; dim];
        coords[index] = 1.0;
        TestVector(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        TestVector::new(self.0.iter().map(|x| c * x).collect())
    }

    /// Coordinate-wise sum; panics on length mismatch.
    pub fn add(&self, other: &TestVector) -> Self {
        assert_eq!(self.dim(), other.dim(), "vector length mismatch");
        TestVector::new(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Stable bit-level key, used for hashing and total ordering.
    pub fn key(&self) -> Vec<u64> {
        self.0.iter().map(|x| (x + 0.0).to_bits()).collect()
    }

    /// Lexicographic total order on coordinates.
    pub fn total_cmp(&self, other: &TestVector) -> std::cmp::Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl From<Vec<f64>> for TestVector {
    fn from(coords: Vec<f64>) -> Self {
        TestVector::new(coords)
    }
}

impl From<&[f64]> for TestVector {
    fn from(coords: &[f64]) -> Self {
        TestVector::new(coords.to_vec())
    }
}

impl fmt::Display for TestVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "]")
    }
}

/// Real vector space of dimension `2n` with an antisymmetric bilinear form.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpace {
    dim: usize,
    // row-major, dim * dim
    form: Vec<f64>,
}

impl SymplecticSpace {
    /// The canonical space of `n` degrees of freedom: `σ(e_{2k-1}, e_{2k}) = 1`.
    pub fn standard(n: usize) -> Result<Self, SymplecticError> {
        if n == 0 {
            return Err(SymplecticError::ZeroModes);
        }
        let dim = 2 * n;
        let mut form = vec![0.0; dim * dim];
        for k in 0..n {
            form[(2 * k) * dim + 2 * k + 1] = 1.0;
            form[(2 * k + 1) * dim + 2 * k] = -1.0;
        }
        Ok(SymplecticSpace { dim, form })
    }

    /// Wraps an explicit form. Antisymmetry is checked exactly.
    pub fn from_form(rows: Vec<Vec<f64>>) -> Result<Self, SymplecticError> {
        let dim = rows.len();
        if dim == 0 || !dim.is_multiple_of(2) || rows.iter().any(|r| r.len() != dim) {
            let cols = rows.first().map_or(0, Vec::len);
            return Err(SymplecticError::BadShape { rows: dim, cols });
        }
        for (j, row) in rows.iter().enumerate() {
            for (k, &x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(SymplecticError::NonFinite { row: j, col: k });
                }
                let lower = rows[k][j];
                if x != -lower {
                    return Err(SymplecticError::NotAntisymmetric {
                        row: j,
                        col: k,
                        upper: x,
                        lower,
                    });
                }
            }
        }
        let form = rows.into_iter().flatten().map(|x| x + 0.0).collect();
        Ok(SymplecticSpace { dim, form })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of canonical pairs, `dim / 2`.
    pub fn modes(&self) -> usize {
        self.dim / 2
    }

    pub fn entry(&self, j: usize, k: usize) -> f64 {
        self.form[j * self.dim + k]
    }

    pub fn form_rows(&self) -> Vec<Vec<f64>> {
        self.form.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn check_vector(&self, f: &TestVector) -> Result<(), SymplecticError> {
        if f.dim() != self.dim {
            return Err(SymplecticError::DimensionMismatch {
                expected: self.dim,
                found: f.dim(),
            });
        }
        Ok(())
    }

    /// `fᵀ σ g`.
    ///
    /// Summed over the strict upper triangle as `σ_jk (f_j g_k - f_k g_j)`, so
    /// `pair(f, g) == -pair(g, f)` holds bit for bit.
    pub fn pair(&self, f: &TestVector, g: &TestVector) -> Result<f64, SymplecticError> {
        self.check_vector(f)?;
        self.check_vector(g)?;
        let (f, g) = (f.coords(), g.coords());
        let mut acc = 0.0;
        for j in 0..self.dim {
            for k in (j + 1)..self.dim {
                let s = self.form[j * self.dim + k];
                if s != 0.0 {
                    acc += s * (f[j] * g[k] - f[k] * g[j]);
                }
            }
        }
        Ok(acc + 0.0)
    }

    /// Singular values of the form, largest first.
    pub fn singular_values(&self) -> Vec<f64> {
        let m = Mat::<f64>::from_fn(self.dim, self.dim, |j, k| self.entry(j, k));
        m.singular_values().expect("SVD of a small finite matrix converges")
    }

    /// Numerical rank with cutoff `RANK_TOLERANCE * s_max`.
    pub fn rank(&self) -> usize {
        let s = self.singular_values();
        let smax = s.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        s.iter().filter(|&&x| x > RANK_TOLERANCE * smax).count()
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.rank() == self.dim
    }
}

/// Space description as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceSpec {
    Standard { n: usize },
    Explicit { form: Vec<Vec<f64>> },
}

impl SpaceSpec {
    pub fn build(&self) -> Result<SymplecticSpace, SymplecticError> {
        match self {
            SpaceSpec::Standard { n } => SymplecticSpace::standard(*n),
            SpaceSpec::Explicit { form } => SymplecticSpace::from_form(form.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> TestVector {
        TestVector::from(x)
    }

    #[test]
    fn standard_one_mode() {
        let s = SymplecticSpace::standard(1).unwrap();
        assert_eq!(s.form_rows(), vec![vec![0.0, 1.0], vec![-1.0, 0.0]]);
        assert_eq!(s.pair(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 1.0);
    }

    #[test]
    fn standard_two_modes_is_block_diagonal() {
        let s = SymplecticSpace::standard(2).unwrap();
        let expected = vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, -1.0, 0.0],
        ];
        assert_eq!(s.form_rows(), expected);
    }

    #[test]
    fn zero_modes_rejected() {
        assert_eq!(SymplecticSpace::standard(0), Err(SymplecticError::ZeroModes));
    }

    #[test]
    fn pair_hand_evaluation() {
        let s = SymplecticSpace::standard(1).unwrap();
        // 2*7 - 3*5
        assert_eq!(s.pair(&v(&[2.0, 3.0]), &v(&[5.0, 7.0])).unwrap(), -1.0);
        assert_eq!(s.pair(&v(&[2.0, 3.0]), &v(&[2.0, 3.0])).unwrap(), 0.0);
    }

    #[test]
    fn pair_dimension_mismatch() {
        let s = SymplecticSpace::standard(1).unwrap();
        let err = s.pair(&v(&[1.0, 0.0, 0.0]), &v(&[0.0, 1.0])).unwrap_err();
        assert_eq!(err, SymplecticError::DimensionMismatch { expected: 2, found: 3 });
    }

    #[test]
    fn nondegeneracy() {
        for n in 1..=4 {
            assert!(SymplecticSpace::standard(n).unwrap().is_nondegenerate());
        }
        let zero = SymplecticSpace::from_form(vec![vec![0.0; 2]; 2]).unwrap();
        assert!(!zero.is_nondegenerate());
        assert_eq!(zero.rank(), 0);
        let half = SymplecticSpace::from_form(vec![
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, -1.0, 0.0],
        ])
        .unwrap();
        assert_eq!(half.rank(), 2);
        assert!(!half.is_nondegenerate());
    }

    #[test]
    fn rejects_bad_forms() {
        assert!(matches!(
            SymplecticSpace::from_form(vec![vec![0.0, 1.0], vec![1.0, 0.0]]),
            Err(SymplecticError::NotAntisymmetric { .. })
        ));
        assert!(matches!(
            SymplecticSpace::from_form(vec![vec![0.0]]),
            Err(SymplecticError::BadShape { .. })
        ));
        assert!(matches!(
            SymplecticSpace::from_form(vec![vec![0.0, f64::NAN], vec![f64::NAN, 0.0]]),
            Err(SymplecticError::NonFinite { .. })
        ));
    }

    #[test]
    fn space_spec_json() {
        let std: SpaceSpec = serde_json::from_str(r#"{"n": 2}"#).unwrap();
        assert_eq!(std.build().unwrap().dim(), 4);
        let explicit: SpaceSpec = serde_json::from_str(r#"{"form": [[0, 2], [-2, 0]]}"#).unwrap();
        assert_eq!(explicit.build().unwrap().entry(0, 1), 2.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vec4() -> impl Strategy<Value = TestVector> {
            prop::collection::vec(-10.0f64..10.0, 4).prop_map(TestVector::new)
        }

        #[allow(clippy::needless_range_loop)]
        fn form4() -> impl Strategy<Value = SymplecticSpace> {
            prop::collection::vec(-3.0f64..3.0, 6).prop_map(|u| {
                let mut rows = vec![vec![0.0; 4]; 4];
                let mut it = u.into_iter();
                for j in 0..4 {
                    for k in (j + 1)..4 {
                        let x = it.next().unwrap();
                        rows[j][k] = x;
                        rows[k][j] = -x;
                    }
                }
                SymplecticSpace::from_form(rows).unwrap()
            })
        }

        proptest! {
            #[test]
            fn antisymmetry_is_exact(s in form4(), f in vec4(), g in vec4()) {
                let a = s.pair(&f, &g).unwrap();
                let b = s.pair(&g, &f).unwrap();
                prop_assert_eq!(a + b, 0.0);
            }

            #[test]
            fn linear_in_first_slot(s in form4(), f in vec4(), g in vec4(), h in vec4(), c in -5.0f64..5.0) {
                let lhs = s.pair(&f.add(&g.scaled(c)), &h).unwrap();
                let rhs = s.pair(&f, &h).unwrap() + c * s.pair(&g, &h).unwrap();
                let scale = 1.0 + f.norm() * h.norm() + c.abs() * g.norm() * h.norm();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * scale * 10.0);
            }
        }
    }
}
