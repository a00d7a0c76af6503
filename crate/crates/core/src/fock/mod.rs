//! Truncated n-mode Fock representation.
//!
//! Each mode keeps levels `0..N`; basis states are ordered with mode 1 as the
//! most significant digit, so `|m₁,…,m_n⟩` has index `Σ m_k N^{n-k}`.
//! Generators are assembled from the ladder entries directly. Every matrix
//! entry of `G_f` receives a contribution from exactly one mode, which keeps
//! hermiticity exact.

mod eval;
pub mod export;
mod schur;

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, MatRef};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::ExprError;
use crate::symplectic::{SymplecticError, SymplecticSpace, TestVector};

pub use eval::{eval, Evaluator, Factor, OpTerm, OperatorExpr};
pub use schur::{schur_constant, schur_constant_with, SchurOptions, SchurReport, SchurVerdict};

/// Default bound on the representation dimension `N^n`.
pub const DEFAULT_MAX_DIM: usize = 4096;
/// Residual bound for `(iz + G) X = 1`.
pub const SOLVE_TOLERANCE: f64 = 1e-10;
/// Largest block (rows·cols) whose spectral norm is computed by SVD. Larger
/// blocks report the Frobenius norm, which bounds the spectral norm above.
pub const SVD_LIMIT: usize = 1024 * 1024;
const EMBEDDING_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FockError {
    #[error(transparent)]
    Space(#[from] SymplecticError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("truncation must be at least 2 levels per mode, got {0}")]
    Truncation(usize),
    #[error("representation dimension {levels}^{modes} exceeds the memory cap of {cap}")]
    MemoryCap { modes: usize, levels: usize, cap: usize },
    #[error("spectral parameter {0} lies on the imaginary axis")]
    Domain(Complex64),
    #[error("resolvent solve failed: residual {residual:e}, condition estimate {condition:e}")]
    Solver { residual: f64, condition: f64 },
    #[error("compression level {level} outside 1..={levels}")]
    Compression { level: usize, levels: usize },
    #[error("matrix is {rows}x{cols}, expected {expected}x{expected}")]
    Shape { rows: usize, cols: usize, expected: usize },
    #[error("probe set is empty")]
    EmptyProbeSet,
    #[error("invalid embedding: {0}")]
    Embedding(String),
    #[error("matrix container: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorTag {
    Generator,
    Resolvent,
    Expression,
    Compressed,
}

impl OperatorTag {
    pub(crate) fn code(self) -> u8 {
        match self {
            OperatorTag::Generator => 0,
            OperatorTag::Resolvent => 1,
            OperatorTag::Expression => 2,
            OperatorTag::Compressed => 3,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => OperatorTag::Generator,
            1 => OperatorTag::Resolvent,
            2 => OperatorTag::Expression,
            3 => OperatorTag::Compressed,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub tag: OperatorTag,
    pub matrix: Mat<c64>,
}

impl OperatorMatrix {
    pub fn new(tag: OperatorTag, matrix: Mat<c64>) -> Self {
        OperatorMatrix { tag, matrix }
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        OperatorMatrix::new(self.tag, self.matrix.adjoint().to_owned())
    }

    pub fn norm(&self) -> f64 {
        spectral_norm(self.matrix.as_ref())
    }

    pub fn is_finite(&self) -> bool {
        let m = &self.matrix;
        (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()))
    }
}

/// Largest singular value, or the Frobenius norm for blocks above
/// [`SVD_LIMIT`] entries.
pub fn spectral_norm(m: MatRef<'_, c64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() * m.ncols() > SVD_LIMIT {
        return m.norm_l2();
    }
    match m.singular_values() {
        Ok(s) => s.into_iter().fold(0.0, f64::max),
        Err(_) => m.norm_l2(),
    }
}

/// Matrix commutator `[a, b]`.
pub fn commutator(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    a * b - b * a
}

#[derive(Debug, Clone)]
pub struct FockRep {
    space: SymplecticSpace,
    modes: usize,
    levels: usize,
    dim: usize,
    // row j: coefficients of basis vector e_j over (Q₁,P₁,…,Q_n,P_n)
    embedding: Vec<Vec<f64>>,
}

impl FockRep {
    /// Standard space of `n` modes, `N` levels per mode, default cap.
    pub fn new(modes: usize, levels: usize) -> Result<Self, FockError> {
        Self::with_cap(modes, levels, DEFAULT_MAX_DIM)
    }

    pub fn with_cap(modes: usize, levels: usize, cap: usize) -> Result<Self, FockError> {
        let space = SymplecticSpace::standard(modes)?;
        let dim = space.dim();
        let id = (0..dim)
            .map(|j| (0..dim).map(|k| if j == k { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::embedded(space, levels, id, cap)
    }

    /// Representation of a possibly degenerate space through a linear map
    /// `L` into the canonical pairs. Requires `L J Lᵀ = σ`, with `J` the
    /// standard form on `L`'s column count.
    pub fn embedded(
        space: SymplecticSpace,
        levels: usize,
        embedding: Vec<Vec<f64>>,
        cap: usize,
    ) -> Result<Self, FockError> {
        if embedding.len() != space.dim() {
            return Err(FockError::Embedding(format!(
                "{} rows for a {}-dimensional space",
                embedding.len(),
                space.dim()
            )));
        }
        let width = embedding[0].len();
        if width == 0 || !width.is_multiple_of(2) || embedding.iter().any(|r| r.len() != width) {
            return Err(FockError::Embedding("rows must share one positive even length".into()));
        }
        if embedding.iter().flatten().any(|x| !x.is_finite()) {
            return Err(FockError::Embedding("non-finite entry".into()));
        }
        let modes = width / 2;
        for a in 0..space.dim() {
            for b in 0..space.dim() {
                let mut s = 0.0;
                for k in 0..modes {
                    s += embedding[a][2 * k] * embedding[b][2 * k + 1] - embedding[a][2 * k + 1] * embedding[b][2 * k];
                }
                if (s - space.entry(a, b)).abs() > EMBEDDING_TOLERANCE {
                    return Err(FockError::Embedding(format!(
                        "pulled-back form differs from sigma at ({a},{b}): {s} vs {}",
                        space.entry(a, b)
                    )));
                }
            }
        }
        if levels < 2 {
            return Err(FockError::Truncation(levels));
        }
        let dim = u32::try_from(modes)
            .ok()
            .and_then(|m| levels.checked_pow(m))
            .filter(|&d| d <= cap)
            .ok_or(FockError::MemoryCap { modes, levels, cap })?;
        Ok(FockRep {
            space,
            modes,
            levels,
            dim,
            embedding,
        })
    }

    pub fn space(&self) -> &SymplecticSpace {
        &self.space
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embedding(&self) -> &[Vec<f64>] {
        &self.embedding
    }

    fn stride(&self, mode: usize) -> usize {
        self.levels.pow((self.modes - 1 - mode) as u32)
    }

    fn digit(&self, index: usize, mode: usize) -> usize {
        (index / self.stride(mode)) % self.levels
    }

    /// `(q_k, p_k)` with `G_f = Σ q_k Q_k + p_k P_k`.
    pub fn mode_coefficients(&self, f: &TestVector) -> Result<Vec<(f64, f64)>, FockError> {
        self.space.check_vector(f)?;
        let mut out = vec![(0.0, 0.0); self.modes];
        for (j, &x) in f.coords().iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (k, c) in out.iter_mut().enumerate() {
                c.0 += x * self.embedding[j][2 * k];
                c.1 += x * self.embedding[j][2 * k + 1];
            }
        }
        Ok(out)
    }

    /// Basis indices whose mode levels are all below `cutoff`, ascending.
    pub fn low_indices(&self, cutoff: usize) -> Result<Vec<usize>, FockError> {
        if cutoff == 0 || cutoff > self.levels {
            return Err(FockError::Compression {
                level: cutoff,
                levels: self.levels,
            });
        }
        Ok((0..self.dim)
            .filter(|&i| (0..self.modes).all(|k| self.digit(i, k) < cutoff))
            .collect())
    }

    /// `G_f · X` from the ladder entries, without forming `G_f`.
    pub fn apply_generator(&self, f: &TestVector, x: MatRef<'_, c64>) -> Result<Mat<c64>, FockError> {
        let coeffs = self.mode_coefficients(f)?;
        self.check_rows(x.nrows())?;
        Ok(self.apply_coefficients(&coeffs, x))
    }

    fn apply_coefficients(&self, coeffs: &[(f64, f64)], x: MatRef<'_, c64>) -> Mat<c64> {
        let mut out = Mat::<c64>::zeros(x.nrows(), x.ncols());
        for (k, &(q, p)) in coeffs.iter().enumerate() {
            if q == 0.0 && p == 0.0 {
                continue;
            }
            let stride = self.stride(k);
            for row in 0..self.dim {
                let m = self.digit(row, k);
                // G[m, m+1] = (q - ip) √((m+1)/2), G[m, m-1] = (q + ip) √(m/2)
                if m + 1 < self.levels {
                    let s = ((m + 1) as f64 / 2.0).sqrt();
                    let g = c64::new(q * s, -p * s);
                    let col = row + stride;
                    for j in 0..x.ncols() {
                        out[(row, j)] += g * x[(col, j)];
                    }
                }
                if m > 0 {
                    let s = (m as f64 / 2.0).sqrt();
                    let g = c64::new(q * s, p * s);
                    let col = row - stride;
                    for j in 0..x.ncols() {
                        out[(row, j)] += g * x[(col, j)];
                    }
                }
            }
        }
        out
    }

    fn check_rows(&self, rows: usize) -> Result<(), FockError> {
        if rows != self.dim {
            return Err(FockError::Shape {
                rows,
                cols: rows,
                expected: self.dim,
            });
        }
        Ok(())
    }

    pub(crate) fn check_square(&self, m: MatRef<'_, c64>) -> Result<(), FockError> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(FockError::Shape {
                rows: m.nrows(),
                cols: m.ncols(),
                expected: self.dim,
            });
        }
        Ok(())
    }

    fn mode_matrix(&self, coeffs: Vec<(f64, f64)>) -> Mat<c64> {
        let mut g = Mat::<c64>::zeros(self.dim, self.dim);
        for (k, &(q, p)) in coeffs.iter().enumerate() {
            if q == 0.0 && p == 0.0 {
                continue;
            }
            let stride = self.stride(k);
            for row in 0..self.dim {
                let m = self.digit(row, k);
                if m + 1 < self.levels {
                    let s = ((m + 1) as f64 / 2.0).sqrt();
                    g[(row, row + stride)] = c64::new(q * s, -p * s);
                    g[(row + stride, row)] = c64::new(q * s, p * s);
                }
            }
        }
        g
    }

    /// Dense hermitian `G_f`.
    pub fn generator(&self, f: &TestVector) -> Result<OperatorMatrix, FockError> {
        let coeffs = self.mode_coefficients(f)?;
        Ok(OperatorMatrix::new(OperatorTag::Generator, self.mode_matrix(coeffs)))
    }

    fn single_mode(&self, mode: usize, q: f64, p: f64) -> Mat<c64> {
        assert!(mode < self.modes, "mode {mode} out of range");
        let mut coeffs = vec![(0.0, 0.0); self.modes];
        coeffs[mode] = (q, p);
        self.mode_matrix(coeffs)
    }

    /// `Q_k` for the zero-based mode index `k`.
    pub fn position(&self, mode: usize) -> Mat<c64> {
        self.single_mode(mode, 1.0, 0.0)
    }

    /// `P_k` for the zero-based mode index `k`.
    pub fn momentum(&self, mode: usize) -> Mat<c64> {
        self.single_mode(mode, 0.0, 1.0)
    }

    pub(crate) fn apply_position(&self, mode: usize, x: MatRef<'_, c64>) -> Mat<c64> {
        let mut coeffs = vec![(0.0, 0.0); self.modes];
        coeffs[mode] = (1.0, 0.0);
        self.apply_coefficients(&coeffs, x)
    }

    pub(crate) fn apply_momentum(&self, mode: usize, x: MatRef<'_, c64>) -> Mat<c64> {
        let mut coeffs = vec![(0.0, 0.0); self.modes];
        coeffs[mode] = (0.0, 1.0);
        self.apply_coefficients(&coeffs, x)
    }

    /// `iz·1 + G_f` as a dense matrix.
    pub(crate) fn shifted_generator(&self, z: Complex64, f: &TestVector) -> Result<Mat<c64>, FockError> {
        let mut a = self.generator(f)?.matrix;
        let shift = c64::new(0.0, 1.0) * z;
        for i in 0..self.dim {
            a[(i, i)] += shift;
        }
        Ok(a)
    }

    /// `(iz·1 + G_f)⁻¹` by pivoted LU, with the residual checked.
    pub fn resolvent_matrix(&self, z: Complex64, f: &TestVector) -> Result<OperatorMatrix, FockError> {
        check_domain(z)?;
        self.space.check_vector(f)?;
        if f.is_zero() {
            let d = c64::new(0.0, -1.0) / z;
            let m = Mat::from_fn(self.dim, self.dim, |i, j| if i == j { d } else { c64::new(0.0, 0.0) });
            return Ok(OperatorMatrix::new(OperatorTag::Resolvent, m));
        }
        let a = self.shifted_generator(z, f)?;
        let lu = a.partial_piv_lu();
        let id = Mat::<c64>::identity(self.dim, self.dim);
        let x = lu.solve(&id);
        let coeffs = self.mode_coefficients(f)?;
        let residual = self.solve_residual(&coeffs, z, x.as_ref(), id.as_ref());
        if !(residual <= SOLVE_TOLERANCE) {
            return Err(FockError::Solver {
                residual,
                condition: one_norm(a.as_ref()) * one_norm(x.as_ref()),
            });
        }
        Ok(OperatorMatrix::new(OperatorTag::Resolvent, x))
    }

    /// `‖(iz + G) X − B‖_F / max(1, ‖B‖_F)` using the sparse generator.
    pub(crate) fn solve_residual(
        &self,
        coeffs: &[(f64, f64)],
        z: Complex64,
        x: MatRef<'_, c64>,
        b: MatRef<'_, c64>,
    ) -> f64 {
        let mut r = self.apply_coefficients(coeffs, x);
        let shift = c64::new(0.0, 1.0) * z;
        for j in 0..x.ncols() {
            for i in 0..x.nrows() {
                r[(i, j)] += shift * x[(i, j)] - b[(i, j)];
            }
        }
        r.norm_l2() / b.norm_l2().max(1.0)
    }

    /// `P_M m P_M` restricted to states with every mode level below `cutoff`.
    pub fn compress(&self, m: &OperatorMatrix, cutoff: usize) -> Result<OperatorMatrix, FockError> {
        self.check_square(m.matrix.as_ref())?;
        let idx = self.low_indices(cutoff)?;
        let k = idx.len();
        let block = Mat::from_fn(k, k, |i, j| m.matrix[(idx[i], idx[j])]);
        let tag = if k == self.dim { m.tag } else { OperatorTag::Compressed };
        Ok(OperatorMatrix::new(tag, block))
    }
}

pub(crate) fn check_domain(z: Complex64) -> Result<(), FockError> {
    if z.re == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
        return Err(FockError::Domain(z));
    }
    Ok(())
}

fn one_norm(m: MatRef<'_, c64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}
