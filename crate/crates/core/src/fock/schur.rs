//! Reading off the scalar of an operator that ought to be a multiple of the
//! identity: `⟨Φ, KΦ⟩ / ‖Φ‖²` over a probe set of low-lying states.

use faer::{c64, Mat, MatRef};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{FockError, FockRep, OperatorMatrix};

pub const DEFAULT_SCHUR_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_RANDOM_PROBES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchurVerdict {
    CNumber,
    NotCNumber,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchurOptions {
    /// Probes live on states with every mode level below this cutoff.
    pub probe_cutoff: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub random_probes: usize,
}

impl SchurOptions {
    pub fn new(probe_cutoff: usize) -> Self {
        SchurOptions {
            probe_cutoff,
            tolerance: DEFAULT_SCHUR_TOLERANCE,
            seed: 0,
            random_probes: DEFAULT_RANDOM_PROBES,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchurReport {
    pub mean: Complex64,
    pub max_deviation: f64,
    pub probes_used: usize,
    pub tolerance: f64,
    pub verdict: SchurVerdict,
    pub seed: u64,
}

impl SchurReport {
    pub fn is_c_number(&self) -> bool {
        self.verdict == SchurVerdict::CNumber
    }
}

/// Unit probe vectors as columns: the low basis states, then seeded complex
/// Gaussian vectors on the same span.
fn probe_block(rep: &FockRep, opts: &SchurOptions) -> Result<Mat<c64>, FockError> {
    let idx = rep.low_indices(opts.probe_cutoff).map_err(|e| match e {
        FockError::Compression { level: 0, .. } => FockError::EmptyProbeSet,
        other => other,
    })?;
    let k = idx.len() + opts.random_probes;
    let mut block = Mat::<c64>::zeros(rep.dim(), k);
    for (j, &i) in idx.iter().enumerate() {
        block[(i, j)] = c64::new(1.0, 0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for j in idx.len()..k {
        let mut norm2 = 0.0;
        for &i in &idx {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            block[(i, j)] = c64::new(re, im);
            norm2 += re * re + im * im;
        }
        let s = 1.0 / norm2.sqrt();
        for &i in &idx {
            block[(i, j)] *= s;
        }
    }
    Ok(block)
}

/// Extraction with `K` given only through its action on a block.
pub fn schur_constant_with<F>(rep: &FockRep, opts: &SchurOptions, mut apply: F) -> Result<SchurReport, FockError>
where
    F: FnMut(MatRef<'_, c64>) -> Result<Mat<c64>, FockError>,
{
    let phi = probe_block(rep, opts)?;
    let k_phi = apply(phi.as_ref())?;
    if k_phi.nrows() != phi.nrows() || k_phi.ncols() != phi.ncols() {
        return Err(FockError::Shape {
            rows: k_phi.nrows(),
            cols: k_phi.ncols(),
            expected: rep.dim(),
        });
    }
    let values: Vec<Complex64> = (0..phi.ncols())
        .map(|j| {
            let mut num = c64::new(0.0, 0.0);
            let mut den = 0.0;
            for i in 0..phi.nrows() {
                num += phi[(i, j)].conj() * k_phi[(i, j)];
                den += phi[(i, j)].norm_sqr();
            }
            num / den
        })
        .collect();
    if values.is_empty() {
        return Err(FockError::EmptyProbeSet);
    }
    let mean = values.iter().sum::<Complex64>() / values.len() as f64;
    let max_deviation = values.iter().map(|v| (v - mean).norm()).fold(0.0, f64::max);
    let verdict = if max_deviation <= opts.tolerance {
        SchurVerdict::CNumber
    } else {
        SchurVerdict::NotCNumber
    };
    Ok(SchurReport {
        mean,
        max_deviation,
        probes_used: values.len(),
        tolerance: opts.tolerance,
        verdict,
        seed: opts.seed,
    })
}

pub fn schur_constant(rep: &FockRep, k: &OperatorMatrix, opts: &SchurOptions) -> Result<SchurReport, FockError> {
    rep.check_square(k.matrix.as_ref())?;
    schur_constant_with(rep, opts, |phi| Ok(&k.matrix * phi))
}
