//! JSON configuration shared by the relation suite and the cohomology
//! pipeline. Every field has a default, so `{}` is a valid config.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{FockError, FockRep, DEFAULT_MAX_DIM};
use crate::symplectic::{SpaceSpec, SymplecticError, SymplecticSpace, TestVector};
use crate::verify::RelationId;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema_version {0}")]
    Schema(u32),
    #[error("invalid space: {0}")]
    Space(#[from] SymplecticError),
    #[error(transparent)]
    Rep(#[from] FockError),
    #[error("{0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

/// A spectral parameter: a real number or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Spectral {
    Real(f64),
    Complex([f64; 2]),
}

impl Spectral {
    pub fn value(self) -> Complex64 {
        match self {
            Spectral::Real(x) => Complex64::new(x, 0.0),
            Spectral::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

impl From<f64> for Spectral {
    fn from(x: f64) -> Self {
        Spectral::Real(x)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    /// Test vectors; default: basis vectors plus `e_{2k-1} ± e_{2k}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectors: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<Spectral>>,
    /// Defaults to `lambdas`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mus: Option<Vec<Spectral>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
    /// Almost-inner probes: `I`, products of at most two of `Qk`/`Pk`, or an
    /// expression in the resolvent grammar.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<String>>,
}

/// Grid with every default filled in for a given space dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedGrid {
    pub vectors: Vec<TestVector>,
    pub lambdas: Vec<Complex64>,
    pub mus: Vec<Complex64>,
    pub scales: Vec<f64>,
    pub probes: Vec<String>,
}

pub fn default_vectors(dim: usize) -> Vec<TestVector> {
    let mut out: Vec<TestVector> = (0..dim).map(|i| TestVector::basis(dim, i)).collect();
    for k in 0..dim / 2 {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; dim];
            v[2 * k] = 1.0;
            v[2 * k + 1] = s;
            out.push(TestVector::new(v));
        }
    }
    out
}

pub fn default_probes(dim: usize) -> Vec<String> {
    let e2 = TestVector::basis(dim, 1);
    vec![
        "I".into(),
        "Q1".into(),
        "P1".into(),
        "Q1*P1".into(),
        format!("R(1,{e2})"),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptXi {
    pub f: Vec<i64>,
    pub g: Vec<i64>,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CohomologyConfig {
    /// Lattice box half-width `B`.
    #[serde(rename = "box")]
    pub bound: i64,
    /// Levels per mode of the representation used for extraction.
    pub truncation: usize,
    pub zeta_grid: Vec<f64>,
    /// Tolerance for cocycle, additivity and homogeneity defects.
    pub tolerance: f64,
    /// Tolerance for path independence and the coboundary replay.
    pub path_tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrupt_xi: Option<CorruptXi>,
}

impl Default for CohomologyConfig {
    fn default() -> Self {
        CohomologyConfig {
            bound: 3,
            truncation: 16,
            zeta_grid: vec![-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0],
            tolerance: 1e-10,
            path_tolerance: 1e-9,
            corrupt_xi: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub schema_version: u32,
    /// Number of modes; implied by `space` when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec>,
    /// Rows map basis vectors of the space to `(Q1,P1,…)` coefficients;
    /// required for forms other than the standard one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<Vec<f64>>>,
    pub truncations: Vec<usize>,
    pub compression: usize,
    pub tolerance: f64,
    pub exact_tolerance: f64,
    pub schur_tolerance: f64,
    pub seed: u64,
    pub max_dim: usize,
    pub grid: Grid,
    pub checks: Vec<RelationId>,
    pub cohomology: CohomologyConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            schema_version: SCHEMA_VERSION,
            modes: None,
            space: None,
            embedding: None,
            truncations: vec![64, 128, 256],
            compression: 6,
            tolerance: 1e-6,
            exact_tolerance: 1e-9,
            schur_tolerance: 1e-8,
            seed: 0,
            max_dim: DEFAULT_MAX_DIM,
            grid: Grid::default(),
            checks: RelationId::ALL.to_vec(),
            cohomology: CohomologyConfig::default(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let c: Config = serde_json::from_str(text)?;
        if c.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema(c.schema_version));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn space(&self) -> Result<SymplecticSpace, ConfigError> {
        let spec = match (&self.space, self.modes) {
            (Some(s), _) => s.clone(),
            (None, Some(n)) => SpaceSpec::Standard { n },
            (None, None) => SpaceSpec::Standard { n: 1 },
        };
        Ok(spec.build()?)
    }

    /// Representation at `levels`, honoring the embedding and memory cap.
    pub fn rep(&self, levels: usize) -> Result<FockRep, ConfigError> {
        let space = self.space()?;
        let embedding = match &self.embedding {
            Some(e) => e.clone(),
            None => {
                let standard = SymplecticSpace::standard(space.modes())?;
                if space.form_rows() != standard.form_rows() {
                    return invalid("a non-standard form needs an explicit embedding");
                }
                let d = space.dim();
                (0..d)
                    .map(|j| (0..d).map(|k| if j == k { 1.0 } else { 0.0 }).collect())
                    .collect()
            }
        };
        let rep = FockRep::embedded(space, levels, embedding, self.max_dim)?;
        if let Some(n) = self.modes {
            if n != rep.modes() {
                return invalid(format!(
                    "modes = {n} but the space is represented on {} modes",
                    rep.modes()
                ));
            }
        }
        Ok(rep)
    }

    pub fn grid(&self) -> Result<ResolvedGrid, ConfigError> {
        let dim = self.space()?.dim();
        let vectors = match &self.grid.vectors {
            Some(v) => v.iter().map(|x| TestVector::new(x.clone())).collect(),
            None => default_vectors(dim),
        };
        let lambdas: Vec<Complex64> = match &self.grid.lambdas {
            Some(l) => l.iter().map(|s| s.value()).collect(),
            None => vec![1.0.into(), (-1.0).into(), 2.0.into()],
        };
        let mus = match &self.grid.mus {
            Some(m) => m.iter().map(|s| s.value()).collect(),
            None => lambdas.clone(),
        };
        Ok(ResolvedGrid {
            vectors,
            lambdas,
            mus,
            scales: self.grid.scales.clone().unwrap_or_else(|| vec![-1.0, 0.5, 2.0, 2.5]),
            probes: self.grid.probes.clone().unwrap_or_else(|| default_probes(dim)),
        })
    }

    /// Checks every invariant the suite relies on, including the memory cap
    /// at each truncation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema(self.schema_version));
        }
        if self.truncations.is_empty() {
            return invalid("truncation list is empty");
        }
        if self.truncations.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("truncation list must be strictly ascending");
        }
        for (name, t) in [
            ("tolerance", self.tolerance),
            ("exact_tolerance", self.exact_tolerance),
            ("schur_tolerance", self.schur_tolerance),
            ("cohomology.tolerance", self.cohomology.tolerance),
            ("cohomology.path_tolerance", self.cohomology.path_tolerance),
        ] {
            if !(t > 0.0 && t.is_finite()) {
                return invalid(format!("{name} must be positive, got {t}"));
            }
        }
        if self.compression == 0 || self.compression > self.truncations[0] {
            return invalid(format!(
                "compression {} outside 1..={}",
                self.compression, self.truncations[0]
            ));
        }
        for &n in &self.truncations {
            self.rep(n)?;
        }
        let dim = self.space()?.dim();
        let grid = self.grid()?;
        if grid.vectors.is_empty() {
            return invalid("grid has no vectors");
        }
        for v in &grid.vectors {
            if v.dim() != dim {
                return invalid(format!("vector {v} has length {}, space has dimension {dim}", v.dim()));
            }
            if v.coords().iter().any(|x| !x.is_finite()) {
                return invalid(format!("vector {v} is not finite"));
            }
        }
        for z in grid.lambdas.iter().chain(&grid.mus) {
            if z.re == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
                return invalid(format!("spectral parameter {z} must have a nonzero real part"));
            }
        }
        if grid.lambdas.is_empty() || grid.mus.is_empty() {
            return invalid("spectral parameter lists must be nonempty");
        }
        for &c in &grid.scales {
            if c == 0.0 || !c.is_finite() {
                return invalid(format!("scale {c} must be finite and nonzero"));
            }
        }
        for p in &grid.probes {
            crate::verify::Probe::parse(p, &self.space()?)
                .map_err(|e| ConfigError::Invalid(format!("probe {p:?}: {e}")))?;
        }
        let co = &self.cohomology;
        if co.bound < 1 {
            return invalid("cohomology box must be at least 1");
        }
        if co.truncation < 3 {
            return invalid("cohomology truncation must be at least 3");
        }
        self.rep(co.truncation)?;
        if !co.zeta_grid.contains(&0.0) || !co.zeta_grid.contains(&1.0) {
            return invalid("zeta grid must contain 0 and 1");
        }
        if co.zeta_grid.iter().any(|x| !x.is_finite()) {
            return invalid("zeta grid must be finite");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_default() {
        let c = Config::from_json("{}").unwrap();
        assert_eq!(c, Config::default());
        c.validate().unwrap();
        let g = c.grid().unwrap();
        assert_eq!(g.vectors.len(), 4);
        assert_eq!(g.vectors[2].coords(), &[1.0, 1.0]);
        assert_eq!(g.vectors[3].coords(), &[1.0, -1.0]);
        assert_eq!(g.probes.last().unwrap(), "R(1,[0,1])");
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            r#"{"grid": {"lambdas": [0]}}"#,
            r#"{"grid": {"mus": [[0, 1]]}}"#,
            r#"{"truncations": []}"#,
            r#"{"truncations": [64, 32]}"#,
            r#"{"tolerance": 0}"#,
            r#"{"compression": 0}"#,
            r#"{"grid": {"vectors": [[1, 0, 0]]}}"#,
            r#"{"grid": {"scales": [0]}}"#,
            r#"{"grid": {"probes": ["Q3"]}}"#,
            r#"{"modes": 2, "truncations": [4096]}"#,
            r#"{"space": {"form": [[0, 2], [-2, 0]]}}"#,
        ];
        for text in bad {
            let r = Config::from_json(text).and_then(|c| c.validate());
            assert!(r.is_err(), "{text} accepted");
        }
        let cap = Config::from_json(r#"{"modes": 2, "truncations": [4096]}"#)
            .unwrap()
            .validate()
            .unwrap_err();
        assert!(cap.to_string().contains("memory cap"), "{cap}");
        assert!(Config::from_json(r#"{"unknown": 1}"#).is_err());
        assert!(matches!(
            Config::from_json(r#"{"schema_version": 7}"#),
            Err(ConfigError::Schema(7))
        ));
    }

    #[test]
    fn complex_spectral_parameters() {
        let c = Config::from_json(r#"{"grid": {"lambdas": [1, [0.5, -2]]}}"#).unwrap();
        c.validate().unwrap();
        assert_eq!(c.grid().unwrap().lambdas[1], Complex64::new(0.5, -2.0));
    }

    #[test]
    fn explicit_form_with_embedding() {
        let text = r#"{
            "space": {"form": [[0,1,0,0],[-1,0,0,0],[0,0,0,0],[0,0,0,0]]},
            "embedding": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,0]],
            "truncations": [8]
        }"#;
        let c = Config::from_json(text).unwrap();
        c.validate().unwrap();
        assert_eq!(c.rep(8).unwrap().dim(), 64);
    }
}
