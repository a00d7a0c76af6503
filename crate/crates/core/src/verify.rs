//! Numerical certification of the relations as residual norms.
//!
//! Matrix-exact relations (`pseudo`, `adjoint`, `zero_vector`, `rel_iii`) are
//! evaluated on the full truncated space and must sit below the exact
//! tolerance at every truncation. Relations between different directions
//! only hold away from the truncation boundary; they are compressed to low
//! Fock states and must converge as `N` grows.

use std::collections::BTreeMap;

use faer::{c64, Mat};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{Config, ConfigError, SCHEMA_VERSION};
use crate::expr::{parse, relations, Expr, ExprError, Generator};
use crate::fock::{
    check_domain, schur_constant_with, spectral_norm, Evaluator, Factor, FockError, FockRep, OperatorExpr, SchurOptions,
};
use crate::symplectic::{SymplecticError, SymplecticSpace, TestVector};

/// Slack factor on successive residuals.
pub const MONOTONE_SLACK: f64 = 1.1;
/// Residuals at or below this level count as rounding noise and never break
/// monotonicity.
pub const NOISE_FLOOR: f64 = 1e-12;
/// Agreement required between `pair(f,g)` and the extracted commutator constant.
pub const SIGMA_TOLERANCE: f64 = 1e-8;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Space(#[from] SymplecticError),
    #[error(
        "sigma cross-check failed: pair gives {pair}, Schur extraction gives {extracted} (deviation {deviation:e})"
    )]
    Sigma { pair: f64, extracted: f64, deviation: f64 },
    #[error("invalid probe: {0}")]
    Probe(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationId {
    Pseudo,
    Adjoint,
    ZeroVector,
    RelI,
    RelIi,
    RelIii,
    RelIv,
    AlmostInner,
}

impl RelationId {
    pub const ALL: [RelationId; 8] = [
        RelationId::Pseudo,
        RelationId::Adjoint,
        RelationId::ZeroVector,
        RelationId::RelI,
        RelationId::RelIi,
        RelationId::RelIii,
        RelationId::RelIv,
        RelationId::AlmostInner,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelationId::Pseudo => "pseudo",
            RelationId::Adjoint => "adjoint",
            RelationId::ZeroVector => "zero_vector",
            RelationId::RelI => "rel_i",
            RelationId::RelIi => "rel_ii",
            RelationId::RelIii => "rel_iii",
            RelationId::RelIv => "rel_iv",
            RelationId::AlmostInner => "almost_inner",
        }
    }

    /// Report family; the two pseudo-resolvent axioms form one family.
    pub fn family(self) -> &'static str {
        match self {
            RelationId::Pseudo | RelationId::Adjoint => "pseudo_resolvent",
            other => other.name(),
        }
    }

    /// Matrix-exact relations are judged per truncation, the rest by
    /// convergence.
    pub fn is_exact(self) -> bool {
        matches!(
            self,
            RelationId::Pseudo | RelationId::Adjoint | RelationId::ZeroVector | RelationId::RelIii
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationCheck {
    pub relation: RelationId,
    pub params: BTreeMap<String, Value>,
    pub truncations: Vec<usize>,
    /// `null` for compressed-free exact checks.
    pub compression: Option<usize>,
    /// One entry per truncation; `null` where the computation failed.
    pub residuals: Vec<Option<f64>>,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl RelationCheck {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.residuals.last().copied().flatten()
    }
}

/// Tolerances and compression shared by all checks of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckSettings {
    pub compression: usize,
    pub tolerance: f64,
    pub exact_tolerance: f64,
    pub schur_tolerance: f64,
    pub seed: u64,
}

impl Default for CheckSettings {
    fn default() -> Self {
        CheckSettings {
            compression: 6,
            tolerance: 1e-6,
            exact_tolerance: 1e-9,
            schur_tolerance: 1e-8,
            seed: 0,
        }
    }
}

/// One evaluator per truncation, ascending.
pub struct Series<'r> {
    evals: Vec<Evaluator<'r>>,
}

impl<'r> Series<'r> {
    pub fn new(reps: &'r [FockRep]) -> Self {
        Series {
            evals: reps.iter().map(Evaluator::new).collect(),
        }
    }

    pub fn truncations(&self) -> Vec<usize> {
        self.evals.iter().map(|e| e.rep().levels()).collect()
    }

    fn space(&self) -> &'r SymplecticSpace {
        self.evals[0].rep().space()
    }
}

/// Almost-inner probe operator `A`.
#[derive(Debug, Clone, PartialEq)]
pub enum Probe {
    /// Product of canonical operators; `δ_f(A) = i[G_f, A]` is taken
    /// numerically. The empty product is the identity.
    Polynomial(Vec<Factor>),
    /// Resolvent expression; `δ_f(A)` comes from the symbolic derivation.
    Expr(Expr),
}

impl Probe {
    pub fn parse(text: &str, space: &SymplecticSpace) -> Result<Probe, VerifyError> {
        let t: String = text.split_whitespace().collect();
        if t == "I" {
            return Ok(Probe::Polynomial(Vec::new()));
        }
        let canonical = |tok: &str| -> Option<Factor> {
            let (head, idx) = tok.split_at(1);
            let k: usize = idx.parse().ok()?;
            if k == 0 || k > space.modes() {
                return None;
            }
            match head {
                "Q" => Some(Factor::Position(k - 1)),
                "P" => Some(Factor::Momentum(k - 1)),
                _ => None,
            }
        };
        let toks: Vec<&str> = t.split('*').collect();
        let looks_canonical = toks.iter().all(|s| {
            s.len() > 1 && (s.starts_with('Q') || s.starts_with('P')) && s[1..].bytes().all(|b| b.is_ascii_digit())
        });
        if looks_canonical {
            if toks.len() > 2 {
                return Err(VerifyError::Probe(format!("{text}: degree above 2")));
            }
            return toks
                .iter()
                .map(|s| canonical(s).ok_or_else(|| VerifyError::Probe(format!("{text}: no mode {s}"))))
                .collect::<Result<_, _>>()
                .map(Probe::Polynomial);
        }
        let e = parse(text)?;
        for g in e.generators() {
            space.check_vector(g.f())?;
        }
        Ok(Probe::Expr(e))
    }
}

fn vector_param(v: &TestVector) -> Value {
    json!(v.coords())
}

fn complex_param(z: Complex64) -> Value {
    if z.im == 0.0 {
        json!(z.re)
    } else {
        json!([z.re, z.im])
    }
}

fn nonzero(name: &str, z: Complex64) -> Result<(), VerifyError> {
    check_domain(z).map_err(|_| VerifyError::Parameter(format!("{name} = {z} needs a nonzero real part")))
}

fn monotone(residuals: &[f64]) -> Option<usize> {
    residuals
        .windows(2)
        .position(|w| w[1] > MONOTONE_SLACK * w[0] && w[1] > NOISE_FLOOR)
        .map(|k| k + 1)
}

struct Outcome {
    residuals: Vec<Option<f64>>,
    failure: Option<String>,
}

fn run_each<F>(series: &mut Series<'_>, mut residual: F) -> Outcome
where
    F: FnMut(&mut Evaluator<'_>) -> Result<f64, VerifyError>,
{
    let mut out = Outcome {
        residuals: Vec::new(),
        failure: None,
    };
    for ev in series.evals.iter_mut() {
        match residual(ev) {
            Ok(r) => out.residuals.push(Some(r)),
            Err(e) => {
                out.residuals.push(None);
                if out.failure.is_none() {
                    out.failure = Some(format!("N={}: {e}", ev.rep().levels()));
                }
            }
        }
    }
    out
}

fn finish(
    relation: RelationId,
    params: BTreeMap<String, Value>,
    series: &Series<'_>,
    settings: &CheckSettings,
    outcome: Outcome,
) -> RelationCheck {
    let truncations = series.truncations();
    let Outcome { residuals, mut failure } = outcome;
    let (tolerance, compression) = if relation.is_exact() {
        (settings.exact_tolerance, None)
    } else {
        (settings.tolerance, Some(settings.compression))
    };
    if failure.is_none() {
        let rs: Vec<f64> = residuals.iter().map(|r| r.unwrap_or(f64::INFINITY)).collect();
        if relation.is_exact() {
            if let Some(k) = rs.iter().position(|&r| !(r <= tolerance)) {
                failure = Some(format!(
                    "residual {:e} above {tolerance:e} at N={}",
                    rs[k], truncations[k]
                ));
            }
        } else if let Some(k) = monotone(&rs) {
            failure = Some(format!(
                "residual rose from {:e} at N={} to {:e} at N={}",
                rs[k - 1],
                truncations[k - 1],
                rs[k],
                truncations[k]
            ));
        } else if !(rs[rs.len() - 1] <= tolerance) {
            failure = Some(format!("final residual {:e} above {tolerance:e}", rs[rs.len() - 1]));
        }
    }
    RelationCheck {
        relation,
        params,
        truncations,
        compression,
        residuals,
        tolerance,
        verdict: if failure.is_none() {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        seed: settings.seed,
        failure,
    }
}

fn compressed_norm(ev: &mut Evaluator<'_>, op: &OperatorExpr, cutoff: usize) -> Result<f64, VerifyError> {
    let m = ev.compressed(op, cutoff)?;
    Ok(spectral_norm(m.matrix.as_ref()))
}

fn full_norm(ev: &mut Evaluator<'_>, op: &OperatorExpr) -> Result<f64, VerifyError> {
    let m = ev.full(op)?;
    Ok(spectral_norm(m.matrix.as_ref()))
}

/// Schur extraction of `−i[G_f, G_g]` below the compression level.
pub fn extract_sigma(rep: &FockRep, f: &TestVector, g: &TestVector, opts: &SchurOptions) -> Result<f64, VerifyError> {
    let report = schur_constant_with(rep, opts, |phi| {
        let gf_gg = rep.apply_generator(f, rep.apply_generator(g, phi)?.as_ref())?;
        let gg_gf = rep.apply_generator(g, rep.apply_generator(f, phi)?.as_ref())?;
        Ok(Mat::from_fn(phi.nrows(), phi.ncols(), |i, j| {
            c64::new(0.0, -1.0) * (gf_gg[(i, j)] - gg_gf[(i, j)])
        }))
    })?;
    if !report.is_c_number() {
        return Err(VerifyError::Fock(FockError::Format(format!(
            "commutator is not a scalar on probes (deviation {:e})",
            report.max_deviation
        ))));
    }
    Ok(report.mean.re)
}

fn cross_checked_sigma(
    ev: &Evaluator<'_>,
    f: &TestVector,
    g: &TestVector,
    settings: &CheckSettings,
) -> Result<f64, VerifyError> {
    let rep = ev.rep();
    let pair = rep.space().pair(f, g)?;
    let opts = SchurOptions::new(settings.compression)
        .seed(settings.seed)
        .tolerance(settings.schur_tolerance);
    let extracted = extract_sigma(rep, f, g, &opts)?;
    let deviation = (extracted - pair).abs();
    if !(deviation <= SIGMA_TOLERANCE) {
        return Err(VerifyError::Sigma {
            pair,
            extracted,
            deviation,
        });
    }
    Ok(pair)
}

/// `‖R(λ)R(μ)·i(μ−λ) − (R(λ) − R(μ))‖` on the full space.
pub fn check_pseudo(
    series: &mut Series<'_>,
    settings: &CheckSettings,
    f: &TestVector,
    lambda: Complex64,
    mu: Complex64,
) -> Result<RelationCheck, VerifyError> {
    series.space().check_vector(f)?;
    let op = OperatorExpr::from_expr(&relations::pseudo_resolvent(lambda, mu, f)?);
    let params = BTreeMap::from([
        ("f".to_string(), vector_param(f)),
        ("lambda".to_string(), complex_param(lambda)),
        ("mu".to_string(), complex_param(mu)),
    ]);
    let out = run_each(series, |ev| full_norm(ev, &op));
    Ok(finish(RelationId::Pseudo, params, series, settings, out))
}

/// `‖R(λ,f)† − R(−λ̄,f)‖` on the full space.
pub fn check_adjoint(
    series: &mut Series<'_>,
    settings: &CheckSettings,
    f: &TestVector,
    lambda: Complex64,
) -> Result<RelationCheck, VerifyError> {
    series.space().check_vector(f)?;
    let r = Generator::new(lambda, f.clone())?;
    let (a, b) = (OperatorExpr::resolvent(r.clone()), OperatorExpr::resolvent(r.adjoint()));
    let params = BTreeMap::from([
        ("f".to_string(), vector_param(f)),
        ("lambda".to_string(), complex_param(lambda)),
    ]);
    let out = run_each(series, |ev| {
        let ra = ev.full(&a)?.adjoint();
        let rb = ev.full(&b)?;
        Ok(spectral_norm((&ra.matrix - &rb.matrix).as_ref()))
    });
    Ok(finish(RelationId::Adjoint, params, series, settings, out))
}

/// `‖(iλ·1 + G_0)⁻¹ − (−i/λ)·1‖`, the inverse taken by the general solver.
pub fn check_zero_vector(
    series: &mut Series<'_>,
    settings: &CheckSettings,
    lambda: Complex64,
) -> Result<RelationCheck, VerifyError> {
    nonzero("lambda", lambda)?;
    let params = BTreeMap::from([("lambda".to_string(), complex_param(lambda))]);
    let out = run_each(series, |ev| {
        let rep = ev.rep();
        let zero = TestVector::zeros(rep.space().dim());
        let a = rep.generator(&zero)?.matrix;
        let shift = I * lambda;
        let a = Mat::from_fn(
            rep.dim(),
            rep.dim(),
            |i, j| if i == j { a[(i, j)] + shift } else { a[(i, j)] },
        );
        let x = faer::linalg::solvers::Solve::solve(&a.partial_piv_lu(), Mat::<c64>::identity(rep.dim(), rep.dim()));
        let d = c64::new(0.0, -1.0) / lambda;
        let diff = Mat::from_fn(
            rep.dim(),
            rep.dim(),
            |i, j| if i == j { x[(i, j)] - d } else { x[(i, j)] },
        );
        Ok(spectral_norm(diff.as_ref()))
    });
    Ok(finish(RelationId::ZeroVector, params, series, settings, out))
}

/// `‖c·R(cλ,cf) − R(λ,f)‖` on the full space.
pub fn check_relation_iii(
    series: &mut Series<'_>,
    settings: &CheckSettings,
    f: &TestVector,
    lambda: Complex64,
    c: f64,
) -> Result<RelationCheck, VerifyError> {
    series.space().check_vector(f)?;
    let op = OperatorExpr::from_expr(&relations::homogeneity(lambda, f, c)?);
    let params = BTreeMap::from([
        ("f".to_string(), vector_param(f)),
        ("lambda".to_string(), complex_param(lambda)),
        ("c".to_string(), json!(c)),
    ]);
    let out = run_each(series, |ev| full_norm(ev, &op));
    Ok(finish(RelationId::RelIii, params, series, settings, out))
}

/// Compressed `[R(λ,f),R(μ,g)] − iσ(f,g) R(λ,f)R(μ,g)²R(λ,f)`.
pub fn check_relation_i(
    series: &mut Series<'_>,
    settings: &CheckSettings,
    f: &TestVector,
    g: &TestVector,
    lambda: Complex64,
    mu: Complex64,
) -> Result<RelationCheck, VerifyError> {
    let space = series.space();
    let op = OperatorExpr::from_expr(&relations::commutator(space, lambda, f, mu, g)?);
    let mut params = BTreeMap::from([
        ("f".to_string(), vector_param(f)),
        ("g".to_string(), vector_param(g)),
        ("lambda".to_string(), complex_param(lambda)),
        ("mu".to_string(), complex_param(mu)),
        ("sigma".to_string(), json!(space.pair(f, g)?)),
    ]);
    let m = settings.compression;
    let out = run_each(series, |ev| {
        cross_checked_sigma(ev, f, g, settings)?;
        compressed_norm(ev, &op, m)
    });
    params.insert("sigma_cross_check".into(), json!(out.failure.is_none()));
    Ok(finish(RelationId::RelI, params, series, settings, out))
}

/// Compressed `R(λ+μ,f+g)(R(λ,f)+R(μ,g)+iσR(λ,f)²R(μ,g)) − R(λ,f)R(μ,g)`.
pub fn check_relation_ii(
    series: &mut Series<'_>,
    settings: &CheckSettings,
    f: &TestVector,
    g: &TestVector,
    lambda: Complex64,
    mu: Complex64,
) -> Result<RelationCheck, VerifyError> {
    nonzero("lambda", lambda)?;
    nonzero("mu", mu)?;
    if (lambda + mu).re == 0.0 {
        return Err(VerifyError::Parameter(format!(
            "lambda + mu = {} must have a nonzero real part",
            lambda + mu
        )));
    }
    let space = series.space();
    let op = OperatorExpr::from_expr(&relations::additivity(space, lambda, f, mu, g)?);
    let params = BTreeMap::from([
        ("f".to_string(), vector_param(f)),
        ("g".to_string(), vector_param(g)),
        ("lambda".to_string(), complex_param(lambda)),
        ("mu".to_string(), complex_param(mu)),
        ("sigma".to_string(), json!(space.pair(f, g)?)),
    ]);
    let m = settings.compression;
    let out = run_each(series, |ev| compressed_norm(ev, &op, m));
    Ok(finish(RelationId::RelIi, params, series, settings, out))
}

/// Compressed `i[G_f, R(μ,g)] − σ(f,g) R(μ,g)²`.
pub fn check_relation_iv(
    series: &mut Series<'_>,
    settings: &CheckSettings,
    f: &TestVector,
    g: &TestVector,
    mu: Complex64,
) -> Result<RelationCheck, VerifyError> {
    let space = series.space();
    let s = space.pair(f, g)?;
    let r = OperatorExpr::resolvent(Generator::new(mu, g.clone())?);
    let gf = OperatorExpr::generator(f.clone());
    let op = &OperatorExpr::commutator(&gf, &r).scale(I) - &(&r * &r).scale(Complex64::new(s, 0.0));
    let mut params = BTreeMap::from([
        ("f".to_string(), vector_param(f)),
        ("g".to_string(), vector_param(g)),
        ("mu".to_string(), complex_param(mu)),
        ("sigma".to_string(), json!(s)),
    ]);
    let m = settings.compression;
    let out = run_each(series, |ev| {
        cross_checked_sigma(ev, f, g, settings)?;
        compressed_norm(ev, &op, m)
    });
    params.insert("sigma_cross_check".into(), json!(out.failure.is_none()));
    Ok(finish(RelationId::RelIv, params, series, settings, out))
}

/// Compressed `R(λ,f) δ_f(A) R(λ,f) − i[A, R(λ,f)]`.
pub fn check_almost_inner(
    series: &mut Series<'_>,
    settings: &CheckSettings,
    f: &TestVector,
    lambda: Complex64,
    probe: &str,
) -> Result<RelationCheck, VerifyError> {
    let space = series.space();
    let r = OperatorExpr::resolvent(Generator::new(lambda, f.clone())?);
    let (a, delta) = match Probe::parse(probe, space)? {
        Probe::Polynomial(factors) => {
            let a = factors
                .into_iter()
                .fold(OperatorExpr::identity(), |acc, x| &acc * &OperatorExpr::factor(x));
            let gf = OperatorExpr::generator(f.clone());
            let delta = OperatorExpr::commutator(&gf, &a).scale(I);
            (a, delta)
        }
        Probe::Expr(e) => (
            OperatorExpr::from_expr(&e),
            OperatorExpr::from_expr(&e.derivation(space, f)?),
        ),
    };
    let op = &(&(&r * &delta) * &r) - &OperatorExpr::commutator(&a, &r).scale(I);
    let params = BTreeMap::from([
        ("f".to_string(), vector_param(f)),
        ("lambda".to_string(), complex_param(lambda)),
        ("probe".to_string(), json!(probe)),
    ]);
    let m = settings.compression;
    let out = run_each(series, |ev| compressed_norm(ev, &op, m));
    Ok(finish(RelationId::AlmostInner, params, series, settings, out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySummary {
    pub checks: usize,
    pub passed: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub seed: u64,
    pub modes: usize,
    pub truncations: Vec<usize>,
    pub compression: usize,
    pub tolerance: f64,
    pub exact_tolerance: f64,
    pub families: BTreeMap<String, FamilySummary>,
    pub checks: Vec<RelationCheck>,
    pub verdict: Verdict,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn failed_check(
    relation: RelationId,
    params: BTreeMap<String, Value>,
    settings: &CheckSettings,
    truncations: &[usize],
    err: VerifyError,
) -> RelationCheck {
    RelationCheck {
        relation,
        params,
        truncations: truncations.to_vec(),
        compression: (!relation.is_exact()).then_some(settings.compression),
        residuals: vec![None; truncations.len()],
        tolerance: if relation.is_exact() {
            settings.exact_tolerance
        } else {
            settings.tolerance
        },
        verdict: Verdict::Fail,
        seed: settings.seed,
        failure: Some(err.to_string()),
    }
}

/// Runs every enabled check over the grid. Only configuration problems are
/// errors; a check that fails to compute is recorded as failed.
pub fn run_suite(config: &Config) -> Result<SuiteReport, ConfigError> {
    config.validate()?;
    let reps: Vec<FockRep> = config
        .truncations
        .iter()
        .map(|&n| config.rep(n))
        .collect::<Result<_, _>>()?;
    let grid = config.grid()?;
    let settings = CheckSettings {
        compression: config.compression,
        tolerance: config.tolerance,
        exact_tolerance: config.exact_tolerance,
        schur_tolerance: config.schur_tolerance,
        seed: config.seed,
    };
    let mut series = Series::new(&reps);
    let truncations = series.truncations();
    let mut checks = Vec::new();
    let mut push = |r: Result<RelationCheck, VerifyError>, id: RelationId, params: BTreeMap<String, Value>| {
        checks.push(r.unwrap_or_else(|e| failed_check(id, params, &settings, &truncations, e)));
    };
    let vs = &grid.vectors;
    let enabled = |id: RelationId| config.checks.contains(&id);
    for &id in RelationId::ALL.iter().filter(|&&id| enabled(id)) {
        match id {
            RelationId::Pseudo => {
                for f in vs {
                    for &l in &grid.lambdas {
                        for &m in grid.mus.iter().filter(|&&m| m != l) {
                            let p = BTreeMap::from([("f".into(), vector_param(f))]);
                            push(check_pseudo(&mut series, &settings, f, l, m), id, p);
                        }
                    }
                }
            }
            RelationId::Adjoint => {
                for f in vs {
                    for &l in &grid.lambdas {
                        let p = BTreeMap::from([("f".into(), vector_param(f))]);
                        push(check_adjoint(&mut series, &settings, f, l), id, p);
                    }
                }
            }
            RelationId::ZeroVector => {
                for &l in &grid.lambdas {
                    push(check_zero_vector(&mut series, &settings, l), id, BTreeMap::new());
                }
            }
            RelationId::RelIii => {
                for f in vs {
                    for &l in &grid.lambdas {
                        for &c in &grid.scales {
                            let p = BTreeMap::from([("f".into(), vector_param(f))]);
                            push(check_relation_iii(&mut series, &settings, f, l, c), id, p);
                        }
                    }
                }
            }
            RelationId::RelI => {
                for f in vs {
                    for g in vs {
                        for &l in &grid.lambdas {
                            for &m in &grid.mus {
                                let p = BTreeMap::from([("f".into(), vector_param(f)), ("g".into(), vector_param(g))]);
                                push(check_relation_i(&mut series, &settings, f, g, l, m), id, p);
                            }
                        }
                    }
                }
            }
            RelationId::RelIi => {
                for f in vs {
                    for g in vs {
                        for &l in &grid.lambdas {
                            for &m in grid.mus.iter().filter(|&&m| (l + m).re != 0.0) {
                                let p = BTreeMap::from([("f".into(), vector_param(f)), ("g".into(), vector_param(g))]);
                                push(check_relation_ii(&mut series, &settings, f, g, l, m), id, p);
                            }
                        }
                    }
                }
            }
            RelationId::RelIv => {
                for f in vs {
                    for g in vs {
                        for &m in &grid.mus {
                            let p = BTreeMap::from([("f".into(), vector_param(f)), ("g".into(), vector_param(g))]);
                            push(check_relation_iv(&mut series, &settings, f, g, m), id, p);
                        }
                    }
                }
            }
            RelationId::AlmostInner => {
                for f in vs {
                    for &l in &grid.lambdas {
                        for probe in &grid.probes {
                            let p = BTreeMap::from([("f".into(), vector_param(f)), ("probe".into(), json!(probe))]);
                            push(check_almost_inner(&mut series, &settings, f, l, probe), id, p);
                        }
                    }
                }
            }
        }
    }
    let mut families: BTreeMap<String, FamilySummary> = BTreeMap::new();
    for c in &checks {
        let e = families
            .entry(c.relation.family().to_string())
            .or_insert(FamilySummary {
                checks: 0,
                passed: 0,
                verdict: Verdict::Pass,
            });
        e.checks += 1;
        if c.passed() {
            e.passed += 1;
        } else {
            e.verdict = Verdict::Fail;
        }
    }
    let verdict = if checks.iter().all(RelationCheck::passed) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(SuiteReport {
        schema_version: SCHEMA_VERSION,
        seed: config.seed,
        modes: reps[0].modes(),
        truncations: config.truncations.clone(),
        compression: config.compression,
        tolerance: config.tolerance,
        exact_tolerance: config.exact_tolerance,
        families,
        checks,
        verdict,
    })
}
