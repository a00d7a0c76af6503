//! Correction of a gauged generator family `G'_f = G_f + c(f)·1` into an
//! additive and homogeneous one.
//!
//! Pipeline: extract `ξ(f,g)` from `G'_f + G'_g − G'_{f+g}` by Schur
//! extraction, check the cocycle identity, solve `ξ = δγ` on the lattice
//! box, extract the homogeneity defect `ζ` along each axis, and shift the
//! family by `c − γ − ϑ`. The closed forms of all these quantities are only
//! used in tests.

use std::collections::BTreeMap;

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Config, ConfigError, CorruptXi, SCHEMA_VERSION};
use crate::fock::{
    schur_constant_with, spectral_norm, FockError, FockRep, OperatorMatrix, OperatorTag, SchurOptions, SchurReport,
};
use crate::symplectic::TestVector;

/// Integer lattice point.
pub type Point = Vec<i64>;

#[derive(Debug, Error)]
pub enum CohomologyError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("point {0:?} lies outside the lattice box")]
    OutOfBox(Point),
    #[error("invalid gauge: {0}")]
    Gauge(String),
    #[error("extracted operator is not a scalar: deviation {deviation:e} above {tolerance:e}")]
    NotCNumber { deviation: f64, tolerance: f64 },
    #[error("coboundary sweeps disagree by {disagreement:e} at {at:?}")]
    PathDependence { disagreement: f64, at: Point },
    #[error("no value for {0}")]
    Missing(String),
    #[error("recovered shift does not reproduce family B: mismatch {0:e}")]
    ShiftMismatch(f64),
}

/// All integer points of `[−B, B]^dim`, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    dim: usize,
    bound: i64,
    points: Vec<Point>,
}

impl Lattice {
    pub fn new(dim: usize, bound: i64) -> Self {
        assert!(bound >= 0);
        let mut points = vec![Vec::new()];
        for _ in 0..dim {
            points = points
                .into_iter()
                .flat_map(|p: Point| {
                    (-bound..=bound).map(move |x| {
                        let mut q = p.clone();
                        q.push(x);
                        q
                    })
                })
                .collect();
        }
        Lattice { dim, bound, points }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bound(&self) -> i64 {
        self.bound
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        p.len() == self.dim && p.iter().all(|x| x.abs() <= self.bound)
    }

    pub fn origin(&self) -> Point {
        vec![0; self.dim]
    }

    pub fn basis(&self, i: usize) -> Point {
        let mut p = self.origin();
        p[i] = 1;
        p
    }

    /// Pairs `(f, g)` with `f + g` in the box.
    pub fn pairs(&self) -> impl Iterator<Item = (&Point, &Point)> + '_ {
        self.points
            .iter()
            .flat_map(move |f| self.points.iter().map(move |g| (f, g)))
            .filter(move |(f, g)| self.contains(&add(f, g)))
    }
}

pub fn add(f: &[i64], g: &[i64]) -> Point {
    f.iter().zip(g).map(|(a, b)| a + b).collect()
}

pub fn to_vector(p: &[i64]) -> TestVector {
    TestVector::new(p.iter().map(|&x| x as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeEntry {
    pub f: Point,
    pub c: f64,
}

/// Constants `c(f)` on the lattice box, with `c(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeFunction {
    lattice: Lattice,
    values: BTreeMap<Point, f64>,
}

impl GaugeFunction {
    pub fn from_fn(lattice: Lattice, mut c: impl FnMut(&[i64]) -> f64) -> Result<Self, CohomologyError> {
        let values = lattice.points.iter().map(|p| (p.clone(), c(p))).collect();
        Self::checked(lattice, values)
    }

    fn checked(lattice: Lattice, values: BTreeMap<Point, f64>) -> Result<Self, CohomologyError> {
        if let Some((p, _)) = values.iter().find(|(_, v)| !v.is_finite()) {
            return Err(CohomologyError::Gauge(format!("non-finite value at {p:?}")));
        }
        if values.get(&lattice.origin()).copied().unwrap_or(0.0) != 0.0 {
            return Err(CohomologyError::Gauge("c(0) must be 0".into()));
        }
        Ok(GaugeFunction { lattice, values })
    }

    pub fn zero(lattice: Lattice) -> Self {
        Self::from_fn(lattice, |_| 0.0).expect("zero gauge is valid")
    }

    /// `c(f) = ‖f‖²`.
    pub fn quadratic(lattice: Lattice) -> Self {
        Self::from_fn(lattice, |p| p.iter().map(|x| (x * x) as f64).sum()).expect("quadratic gauge is valid")
    }

    /// Uniform values in `[−1, 1]` away from the origin.
    pub fn random(lattice: Lattice, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let origin = lattice.origin();
        Self::from_fn(lattice, |p| {
            let x = rng.random_range(-1.0..=1.0);
            if p == origin.as_slice() {
                0.0
            } else {
                x
            }
        })
        .expect("random gauge is valid")
    }

    /// Entries may omit points, which then carry `c = 0`.
    pub fn from_entries(lattice: Lattice, entries: &[GaugeEntry]) -> Result<Self, CohomologyError> {
        let mut values: BTreeMap<Point, f64> = lattice.points.iter().map(|p| (p.clone(), 0.0)).collect();
        let mut seen = std::collections::BTreeSet::new();
        for e in entries {
            if !lattice.contains(&e.f) {
                return Err(CohomologyError::OutOfBox(e.f.clone()));
            }
            if !seen.insert(e.f.clone()) {
                return Err(CohomologyError::Gauge(format!("duplicate entry for {:?}", e.f)));
            }
            values.insert(e.f.clone(), e.c);
        }
        Self::checked(lattice, values)
    }

    pub fn entries(&self) -> Vec<GaugeEntry> {
        self.values
            .iter()
            .map(|(f, &c)| GaugeEntry { f: f.clone(), c })
            .collect()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn value(&self, f: &[i64]) -> Result<f64, CohomologyError> {
        self.values
            .get(f)
            .copied()
            .ok_or_else(|| CohomologyError::OutOfBox(f.to_vec()))
    }
}

/// `ξ(f,g)` on all lattice pairs with `f + g` in the box.
#[derive(Debug, Clone, PartialEq)]
pub struct Cocycle {
    lattice: Lattice,
    values: BTreeMap<(Point, Point), f64>,
}

impl Cocycle {
    pub fn from_fn(lattice: Lattice, mut xi: impl FnMut(&[i64], &[i64]) -> f64) -> Self {
        let values = lattice
            .pairs()
            .map(|(f, g)| ((f.clone(), g.clone()), xi(f, g)))
            .collect();
        Cocycle { lattice, values }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn get(&self, f: &[i64], g: &[i64]) -> Result<f64, CohomologyError> {
        self.values
            .get(&(f.to_vec(), g.to_vec()))
            .copied()
            .ok_or_else(|| CohomologyError::OutOfBox(add(f, g)))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, &Point, f64)> {
        self.values.iter().map(|((f, g), &v)| (f, g, v))
    }

    /// Adds `delta` to `ξ(f,g)` and `ξ(g,f)`.
    pub fn corrupt(&mut self, f: &[i64], g: &[i64], delta: f64) -> Result<(), CohomologyError> {
        for key in [(f.to_vec(), g.to_vec()), (g.to_vec(), f.to_vec())] {
            let v = self
                .values
                .get_mut(&key)
                .ok_or_else(|| CohomologyError::OutOfBox(add(f, g)))?;
            *v += delta;
            if f == g {
                break;
            }
        }
        Ok(())
    }
}

fn probe_options(rep: &FockRep, seed: u64, tolerance: f64) -> SchurOptions {
    SchurOptions::new(rep.levels() - 1).seed(seed).tolerance(tolerance)
}

fn scalar_of(report: SchurReport) -> Result<f64, CohomologyError> {
    if !report.is_c_number() {
        return Err(CohomologyError::NotCNumber {
            deviation: report.max_deviation,
            tolerance: report.tolerance,
        });
    }
    Ok(report.mean.re)
}

/// Schur constant of `Σ w_k G'_{h_k}` with `G'_h = G_h + s_k·1`.
fn combination_constant(
    rep: &FockRep,
    terms: &[(f64, TestVector, f64)],
    opts: &SchurOptions,
) -> Result<f64, CohomologyError> {
    let report = schur_constant_with(rep, opts, |phi| {
        let mut acc = Mat::<c64>::zeros(phi.nrows(), phi.ncols());
        for (w, h, s) in terms {
            let gh = rep.apply_generator(h, phi)?;
            for j in 0..phi.ncols() {
                for i in 0..phi.nrows() {
                    acc[(i, j)] += *w * (gh[(i, j)] + *s * phi[(i, j)]);
                }
            }
        }
        Ok(acc)
    })?;
    scalar_of(report)
}

/// `ξ(f,g)`: the scalar of `G'_f + G'_g − G'_{f+g}`.
pub fn extract_xi(
    rep: &FockRep,
    gauge: &GaugeFunction,
    f: &[i64],
    g: &[i64],
    opts: &SchurOptions,
) -> Result<f64, CohomologyError> {
    let fg = add(f, g);
    let terms = [
        (1.0, to_vector(f), gauge.value(f)?),
        (1.0, to_vector(g), gauge.value(g)?),
        (-1.0, to_vector(&fg), gauge.value(&fg)?),
    ];
    combination_constant(rep, &terms, opts)
}

pub fn extract_cocycle(rep: &FockRep, gauge: &GaugeFunction, opts: &SchurOptions) -> Result<Cocycle, CohomologyError> {
    let lattice = gauge.lattice().clone();
    let mut values = BTreeMap::new();
    for (f, g) in lattice.pairs() {
        values.insert((f.clone(), g.clone()), extract_xi(rep, gauge, f, g, opts)?);
    }
    Ok(Cocycle { lattice, values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocycleCheck {
    pub symmetry_defect: f64,
    pub max_defect: f64,
    /// Triple `(f, g, h)` attaining `max_defect`.
    pub worst: Option<[Point; 3]>,
    pub triples: usize,
}

impl CocycleCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.symmetry_defect <= tol && self.max_defect <= tol
    }
}

/// Symmetry and `ξ(f,g) + ξ(f+g,h) = ξ(f,g+h) + ξ(g,h)` over all in-box
/// triples.
pub fn verify_cocycle(xi: &Cocycle) -> CocycleCheck {
    let mut symmetry_defect: f64 = 0.0;
    for (f, g, v) in xi.iter() {
        if let Ok(w) = xi.get(g, f) {
            symmetry_defect = symmetry_defect.max((v - w).abs());
        }
    }
    let lat = xi.lattice();
    let mut max_defect: f64 = 0.0;
    let mut worst = None;
    let mut triples = 0;
    for f in lat.points() {
        for g in lat.points() {
            let fg = add(f, g);
            let Ok(a) = xi.get(f, g) else { continue };
            for h in lat.points() {
                let gh = add(g, h);
                let (Ok(b), Ok(c), Ok(d)) = (xi.get(&fg, h), xi.get(f, &gh), xi.get(g, h)) else {
                    continue;
                };
                triples += 1;
                let defect = (a + b - c - d).abs();
                if defect > max_defect || worst.is_none() {
                    if defect > max_defect {
                        max_defect = defect;
                    }
                    worst = Some([f.clone(), g.clone(), h.clone()]);
                }
            }
        }
    }
    CocycleCheck {
        symmetry_defect,
        max_defect,
        worst,
        triples,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coboundary {
    lattice: Lattice,
    values: BTreeMap<Point, f64>,
    /// Largest difference between the axis-order and reversed-order sweeps.
    pub sweep_disagreement: f64,
}

impl Coboundary {
    pub fn from_fn(lattice: Lattice, mut gamma: impl FnMut(&[i64]) -> f64) -> Self {
        let values = lattice.points.iter().map(|p| (p.clone(), gamma(p))).collect();
        Coboundary {
            lattice,
            values,
            sweep_disagreement: 0.0,
        }
    }

    pub fn value(&self, f: &[i64]) -> Result<f64, CohomologyError> {
        self.values
            .get(f)
            .copied()
            .ok_or_else(|| CohomologyError::OutOfBox(f.to_vec()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.values.iter().map(|(p, &v)| (p, v))
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// `max |γ(f) + γ(g) − γ(f+g) − ξ(f,g)|`.
    pub fn replay_defect(&self, xi: &Cocycle) -> Result<f64, CohomologyError> {
        let mut worst: f64 = 0.0;
        for (f, g, v) in xi.iter() {
            let d = self.value(f)? + self.value(g)? - self.value(&add(f, g))? - v;
            worst = worst.max(d.abs());
        }
        Ok(worst)
    }
}

/// `γ` along the path that walks the axes in `order`, using
/// `γ(p + e) = γ(p) + γ(e) − ξ(p, e)` and its inverse step, with
/// `γ(0) = 0` and `γ(e_i) = 0`.
fn sweep(xi: &Cocycle, order: &[usize]) -> Result<BTreeMap<Point, f64>, CohomologyError> {
    let lat = xi.lattice();
    let mut out = BTreeMap::new();
    for target in lat.points() {
        let mut p = lat.origin();
        let mut gamma = 0.0;
        for &axis in order {
            let e = lat.basis(axis);
            while p[axis] < target[axis] {
                gamma -= xi.get(&p, &e)?;
                p[axis] += 1;
            }
            while p[axis] > target[axis] {
                p[axis] -= 1;
                gamma += xi.get(&p, &e)?;
            }
        }
        out.insert(target.clone(), gamma);
    }
    Ok(out)
}

/// Solves `ξ = γ(f) + γ(g) − γ(f+g)` on the box with `γ(e_i) = 0`. The
/// values at `−e_i` follow from `ξ(e_i, −e_i)`.
pub fn solve_coboundary(xi: &Cocycle, path_tolerance: f64) -> Result<Coboundary, CohomologyError> {
    let lat = xi.lattice();
    let forward: Vec<usize> = (0..lat.dim()).collect();
    let reverse: Vec<usize> = forward.iter().rev().copied().collect();
    let a = sweep(xi, &forward)?;
    let b = sweep(xi, &reverse)?;
    let mut disagreement: f64 = 0.0;
    let mut at = lat.origin();
    for (p, va) in &a {
        let d = (va - b[p]).abs();
        if d > disagreement {
            disagreement = d;
            at = p.clone();
        }
    }
    if !(disagreement <= path_tolerance) {
        return Err(CohomologyError::PathDependence { disagreement, at });
    }
    Ok(Coboundary {
        lattice: lat.clone(),
        values: a,
        sweep_disagreement: disagreement,
    })
}

/// `max |h(f) + h(g) − h(f+g)|` over lattice pairs, together with `|h(0)|`.
pub fn additive_defect(lattice: &Lattice, h: impl Fn(&[i64]) -> f64) -> f64 {
    let mut worst = h(&lattice.origin()).abs();
    for (f, g) in lattice.pairs() {
        worst = worst.max((h(f) + h(g) - h(&add(f, g))).abs());
    }
    worst
}

/// Additivity defect of `γ − c`. A coboundary is unique up to an additive
/// character, so this vanishes whenever `γ` solves the gauge's cocycle.
pub fn character_defect(gamma: &Coboundary, gauge: &GaugeFunction) -> Result<f64, CohomologyError> {
    let mut diff = BTreeMap::new();
    for p in gauge.lattice().points() {
        diff.insert(p.clone(), gamma.value(p)? - gauge.value(p)?);
    }
    Ok(additive_defect(gauge.lattice(), |p| diff[p]))
}

fn scalar_key(t: f64) -> u64 {
    (t + 0.0).to_bits()
}

fn lattice_point(lattice: &Lattice, f: &TestVector) -> Option<Point> {
    let p: Option<Point> = f
        .coords()
        .iter()
        .map(|&x| (x.fract() == 0.0 && x.abs() <= lattice.bound() as f64).then_some(x as i64))
        .collect();
    p.filter(|p| lattice.contains(p))
}

/// `(axis, t)` when `f = t·e_axis`.
fn axis_point(f: &TestVector) -> Option<(usize, f64)> {
    let nz: Vec<usize> = (0..f.dim()).filter(|&i| f.coords()[i] != 0.0).collect();
    match nz.as_slice() {
        [] => Some((0, 0.0)),
        [i] => Some((*i, f.coords()[*i])),
        _ => None,
    }
}

/// The family `Ĝ_f = G_f + c(f) − γ(f)` (plus optional injected
/// constants along the axes), additive on the lattice. Off the lattice the
/// shift is `Σ_i f_i (c − γ)(e_i)`, the linear extension of the additive
/// character `c − γ`.
#[derive(Debug, Clone)]
pub struct CorrectedFamily<'a> {
    gauge: &'a GaugeFunction,
    gamma: &'a Coboundary,
    injection: BTreeMap<(usize, u64), f64>,
}

impl<'a> CorrectedFamily<'a> {
    pub fn new(gauge: &'a GaugeFunction, gamma: &'a Coboundary) -> Self {
        CorrectedFamily {
            gauge,
            gamma,
            injection: BTreeMap::new(),
        }
    }

    /// Adds `value` to the shift of `t·e_axis`.
    pub fn inject(mut self, axis: usize, t: f64, value: f64) -> Self {
        *self.injection.entry((axis, scalar_key(t))).or_insert(0.0) += value;
        self
    }

    pub fn shift(&self, f: &TestVector) -> Result<f64, CohomologyError> {
        let lattice = self.gauge.lattice();
        let mut s = match lattice_point(lattice, f) {
            Some(p) => self.gauge.value(&p)? - self.gamma.value(&p)?,
            None => {
                let mut s = 0.0;
                for (i, &x) in f.coords().iter().enumerate() {
                    let e = lattice.basis(i);
                    s += x * (self.gauge.value(&e)? - self.gamma.value(&e)?);
                }
                s
            }
        };
        if let Some((axis, t)) = axis_point(f) {
            s += self.injection.get(&(axis, scalar_key(t))).copied().unwrap_or(0.0);
        }
        Ok(s)
    }
}

/// `ζ_ι(t)` sampled on a scalar grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaSlice {
    pub axis: usize,
    /// `(t, ζ(t))`, ascending in `t`.
    pub values: Vec<(f64, f64)>,
}

impl ZetaSlice {
    pub fn get(&self, t: f64) -> Option<f64> {
        self.values.iter().find(|(s, _)| *s == t).map(|&(_, z)| z)
    }

    /// `max(|ζ(0)|, |ζ(1)|)`; missing sample points count as infinite.
    pub fn normalization_defect(&self) -> f64 {
        let at = |t| self.get(t).map_or(f64::INFINITY, f64::abs);
        at(0.0).max(at(1.0))
    }

    /// `max |ζ(t) + ζ(s) − ζ(t+s)|` over grid pairs whose sum is on the grid.
    pub fn additivity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &(t, zt) in &self.values {
            for &(s, zs) in &self.values {
                if let Some(z) = self.get(t + s) {
                    worst = worst.max((zt + zs - z).abs());
                }
            }
        }
        worst
    }
}

/// `ζ_ι(t) = ⟨Ĝ_{t·e_ι} − t·Ĝ_{e_ι}⟩` for every `t` on the grid.
pub fn extract_zeta(
    rep: &FockRep,
    family: &CorrectedFamily<'_>,
    axis: usize,
    grid: &[f64],
    opts: &SchurOptions,
) -> Result<ZetaSlice, CohomologyError> {
    let dim = rep.space().dim();
    if axis >= dim {
        return Err(CohomologyError::Missing(format!("axis {axis}")));
    }
    let e = TestVector::basis(dim, axis);
    let se = family.shift(&e)?;
    let mut ts: Vec<f64> = grid.iter().map(|t| t + 0.0).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut values = Vec::with_capacity(ts.len());
    for t in ts {
        let te = e.scaled(t);
        let terms = [(1.0, te.clone(), family.shift(&te)?), (-t, e.clone(), se)];
        values.push((t, combination_constant(rep, &terms, opts)?));
    }
    Ok(ZetaSlice { axis, values })
}

/// `ϑ(f) = Σ_ι ζ_ι(f_ι)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityData {
    pub slices: Vec<ZetaSlice>,
}

impl HomogeneityData {
    pub fn theta(&self, f: &TestVector) -> Result<f64, CohomologyError> {
        let mut s = 0.0;
        for (i, &x) in f.coords().iter().enumerate() {
            let slice = self
                .slices
                .iter()
                .find(|z| z.axis == i)
                .ok_or_else(|| CohomologyError::Missing(format!("zeta along axis {i}")))?;
            s += slice
                .get(x)
                .ok_or_else(|| CohomologyError::Missing(format!("zeta_{i}({x})")))?;
        }
        Ok(s)
    }
}

/// Scalars at which ζ must be known: the grid plus every lattice coordinate.
pub fn zeta_samples(grid: &[f64], bound: i64) -> Vec<f64> {
    let mut ts: Vec<f64> = grid.iter().copied().chain((-bound..=bound).map(|x| x as f64)).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

pub fn extract_homogeneity(
    rep: &FockRep,
    family: &CorrectedFamily<'_>,
    samples: &[f64],
    opts: &SchurOptions,
) -> Result<HomogeneityData, CohomologyError> {
    let slices = (0..rep.space().dim())
        .map(|axis| extract_zeta(rep, family, axis, samples, opts))
        .collect::<Result<_, _>>()?;
    Ok(HomogeneityData { slices })
}

/// Improved family `Ḡ_f = G_f + a(f)·1` with `a = c − γ − ϑ` (plus any
/// injected constants), tabulated on the lattice and the axis samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovedFamily {
    lattice: Lattice,
    shifts: BTreeMap<Vec<u64>, (TestVector, f64)>,
}

pub fn improve_family(
    family: &CorrectedFamily<'_>,
    theta: &HomogeneityData,
    samples: &[f64],
) -> Result<ImprovedFamily, CohomologyError> {
    let lattice = family.gauge.lattice().clone();
    let mut shifts = BTreeMap::new();
    let mut put = |f: TestVector| -> Result<(), CohomologyError> {
        let a = family.shift(&f)? - theta.theta(&f)?;
        shifts.insert(f.key(), (f, a));
        Ok(())
    };
    for p in lattice.points() {
        put(to_vector(p))?;
    }
    for axis in 0..lattice.dim() {
        for &t in samples {
            put(TestVector::basis(lattice.dim(), axis).scaled(t))?;
        }
    }
    Ok(ImprovedFamily { lattice, shifts })
}

impl ImprovedFamily {
    pub fn shift(&self, f: &TestVector) -> Result<f64, CohomologyError> {
        self.shifts
            .get(&f.key())
            .map(|(_, a)| *a)
            .ok_or_else(|| CohomologyError::Missing(format!("improved shift at {f}")))
    }

    pub fn generator(&self, rep: &FockRep, f: &TestVector) -> Result<OperatorMatrix, CohomologyError> {
        let a = self.shift(f)?;
        let mut m = rep.generator(f)?;
        for i in 0..rep.dim() {
            m.matrix[(i, i)] += c64::new(a, 0.0);
        }
        Ok(m)
    }

    /// `(iλ + Ḡ_f)⁻¹ = R(λ − i·a(f), f)`.
    pub fn resolvent(
        &self,
        rep: &FockRep,
        lambda: Complex64,
        f: &TestVector,
    ) -> Result<OperatorMatrix, CohomologyError> {
        let a = self.shift(f)?;
        Ok(rep.resolvent_matrix(lambda - Complex64::new(0.0, a), f)?)
    }

    /// `max ‖Ḡ_f + Ḡ_g − Ḡ_{f+g}‖` over lattice pairs.
    pub fn additivity_defect(&self, rep: &FockRep) -> Result<f64, CohomologyError> {
        let mut cache: BTreeMap<Point, Mat<c64>> = BTreeMap::new();
        for p in self.lattice.points() {
            cache.insert(p.clone(), self.generator(rep, &to_vector(p))?.matrix);
        }
        let mut worst: f64 = 0.0;
        for (f, g) in self.lattice.pairs() {
            let d = &cache[f] + &cache[g] - &cache[&add(f, g)];
            worst = worst.max(spectral_norm(d.as_ref()));
        }
        Ok(worst)
    }

    /// `max ‖Ḡ_{tf} − t·Ḡ_f‖` over tabulated pairs `(f, tf)`, with `t`
    /// ranging over the nonzero integers and the axis samples.
    pub fn homogeneity_defect(&self, rep: &FockRep, samples: &[f64]) -> Result<f64, CohomologyError> {
        let mut worst: f64 = 0.0;
        let b = self.lattice.bound();
        let mut scalars: Vec<f64> = samples.iter().copied().chain((-b..=b).map(|x| x as f64)).collect();
        scalars.sort_by(f64::total_cmp);
        scalars.dedup();
        for (f, _) in self.shifts.values() {
            let gf = self.generator(rep, f)?.matrix;
            for &t in &scalars {
                let tf = f.scaled(t);
                if !self.shifts.contains_key(&tf.key()) {
                    continue;
                }
                let gtf = self.generator(rep, &tf)?.matrix;
                let d = Mat::from_fn(rep.dim(), rep.dim(), |i, j| gtf[(i, j)] - gf[(i, j)] * t);
                worst = worst.max(spectral_norm(d.as_ref()));
            }
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftRecovery {
    pub shift: f64,
    pub schur: SchurReport,
    /// `‖R_B − ((iλ + c)·1 + G_A)⁻¹‖`.
    pub mismatch: f64,
}

fn generator_from_resolvent(r: &OperatorMatrix, lambda: Complex64) -> Mat<c64> {
    let n = r.nrows();
    let mut g = r.matrix.partial_piv_lu().solve(Mat::<c64>::identity(n, n));
    let shift = Complex64::new(0.0, 1.0) * lambda;
    for i in 0..n {
        g[(i, i)] -= shift;
    }
    g
}

/// Constant `c_f` with `G_B = G_A + c_f·1`, read off from the resolvents of
/// two families at a common `(λ, f)`.
pub fn recover_shift(
    rep: &FockRep,
    ra: &OperatorMatrix,
    rb: &OperatorMatrix,
    lambda: Complex64,
    opts: &SchurOptions,
    agreement_tolerance: f64,
) -> Result<ShiftRecovery, CohomologyError> {
    rep.check_square(ra.matrix.as_ref())?;
    rep.check_square(rb.matrix.as_ref())?;
    let ga = generator_from_resolvent(ra, lambda);
    let gb = generator_from_resolvent(rb, lambda);
    let k = &gb - &ga;
    let schur = schur_constant_with(rep, opts, |phi| Ok(&k * phi))?;
    let shift = scalar_of(schur)?;
    let mut a = ga;
    let d = Complex64::new(0.0, 1.0) * lambda + shift;
    for i in 0..rep.dim() {
        a[(i, i)] += d;
    }
    let predicted = a.partial_piv_lu().solve(Mat::<c64>::identity(rep.dim(), rep.dim()));
    let mismatch = spectral_norm((&rb.matrix - &predicted).as_ref());
    if !(mismatch <= agreement_tolerance) {
        return Err(CohomologyError::ShiftMismatch(mismatch));
    }
    Ok(ShiftRecovery { shift, schur, mismatch })
}

/// Resolvent of the family `G_f + s·1` at `λ`.
pub fn shifted_resolvent(
    rep: &FockRep,
    lambda: Complex64,
    f: &TestVector,
    s: f64,
) -> Result<OperatorMatrix, CohomologyError> {
    let mut r = rep.resolvent_matrix(lambda - Complex64::new(0.0, s), f)?;
    r.tag = OperatorTag::Resolvent;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiEntry {
    pub f: Point,
    pub g: Point,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEntry {
    pub f: Point,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohomologyReport {
    pub schema_version: u32,
    pub seed: u64,
    #[serde(rename = "box")]
    pub bound: i64,
    pub truncation: usize,
    pub gauge: Vec<GaugeEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrupt_xi: Option<CorruptXi>,
    pub xi: Vec<XiEntry>,
    pub cocycle: Option<CocycleCheck>,
    pub gamma: Vec<GammaEntry>,
    pub sweep_disagreement: Option<f64>,
    pub zeta: Option<HomogeneityData>,
    pub stages: Vec<Stage>,
    /// Name of the first failing stage.
    pub failed_stage: Option<String>,
    pub passed: bool,
}

struct Pipeline {
    stages: Vec<Stage>,
}

impl Pipeline {
    fn record(&mut self, name: &str, defect: f64, tolerance: f64) -> bool {
        let passed = defect <= tolerance;
        self.stages.push(Stage {
            name: name.into(),
            passed,
            defect: Some(defect),
            tolerance: Some(tolerance),
            detail: None,
        });
        passed
    }

    fn error(&mut self, name: &str, e: CohomologyError) {
        self.stages.push(Stage {
            name: name.into(),
            passed: false,
            defect: None,
            tolerance: None,
            detail: Some(e.to_string()),
        });
    }
}

/// Full pipeline: extract ξ, verify the cocycle identity, solve for γ,
/// replay ξ from γ, extract ζ, improve, and re-verify the improved family.
/// Stops at the first failing stage.
pub fn run_pipeline(config: &Config, gauge: &GaugeFunction) -> Result<CohomologyReport, ConfigError> {
    config.validate()?;
    let co = &config.cohomology;
    let rep = config.rep(co.truncation)?;
    let dim = rep.space().dim();
    if gauge.lattice().dim() != dim || gauge.lattice().bound() != co.bound {
        return Err(ConfigError::Invalid(format!(
            "gauge lattice [-{},{}]^{} does not match box {} in dimension {dim}",
            gauge.lattice().bound(),
            gauge.lattice().bound(),
            gauge.lattice().dim(),
            co.bound
        )));
    }
    if let Some(c) = &co.corrupt_xi {
        if !gauge.lattice().contains(&c.f)
            || !gauge.lattice().contains(&c.g)
            || !gauge.lattice().contains(&add(&c.f, &c.g))
        {
            return Err(ConfigError::Invalid("corrupt_xi pair lies outside the box".into()));
        }
    }
    let opts = probe_options(&rep, config.seed, config.schur_tolerance);
    let mut report = CohomologyReport {
        schema_version: SCHEMA_VERSION,
        seed: config.seed,
        bound: co.bound,
        truncation: co.truncation,
        gauge: gauge.entries(),
        corrupt_xi: co.corrupt_xi.clone(),
        xi: Vec::new(),
        cocycle: None,
        gamma: Vec::new(),
        sweep_disagreement: None,
        zeta: None,
        stages: Vec::new(),
        failed_stage: None,
        passed: false,
    };
    let mut p = Pipeline { stages: Vec::new() };
    let outcome = pipeline_stages(&rep, gauge, co, &opts, &mut p, &mut report);
    debug_assert_eq!(outcome, p.stages.iter().all(|s| s.passed));
    report.failed_stage = p.stages.iter().find(|s| !s.passed).map(|s| s.name.clone());
    report.passed = outcome;
    report.stages = p.stages;
    Ok(report)
}

fn pipeline_stages(
    rep: &FockRep,
    gauge: &GaugeFunction,
    co: &crate::config::CohomologyConfig,
    opts: &SchurOptions,
    p: &mut Pipeline,
    report: &mut CohomologyReport,
) -> bool {
    let tol = co.tolerance;
    let path_tol = co.path_tolerance;
    let mut xi = match extract_cocycle(rep, gauge, opts) {
        Ok(x) => x,
        Err(e) => {
            p.error("extract_xi", e);
            return false;
        }
    };
    if let Some(c) = &co.corrupt_xi {
        xi.corrupt(&c.f, &c.g, c.delta).expect("pair checked against the box");
    }
    report.xi = xi
        .iter()
        .map(|(f, g, v)| XiEntry {
            f: f.clone(),
            g: g.clone(),
            xi: v,
        })
        .collect();
    p.stages.push(Stage {
        name: "extract_xi".into(),
        passed: true,
        defect: None,
        tolerance: None,
        detail: Some(format!("{} pairs", xi.len())),
    });

    let check = verify_cocycle(&xi);
    let defect = check.symmetry_defect.max(check.max_defect);
    report.cocycle = Some(check);
    if !p.record("verify_cocycle", defect, tol) {
        return false;
    }

    let gamma = match solve_coboundary(&xi, path_tol) {
        Ok(g) => g,
        Err(e) => {
            p.error("solve_coboundary", e);
            return false;
        }
    };
    report.sweep_disagreement = Some(gamma.sweep_disagreement);
    report.gamma = gamma
        .iter()
        .map(|(f, v)| GammaEntry { f: f.clone(), gamma: v })
        .collect();
    if !p.record("solve_coboundary", gamma.sweep_disagreement, path_tol) {
        return false;
    }
    let stage = |p: &mut Pipeline, name: &str, r: Result<f64, CohomologyError>, t: f64| match r {
        Ok(d) => p.record(name, d, t),
        Err(e) => {
            p.error(name, e);
            false
        }
    };
    if !stage(p, "replay", gamma.replay_defect(&xi), path_tol) {
        return false;
    }
    if !stage(p, "character", character_defect(&gamma, gauge), path_tol) {
        return false;
    }

    let family = CorrectedFamily::new(gauge, &gamma);
    let samples = zeta_samples(&co.zeta_grid, co.bound);
    let theta = match extract_homogeneity(rep, &family, &samples, opts) {
        Ok(t) => t,
        Err(e) => {
            p.error("zeta", e);
            return false;
        }
    };
    let zd = theta
        .slices
        .iter()
        .map(|s| s.normalization_defect().max(s.additivity_defect()))
        .fold(0.0, f64::max);
    report.zeta = Some(theta.clone());
    if !p.record("zeta", zd, tol) {
        return false;
    }

    let improved = match improve_family(&family, &theta, &samples) {
        Ok(i) => i,
        Err(e) => {
            p.error("improve", e);
            return false;
        }
    };
    if !stage(p, "improve_additive", improved.additivity_defect(rep), tol) {
        return false;
    }
    if !stage(
        p,
        "improve_homogeneous",
        improved.homogeneity_defect(rep, &samples),
        tol,
    ) {
        return false;
    }
    stage(p, "reverify", improved_pseudo_defect(rep, &improved), tol)
}

/// Pseudo-resolvent and adjoint defects of the improved family on the
/// basis vectors at `(λ, μ) = (1, 2)`.
pub fn improved_pseudo_defect(rep: &FockRep, improved: &ImprovedFamily) -> Result<f64, CohomologyError> {
    let (l, m) = (Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0));
    let mut worst: f64 = 0.0;
    for axis in 0..rep.space().dim() {
        let f = TestVector::basis(rep.space().dim(), axis);
        let rl = improved.resolvent(rep, l, &f)?.matrix;
        let rm = improved.resolvent(rep, m, &f)?.matrix;
        let rml = improved.resolvent(rep, -l, &f)?.matrix;
        let k = Complex64::new(0.0, 1.0) * (m - l);
        let prod = &rl * &rm;
        let d = Mat::from_fn(rep.dim(), rep.dim(), |i, j| {
            prod[(i, j)] * k - (rl[(i, j)] - rm[(i, j)])
        });
        worst = worst.max(spectral_norm(d.as_ref()));
        let adj = rl.adjoint().to_owned() - &rml;
        worst = worst.max(spectral_norm(adj.as_ref()));
    }
    Ok(worst)
}
