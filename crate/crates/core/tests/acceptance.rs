//! Acceptance suite. Prints one line per criterion and exits non-zero if
//! any criterion fails. Set `RESALG_WRITE_BASELINE=1` to re-pin the
//! convergence trace in `tests/baselines/convergence.json`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resalg::cohomology::{
    extract_cocycle, extract_homogeneity, improve_family, recover_shift, shifted_resolvent, solve_coboundary,
    verify_cocycle, zeta_samples, CorrectedFamily, GaugeFunction, ImprovedFamily, Lattice,
};
use resalg::expr::sample::{default_pool, random_expr};
use resalg::expr::simplify;
use resalg::fock::{eval, spectral_norm, FockRep, OperatorMatrix, SchurOptions, DEFAULT_MAX_DIM};
use resalg::symplectic::{SymplecticSpace, TestVector};
use resalg::verify::{
    check_almost_inner, check_relation_i, check_relation_ii, check_relation_iv, extract_sigma, CheckSettings,
    RelationCheck, Series,
};
use resalg::Complex64;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, u64);

fn v(x: &[f64]) -> TestVector {
    TestVector::from(x)
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn within(name: &str, value: f64, tol: f64) -> Result<String, String> {
    let line = format!("{name} {value:.2e} <= {tol:.0e}");
    if value <= tol {
        Ok(line)
    } else {
        Err(line.replace("<=", ">"))
    }
}

/// `(‖R(λ)R(μ)·i(μ−λ) − (R(λ) − R(μ))‖, ‖R(λ)† − R(−λ)‖)`.
fn pseudo_defects(rl: &Mat<c64>, rm: &Mat<c64>, rml: &Mat<c64>, l: Complex64, m: Complex64) -> (f64, f64) {
    let k = Complex64::new(0.0, 1.0) * (m - l);
    let prod = rl * rm;
    let d = Mat::from_fn(rl.nrows(), rl.ncols(), |i, j| {
        prod[(i, j)] * k - (rl[(i, j)] - rm[(i, j)])
    });
    let a = rl.adjoint().to_owned() - rml;
    (spectral_norm(d.as_ref()), spectral_norm(a.as_ref()))
}

fn criterion_1() -> Outcome {
    let rep = FockRep::new(1, 64).map_err(|e| e.to_string())?;
    let f = v(&[1.0, 0.0]);
    let r = |z: f64| rep.resolvent_matrix(re(z), &f).map(|m| m.matrix);
    let (rl, rm, rml) = (r(1.0).unwrap(), r(2.0).unwrap(), r(-1.0).unwrap());
    let (p, a) = pseudo_defects(&rl, &rm, &rml, re(1.0), re(2.0));
    Ok(format!(
        "{}, {}",
        within("identity", p, 1e-10)?,
        within("adjoint", a, 1e-12)?
    ))
}

fn criterion_2() -> Outcome {
    let rep = FockRep::new(1, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..20 {
        let x = rng.random_range(0.5..3.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let z = Complex64::new(x, rng.random_range(-3.0..3.0));
        let f = v(&[rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
        let n = rep.resolvent_matrix(z, &f).unwrap().norm();
        worst = worst.max(n - 1.0 / x.abs());
    }
    within("max(‖R‖ − 1/|Re z|)", worst, 1e-10)
}

fn criterion_3() -> Outcome {
    let rep = FockRep::new(1, 64).unwrap();
    let (l, f) = (re(1.0), v(&[1.0, 0.0]));
    let base = rep.resolvent_matrix(l, &f).unwrap().matrix;
    let mut worst: f64 = 0.0;
    for c in [-1.0, 0.5, 2.5] {
        let scaled = rep.resolvent_matrix(l * c, &f.scaled(c)).unwrap().matrix;
        let d = Mat::from_fn(64, 64, |i, j| scaled[(i, j)] * c - base[(i, j)]);
        worst = worst.max(spectral_norm(d.as_ref()));
    }
    within("max ‖c·R(cλ,cf) − R(λ,f)‖", worst, 1e-10)
}

fn criterion_4() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for n in [1, 2] {
        let rep = FockRep::new(n, 32).unwrap();
        let opts = SchurOptions::new(30);
        let dim = 2 * n;
        for i in 0..dim {
            for j in 0..dim {
                let (f, g) = (TestVector::basis(dim, i), TestVector::basis(dim, j));
                let s = extract_sigma(&rep, &f, &g, &opts).map_err(|e| e.to_string())?;
                worst = worst.max((s - rep.space().pair(&f, &g).unwrap()).abs());
                pairs += 1;
            }
        }
    }
    Ok(format!(
        "{} over {pairs} pairs",
        within("max |schur − σ|", worst, 1e-10)?
    ))
}

fn baseline_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/baselines/convergence.json")
}

/// Live and pinned residuals agree within a factor of 4, or both sit below
/// the rounding floor.
fn matches_baseline(live: &[Option<f64>], pinned: &[Option<f64>]) -> bool {
    live.len() == pinned.len()
        && live.iter().zip(pinned).all(|(a, b)| match (a, b) {
            (Some(a), Some(b)) => (a.max(*b) <= 1e-12) || (a / b <= 4.0 && b / a <= 4.0),
            _ => false,
        })
}

fn criterion_5() -> Outcome {
    let reps: Vec<FockRep> = [64, 128, 256].iter().map(|&n| FockRep::new(1, n).unwrap()).collect();
    let mut series = Series::new(&reps);
    let settings = CheckSettings::default();
    let (f, g, one) = (v(&[1.0, 0.0]), v(&[0.0, 1.0]), re(1.0));
    let checks: Vec<(&str, RelationCheck)> = vec![
        (
            "rel_i",
            check_relation_i(&mut series, &settings, &f, &g, one, one).unwrap(),
        ),
        (
            "rel_ii",
            check_relation_ii(&mut series, &settings, &f, &g, one, one).unwrap(),
        ),
        (
            "rel_iv",
            check_relation_iv(&mut series, &settings, &f, &g, one).unwrap(),
        ),
        (
            "almost_inner",
            check_almost_inner(&mut series, &settings, &f, one, "R(1,[0,1])").unwrap(),
        ),
    ];
    let trace: BTreeMap<String, Vec<Option<f64>>> = checks
        .iter()
        .map(|(n, c)| (n.to_string(), c.residuals.clone()))
        .collect();
    let path = baseline_path();
    if std::env::var_os("RESALG_WRITE_BASELINE").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        let text = serde_json::to_string_pretty(&serde_json::json!({
            "modes": 1, "f": [1.0, 0.0], "g": [0.0, 1.0], "lambda": 1.0, "mu": 1.0,
            "compression": settings.compression, "truncations": [64, 128, 256], "residuals": trace,
        }))
        .unwrap();
        std::fs::write(&path, text + "\n").unwrap();
    }
    let failed: Vec<&str> = checks.iter().filter(|(_, c)| !c.passed()).map(|(n, _)| *n).collect();
    let summary = checks
        .iter()
        .map(|(n, c)| {
            let r: Vec<String> = c
                .residuals
                .iter()
                .map(|x| x.map_or("null".into(), |x| format!("{x:.1e}")))
                .collect();
            format!("{n} [{}]", r.join(", "))
        })
        .collect::<Vec<_>>()
        .join("; ");
    if !failed.is_empty() {
        return Err(format!("{summary}; failing: {}", failed.join(", ")));
    }
    let pinned: serde_json::Value = std::fs::read_to_string(&path)
        .map_err(|e| format!("baseline {}: {e}", path.display()))
        .and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string()))?;
    for (name, live) in &trace {
        let want: Vec<Option<f64>> =
            serde_json::from_value(pinned["residuals"][name].clone()).map_err(|e| e.to_string())?;
        if !matches_baseline(live, &want) {
            return Err(format!("{summary}; {name} drifted from pinned baseline {want:?}"));
        }
    }
    Ok(format!("{summary}; monotone, final <= 1e-6, matches pinned baseline"))
}

fn criterion_6() -> Outcome {
    let rep = FockRep::new(1, 64).unwrap();
    let pool = default_pool();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let e = random_expr(&mut rng, &pool, 4, 3);
        let a = eval(&rep, &e).map_err(|x| x.to_string())?.matrix;
        let b = eval(&rep, &simplify(&e)).map_err(|x| x.to_string())?.matrix;
        worst = worst.max(spectral_norm((&a - &b).as_ref()));
    }
    Ok(format!(
        "{} over 200 expressions",
        within("max ‖eval(e) − eval(simplify(e))‖", worst, 1e-9)?
    ))
}

struct RoundTrip {
    cocycle: f64,
    path: f64,
    replay: f64,
    additive: f64,
    homogeneous: f64,
    pseudo: f64,
    adjoint: f64,
}

fn round_trip(rep: &FockRep, check_rep: &FockRep, gauge: &GaugeFunction) -> Result<RoundTrip, String> {
    let s = |e: resalg::cohomology::CohomologyError| e.to_string();
    let opts = SchurOptions::new(rep.levels() - 1);
    let xi = extract_cocycle(rep, gauge, &opts).map_err(s)?;
    let check = verify_cocycle(&xi);
    let gamma = solve_coboundary(&xi, 1e-9).map_err(s)?;
    let replay = gamma.replay_defect(&xi).map_err(s)?;
    let family = CorrectedFamily::new(gauge, &gamma);
    let samples = zeta_samples(&[-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0], gauge.lattice().bound());
    let theta = extract_homogeneity(rep, &family, &samples, &opts).map_err(s)?;
    let improved: ImprovedFamily = improve_family(&family, &theta, &samples).map_err(s)?;
    let f = v(&[1.0, 0.0]);
    let r = |z: f64| -> Result<OperatorMatrix, String> { improved.resolvent(check_rep, re(z), &f).map_err(s) };
    let (pseudo, adjoint) = pseudo_defects(&r(1.0)?.matrix, &r(2.0)?.matrix, &r(-1.0)?.matrix, re(1.0), re(2.0));
    Ok(RoundTrip {
        cocycle: check.max_defect.max(check.symmetry_defect),
        path: gamma.sweep_disagreement,
        replay,
        additive: improved.additivity_defect(rep).map_err(s)?,
        homogeneous: improved.homogeneity_defect(rep, &samples).map_err(s)?,
        pseudo,
        adjoint,
    })
}

fn criterion_7() -> Outcome {
    let rep = FockRep::new(1, 16).unwrap();
    let check_rep = FockRep::new(1, 64).unwrap();
    let lattice = Lattice::new(2, 3);
    let mut w = RoundTrip {
        cocycle: 0.0,
        path: 0.0,
        replay: 0.0,
        additive: 0.0,
        homogeneous: 0.0,
        pseudo: 0.0,
        adjoint: 0.0,
    };
    for seed in 0..10 {
        let r = round_trip(&rep, &check_rep, &GaugeFunction::random(lattice.clone(), seed))
            .map_err(|e| format!("gauge seed {seed}: {e}"))?;
        w.cocycle = w.cocycle.max(r.cocycle);
        w.path = w.path.max(r.path);
        w.replay = w.replay.max(r.replay);
        w.additive = w.additive.max(r.additive);
        w.homogeneous = w.homogeneous.max(r.homogeneous);
        w.pseudo = w.pseudo.max(r.pseudo);
        w.adjoint = w.adjoint.max(r.adjoint);
    }
    let parts = [
        within("cocycle", w.cocycle, 1e-10),
        within("path", w.path, 1e-9),
        within("replay", w.replay, 1e-9),
        within("additive", w.additive, 1e-10),
        within("homogeneous", w.homogeneous, 1e-10),
        within("improved identity", w.pseudo, 1e-10),
        within("improved adjoint", w.adjoint, 1e-12),
    ];
    let ok = parts.iter().all(Result::is_ok);
    let line = parts
        .into_iter()
        .map(|p| p.unwrap_or_else(|e| e))
        .collect::<Vec<_>>()
        .join(", ");
    if ok {
        Ok(format!("{line} over 10 gauges"))
    } else {
        Err(line)
    }
}

fn criterion_8() -> Outcome {
    let rep = FockRep::new(1, 64).unwrap();
    let opts = SchurOptions::new(64);
    let l = re(1.0);
    let (mut shift_err, mut agree): (f64, f64) = (0.0, 0.0);
    for f in [v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[1.0, -2.0])] {
        let ra = rep.resolvent_matrix(l, &f).unwrap();
        let rb = shifted_resolvent(&rep, l, &f, 0.7).unwrap();
        let rec = recover_shift(&rep, &ra, &rb, l, &opts, 1e-9).map_err(|e| e.to_string())?;
        shift_err = shift_err.max((rec.shift - 0.7).abs());
        let corrected = shifted_resolvent(&rep, l, &f, 0.7 - rec.shift).unwrap();
        agree = agree.max(spectral_norm((&corrected.matrix - &ra.matrix).as_ref()));
        agree = agree.max(rec.mismatch);
    }
    Ok(format!(
        "{}, {}",
        within("|c − 0.7|", shift_err, 1e-10)?,
        within("family mismatch", agree, 1e-9)?
    ))
}

fn criterion_9() -> Outcome {
    let form = vec![
        vec![0.0, 1.0, 0.0, 0.0],
        vec![-1.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
    ];
    let space = SymplecticSpace::from_form(form).unwrap();
    if space.is_nondegenerate() || space.rank() != 2 {
        return Err(format!(
            "rank {} reported, nondegenerate = {}",
            space.rank(),
            space.is_nondegenerate()
        ));
    }
    let embedding = vec![
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
    ];
    let reps = vec![FockRep::embedded(space, 64, embedding, DEFAULT_MAX_DIM).map_err(|e| e.to_string())?];
    let mut series = Series::new(&reps);
    let settings = CheckSettings::default();
    let mut worst: f64 = 0.0;
    let one = re(1.0);
    for (f, g) in [
        (v(&[1.0, 0.0, 0.0, 0.0]), v(&[0.0, 0.0, 1.0, 0.0])),
        (v(&[1.0, 0.0, 0.0, 0.0]), v(&[0.0, 0.0, 0.0, 1.0])),
    ] {
        let c = check_relation_i(&mut series, &settings, &f, &g, one, one).map_err(|e| e.to_string())?;
        if !c.passed() {
            return Err(format!("relation (i) failed: {:?} {:?}", c.residuals, c.failure));
        }
        worst = worst.max(c.final_residual().unwrap());
    }
    Ok(format!(
        "rank 2, not nondegenerate, {}",
        within("σ-null [R_f,R_g]", worst, 1e-6)?
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("pseudo-resolvent axioms", criterion_1, 1),
        ("norm bound", criterion_2, 5),
        ("relation (iii)", criterion_3, 1),
        ("schur/sigma cross-check", criterion_4, 10),
        ("convergence of (i), (ii), (iv), almost-inner", criterion_5, 60),
        ("rewriter soundness", criterion_6, 60),
        ("cohomology round-trip", criterion_7, 30),
        ("shift recovery", criterion_8, 5),
        ("degenerate form", criterion_9, 30),
    ];
    let mut failures = 0;
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let out = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(limit);
        let (verdict, detail) = match (&out, in_time) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; too slow")),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if verdict == "FAIL" {
            failures += 1;
        }
        println!(
            "criterion {} {verdict} {name}: {detail} ({:.2} s, limit {limit} s)",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    if failures == 0 {
        println!("acceptance: all 9 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} of 9 criteria fail");
        ExitCode::FAILURE
    }
}
