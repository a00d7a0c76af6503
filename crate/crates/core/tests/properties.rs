use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use resalg::cohomology::{add, extract_cocycle, verify_cocycle, GaugeFunction, Lattice};
use resalg::expr::sample::{default_pool, random_expr};
use resalg::expr::{parse, simplify, Expr};
use resalg::fock::{eval, spectral_norm, FockRep, SchurOptions};
use resalg::symplectic::{SymplecticSpace, TestVector};
use resalg::Complex64;

fn expr_from_seed(seed: u64, max_word: usize) -> Expr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_expr(&mut rng, &default_pool(), max_word, 3)
}

fn max_coeff(e: &Expr) -> f64 {
    e.terms().iter().map(|t| t.coeff.norm()).fold(0.0, f64::max)
}

fn small_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simplify_is_idempotent(seed in any::<u64>()) {
        let s = simplify(&expr_from_seed(seed, 4));
        prop_assert_eq!(simplify(&s), s);
    }

    #[test]
    fn adjoint_is_an_involution(seed in any::<u64>()) {
        let e = expr_from_seed(seed, 4);
        prop_assert_eq!(e.adjoint().adjoint(), e);
    }

    #[test]
    fn adjoint_commutes_with_simplify(seed in any::<u64>()) {
        let e = expr_from_seed(seed, 3);
        let a = simplify(&e.adjoint());
        let b = simplify(&e).adjoint();
        prop_assert!(max_coeff(&simplify(&(&a - &b))) <= 1e-9 * (1.0 + max_coeff(&a)), "{} vs {}", a, b);
    }

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let e = expr_from_seed(seed, 4);
        let back = parse(&e.to_string()).unwrap();
        prop_assert!(back.approx_eq(&e, 1e-15), "{} vs {}", back, e);
    }

    #[test]
    fn derivations_commute(seed in any::<u64>(), f in small_vec(), g in small_vec()) {
        let space = SymplecticSpace::standard(1).unwrap();
        let (f, g) = (TestVector::new(f), TestVector::new(g));
        let e = expr_from_seed(seed, 2);
        let fg = e.derivation(&space, &g).unwrap().derivation(&space, &f).unwrap();
        let gf = e.derivation(&space, &f).unwrap().derivation(&space, &g).unwrap();
        let d = simplify(&(&fg - &gf));
        prop_assert!(max_coeff(&d) <= 1e-9 * (1.0 + max_coeff(&fg)), "{}", d);
    }

    #[test]
    fn pair_is_antisymmetric_and_bilinear(f in small_vec(), g in small_vec(), h in small_vec(), a in -2.0f64..2.0) {
        let s = SymplecticSpace::standard(1).unwrap();
        let (f, g, h) = (TestVector::new(f), TestVector::new(g), TestVector::new(h));
        prop_assert_eq!(s.pair(&f, &g).unwrap(), -s.pair(&g, &f).unwrap());
        let lhs = s.pair(&f.scaled(a).add(&h), &g).unwrap();
        let rhs = a * s.pair(&f, &g).unwrap() + s.pair(&h, &g).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn generator_is_linear(f in small_vec(), g in small_vec(), a in -2.0f64..2.0) {
        let rep = FockRep::new(1, 12).unwrap();
        let (f, g) = (TestVector::new(f), TestVector::new(g));
        let lhs = rep.generator(&f.scaled(a).add(&g)).unwrap().matrix;
        let gf = rep.generator(&f).unwrap().matrix;
        let gg = rep.generator(&g).unwrap().matrix;
        let d = &lhs - &(&gf * faer::Scale(Complex64::new(a, 0.0)) + &gg);
        prop_assert!(spectral_norm(d.as_ref()) <= 1e-12);
    }

    #[test]
    fn resolvent_norm_bound(re in 0.5f64..3.0, im in -3.0f64..3.0, sign in any::<bool>(), f in small_vec()) {
        let rep = FockRep::new(1, 24).unwrap();
        let z = Complex64::new(if sign { re } else { -re }, im);
        let r = rep.resolvent_matrix(z, &TestVector::new(f)).unwrap();
        prop_assert!(r.norm() <= 1.0 / re + 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eval_is_sound_under_simplify(seed in any::<u64>()) {
        let rep = FockRep::new(1, 32).unwrap();
        let e = expr_from_seed(seed, 4);
        let a = eval(&rep, &e).unwrap().matrix;
        let b = eval(&rep, &simplify(&e)).unwrap().matrix;
        prop_assert!(spectral_norm((&a - &b).as_ref()) <= 1e-9);
    }

    #[test]
    fn extracted_cocycle_matches_gauge(seed in any::<u64>()) {
        let rep = FockRep::new(1, 10).unwrap();
        let lattice = Lattice::new(2, 1);
        let gauge = GaugeFunction::random(lattice.clone(), seed);
        let xi = extract_cocycle(&rep, &gauge, &SchurOptions::new(9)).unwrap();
        for (f, g, v) in xi.iter() {
            let want = gauge.value(f).unwrap() + gauge.value(g).unwrap() - gauge.value(&add(f, g)).unwrap();
            prop_assert!((v - want).abs() <= 1e-10);
        }
        prop_assert!(verify_cocycle(&xi).passes(1e-10));
    }
}

/// `⟨0|R(1,(1,0))|0⟩` at N = 128 against a spectral decomposition of the
/// truncated position operator.
#[test]
fn vacuum_resolvent_matches_eigen_oracle() {
    let n = 128;
    let q = DMatrix::<f64>::from_fn(n, n, |i, j| {
        if j == i + 1 {
            (j as f64 / 2.0).sqrt()
        } else if i == j + 1 {
            (i as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(q);
    let oracle: Complex64 = (0..n)
        .map(|k| {
            let w = eig.eigenvectors[(0, k)].powi(2);
            Complex64::new(w, 0.0) / Complex64::new(eig.eigenvalues[k], 1.0)
        })
        .sum();
    let rep = FockRep::new(1, n).unwrap();
    let r = eval(&rep, &parse("R(1,[1,0])").unwrap()).unwrap();
    let got = r.matrix[(0, 0)];
    assert!((got - oracle).norm() <= 1e-12, "{got} vs {oracle}");
}
