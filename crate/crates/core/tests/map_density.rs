use ddlab_core::map_density::{detect_asymptotic_period, fp_hat, fp_keener, MapSpec, DEFAULT_TOL};
use ddlab_core::GridDensity;
use proptest::prelude::*;

/// Pointwise oracle for the tent-map transfer operator on cell averages:
/// `Pf(y) = (f(y/a) + f(1 - y/a)) / a` for `y < a/2`, zero above.
fn hat_oracle(f: &GridDensity, a: f64) -> Vec<f64> {
    let n = f.len();
    let cell_avg = |lo: f64, hi: f64| -> f64 {
        // exact integral of the piecewise-constant f over [lo, hi]
        f.integrate(lo, hi)
    };
    (0..n)
        .map(|j| {
            let (y0, y1) = f.cell(j);
            let (y1c, w) = (y1.min(a / 2.0), y1 - y0);
            if y1c <= y0 {
                return 0.0;
            }
            // preimages of [y0, y1c]: [y0/a, y1c/a] and [1 - y1c/a, 1 - y0/a]
            (cell_avg(y0 / a, y1c / a) + cell_avg(1.0 - y1c / a, 1.0 - y0 / a)) / w
        })
        .collect()
}

#[test]
fn hat_operator_matches_preimage_oracle() {
    let f = GridDensity::random_positive(0.0, 1.0, 512, 11).unwrap();
    for a in [1.15, 1.3, 1.8, 2.0] {
        let got = fp_hat(&f, a).unwrap();
        for (g, w) in got.values().iter().zip(hat_oracle(&f, a)) {
            assert!((g - w).abs() < 1e-10, "a = {a}: {g} vs {w}");
        }
    }
}

#[test]
fn full_tent_map_is_exact() {
    for seed in 0..5 {
        let mut f = GridDensity::random_positive(0.0, 1.0, 4096, seed).unwrap();
        let u = GridDensity::uniform(0.0, 1.0, 4096).unwrap();
        let mut hit = None;
        for k in 1..=30 {
            f = fp_hat(&f, 2.0).unwrap();
            if f.l1_distance(&u) < 1e-3 {
                hit = Some(k);
                break;
            }
        }
        assert!(hit.is_some(), "seed {seed} did not relax within 30 steps");
    }
}

#[test]
fn period_doubling_windows() {
    let f0 = GridDensity::indicator(0.0, 1.0, 4096, 0.2, 0.3).unwrap();
    for (a, want) in [(1.8, 1), (1.3, 2), (1.15, 4)] {
        let r = detect_asymptotic_period(&MapSpec::Hat { a }, &f0, 400, 64, DEFAULT_TOL).unwrap();
        assert_eq!(r.period, Some(want), "a = {a}, distance {}", r.cycle_distance);
        assert_eq!(r.basis_snapshots.len(), want);
    }
}

#[test]
fn keener_rotation_keeps_uniform() {
    let u = GridDensity::uniform(0.0, 1.0, 1000).unwrap();
    let g = fp_keener(&u, 0.999999, 0.25, None).unwrap();
    assert!(g.l1_distance(&u) < 1e-5);
}

fn density(n: usize) -> impl Strategy<Value = GridDensity> {
    prop::collection::vec(0.0f64..10.0, n)
        .prop_filter("non-zero mass", |v| v.iter().sum::<f64>() > 1e-3)
        .prop_map(|v| GridDensity::new(0.0, 1.0, v).unwrap().normalized().unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transfer_operators_conserve_mass(f in density(256), a in 0.05f64..=2.0, b in 0.01f64..0.99) {
        let map = MapSpec::Hat { a };
        let g = map.evolution(256).unwrap().step(&f).unwrap();
        prop_assert!((g.mass() - 1.0).abs() < 1e-9);
        prop_assert!(g.values().iter().all(|v| *v >= 0.0));
        let k = MapSpec::Keener { a: a.min(0.99), b };
        let g = k.evolution(256).unwrap().step(&f).unwrap();
        prop_assert!((g.mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn transfer_operator_is_linear(
        f in prop::collection::vec(-5.0f64..5.0, 128),
        g in prop::collection::vec(-5.0f64..5.0, 128),
        s in -3.0f64..3.0,
        a in 1.0f64..=2.0,
    ) {
        let op = MapSpec::Hat { a }.linear_evolution(128).unwrap();
        let combo: Vec<f64> = f.iter().zip(&g).map(|(x, y)| s * x + y).collect();
        let lhs = op.apply_values(&combo);
        let (pf, pg) = (op.apply_values(&f), op.apply_values(&g));
        for i in 0..128 {
            prop_assert!((lhs[i] - (s * pf[i] + pg[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn operator_contracts_in_l1(f in prop::collection::vec(-5.0f64..5.0, 128), a in 0.5f64..=2.0) {
        let op = MapSpec::Hat { a }.linear_evolution(128).unwrap();
        let l1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
        prop_assert!(l1(&op.apply_values(&f)) <= l1(&f) * (1.0 + 1e-12));
    }
}
