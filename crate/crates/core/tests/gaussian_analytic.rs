use std::f64::consts::PI;
use std::sync::Arc;

use ddlab_core::ensemble_lab::Moments;
use ddlab_core::gaussian_analytic::{
    conditional_mean_check, factorized_sigma2, Covariance, hayes_stable, joint_density, marginal_density, r_t,
    sigma2_curve, wiener_closed_form, wiener_factorized_sigma2, CovKernel, GaussianSampler, GaussianState,
    LinearDdeParams, Stability, TabulatedKernel,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Zeros of `λ - a - b e^{-λτ}` with `Re λ > 0`, by the argument principle on
/// the right half-disk of radius `|a| + |b| + 1` (no zero lies outside it).
fn unstable_roots(a: f64, b: f64, tau: f64) -> i64 {
    let h = |l: Complex64| l - a - b * (-l * tau).exp();
    let r = a.abs() + b.abs() + 1.0;
    let n = 40_000;
    let mut path = Vec::with_capacity(2 * n + 2);
    // down the imaginary axis, then counter-clockwise round the arc
    for k in 0..=n {
        path.push(Complex64::new(0.0, r - 2.0 * r * k as f64 / n as f64));
    }
    for k in 1..=n {
        let th = -PI / 2.0 + PI * k as f64 / n as f64;
        path.push(Complex64::from_polar(r, th));
    }
    let mut turn = 0.0;
    for w in path.windows(2) {
        let d = (h(w[1]) / h(w[0])).arg();
        turn += d;
    }
    (turn / (2.0 * PI)).round() as i64
}

#[test]
fn root_oracle_sanity() {
    assert_eq!(unstable_roots(1.0, 0.0, 1.0), 1);
    assert_eq!(unstable_roots(-1.0, 0.0, 1.0), 0);
    assert_eq!(unstable_roots(0.0, -1.0, 1.0), 0);
    // x' = -2 x(t - 1): past the first Hopf crossing at b = -π/2
    assert_eq!(unstable_roots(0.0, -2.0, 1.0), 2);
}

#[test]
fn hayes_region_matches_root_oracle() {
    let mut checked = 0;
    for i in 0..21 {
        for j in 0..21 {
            let a = -3.0 + 0.2 * i as f64;
            let b = -3.0 + 0.2 * j as f64;
            let p = LinearDdeParams::new(a, b, 1.0).unwrap();
            let c = hayes_stable(&p).unwrap();
            if c.margins.iter().any(|m| m.abs() < 1e-6) {
                continue;
            }
            let stable = unstable_roots(a, b, 1.0) == 0;
            assert_eq!(c.verdict == Stability::Stable, stable, "(a, b) = ({a}, {b}): {c:?}");
            checked += 1;
        }
    }
    assert!(checked > 380);
}

#[test]
fn hopf_boundary_on_pure_delay() {
    // a = 0: stable exactly for -π/2 < bτ < 0
    let p = |b| LinearDdeParams::new(0.0, b, 1.0).unwrap();
    assert_eq!(hayes_stable(&p(-1.5)).unwrap().verdict, Stability::Stable);
    assert_eq!(hayes_stable(&p(-1.6)).unwrap().verdict, Stability::Unstable);
    assert_eq!(hayes_stable(&p(-PI / 2.0)).unwrap().verdict, Stability::Boundary);
}

#[test]
fn wiener_closed_form_against_quadrature() {
    let p = LinearDdeParams::new(0.0, -1.0, 1.0).unwrap();
    let w = wiener_closed_form(&p, 1.0).unwrap();
    assert!((w.cross - 0.5).abs() < 1e-14);
    assert!((w.sigma2 - 1.0 / 3.0).abs() < 1e-14);
    let k = CovKernel::BrownianMinPlusTau { tau: 1.0 };
    for (a, b) in [(0.0, -1.0), (0.7, -0.4), (-1.3, 0.9), (1e-8, -1.0)] {
        let p = LinearDdeParams::new(a, b, 1.0).unwrap();
        for t in [0.1, 0.5, 1.0] {
            let w = wiener_closed_form(&p, t).unwrap();
            assert!((r_t(&k, &p, t, 0.0, 0.0).unwrap() - w.sigma2).abs() < 1e-8);
            assert!((r_t(&k, &p, t, -1.0, 0.0).unwrap() - w.cross).abs() < 1e-8);
            assert!((wiener_factorized_sigma2(&p, t).unwrap() - w.sigma2).abs() < 1e-8);
        }
    }
}

#[test]
fn cosine_measure_is_invariant_for_quarter_period_delay() {
    let p = LinearDdeParams::new(0.0, -1.0, PI / 2.0).unwrap();
    let curve = sigma2_curve(&CovKernel::Cosine, &p, PI, PI / 200.0).unwrap();
    for pt in &curve {
        assert!((pt.sigma2 - 1.0).abs() < 1e-9, "t = {}: {}", pt.t, pt.sigma2);
    }
}

fn pinned_ou(tau: f64) -> CovKernel {
    CovKernel::UvProduct {
        tau,
        u: Arc::new(move |s| (s + tau).sinh()),
        v: Arc::new(move |s| (-(s + tau)).exp()),
    }
}

#[test]
fn variance_equation_residual_is_small() {
    let tab = TabulatedKernel::from_fn(1.0, 65, |s1, s2| (s1.min(s2) + 1.0) + 0.5).unwrap();
    let kernels = [
        CovKernel::Cosine,
        CovKernel::CosineDegenerate,
        CovKernel::BrownianMinPlusTau { tau: 1.0 },
        pinned_ou(1.0),
        CovKernel::Tabulated(tab),
    ];
    let p = LinearDdeParams::new(0.5, -1.0, 1.0).unwrap();
    for k in &kernels {
        let curve = sigma2_curve(k, &p, 2.0, 2e-3).unwrap();
        let worst = curve.iter().map(|c| c.residual).fold(0.0, f64::max);
        assert!(worst < 1e-5, "{k:?}: residual {worst:e}");
    }
}

#[test]
fn covariance_is_continuous_across_regimes() {
    let k = pinned_ou(1.0);
    let p = LinearDdeParams::new(-0.4, 0.8, 1.0).unwrap();
    let eps = 1e-7;
    // u1 = t + s1 crosses 0, then u2 = t + s2 crosses 0
    for (t, s1, s2) in [(0.3, -0.3, 0.0), (0.6, -0.9, -0.6)] {
        let lo = r_t(&k, &p, t, s1 - eps, s2).unwrap();
        let hi = r_t(&k, &p, t, s1 + eps, s2).unwrap();
        assert!((lo - hi).abs() < 1e-5, "jump {:e} at ({t}, {s1}, {s2})", lo - hi);
        if s2 < 0.0 {
            let lo = r_t(&k, &p, t, s1, s2 - eps).unwrap();
            let hi = r_t(&k, &p, t, s1, s2 + eps).unwrap();
            assert!((lo - hi).abs() < 1e-5);
        }
    }
}

#[test]
fn factorized_variance_agrees_beyond_first_delay() {
    let p = LinearDdeParams::new(-0.2, -0.9, 1.0).unwrap();
    for k in [CovKernel::BrownianMinPlusTau { tau: 1.0 }, pinned_ou(1.0)] {
        for t in [0.4, 1.7, 3.2] {
            let a = factorized_sigma2(&k, &p, t).unwrap();
            let b = r_t(&k, &p, t, 0.0, 0.0).unwrap();
            assert!((a - b).abs() < 1e-7, "{k:?} t = {t}: {a} vs {b}");
        }
    }
}

#[test]
fn densities_normalize_and_condition() {
    let k = CovKernel::BrownianMinPlusTau { tau: 1.0 };
    let p = LinearDdeParams::new(0.0, -1.0, 1.0).unwrap();
    let s = GaussianState::from_kernel(&k, &p, 0.5).unwrap();
    assert!(s.satisfies_cauchy_schwarz());
    let (n, l) = (801, 8.0);
    let h = 2.0 * l / (n - 1) as f64;
    let mut mass = 0.0;
    let mut joint = 0.0;
    for i in 0..n {
        let x = -l + i as f64 * h;
        mass += marginal_density(&s, x).unwrap() * h;
        for j in 0..n {
            let y = -l + j as f64 * h;
            joint += joint_density(&s, x, y).unwrap() * h * h;
        }
    }
    assert!((mass - 1.0).abs() < 1e-6);
    assert!((joint - 1.0).abs() < 1e-6);
    for x in [-1.0, 0.3, 1.2] {
        assert!(conditional_mean_check(&s, x).unwrap() < 1e-8);
    }
}

#[test]
fn sampler_reproduces_kernel_covariance() {
    let k = pinned_ou(1.0);
    let s = GaussianSampler::new(k.clone(), 8, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 40_000;
    let draws: Vec<Vec<f64>> = (0..n).map(|_| s.sample_values(&mut rng)).collect();
    let node = |i: usize| -1.0 + i as f64 / 8.0;
    for (i, j) in [(8, 8), (4, 8), (2, 6)] {
        let prod: Vec<f64> = draws.iter().map(|d| d[i] * d[j]).collect();
        let m = Moments::of(&prod).unwrap();
        let want = k.eval(node(i), node(j));
        let se = (m.var / n as f64).sqrt();
        assert!((m.mean - want).abs() < 4.0 * se, "({i}, {j}): {} vs {want}", m.mean);
    }
}

#[test]
fn monte_carlo_error_shrinks_as_inverse_root_n() {
    let s = GaussianSampler::new(CovKernel::Cosine, 8, 1.0).unwrap();
    let se = |n: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let x: Vec<f64> = (0..n).map(|_| s.sample_values(&mut rng)[8]).collect();
        Moments::of(&x).unwrap().var_stderr()
    };
    let ratio = se(2_000) / se(32_000);
    assert!((ratio - 4.0).abs() < 0.6, "ratio {ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn propagated_covariance_is_symmetric(
        a in -1.0f64..1.0,
        b in -1.0f64..1.0,
        t in 0.0f64..3.0,
        s1 in -1.0f64..0.0,
        s2 in -1.0f64..0.0,
    ) {
        let k = CovKernel::BrownianMinPlusTau { tau: 1.0 };
        let p = LinearDdeParams::new(a, b, 1.0).unwrap();
        let x = r_t(&k, &p, t, s1, s2).unwrap();
        let y = r_t(&k, &p, t, s2, s1).unwrap();
        prop_assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
    }

    #[test]
    fn variance_scales_quadratically(c in 0.1f64..3.0, t in 0.0f64..2.0) {
        let p = LinearDdeParams::new(-0.3, 0.6, 1.0).unwrap();
        let table = |c: f64| {
            let tab = TabulatedKernel::from_fn(1.0, 33, |x, y| c * c * (x.min(y) + 1.0)).unwrap();
            CovKernel::Tabulated(tab)
        };
        let s = GaussianState::from_kernel(&table(1.0), &p, t).unwrap();
        let scaled = GaussianState::from_kernel(&table(c), &p, t).unwrap();
        prop_assert!((scaled.sigma2_t - s.scaled(c * c).sigma2_t).abs() < 1e-9 * (1.0 + scaled.sigma2_t));
        prop_assert!((scaled.cross - s.scaled(c * c).cross).abs() < 1e-9 * (1.0 + scaled.sigma2_t));
    }
}
