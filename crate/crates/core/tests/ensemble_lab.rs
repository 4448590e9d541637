use ddlab_core::dde_engine::{DdeField, KeenerDde, NoiseProcess};
use ddlab_core::ensemble_lab::{
    detect_period_in, evolve_ensemble, evolve_ensemble_from, sample_ensemble, sample_initial, with_threads,
    Binning, Histogram, InitialEnsemble, InitialEnsembleSpec, Moments,
};
use proptest::prelude::*;

fn uniform(lo: f64, hi: f64) -> InitialEnsembleSpec {
    InitialEnsembleSpec::IidUniformPath { lo, hi }
}

fn noisy_keener(hi: f64) -> DdeField {
    DdeField::Keener(KeenerDde {
        alpha: 10.0,
        a: 0.5,
        b: 0.567,
        tau: 1.0,
        noise: NoiseProcess::PiecewiseConstantUniform {
            lo: 0.0,
            hi,
            resample_interval: 1.0,
        },
    })
}

#[test]
fn iid_nodes_have_uniform_moments() {
    let h = sample_initial(&uniform(0.65, 0.75), 400, 32, 1.0, 11).unwrap();
    let v: Vec<f64> = h.iter().flat_map(|x| x.samples().iter().map(|s| s[0])).collect();
    assert!(v.iter().all(|&x| (0.65..0.75).contains(&x)));
    let m = Moments::of(&v).unwrap();
    let se = (m.var / v.len() as f64).sqrt();
    assert!((m.mean - 0.70).abs() < 3.0 * se, "mean {}", m.mean);
    assert!((m.var - 0.01 / 12.0).abs() < 4.0 * m.var_stderr());
}

#[test]
fn mixture_fills_consecutive_blocks() {
    let spec = InitialEnsembleSpec::Mixture(vec![(uniform(0.65, 0.75), 30), (uniform(0.35, 0.45), 20)]);
    let h = sample_initial(&spec, 50, 16, 1.0, 2).unwrap();
    for (i, x) in h.iter().enumerate() {
        let (lo, hi) = if i < 30 { (0.65, 0.75) } else { (0.35, 0.45) };
        assert!(x.samples().iter().all(|s| (lo..hi).contains(&s[0])), "member {i}");
    }
}

#[test]
fn members_are_drawn_independently_of_ensemble_size() {
    let a = sample_initial(&uniform(0.0, 1.0), 5, 8, 1.0, 4).unwrap();
    let b = sample_initial(&uniform(0.0, 1.0), 50, 8, 1.0, 4).unwrap();
    assert_eq!(a[..], b[..5]);
    let lazy = InitialEnsemble::new(&uniform(0.0, 1.0), 50, 8, 1.0, 4).unwrap();
    assert_eq!(lazy.history(17).unwrap(), b[17]);
}

#[test]
fn delay_free_decay_is_a_point_mass_at_the_solution() {
    let f = DdeField::linear(-1.0, 0.0, 1.0);
    let h = sample_initial(&InitialEnsembleSpec::ConstantPath(1.0), 20, 128, 1.0, 0).unwrap();
    let s = evolve_ensemble(&h, &f, 1.0, &[1.0], Binning::default(), 0).unwrap();
    let m = &s[0].marginal;
    assert_eq!(m.occupied(), 1);
    assert!(m.lo() < (-1.0f64).exp() && (-1.0f64).exp() < m.hi());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let spec = uniform(0.0, 1.0);
    let f = noisy_keener(0.2);
    let times = [4.0, 4.5, 5.0];
    let run = |threads| {
        let e = InitialEnsemble::new(&spec, 64, 32, 1.0, 9).unwrap();
        with_threads(Some(threads), || evolve_ensemble_from(&e, &f, 5.0, &times, Binning::Auto { bins: 20 }, 3))
            .unwrap()
            .unwrap()
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn lazy_and_materialized_ensembles_agree() {
    let spec = uniform(0.2, 0.8);
    let f = noisy_keener(0.1);
    let h = sample_initial(&spec, 16, 32, 1.0, 5).unwrap();
    let e = InitialEnsemble::new(&spec, 16, 32, 1.0, 5).unwrap();
    let a = sample_ensemble(&h, &f, &[2.0, 3.0], 0, 8).unwrap();
    let b = ddlab_core::ensemble_lab::sample_ensemble_from(&e, &f, &[2.0, 3.0], 0, 8).unwrap();
    assert_eq!(a, b);
}

#[test]
fn noise_streams_differ_by_seed() {
    let h = sample_initial(&InitialEnsembleSpec::ConstantPath(0.5), 8, 32, 1.0, 0).unwrap();
    let f = noisy_keener(0.2);
    let a = sample_ensemble(&h, &f, &[3.0], 0, 1).unwrap();
    let b = sample_ensemble(&h, &f, &[3.0], 0, 2).unwrap();
    assert_ne!(a.x, b.x);
    // same history, different member index, different noise
    assert_ne!(a.x[0][0], a.x[0][1]);
}

#[test]
fn alternating_histograms_have_period_two() {
    let even = Histogram::from_samples(&[0.1, 0.15, 0.2], 0.0, 1.0, 10).unwrap();
    let odd = Histogram::from_samples(&[0.7, 0.8, 0.85], 0.0, 1.0, 10).unwrap();
    let seq: Vec<Histogram> = (0..12).map(|k| if k % 2 == 0 { even.clone() } else { odd.clone() }).collect();
    let p = detect_period_in(&seq, 0.125, 0.1).unwrap();
    assert_eq!(p.lag, 2);
    assert!((p.period - 0.25).abs() < 1e-15);
    // constant sequence: stationary, no period
    assert!(detect_period_in(&vec![even.clone(); 12], 0.125, 0.1).is_none());
    // three-cycle
    let mid = Histogram::from_samples(&[0.45, 0.5], 0.0, 1.0, 10).unwrap();
    let seq: Vec<Histogram> = (0..12).map(|k| [&even, &mid, &odd][k % 3].clone()).collect();
    assert_eq!(detect_period_in(&seq, 1.0, 0.1).unwrap().lag, 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn histogram_densities_integrate_to_one(
        xs in prop::collection::vec(-5.0f64..5.0, 1..300),
        bins in 1usize..60,
    ) {
        let (lo, hi) = Histogram::auto_range(&xs).unwrap();
        let h = Histogram::from_samples(&xs, lo, hi, bins).unwrap();
        prop_assert_eq!(h.n(), xs.len() as u64);
        prop_assert_eq!(h.clamped(), 0);
        let mass: f64 = h.densities().iter().sum::<f64>() * h.width();
        prop_assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_distance_is_a_bounded_metric(
        xs in prop::collection::vec(0.0f64..1.0, 1..200),
        ys in prop::collection::vec(0.0f64..1.0, 1..200),
    ) {
        let a = Histogram::from_samples(&xs, 0.0, 1.0, 25).unwrap();
        let b = Histogram::from_samples(&ys, 0.0, 1.0, 25).unwrap();
        let d = a.l1_distance(&b);
        prop_assert!((d - b.l1_distance(&a)).abs() < 1e-12);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&d));
        prop_assert!(a.l1_distance(&a) == 0.0);
    }
}
