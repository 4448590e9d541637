//! Ensembles of initial functions pushed through a delay equation, and the
//! statistics measured across them: density histograms, density cycles,
//! mean-square displacement and velocity laws.

mod brownian;
mod histogram;
mod period;
mod stats;

pub use brownian::{
    msd_curve, simulate_brownian, velocity_bound, velocity_stats, velocity_std_law, MsdCurve,
    VelocityStats, DEFAULT_BURN_IN,
};
pub use histogram::{Histogram, Histogram2D};
pub use period::{detect_density_period, detect_period_in, DensityPeriod, DEFAULT_PERIOD_TOL};
pub use stats::{linear_fit, LinearFit, Moments};

use std::borrow::Cow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dde_engine::{steps_in, DelayField, History, Integrator};
use crate::error::{check_range, Error, Result};
use crate::gaussian_analytic::{CovKernel, GaussianSampler};

/// Default number of histogram bins.
pub const DEFAULT_BINS: usize = 100;

/// How initial functions are drawn.
#[derive(Debug, Clone)]
pub enum InitialEnsembleSpec {
    /// Independent uniform values at every history node.
    IidUniformPath { lo: f64, hi: f64 },
    /// Consecutive blocks drawn from each component; the counts must add up
    /// to the ensemble size.
    Mixture(Vec<(InitialEnsembleSpec, usize)>),
    GaussianHistory(CovKernel),
    ConstantPath(f64),
}

enum Compiled {
    Uniform(f64, f64),
    Constant(f64),
    Gaussian(Box<GaussianSampler>),
    Mixture(Vec<(Compiled, usize)>),
}

impl Compiled {
    fn draw(&self, index: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            Compiled::Uniform(lo, hi) => (0..=m).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect(),
            Compiled::Constant(c) => vec![*c; m + 1],
            Compiled::Gaussian(s) => s.sample_values(rng),
            Compiled::Mixture(parts) => {
                let mut i = index;
                for (c, count) in parts {
                    if i < *count {
                        return c.draw(i, m, rng);
                    }
                    i -= count;
                }
                unreachable!("index checked against the total count")
            }
        }
    }
}

impl InitialEnsembleSpec {
    /// Ensemble size fixed by the spec itself (mixtures only).
    pub fn total_count(&self) -> Option<usize> {
        match self {
            InitialEnsembleSpec::Mixture(parts) => Some(parts.iter().map(|p| p.1).sum()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InitialEnsembleSpec::IidUniformPath { lo, hi } => {
                check_range("lo", *lo, true, "finite")?;
                check_range("hi", *hi, hi > lo, "lo < hi")
            }
            InitialEnsembleSpec::ConstantPath(c) => check_range("value", *c, true, "finite"),
            InitialEnsembleSpec::GaussianHistory(k) => k.check(k.tau().unwrap_or(1.0), 16),
            InitialEnsembleSpec::Mixture(parts) => {
                if parts.is_empty() || parts.iter().any(|p| p.1 == 0) {
                    return Err(Error::InvalidHistory(
                        "mixture needs at least one component and positive counts".into(),
                    ));
                }
                parts.iter().try_for_each(|p| p.0.validate())
            }
        }
    }

    fn compile(&self, m: usize, tau: f64) -> Result<Compiled> {
        Ok(match self {
            InitialEnsembleSpec::IidUniformPath { lo, hi } => Compiled::Uniform(*lo, *hi),
            InitialEnsembleSpec::ConstantPath(c) => Compiled::Constant(*c),
            InitialEnsembleSpec::GaussianHistory(k) => {
                Compiled::Gaussian(Box::new(GaussianSampler::new(k.clone(), m, tau)?))
            }
            InitialEnsembleSpec::Mixture(parts) => Compiled::Mixture(
                parts
                    .iter()
                    .map(|(s, c)| Ok((s.compile(m, tau)?, *c)))
                    .collect::<Result<_>>()?,
            ),
        })
    }
}

/// A validated initial ensemble that draws history `i` on demand, from stream
/// `i` of the seed, so large ensembles need not be held in memory.
pub struct InitialEnsemble {
    compiled: Compiled,
    n: usize,
    m: usize,
    tau: f64,
    seed: u64,
}

impl InitialEnsemble {
    pub fn new(spec: &InitialEnsembleSpec, n: usize, m: usize, tau: f64, seed: u64) -> Result<Self> {
        spec.validate()?;
        if n == 0 || m < 2 {
            return Err(Error::InvalidHistory(format!("need n >= 1 and m >= 2, got n = {n}, m = {m}")));
        }
        if let Some(total) = spec.total_count() {
            if total != n {
                return Err(Error::InvalidHistory(format!(
                    "mixture counts add up to {total}, ensemble size is {n}"
                )));
            }
        }
        Ok(Self {
            compiled: spec.compile(m, tau)?,
            n,
            m,
            tau,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Values at the `m + 1` history nodes of member `i`.
    pub fn values(&self, i: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        self.compiled.draw(i, self.m, &mut rng)
    }

    pub fn history(&self, i: usize) -> Result<History> {
        History::scalar(self.tau, &self.values(i))
    }
}

fn node_values(spec: &InitialEnsembleSpec, n: usize, m: usize, tau: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    let e = InitialEnsemble::new(spec, n, m, tau, seed)?;
    Ok((0..n).into_par_iter().map(|i| e.values(i)).collect())
}

/// `n` scalar histories on `m + 1` nodes of `[-τ, 0]`; history `i` uses
/// stream `i` of `seed`.
pub fn sample_initial(
    spec: &InitialEnsembleSpec,
    n: usize,
    m: usize,
    tau: f64,
    seed: u64,
) -> Result<Vec<History>> {
    node_values(spec, n, m, tau, seed)?
        .iter()
        .map(|v| History::scalar(tau, v))
        .collect()
}

/// Two-component histories `(x, v)` with `x ≡ 0` and `v` drawn from `spec`.
pub fn sample_velocity_histories(
    spec: &InitialEnsembleSpec,
    n: usize,
    m: usize,
    tau: f64,
    seed: u64,
) -> Result<Vec<History>> {
    node_values(spec, n, m, tau, seed)?
        .iter()
        .map(|v| History::new(tau, 2, v.iter().map(|&u| [0.0, u]).collect()))
        .collect()
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidGrid(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Component values across an ensemble at a list of times.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSamples {
    pub times: Vec<f64>,
    /// `x[k][i]`: trajectory `i` at `times[k]`.
    pub x: Vec<Vec<f64>>,
    /// `lag[k][i]`: trajectory `i` at `times[k] - τ`.
    pub lag: Vec<Vec<f64>>,
}

/// Integrates every history and records `component` at each time in `times`
/// (which must lie on the step grid). Trajectory `i` draws its noise from
/// stream `i` of `seed`, so results do not depend on scheduling.
pub fn sample_ensemble(
    histories: &[History],
    field: &dyn DelayField,
    times: &[f64],
    component: usize,
    seed: u64,
) -> Result<EnsembleSamples> {
    let first = histories
        .first()
        .ok_or_else(|| Error::InsufficientData("empty ensemble".into()))?;
    sample_with(histories.len(), first, |i| Ok(Cow::Borrowed(&histories[i])), field, times, component, seed)
}

/// [`sample_ensemble`] over an ensemble drawn member by member.
pub fn sample_ensemble_from(
    ensemble: &InitialEnsemble,
    field: &dyn DelayField,
    times: &[f64],
    component: usize,
    seed: u64,
) -> Result<EnsembleSamples> {
    let first = ensemble.history(0)?;
    sample_with(ensemble.len(), &first, |i| ensemble.history(i).map(Cow::Owned), field, times, component, seed)
}

fn sample_with<'h>(
    n: usize,
    first: &History,
    get: impl Fn(usize) -> Result<Cow<'h, History>> + Sync,
    field: &dyn DelayField,
    times: &[f64],
    component: usize,
    seed: u64,
) -> Result<EnsembleSamples> {
    if component >= field.dim() {
        return Err(Error::InvalidHistory(format!(
            "component {component} of a {}-dimensional system",
            field.dim()
        )));
    }
    let h = first.step();
    let t0 = first.t_now();
    let mut targets = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let s = steps_in(t - t0, h)?;
        if k > 0 && s < targets[k - 1] {
            return Err(Error::OutOfRange {
                name: "snapshot_times",
                value: t,
                expected: "non-decreasing times",
            });
        }
        targets.push(s);
    }
    let rows: Vec<Result<Vec<(f64, f64)>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let tag = |e: Error| match e {
                Error::Divergence { t, .. } => Error::Divergence {
                    t,
                    trajectory: Some(i),
                },
                e => e,
            };
            let hist = get(i)?;
            let mut it = Integrator::new(field, &hist, seed, i as u64).map_err(tag)?;
            let mut out = Vec::with_capacity(targets.len());
            for &s in &targets {
                while it.steps_taken() < s {
                    it.advance().map_err(tag)?;
                }
                out.push((it.state()[component], it.lagged()[component]));
            }
            Ok(out)
        })
        .collect();
    let mut x = vec![Vec::with_capacity(n); times.len()];
    let mut lag = vec![Vec::with_capacity(n); times.len()];
    for row in rows {
        for (k, (a, b)) in row?.into_iter().enumerate() {
            x[k].push(a);
            lag[k].push(b);
        }
    }
    Ok(EnsembleSamples {
        times: times.to_vec(),
        x,
        lag,
    })
}

/// Bin layout of a snapshot sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Binning {
    /// `bins` bins over the range of the first snapshot, frozen afterwards.
    Auto { bins: usize },
    Fixed { lo: f64, hi: f64, bins: usize },
}

impl Default for Binning {
    fn default() -> Self {
        Binning::Auto { bins: DEFAULT_BINS }
    }
}

/// Cross-trajectory distribution at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySnapshot {
    pub t: f64,
    /// Histogram of `x(t)`.
    pub marginal: Histogram,
    /// Histogram of `(x(t), x(t - τ))` on the same bins in both axes.
    pub joint: Option<Histogram2D>,
    pub n: usize,
}

/// Histograms of `samples` at each of its times.
pub fn snapshots_from(samples: &EnsembleSamples, binning: Binning, joint: bool) -> Result<Vec<DensitySnapshot>> {
    let (lo, hi, bins) = match binning {
        Binning::Fixed { lo, hi, bins } => (lo, hi, bins),
        Binning::Auto { bins } => {
            let first = samples
                .x
                .first()
                .ok_or_else(|| Error::InsufficientData("no snapshot times".into()))?;
            let (lo, hi) = Histogram::auto_range(first)?;
            (lo, hi, bins)
        }
    };
    samples
        .times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let marginal = Histogram::from_samples(&samples.x[k], lo, hi, bins)?;
            let joint = if joint {
                let mut j = Histogram2D::new((lo, hi, bins), (lo, hi, bins))?;
                for (a, b) in samples.x[k].iter().zip(&samples.lag[k]) {
                    j.push(*a, *b);
                }
                Some(j)
            } else {
                None
            };
            Ok(DensitySnapshot {
                t,
                marginal,
                joint,
                n: samples.x[k].len(),
            })
        })
        .collect()
}

/// Evolves the ensemble to `t_end` and returns marginal and joint histograms at
/// each snapshot time.
pub fn evolve_ensemble(
    histories: &[History],
    field: &dyn DelayField,
    t_end: f64,
    snapshot_times: &[f64],
    binning: Binning,
    seed: u64,
) -> Result<Vec<DensitySnapshot>> {
    if let Some(&last) = snapshot_times.last() {
        check_range("T", t_end, t_end >= last, "T >= last snapshot time")?;
    }
    let samples = sample_ensemble(histories, field, snapshot_times, 0, seed)?;
    snapshots_from(&samples, binning, true)
}

/// [`evolve_ensemble`] over an ensemble drawn member by member.
pub fn evolve_ensemble_from(
    ensemble: &InitialEnsemble,
    field: &dyn DelayField,
    t_end: f64,
    snapshot_times: &[f64],
    binning: Binning,
    seed: u64,
) -> Result<Vec<DensitySnapshot>> {
    if let Some(&last) = snapshot_times.last() {
        check_range("T", t_end, t_end >= last, "T >= last snapshot time")?;
    }
    let samples = sample_ensemble_from(ensemble, field, snapshot_times, 0, seed)?;
    snapshots_from(&samples, binning, true)
}

/// One CSV for a whole snapshot sequence: `t,bin_left,bin_right,density`.
pub fn snapshots_csv(snapshots: &[DensitySnapshot]) -> String {
    let mut out = String::from("t,bin_left,bin_right,density\n");
    for s in snapshots {
        s.marginal.write_rows(s.t, &mut out);
    }
    out
}

/// `t,x_left,x_right,y_left,y_right,density` for every snapshot with a joint.
pub fn joint_csv(snapshots: &[DensitySnapshot]) -> String {
    let mut out = String::from("t,x_left,x_right,y_left,y_right,density\n");
    for s in snapshots {
        if let Some(j) = &s.joint {
            j.write_rows(s.t, &mut out);
        }
    }
    out
}

/// `start, start + dt, …` up to and including `end` (to rounding).
pub fn time_grid(start: f64, end: f64, dt: f64) -> Vec<f64> {
    let n = ((end - start) / dt + 1e-9).floor() as usize;
    (0..=n).map(|k| start + k as f64 * dt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dde_engine::DdeField;

    #[test]
    fn constant_paths_are_flat_and_identical() {
        let h = sample_initial(&InitialEnsembleSpec::ConstantPath(0.7), 3, 8, 1.0, 0).unwrap();
        assert_eq!(h.len(), 3);
        assert!(h.iter().all(|x| x.samples().iter().all(|s| s[0] == 0.7)));
        assert_eq!(h[0], h[2]);
    }

    #[test]
    fn mixture_counts_must_match() {
        let spec = InitialEnsembleSpec::Mixture(vec![
            (InitialEnsembleSpec::ConstantPath(0.0), 2),
            (InitialEnsembleSpec::ConstantPath(1.0), 3),
        ]);
        assert!(sample_initial(&spec, 4, 8, 1.0, 0).is_err());
        let h = sample_initial(&spec, 5, 8, 1.0, 0).unwrap();
        assert_eq!(h[1].present()[0], 0.0);
        assert_eq!(h[2].present()[0], 1.0);
    }

    #[test]
    fn decay_is_a_point_mass() {
        let f = DdeField::linear(-1.0, 0.0, 1.0);
        let h = sample_initial(&InitialEnsembleSpec::ConstantPath(1.0), 10, 64, 1.0, 0).unwrap();
        let s = evolve_ensemble(&h, &f, 1.0, &[1.0], Binning::default(), 0).unwrap();
        assert_eq!(s[0].marginal.occupied(), 1);
        let j = s[0].joint.as_ref().unwrap();
        assert_eq!(j.x_marginal_counts(), s[0].marginal.counts());
    }

    #[test]
    fn off_grid_snapshot_rejected() {
        let f = DdeField::linear(-1.0, 0.0, 1.0);
        let h = sample_initial(&InitialEnsembleSpec::ConstantPath(1.0), 2, 4, 1.0, 0).unwrap();
        assert!(evolve_ensemble(&h, &f, 1.0, &[0.3], Binning::default(), 0).is_err());
    }

    #[test]
    fn time_grid_includes_end() {
        let g = time_grid(400.0, 402.9, 0.1);
        assert_eq!(g.len(), 30);
        assert!((g[29] - 402.9).abs() < 1e-9);
    }
}
