use rayon::prelude::*;

use super::histogram::Histogram;
use super::stats::{linear_fit, LinearFit, Moments};
use crate::dde_engine::{integrate_sampled, BrownianDde, History, Trajectory};
use crate::error::{Error, Result};

/// Transient discarded before stationary statistics, in delay units.
pub const DEFAULT_BURN_IN: f64 = 50.0;

/// Empirical bound on `|v|`: `1 / (√γ (0.68 √β + 0.60 √γ))`.
pub fn velocity_bound(beta: f64, gamma: f64) -> f64 {
    1.0 / (gamma.sqrt() * (0.68 * beta.sqrt() + 0.60 * gamma.sqrt()))
}

/// Empirical velocity standard deviation law `0.32 / √(βγ)`.
pub fn velocity_std_law(beta: f64, gamma: f64) -> f64 {
    0.32 / (beta * gamma).sqrt()
}

/// Integrates each `(x, v)` history to `t_end`, keeping every `every`-th step.
/// Trajectory `i` uses noise stream `i`; the system has none, so this only
/// fixes the layout.
pub fn simulate_brownian(
    field: &BrownianDde,
    histories: &[History],
    t_end: f64,
    every: usize,
) -> Result<Vec<Trajectory>> {
    histories
        .par_iter()
        .enumerate()
        .map(|(i, h)| {
            integrate_sampled(field, h, t_end, every, 0, i as u64).map_err(|e| match e {
                Error::Divergence { t, .. } => Error::Divergence {
                    t,
                    trajectory: Some(i),
                },
                e => e,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsdCurve {
    pub t: Vec<f64>,
    /// Mean over trajectories of `(x(t) - x(0))²`.
    pub msd: Vec<f64>,
    /// Least-squares line over `[T/2, T]`.
    pub fit: LinearFit,
}

fn check_layout(trajs: &[Trajectory]) -> Result<(usize, f64, f64)> {
    let first = trajs
        .first()
        .ok_or_else(|| Error::InsufficientData("no trajectories".into()))?;
    let len = first.len();
    if trajs.iter().any(|t| t.len() != len || t.step != first.step || t.dim != 2) {
        return Err(Error::InsufficientData(
            "trajectories must be two-component and share one time grid".into(),
        ));
    }
    Ok((len, first.t0, first.step))
}

pub fn msd_curve(trajs: &[Trajectory]) -> Result<MsdCurve> {
    if trajs.len() < 100 {
        return Err(Error::InsufficientData(format!(
            "mean-square displacement needs at least 100 trajectories, got {}",
            trajs.len()
        )));
    }
    let (len, t0, step) = check_layout(trajs)?;
    let t_end = t0 + (len - 1) as f64 * step;
    if t_end - t0 < 100.0 {
        return Err(Error::InsufficientData(format!(
            "mean-square displacement needs T >= 100 delays, got {}",
            t_end - t0
        )));
    }
    let n = trajs.len() as f64;
    let t: Vec<f64> = (0..len).map(|i| t0 + i as f64 * step).collect();
    let msd: Vec<f64> = (0..len)
        .map(|i| trajs.iter().map(|tr| (tr.x(i) - tr.x(0)).powi(2)).sum::<f64>() / n)
        .collect();
    let half = t0 + 0.5 * (t_end - t0);
    let tail: Vec<usize> = (0..len).filter(|&i| t[i] >= half).collect();
    let xs: Vec<f64> = tail.iter().map(|&i| t[i]).collect();
    let ys: Vec<f64> = tail.iter().map(|&i| msd[i]).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(MsdCurve { t, msd, fit })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub max_abs: f64,
    /// `C` in the fit `ln p(v) ≈ c₀ - C v²` over the central 80% of the support.
    pub gaussian_c: f64,
    pub gaussian_r2: f64,
}

/// Statistics of `v` pooled over all trajectories and all samples at
/// `t >= burn_in`. Needs at least 10⁶ pooled samples.
pub fn velocity_stats(trajs: &[Trajectory], burn_in: f64) -> Result<VelocityStats> {
    let (len, t0, step) = check_layout(trajs)?;
    let start = (((burn_in - t0) / step).ceil().max(0.0) as usize).min(len);
    let v: Vec<f64> = trajs
        .iter()
        .flat_map(|tr| tr.states[start..].iter().map(|s| s[1]))
        .collect();
    if v.len() < 1_000_000 {
        return Err(Error::InsufficientData(format!(
            "velocity statistics need 10^6 pooled samples after burn-in, got {}",
            v.len()
        )));
    }
    let m = Moments::of(&v)?;
    let max_abs = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let (lo, hi) = Histogram::auto_range(&v)?;
    let h = Histogram::from_samples(&v, lo, hi, 100)?;
    let (clo, chi) = (lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo));
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, d) in h.densities().iter().enumerate() {
        let (l, r) = h.edges(i);
        let c = 0.5 * (l + r);
        if *d > 0.0 && c >= clo && c <= chi {
            xs.push(c * c);
            ys.push(d.ln());
        }
    }
    let fit = linear_fit(&xs, &ys)?;
    Ok(VelocityStats {
        n: v.len(),
        mean: m.mean,
        std: m.var.sqrt(),
        max_abs,
        gaussian_c: -fit.slope,
        gaussian_r2: fit.r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laws_at_reference_point() {
        assert!((velocity_std_law(10.0, 1.0) - 0.1012).abs() < 1e-4);
        assert!((velocity_bound(10.0, 1.0) - 1.0 / (0.68 * 10f64.sqrt() + 0.6)).abs() < 1e-15);
    }

    #[test]
    fn too_few_trajectories() {
        assert!(matches!(msd_curve(&[]), Err(Error::InsufficientData(_))));
    }
}
