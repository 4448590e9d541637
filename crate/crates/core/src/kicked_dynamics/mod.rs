//! Velocity kicks driven by a chaotic map:
//! `v' = -γ v + κ Σ_j h(ξ_j) δ(t - jτ)`, `x' = v`, `ξ_{j+1} = S(ξ_j)`.
//!
//! Between kicks the flow is solved exactly, so a trajectory carries no
//! time-stepping error. As `τ -> 0` with `κ² / τ` fixed the velocity tends to
//! an Ornstein–Uhlenbeck process when `h` is centred and decorrelates under
//! `S` quickly enough; [`fp_decay_check`] measures the latter.

mod stream;

pub use stream::ChaoticStream;

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::ensemble_lab::{linear_fit, Moments};
use crate::error::{check_range, Error, Result};
use crate::map_density::MapSpec;

/// The observable `h` turned into kicks.
#[derive(Clone)]
pub enum Observable {
    /// `x - 1/2`, mean zero under the uniform invariant density.
    Centered,
    /// `x`.
    Identity,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Observable::Centered => write!(f, "Centered"),
            Observable::Identity => write!(f, "Identity"),
            Observable::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Observable {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Observable::Centered => x - 0.5,
            Observable::Identity => x,
            Observable::Custom(h) => h(x),
        }
    }

    /// Cell-midpoint values on an `n`-cell grid of `[0, 1]`.
    pub fn tabulate(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.eval((i as f64 + 0.5) / n as f64)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct KickConfig {
    pub gamma: f64,
    /// Time between kicks.
    pub tau: f64,
    /// Kick scale.
    pub kappa: f64,
    pub map: MapSpec,
    pub observable: Observable,
}

impl KickConfig {
    /// Full tent map, centred observable and `κ = √τ`.
    pub fn new(gamma: f64, tau: f64) -> Self {
        Self {
            gamma,
            tau,
            kappa: tau.sqrt(),
            map: MapSpec::Hat { a: 2.0 },
            observable: Observable::Centered,
        }
    }

    /// `κ² / τ`, which must tend to a constant as `τ -> 0`.
    pub fn kick_intensity(&self) -> f64 {
        self.kappa * self.kappa / self.tau
    }

    pub fn validate(&self) -> Result<()> {
        check_range("gamma", self.gamma, self.gamma > 0.0, "gamma > 0")?;
        check_range("tau", self.tau, self.tau > 0.0, "tau > 0")?;
        check_range("kappa", self.kappa, self.kappa > 0.0, "kappa > 0")?;
        self.map.validate()?;
        if self.map.point_map().is_none() {
            return Err(Error::InvalidGrid(format!(
                "map `{}` cannot drive kicks: it acts on densities only",
                self.map.name()
            )));
        }
        Ok(())
    }
}

/// States sampled at the kick times `jτ`, `j = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct KickedTrajectory {
    pub tau: f64,
    pub gamma: f64,
    pub x: Vec<f64>,
    /// Velocity just after kick `j` (the initial velocity for `j = 0`).
    pub v: Vec<f64>,
    /// Velocity just before kick `j` (equal to `v[0]` for `j = 0`).
    pub v_before: Vec<f64>,
    /// Map state after kick `j`.
    pub xi: Vec<f64>,
}

impl KickedTrajectory {
    /// `(∫ v dt, ∫ v² dt)` over `[jτ, (j+1)τ]`, exact for the free decay.
    fn interval_moments(&self, j: usize) -> (f64, f64) {
        let g = self.gamma;
        let e1 = -(-g * self.tau).exp_m1() / g;
        let e2 = -(-2.0 * g * self.tau).exp_m1() / (2.0 * g);
        (self.v[j] * e1, self.v[j] * self.v[j] * e2)
    }
}

pub fn evolve_kicked(cfg: &KickConfig, x0: f64, v0: f64, xi0: f64, n_kicks: usize) -> Result<KickedTrajectory> {
    cfg.validate()?;
    check_range("xi0", xi0, (0.0..=1.0).contains(&xi0), "0 <= xi0 <= 1")?;
    let decay = (-cfg.gamma * cfg.tau).exp();
    let drift = -(-cfg.gamma * cfg.tau).exp_m1() / cfg.gamma;
    let mut stream = ChaoticStream::new(&cfg.map, xi0, n_kicks);
    let mut out = KickedTrajectory {
        tau: cfg.tau,
        gamma: cfg.gamma,
        x: Vec::with_capacity(n_kicks + 1),
        v: Vec::with_capacity(n_kicks + 1),
        v_before: Vec::with_capacity(n_kicks + 1),
        xi: Vec::with_capacity(n_kicks + 1),
    };
    let (mut x, mut v) = (x0, v0);
    out.x.push(x);
    out.v.push(v);
    out.v_before.push(v);
    out.xi.push(xi0);
    for _ in 0..n_kicks {
        x += v * drift;
        v *= decay;
        out.v_before.push(v);
        v += cfg.kappa * cfg.observable.eval(stream.value());
        let xi = stream.advance();
        out.x.push(x);
        out.v.push(v);
        out.xi.push(xi);
    }
    Ok(out)
}

/// `‖Pᵗ h‖₁` for `t = 1..=n`, with the transfer operator of `map` applied to
/// the signed cell values `h` on a uniform grid of `[0, 1]`.
pub fn fp_decay_check(map: &MapSpec, h: &[f64], n: usize) -> Result<Vec<f64>> {
    if h.is_empty() {
        return Err(Error::InvalidGrid("empty observable table".into()));
    }
    let op = map.linear_evolution(h.len())?;
    let w = 1.0 / h.len() as f64;
    let mut f = h.to_vec();
    Ok((0..n)
        .map(|_| {
            f = op.apply_values(&f);
            f.iter().map(|v| v.abs()).sum::<f64>() * w
        })
        .collect())
}

/// Seeds `frac(j (√5 - 1) / 2 + 1/√7)`: equidistributed, and away from the
/// dyadic rationals on which the tent map collapses.
pub fn equidistributed_seeds(n: usize) -> Vec<f64> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let off = 1.0 / 7f64.sqrt();
    (0..n).map(|j| (off + j as f64 * g).fract()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuRow {
    pub tau: f64,
    /// Stationary velocity variance, time-averaged over the continuous flow.
    pub var_v: f64,
    /// Jarque–Bera statistic per sample of the post-kick velocities.
    pub normality_stat: f64,
    pub msd_slope: f64,
    pub msd_r2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuReport {
    pub gamma: f64,
    pub rows: Vec<OuRow>,
    /// Successive variances within 10% of each other.
    pub variance_cauchy: bool,
    /// The normality statistic never grows by more than its noise allowance
    /// as `τ` shrinks.
    pub normality_improves: bool,
}

impl OuReport {
    /// `tau,var_v,normality_stat,msd_slope,msd_r2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,var_v,normality_stat,msd_slope,msd_r2\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.tau, r.var_v, r.normality_stat, r.msd_slope, r.msd_r2
            );
        }
        out
    }
}

/// Runs `members` trajectories of `n_kicks` kicks for each `τ` (decreasing),
/// with `κ = √τ`, the full tent map, and `observable`. Statistics skip the
/// first `10 / γ` time units.
pub fn ou_limit_suite(
    gamma: f64,
    taus: &[f64],
    n_kicks: usize,
    members: usize,
    observable: &Observable,
) -> Result<OuReport> {
    if taus.is_empty() || taus.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InsufficientData("tau list must be non-empty and decreasing".into()));
    }
    if members < 2 {
        return Err(Error::InsufficientData("need at least two members".into()));
    }
    let seeds = equidistributed_seeds(members);
    let burn_in = 10.0 / gamma;
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let cfg = KickConfig {
            observable: observable.clone(),
            ..KickConfig::new(gamma, tau)
        };
        let start = (burn_in / tau).ceil() as usize;
        if start + 2 >= n_kicks {
            return Err(Error::InsufficientData(format!(
                "{n_kicks} kicks at tau = {tau} do not outlast the burn-in {burn_in}"
            )));
        }
        let trajs: Vec<KickedTrajectory> = seeds
            .par_iter()
            .map(|&xi0| evolve_kicked(&cfg, 0.0, 0.0, xi0, n_kicks))
            .collect::<Result<_>>()?;

        let span = (n_kicks - start) as f64 * tau * members as f64;
        let (mut s1, mut s2) = (0.0, 0.0);
        let mut post = Vec::with_capacity(members * (n_kicks - start));
        for tr in &trajs {
            for j in start..n_kicks {
                let (a, b) = tr.interval_moments(j);
                s1 += a;
                s2 += b;
            }
            post.extend_from_slice(&tr.v[start..]);
        }
        let mean = s1 / span;
        let var_v = s2 / span - mean * mean;
        let normality_stat = Moments::of(&post)?.normality();

        let t: Vec<f64> = (0..=n_kicks).map(|j| j as f64 * tau).collect();
        let msd: Vec<f64> = (0..=n_kicks)
            .map(|j| trajs.iter().map(|tr| (tr.x[j] - tr.x[0]).powi(2)).sum::<f64>() / members as f64)
            .collect();
        let half = n_kicks / 2;
        let fit = linear_fit(&t[half..], &msd[half..])?;
        rows.push(OuRow {
            tau,
            var_v,
            normality_stat,
            msd_slope: fit.slope,
            msd_r2: fit.r2,
        });
    }
    let variance_cauchy = rows
        .windows(2)
        .all(|w| (w[0].var_v - w[1].var_v).abs() <= 0.1 * w[0].var_v.abs().max(w[1].var_v.abs()));
    // Jarque–Bera per sample has standard deviation ~ sqrt(24 / 6² / N)
    let normality_improves = rows.windows(2).all(|w| {
        let n = (members * n_kicks) as f64;
        w[1].normality_stat <= w[0].normality_stat + 3.0 * (24.0 / 36.0 / n).sqrt()
    });
    Ok(OuReport {
        gamma,
        rows,
        variance_cauchy,
        normality_improves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_observable_is_pure_decay() {
        let cfg = KickConfig {
            observable: Observable::Custom(Arc::new(|_| 0.0)),
            ..KickConfig::new(1.0, 0.1)
        };
        let tr = evolve_kicked(&cfg, 0.0, 2.0, 0.3, 50).unwrap();
        for (j, v) in tr.v.iter().enumerate() {
            assert!((v - 2.0 * (-0.1 * j as f64).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn hand_computed_kicks() {
        let cfg = KickConfig::new(1.0, 0.1);
        let tr = evolve_kicked(&cfg, 0.0, 0.0, 0.2, 3).unwrap();
        let (k, e) = (0.1f64.sqrt(), (-0.1f64).exp());
        let d = 1.0 - e;
        let mut v = 0.0;
        let mut x = 0.0;
        for (j, xi) in [0.2, 0.4, 0.8].iter().enumerate() {
            x += v * d;
            v = v * e + k * (xi - 0.5);
            assert!((tr.v[j + 1] - v).abs() < 1e-14);
            assert!((tr.x[j + 1] - x).abs() < 1e-14);
        }
        assert!((tr.xi[3] - 0.4).abs() < 1e-14);
    }

    #[test]
    fn strong_damping_forgets() {
        let cfg = KickConfig::new(200.0, 0.1);
        let tr = evolve_kicked(&cfg, 0.0, 0.0, 0.37, 20).unwrap();
        for j in 1..=20 {
            let want = cfg.kappa * (tr.xi[j - 1] - 0.5);
            assert!((tr.v[j] - want).abs() < 1e-8);
        }
    }

    #[test]
    fn centred_observable_annihilated() {
        let h = Observable::Centered.tabulate(4096);
        let norms = fp_decay_check(&MapSpec::Hat { a: 2.0 }, &h, 3).unwrap();
        assert!(norms[0] < 1e-12);
        let c = fp_decay_check(&MapSpec::Hat { a: 2.0 }, &[0.7; 256], 5).unwrap();
        assert!(c.iter().all(|n| (n - 0.7).abs() < 1e-12));
    }
}
