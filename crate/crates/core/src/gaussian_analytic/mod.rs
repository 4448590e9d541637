//! Exact propagation of Gaussian initial functions under `x' = a x + b x(t - τ)`.
//!
//! A Gaussian history with covariance `R₀` stays Gaussian; its covariance
//! `R_t(s1, s2) = Cov(x(t + s1), x(t + s2))` is computed here from `R₀` and the
//! fundamental solution, by quadrature where no closed form exists.

mod covariance;
mod kernel;
mod sampler;
mod stability;

pub use covariance::{
    factorized_sigma2, r_slice_csv, r_t, sigma2_csv, sigma2_curve, wiener_closed_form,
    wiener_factor_image, wiener_factorized_sigma2, Sigma2Point, WienerClosedForm, QUAD_TOL,
};
pub use kernel::{CovKernel, Covariance, ScalarFn, TabulatedKernel};
pub use sampler::{sample_gaussian_history, GaussianSampler};
pub use stability::{hayes_stable, Stability, StabilityClass, BOUNDARY_TOL};

use crate::error::{check_range, Error, Result};
use crate::quadrature::simpson;

/// Longest horizon, in delays, at which the fundamental solution is trusted:
/// beyond it the alternating sum for `b < 0` loses all significant digits.
pub const MAX_HORIZON_DELAYS: f64 = 50.0;

/// Variances or determinants below this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearDdeParams {
    pub a: f64,
    pub b: f64,
    pub tau: f64,
}

impl LinearDdeParams {
    pub fn new(a: f64, b: f64, tau: f64) -> Result<Self> {
        let p = Self { a, b, tau };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("a", self.a, true, "finite")?;
        check_range("b", self.b, true, "finite")?;
        check_range("tau", self.tau, self.tau > 0.0, "tau > 0")
    }

    pub(crate) fn check_horizon(&self, t: f64) -> Result<()> {
        check_range(
            "t",
            t,
            t >= 0.0 && t <= MAX_HORIZON_DELAYS * self.tau,
            "0 <= t <= 50 tau",
        )
    }
}

/// The fundamental solution `X(t)`: zero before 0, `X(0) = 1`, and
/// `Σ_{k ≤ t/τ} b^k (t - kτ)^k e^{a(t - kτ)} / k!` afterwards.
pub fn fundamental_solution(p: &LinearDdeParams, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let kmax = (t / p.tau).floor() as usize;
    // Neumaier summation
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut ln_fact = 0.0;
    for k in 0..=kmax {
        let u = t - k as f64 * p.tau;
        let term = if k == 0 {
            (p.a * u).exp()
        } else {
            ln_fact += (k as f64).ln();
            if p.b == 0.0 || u <= 0.0 {
                0.0
            } else {
                // log-magnitude form keeps b^k u^k / k! from overflowing
                let mag = (k as f64 * (p.b.abs() * u).ln() - ln_fact + p.a * u).exp();
                if p.b < 0.0 && k % 2 == 1 {
                    -mag
                } else {
                    mag
                }
            }
        };
        let s = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - s) + term;
        } else {
            comp += (term - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

/// Law of `(x(t), x(t - τ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub t: f64,
    /// `Var x(t)`.
    pub sigma2_t: f64,
    /// `Var x(t - τ)`.
    pub sigma2_lag: f64,
    /// `R_t(-τ, 0) = Cov(x(t - τ), x(t))`.
    pub cross: f64,
}

impl GaussianState {
    pub fn from_kernel(kernel: &dyn Covariance, p: &LinearDdeParams, t: f64) -> Result<Self> {
        let tau = p.tau;
        Ok(Self {
            t,
            sigma2_t: r_t(kernel, p, t, 0.0, 0.0)?,
            sigma2_lag: r_t(kernel, p, t, -tau, -tau)?,
            cross: r_t(kernel, p, t, -tau, 0.0)?,
        })
    }

    /// Covariance matrix of `(x(t), x(t - τ))`.
    pub fn q(&self) -> [[f64; 2]; 2] {
        [[self.sigma2_t, self.cross], [self.cross, self.sigma2_lag]]
    }

    pub fn det(&self) -> f64 {
        self.sigma2_t * self.sigma2_lag - self.cross * self.cross
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            t: self.t,
            sigma2_t: c * self.sigma2_t,
            sigma2_lag: c * self.sigma2_lag,
            cross: c * self.cross,
        }
    }

    pub fn satisfies_cauchy_schwarz(&self) -> bool {
        self.cross.abs() <= (self.sigma2_t * self.sigma2_lag).max(0.0).sqrt() + 1e-10
            && self.det() >= -1e-10
    }
}

/// Density of `x(t)`.
pub fn marginal_density(state: &GaussianState, x: f64) -> Result<f64> {
    let s2 = state.sigma2_t;
    if !(s2 > DEGENERACY_TOL) {
        return Err(Error::DegenerateMeasure(format!("variance {s2:e} at t = {}", state.t)));
    }
    Ok((-x * x / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt())
}

/// Joint density of `x(t) = x` and `x(t - τ) = y`.
pub fn joint_density(state: &GaussianState, x: f64, y: f64) -> Result<f64> {
    let det = state.det();
    if !(state.sigma2_t > DEGENERACY_TOL) || !(det > DEGENERACY_TOL) {
        return Err(Error::DegenerateMeasure(format!(
            "covariance determinant {det:e} at t = {}; the law is concentrated on a line",
            state.t
        )));
    }
    let quad = state.sigma2_lag * x * x - 2.0 * state.cross * x * y + state.sigma2_t * y * y;
    Ok((-quad / (2.0 * det)).exp() / (2.0 * std::f64::consts::PI * det.sqrt()))
}

/// `|∫ y f(x, y) dy - (R / σ²) x f(x)|` with the integral done by quadrature.
pub fn conditional_mean_check(state: &GaussianState, x: f64) -> Result<f64> {
    let closed = state.cross / state.sigma2_t * x * marginal_density(state, x)?;
    joint_density(state, x, 0.0)?;
    let mean = state.cross / state.sigma2_t * x;
    let sd = (state.det() / state.sigma2_t).sqrt();
    let f = |y: f64| y * joint_density(state, x, y).unwrap_or(0.0);
    let num = simpson(f, mean - 12.0 * sd, mean + 12.0 * sd, 1e-10)?;
    Ok((num - closed).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fundamental_solution_values() {
        let p = LinearDdeParams::new(0.0, 1.0, 1.0).unwrap();
        assert_eq!(fundamental_solution(&p, 0.0), 1.0);
        assert_eq!(fundamental_solution(&p, -0.1), 0.0);
        assert!((fundamental_solution(&p, 2.0) - 2.0).abs() < 1e-15);
        let q = LinearDdeParams::new(-1.0, 0.0, 1.0).unwrap();
        assert!((fundamental_solution(&q, 3.0) - (-3.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn fundamental_solution_satisfies_equation() {
        let p = LinearDdeParams::new(-0.3, -1.2, 0.7).unwrap();
        let h = 1e-5;
        for &t in &[0.3, 1.1, 2.5, 4.9] {
            let d = (fundamental_solution(&p, t + h) - fundamental_solution(&p, t - h)) / (2.0 * h);
            let rhs = p.a * fundamental_solution(&p, t) + p.b * fundamental_solution(&p, t - p.tau);
            assert!((d - rhs).abs() < 1e-8, "t = {t}: {d} vs {rhs}");
        }
    }

    #[test]
    fn unit_normal_peak() {
        let s = GaussianState {
            t: 0.0,
            sigma2_t: 1.0,
            sigma2_lag: 1.0,
            cross: 0.0,
        };
        let f = marginal_density(&s, 0.0).unwrap();
        assert!((f - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        let j = joint_density(&s, 0.4, -0.7).unwrap();
        let prod = marginal_density(&s, 0.4).unwrap() * marginal_density(&s, -0.7).unwrap();
        assert!((j - prod).abs() < 1e-15);
        assert!(conditional_mean_check(&s, 0.8).unwrap() < 1e-12);
    }

    #[test]
    fn degenerate_states_rejected() {
        let s = GaussianState {
            t: 0.3,
            sigma2_t: 0.25,
            sigma2_lag: 1.0,
            cross: 0.5,
        };
        assert!(matches!(joint_density(&s, 0.0, 0.0), Err(Error::DegenerateMeasure(_))));
        let z = GaussianState { sigma2_t: 0.0, ..s };
        assert!(matches!(marginal_density(&z, 0.0), Err(Error::DegenerateMeasure(_))));
    }

    #[test]
    fn correlated_conditional_mean() {
        let s = GaussianState {
            t: 0.5,
            sigma2_t: 0.7,
            sigma2_lag: 0.5,
            cross: 0.375,
        };
        assert!(conditional_mean_check(&s, 0.3).unwrap() < 1e-8);
        assert!(conditional_mean_check(&s.scaled(4.0), 0.3).unwrap() < 1e-8);
    }
}
