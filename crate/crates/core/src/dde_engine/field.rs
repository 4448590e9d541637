use std::f64::consts::PI;

use super::noise::NoiseProcess;
use crate::error::{check_range, Result};

/// Largest state dimension of any system here.
pub const MAX_DIM: usize = 2;

pub type State = [f64; MAX_DIM];

/// Right-hand side of a delay equation with a single discrete delay.
pub trait DelayField: Send + Sync {
    fn name(&self) -> &'static str;

    /// Number of active state components.
    fn dim(&self) -> usize;

    fn tau(&self) -> f64;

    /// Derivative at time `t` given the current state, the state one delay
    /// back, and the current noise value.
    fn rhs(&self, t: f64, x: &State, delayed: &State, noise: f64) -> State;

    fn noise(&self) -> NoiseProcess {
        NoiseProcess::None
    }

    /// Whether the right-hand side is smooth in its arguments.
    fn is_smooth(&self) -> bool {
        true
    }

    fn validate(&self) -> Result<()>;
}

/// `x' = -α x + a x_τ` for `x_τ < 1/2`, `-α x + a (1 - x_τ)` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatDde {
    pub alpha: f64,
    pub a: f64,
    pub tau: f64,
}

/// `x' = -α x + [(a x_τ + b + ξ) mod 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeenerDde {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    pub tau: f64,
    pub noise: NoiseProcess,
}

/// `x' = v`, `v' = -γ v + A sin(2π β v(t - 1))` with `A = forcing` (1 in the
/// model; 0 switches the delayed forcing off).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrownianDde {
    pub gamma: f64,
    pub beta: f64,
    pub forcing: f64,
}

/// `x' = a x + b x(t - τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearDde {
    pub a: f64,
    pub b: f64,
    pub tau: f64,
}

impl DelayField for HatDde {
    fn name(&self) -> &'static str {
        "hat"
    }

    fn dim(&self) -> usize {
        1
    }

    fn tau(&self) -> f64 {
        self.tau
    }

    #[inline]
    fn rhs(&self, _t: f64, x: &State, d: &State, _noise: f64) -> State {
        let y = d[0];
        let s = if y < 0.5 { self.a * y } else { self.a * (1.0 - y) };
        [-self.alpha * x[0] + s, 0.0]
    }

    fn is_smooth(&self) -> bool {
        false
    }

    fn validate(&self) -> Result<()> {
        check_range("alpha", self.alpha, self.alpha > 0.0, "alpha > 0")?;
        check_range("a", self.a, self.a > 0.0, "a > 0")?;
        check_range("tau", self.tau, self.tau > 0.0, "tau > 0")
    }
}

impl DelayField for KeenerDde {
    fn name(&self) -> &'static str {
        "keener"
    }

    fn dim(&self) -> usize {
        1
    }

    fn tau(&self) -> f64 {
        self.tau
    }

    #[inline]
    fn rhs(&self, _t: f64, x: &State, d: &State, noise: f64) -> State {
        let s = (self.a * d[0] + self.b + noise).rem_euclid(1.0);
        [-self.alpha * x[0] + s, 0.0]
    }

    fn noise(&self) -> NoiseProcess {
        self.noise
    }

    fn is_smooth(&self) -> bool {
        false
    }

    fn validate(&self) -> Result<()> {
        check_range("alpha", self.alpha, self.alpha > 0.0, "alpha > 0")?;
        check_range("a", self.a, self.a > 0.0 && self.a < 1.0, "0 < a < 1")?;
        check_range("b", self.b, self.b > 0.0 && self.b < 1.0, "0 < b < 1")?;
        check_range("tau", self.tau, self.tau > 0.0, "tau > 0")?;
        if let NoiseProcess::PiecewiseConstantUniform {
            lo,
            hi,
            resample_interval,
        } = self.noise
        {
            check_range("noise_hi", hi, hi > lo, "noise_lo < noise_hi")?;
            check_range(
                "noise_interval",
                resample_interval,
                resample_interval > 0.0,
                "resample interval > 0",
            )?;
        }
        Ok(())
    }
}

impl DelayField for BrownianDde {
    fn name(&self) -> &'static str {
        "brownian"
    }

    fn dim(&self) -> usize {
        2
    }

    fn tau(&self) -> f64 {
        1.0
    }

    #[inline]
    fn rhs(&self, _t: f64, x: &State, d: &State, _noise: f64) -> State {
        let v = x[1];
        [
            v,
            -self.gamma * v + self.forcing * (2.0 * PI * self.beta * d[1]).sin(),
        ]
    }

    fn validate(&self) -> Result<()> {
        check_range("gamma", self.gamma, self.gamma > 0.0, "gamma > 0")?;
        check_range("beta", self.beta, self.beta > 0.0, "beta > 0")?;
        check_range("forcing", self.forcing, true, "finite")
    }
}

impl DelayField for LinearDde {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn dim(&self) -> usize {
        1
    }

    fn tau(&self) -> f64 {
        self.tau
    }

    #[inline]
    fn rhs(&self, _t: f64, x: &State, d: &State, _noise: f64) -> State {
        [self.a * x[0] + self.b * d[0], 0.0]
    }

    fn validate(&self) -> Result<()> {
        check_range("a", self.a, true, "finite")?;
        check_range("b", self.b, true, "finite")?;
        check_range("tau", self.tau, self.tau > 0.0, "tau > 0")
    }
}

/// The delay equations of the laboratory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DdeField {
    Hat(HatDde),
    Keener(KeenerDde),
    Brownian(BrownianDde),
    Linear(LinearDde),
}

impl DdeField {
    pub fn as_field(&self) -> &dyn DelayField {
        match self {
            DdeField::Hat(f) => f,
            DdeField::Keener(f) => f,
            DdeField::Brownian(f) => f,
            DdeField::Linear(f) => f,
        }
    }

    pub fn linear(a: f64, b: f64, tau: f64) -> Self {
        DdeField::Linear(LinearDde { a, b, tau })
    }
}

impl DelayField for DdeField {
    fn name(&self) -> &'static str {
        self.as_field().name()
    }

    fn dim(&self) -> usize {
        self.as_field().dim()
    }

    fn tau(&self) -> f64 {
        self.as_field().tau()
    }

    #[inline]
    fn rhs(&self, t: f64, x: &State, d: &State, noise: f64) -> State {
        match self {
            DdeField::Hat(f) => f.rhs(t, x, d, noise),
            DdeField::Keener(f) => f.rhs(t, x, d, noise),
            DdeField::Brownian(f) => f.rhs(t, x, d, noise),
            DdeField::Linear(f) => f.rhs(t, x, d, noise),
        }
    }

    fn noise(&self) -> NoiseProcess {
        self.as_field().noise()
    }

    fn is_smooth(&self) -> bool {
        self.as_field().is_smooth()
    }

    fn validate(&self) -> Result<()> {
        self.as_field().validate()
    }
}

/// Evaluates the right-hand side for `dim`-length state slices.
pub fn eval_field(
    field: &dyn DelayField,
    x: &[f64],
    x_delayed: &[f64],
    t: f64,
    noise_value: f64,
) -> Vec<f64> {
    let d = field.dim();
    let mut xs = [0.0; MAX_DIM];
    let mut ds = [0.0; MAX_DIM];
    xs[..d].copy_from_slice(&x[..d]);
    ds[..d].copy_from_slice(&x_delayed[..d]);
    field.rhs(t, &xs, &ds, noise_value)[..d].to_vec()
}
