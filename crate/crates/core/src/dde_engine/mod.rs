//! Fixed-step method-of-steps integration of delay differential equations.
//!
//! The step is locked to `h = τ / m`, so the delayed argument of every
//! Runge–Kutta stage falls either on a stored node (stages 1 and 4) or on the
//! midpoint between two nodes (stages 2 and 3). Midpoint values come from a
//! four-point Lagrange stencil that never straddles a multiple of `τ`: the
//! solution of a delay equation is only piecewise smooth across those points,
//! and the history may jump at `t = 0`.
//!
//! Past nodes live in a ring buffer of `m + 4` states, which is all an
//! explicit step needs.

mod field;
mod noise;

pub use field::{
    eval_field, BrownianDde, DdeField, DelayField, HatDde, KeenerDde, LinearDde, State, MAX_DIM,
};
pub use noise::{NoisePath, NoiseProcess};

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Sample density used for ensemble runs (`h = τ / 128`).
pub const ENSEMBLE_STEPS_PER_DELAY: usize = 128;
/// Sample density used for analytic cross-validation (`h = τ / 512`).
pub const ACCURATE_STEPS_PER_DELAY: usize = 512;

/// A sampled initial function on `[-τ, 0]`.
///
/// The sample at `s = 0` is the left limit of the history; the state the
/// solution starts from is stored separately as `present`, which allows the
/// jump initial datum of the fundamental solution.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    tau: f64,
    dim: usize,
    samples: Vec<State>,
    present: State,
    t_now: f64,
}

impl History {
    /// `samples` are `m + 1` states at `s = -τ + i τ/m`.
    pub fn new(tau: f64, dim: usize, samples: Vec<State>) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidHistory(format!("delay must be positive, got {tau}")));
        }
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidHistory(format!("unsupported dimension {dim}")));
        }
        if samples.len() < 3 {
            return Err(Error::InvalidHistory(format!(
                "need at least 3 samples (m >= 2), got {}",
                samples.len()
            )));
        }
        if samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidHistory("non-finite sample".into()));
        }
        let present = *samples.last().expect("non-empty");
        Ok(Self {
            tau,
            dim,
            samples,
            present,
            t_now: 0.0,
        })
    }

    /// Scalar history from `m + 1` node values.
    pub fn scalar(tau: f64, values: &[f64]) -> Result<Self> {
        Self::new(tau, 1, values.iter().map(|&v| [v, 0.0]).collect())
    }

    /// Samples `f` on the `m + 1` nodes of `[-τ, 0]`.
    pub fn from_fn(tau: f64, m: usize, dim: usize, f: impl Fn(f64) -> State) -> Result<Self> {
        let h = tau / m as f64;
        let samples = (0..=m)
            .map(|i| if i == m { f(0.0) } else { f(-tau + i as f64 * h) })
            .collect();
        Self::new(tau, dim, samples)
    }

    /// Replaces the starting state `x(0)`, leaving the history samples alone.
    pub fn with_present(mut self, present: State) -> Self {
        self.present = present;
        self
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn m(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn step(&self) -> f64 {
        self.tau / self.m() as f64
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[State] {
        &self.samples
    }

    pub fn present(&self) -> State {
        self.present
    }

    pub fn t_now(&self) -> f64 {
        self.t_now
    }
}

/// Uniformly spaced solution states starting at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub step: f64,
    pub dim: usize,
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.step
    }

    /// First component at node `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.states[i][0]
    }

    /// Node nearest to time `t`.
    pub fn at(&self, t: f64) -> State {
        let i = ((t - self.t0) / self.step).round() as usize;
        self.states[i.min(self.states.len() - 1)]
    }

    /// CSV with header `t,x` (or `t,x,v` for two-component systems).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(if self.dim == 2 { "t,x,v\n" } else { "t,x\n" });
        for (i, s) in self.states.iter().enumerate() {
            let t = self.time(i);
            if self.dim == 2 {
                let _ = writeln!(out, "{t:.16e},{:.16e},{:.16e}", s[0], s[1]);
            } else {
                let _ = writeln!(out, "{t:.16e},{:.16e}", s[0]);
            }
        }
        out
    }
}

// Lagrange weights at half-integer points of a 4-node stencil, indexed by the
// position of the left neighbour of the query inside the stencil.
const CUBIC_MID: [[f64; 4]; 3] = [
    [5.0 / 16.0, 15.0 / 16.0, -5.0 / 16.0, 1.0 / 16.0],
    [-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0],
    [1.0 / 16.0, -5.0 / 16.0, 15.0 / 16.0, 5.0 / 16.0],
];
const QUADRATIC_MID: [[f64; 3]; 2] = [[3.0 / 8.0, 3.0 / 4.0, -1.0 / 8.0], [-1.0 / 8.0, 3.0 / 4.0, 3.0 / 8.0]];

/// Explicit RK4 stepper for one trajectory.
pub struct Integrator<'a, F: DelayField + ?Sized> {
    field: &'a F,
    m: i64,
    h: f64,
    t0: f64,
    ring: Vec<State>,
    n: i64,
    tip: State,
    noise: NoisePath,
}

impl<'a, F: DelayField + ?Sized> Integrator<'a, F> {
    /// The noise realization is the `stream`-th stream of `seed`.
    pub fn new(field: &'a F, history: &History, seed: u64, stream: u64) -> Result<Self> {
        field.validate()?;
        if (history.tau() - field.tau()).abs() > 1e-12 * field.tau() {
            return Err(Error::InvalidHistory(format!(
                "history covers a delay of {}, the equation needs {}",
                history.tau(),
                field.tau()
            )));
        }
        if history.dim() != field.dim() {
            return Err(Error::InvalidHistory(format!(
                "history has dimension {}, the equation needs {}",
                history.dim(),
                field.dim()
            )));
        }
        let m = history.m();
        let mut ring = vec![[0.0; MAX_DIM]; m + 4];
        let cap = ring.len();
        for (i, s) in history.samples().iter().enumerate() {
            ring[i % cap] = *s;
        }
        ring[m % cap] = history.present();
        Ok(Self {
            field,
            m: m as i64,
            h: history.step(),
            t0: history.t_now(),
            ring,
            n: 0,
            tip: history.samples()[m],
            noise: field.noise().path(seed, stream),
        })
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn steps_taken(&self) -> usize {
        self.n as usize
    }

    pub fn time(&self) -> f64 {
        self.t0 + self.n as f64 * self.h
    }

    pub fn state(&self) -> State {
        self.node(self.n, 0)
    }

    /// State one delay back, `x(t - τ)`.
    pub fn lagged(&self) -> State {
        let k = self.n - self.m;
        self.node(k, k.div_euclid(self.m))
    }

    #[inline]
    fn node(&self, k: i64, piece: i64) -> State {
        if k == 0 && piece < 0 {
            self.tip
        } else {
            self.ring[((k + self.m) as usize) % self.ring.len()]
        }
    }

    #[inline]
    fn midpoint(&self, c: i64, piece: i64) -> State {
        let lo = piece * self.m;
        let hi = lo + self.m;
        let mut out = [0.0; MAX_DIM];
        if self.m >= 3 {
            let start = (c - 1).clamp(lo, hi - 3);
            let w = &CUBIC_MID[(c - start) as usize];
            for (i, wi) in w.iter().enumerate() {
                let s = self.node(start + i as i64, piece);
                for d in 0..MAX_DIM {
                    out[d] += wi * s[d];
                }
            }
        } else {
            let w = &QUADRATIC_MID[(c - lo) as usize];
            for (i, wi) in w.iter().enumerate() {
                let s = self.node(lo + i as i64, piece);
                for d in 0..MAX_DIM {
                    out[d] += wi * s[d];
                }
            }
        }
        out
    }

    /// Advances one step of size `h`.
    pub fn advance(&mut self) -> Result<State> {
        let c = self.n - self.m;
        let piece = c.div_euclid(self.m);
        let d0 = self.node(c, piece);
        let d1 = self.node(c + 1, piece);
        let dm = self.midpoint(c, piece);

        let h = self.h;
        let t = self.time();
        // the noise is constant on each step: the step lies inside one segment
        // whenever the resample interval is a multiple of h
        let xi = self.noise.value_at(t + 0.5 * h);
        let x = self.state();
        let f = self.field;
        let k1 = f.rhs(t, &x, &d0, xi);
        let k2 = f.rhs(t + 0.5 * h, &axpy(&x, 0.5 * h, &k1), &dm, xi);
        let k3 = f.rhs(t + 0.5 * h, &axpy(&x, 0.5 * h, &k2), &dm, xi);
        let k4 = f.rhs(t + h, &axpy(&x, h, &k3), &d1, xi);
        let mut next = [0.0; MAX_DIM];
        for d in 0..MAX_DIM {
            next[d] = x[d] + h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
        }
        self.n += 1;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                t: self.time(),
                trajectory: None,
            });
        }
        let cap = self.ring.len();
        self.ring[((self.n + self.m) as usize) % cap] = next;
        Ok(next)
    }
}

#[inline]
fn axpy(x: &State, a: f64, y: &State) -> State {
    let mut out = *x;
    for d in 0..MAX_DIM {
        out[d] += a * y[d];
    }
    out
}

/// Number of whole steps of size `h` in `span`, if `span` is a multiple of `h`.
pub fn steps_in(span: f64, h: f64) -> Result<usize> {
    let n = (span / h).round();
    if n < 0.0 || (n * h - span).abs() > 1e-9 * span.abs().max(1.0) {
        return Err(Error::OutOfRange {
            name: "T",
            value: span,
            expected: "a non-negative multiple of the step",
        });
    }
    Ok(n as usize)
}

/// Integrates from the history over `[0, T]` and records every node.
pub fn integrate(
    field: &dyn DelayField,
    initial: &History,
    t_end: f64,
    seed: u64,
) -> Result<Trajectory> {
    let mut it = Integrator::new(field, initial, seed, 0)?;
    let n = steps_in(t_end, it.step_size())?;
    let mut states = Vec::with_capacity(n + 1);
    states.push(it.state());
    for _ in 0..n {
        states.push(it.advance()?);
    }
    Ok(Trajectory {
        t0: initial.t_now(),
        step: it.step_size(),
        dim: field.dim(),
        states,
    })
}

/// Like [`integrate`], but keeps only every `every`-th node and draws noise
/// from stream `stream` of `seed`.
pub fn integrate_sampled(
    field: &dyn DelayField,
    initial: &History,
    t_end: f64,
    every: usize,
    seed: u64,
    stream: u64,
) -> Result<Trajectory> {
    let every = every.max(1);
    let mut it = Integrator::new(field, initial, seed, stream)?;
    let n = steps_in(t_end, it.step_size())?;
    let mut states = Vec::with_capacity(n / every + 1);
    states.push(it.state());
    for i in 1..=n {
        let s = it.advance()?;
        if i % every == 0 {
            states.push(s);
        }
    }
    Ok(Trajectory {
        t0: initial.t_now(),
        step: it.step_size() * every as f64,
        dim: field.dim(),
        states,
    })
}

/// Richardson estimate of the observed order from runs with `m`, `2m` and
/// `4m` steps per delay, comparing the first component at `t_end`.
pub fn convergence_order(
    field: &dyn DelayField,
    history: &dyn Fn(f64) -> State,
    m: usize,
    t_end: f64,
) -> Result<f64> {
    let run = |k: usize| -> Result<f64> {
        let h = History::from_fn(field.tau(), k, field.dim(), history)?;
        let traj = integrate(field, &h, t_end, 0)?;
        Ok(traj.states.last().expect("non-empty")[0])
    };
    let (a, b, c) = (run(m)?, run(2 * m)?, run(4 * m)?);
    Ok(((a - b).abs() / (b - c).abs()).log2())
}
