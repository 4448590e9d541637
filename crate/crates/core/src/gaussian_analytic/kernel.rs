use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// A covariance function `R(s1, s2)` on `[-τ, 0]²`.
pub trait Covariance: Send + Sync {
    fn name(&self) -> &'static str;

    fn eval(&self, s1: f64, s2: f64) -> f64;

    /// Points where `r -> R(r, other)` fails to be smooth.
    fn breakpoints(&self, _other: f64) -> Vec<f64> {
        Vec::new()
    }

    /// Sorted nodes between which `r -> R(r, other)` is affine for every
    /// `other`, when there are finitely many.
    fn affine_nodes(&self) -> Option<Vec<f64>> {
        None
    }

    /// Square-integrable factor `η_r(s)` with `R(s1, s2) = ∫ η_r(s1) η_r(s2) dr`,
    /// when the kernel has a known one.
    fn factor(&self, _r: f64, _s: f64) -> Option<f64> {
        None
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Initial covariance kernels.
#[derive(Clone)]
pub enum CovKernel {
    /// `cos(s2 - s1)`: the stationary random-phase cosine.
    Cosine,
    /// `cos s1 cos s2`: a Gaussian amplitude times a fixed cosine.
    CosineDegenerate,
    /// `min(s1, s2) + τ`: a Wiener path started at `s = -τ`.
    BrownianMinPlusTau { tau: f64 },
    /// `u(min) v(max)` with `u(-τ) = 0`, `v > 0` and `u / v` non-decreasing.
    UvProduct { tau: f64, u: ScalarFn, v: ScalarFn },
    /// Node values on a uniform `n × n` grid over `[-τ, 0]²`, bilinear between.
    Tabulated(TabulatedKernel),
}

impl fmt::Debug for CovKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovKernel::Cosine => write!(f, "Cosine"),
            CovKernel::CosineDegenerate => write!(f, "CosineDegenerate"),
            CovKernel::BrownianMinPlusTau { tau } => write!(f, "BrownianMinPlusTau {{ tau: {tau} }}"),
            CovKernel::UvProduct { tau, .. } => write!(f, "UvProduct {{ tau: {tau}, .. }}"),
            CovKernel::Tabulated(t) => write!(f, "Tabulated {{ tau: {}, n: {} }}", t.tau, t.n),
        }
    }
}

impl Covariance for CovKernel {
    fn name(&self) -> &'static str {
        match self {
            CovKernel::Cosine => "cosine",
            CovKernel::CosineDegenerate => "cosine-degenerate",
            CovKernel::BrownianMinPlusTau { .. } => "brownian",
            CovKernel::UvProduct { .. } => "uv",
            CovKernel::Tabulated(_) => "tabulated",
        }
    }

    #[inline]
    fn eval(&self, s1: f64, s2: f64) -> f64 {
        match self {
            CovKernel::Cosine => (s2 - s1).cos(),
            CovKernel::CosineDegenerate => s1.cos() * s2.cos(),
            CovKernel::BrownianMinPlusTau { tau } => s1.min(s2) + tau,
            CovKernel::UvProduct { u, v, .. } => {
                let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
                u(lo) * v(hi)
            }
            CovKernel::Tabulated(t) => t.eval(s1, s2),
        }
    }

    fn breakpoints(&self, other: f64) -> Vec<f64> {
        match self {
            CovKernel::BrownianMinPlusTau { .. } | CovKernel::UvProduct { .. } => vec![other],
            CovKernel::Tabulated(t) => (0..t.n).map(|i| t.node(i)).collect(),
            _ => Vec::new(),
        }
    }

    fn affine_nodes(&self) -> Option<Vec<f64>> {
        match self {
            CovKernel::Tabulated(t) => Some((0..t.n).map(|i| t.node(i)).collect()),
            _ => None,
        }
    }

    fn factor(&self, r: f64, s: f64) -> Option<f64> {
        match self {
            CovKernel::BrownianMinPlusTau { .. } => Some(if r <= s { 1.0 } else { 0.0 }),
            CovKernel::UvProduct { tau, u, v } => {
                if r > s {
                    return Some(0.0);
                }
                // W(g(s)) = ∫_{-τ}^{s} sqrt(g'(r)) dB(r) for g = u / v
                let g = |x: f64| u(x) / v(x);
                let h = 1e-6 * tau;
                let lo = (r - h).max(-tau);
                let hi = (r + h).min(0.0);
                let dg = (g(hi) - g(lo)) / (hi - lo);
                Some(v(s) * dg.max(0.0).sqrt())
            }
            _ => None,
        }
    }
}

impl CovKernel {
    /// Delay interval the kernel is tied to, if any.
    pub fn tau(&self) -> Option<f64> {
        match self {
            CovKernel::BrownianMinPlusTau { tau } | CovKernel::UvProduct { tau, .. } => Some(*tau),
            CovKernel::Tabulated(t) => Some(t.tau),
            _ => None,
        }
    }

    /// Gram matrix on `k` equally spaced nodes of `[-τ, 0]`.
    pub fn gram(&self, tau: f64, k: usize) -> DMatrix<f64> {
        let s = |i: usize| -tau + tau * i as f64 / (k - 1) as f64;
        DMatrix::from_fn(k, k, |i, j| self.eval(s(i), s(j)))
    }

    /// Symmetry within 1e-12 and smallest Gram eigenvalue >= -1e-8 on a
    /// `k × k` test grid.
    pub fn check(&self, tau: f64, k: usize) -> Result<()> {
        let g = self.gram(tau, k.max(2));
        for i in 0..g.nrows() {
            for j in 0..i {
                if (g[(i, j)] - g[(j, i)]).abs() > 1e-12 {
                    return Err(Error::KernelNotPsd);
                }
            }
        }
        let min = SymmetricEigen::new(g)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < -1e-8 {
            return Err(Error::KernelNotPsd);
        }
        Ok(())
    }
}

/// Covariance given by node values on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    tau: f64,
    n: usize,
    values: Vec<f64>,
}

impl TabulatedKernel {
    /// `values[i * n + j] = R(s_i, s_j)` with `s_i = -τ + i τ / (n - 1)`.
    pub fn new(tau: f64, n: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 || values.len() != n * n {
            return Err(Error::InvalidGrid(format!(
                "tabulated kernel needs n >= 2 and n² values, got n = {n}, {} values",
                values.len()
            )));
        }
        if !(tau > 0.0) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("tabulated kernel has bad entries".into()));
        }
        Ok(Self { tau, n, values })
    }

    pub fn from_fn(tau: f64, n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let s = |i: usize| -tau + tau * i as f64 / (n - 1) as f64;
        let values = (0..n * n).map(|k| f(s(k / n), s(k % n))).collect();
        Self::new(tau, n, values)
    }

    /// Parses the `s1,s2,R` CSV. Rows may come in any order but must cover a
    /// full uniform grid.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line == "s1,s2,R") {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> = cols.iter().map(|c| c.parse()).collect();
            match parsed {
                Ok(v) if v.len() == 3 => rows.push((v[0], v[1], v[2])),
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("expected `s1,s2,R`, got `{line}`"),
                    })
                }
            }
        }
        let n = (rows.len() as f64).sqrt().round() as usize;
        if n < 2 || n * n != rows.len() {
            return Err(Error::InvalidGrid(format!(
                "{} rows do not form a square grid",
                rows.len()
            )));
        }
        let lo = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
        if hi.abs() > 1e-12 {
            return Err(Error::InvalidGrid("tabulated grid must end at s = 0".into()));
        }
        let tau = -lo;
        let step = tau / (n - 1) as f64;
        let idx = |s: f64| ((s + tau) / step).round() as usize;
        let mut values = vec![f64::NAN; n * n];
        for (s1, s2, r) in rows {
            let (i, j) = (idx(s1), idx(s2));
            if i >= n || j >= n {
                return Err(Error::InvalidGrid(format!("node ({s1}, {s2}) off the grid")));
            }
            values[i * n + j] = r;
        }
        Self::new(tau, n, values)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s1,s2,R\n");
        for i in 0..self.n {
            for j in 0..self.n {
                out.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e}\n",
                    self.node(i),
                    self.node(j),
                    self.values[i * self.n + j]
                ));
            }
        }
        out
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn node(&self, i: usize) -> f64 {
        -self.tau + self.tau * i as f64 / (self.n - 1) as f64
    }

    fn eval(&self, s1: f64, s2: f64) -> f64 {
        let step = self.tau / (self.n - 1) as f64;
        let locate = |s: f64| {
            let x = ((s + self.tau) / step).clamp(0.0, (self.n - 1) as f64);
            let i = (x.floor() as usize).min(self.n - 2);
            (i, x - i as f64)
        };
        let (i, fx) = locate(s1);
        let (j, fy) = locate(s2);
        let v = |a: usize, b: usize| self.values[a * self.n + b];
        (1.0 - fx) * ((1.0 - fy) * v(i, j) + fy * v(i, j + 1))
            + fx * ((1.0 - fy) * v(i + 1, j) + fy * v(i + 1, j + 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_kernels_are_psd() {
        let tau = 1.0;
        for k in [
            CovKernel::Cosine,
            CovKernel::CosineDegenerate,
            CovKernel::BrownianMinPlusTau { tau },
        ] {
            k.check(tau, 16).unwrap();
        }
    }

    #[test]
    fn indefinite_table_rejected() {
        let t = TabulatedKernel::from_fn(1.0, 4, |a, b| if a == b { 0.0 } else { 1.0 }).unwrap();
        assert_eq!(CovKernel::Tabulated(t).check(1.0, 8), Err(Error::KernelNotPsd));
    }

    #[test]
    fn tabulated_reproduces_nodes_and_round_trips() {
        let k = CovKernel::BrownianMinPlusTau { tau: 2.0 };
        let t = TabulatedKernel::from_fn(2.0, 9, |a, b| k.eval(a, b)).unwrap();
        assert!((t.eval(-1.5, -0.25) - k.eval(-1.5, -0.25)).abs() < 1e-15);
        let back = TabulatedKernel::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn brownian_factor_reproduces_kernel() {
        let k = CovKernel::BrownianMinPlusTau { tau: 1.0 };
        let (s1, s2) = (-0.7, -0.2);
        let n = 20000;
        let h = 1.0 / n as f64;
        let sum: f64 = (0..n)
            .map(|i| {
                let r = -1.0 + (i as f64 + 0.5) * h;
                k.factor(r, s1).unwrap() * k.factor(r, s2).unwrap() * h
            })
            .sum();
        assert!((sum - k.eval(s1, s2)).abs() < 1e-9);
    }
}
