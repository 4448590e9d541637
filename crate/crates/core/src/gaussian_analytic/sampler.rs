use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::kernel::CovKernel;
use crate::dde_engine::History;
use crate::error::{check_range, Error, Result};

/// Draws Gaussian initial functions on the `m + 1` nodes of `[-τ, 0]`.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    kernel: CovKernel,
    m: usize,
    tau: f64,
    chol: Option<Cholesky<f64, Dyn>>,
}

impl GaussianSampler {
    pub fn new(kernel: CovKernel, m: usize, tau: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidHistory(format!("need m >= 2 intervals, got {m}")));
        }
        check_range("tau", tau, tau > 0.0, "tau > 0")?;
        if let Some(kt) = kernel.tau() {
            if (kt - tau).abs() > 1e-12 * tau {
                return Err(Error::OutOfRange {
                    name: "tau",
                    value: tau,
                    expected: "the delay the kernel was built for",
                });
            }
        }
        let chol = match &kernel {
            CovKernel::Tabulated(_) => {
                let mut g = kernel.gram(tau, m + 1);
                for i in 0..=m {
                    g[(i, i)] += 1e-12;
                }
                Some(Cholesky::new(g).ok_or(Error::KernelNotPsd)?)
            }
            _ => None,
        };
        Ok(Self { kernel, m, tau, chol })
    }

    fn node(&self, i: usize) -> f64 {
        -self.tau + self.tau * i as f64 / self.m as f64
    }

    /// Node values of one draw.
    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.m + 1;
        match &self.kernel {
            CovKernel::Cosine => {
                let u: f64 = 1.0 - rng.random::<f64>();
                let zeta = (-2.0 * u.ln()).sqrt();
                let theta = 2.0 * PI * rng.random::<f64>();
                (0..n).map(|i| zeta * (self.node(i) - theta).cos()).collect()
            }
            CovKernel::CosineDegenerate => {
                let z: f64 = rng.sample(StandardNormal);
                (0..n).map(|i| z * self.node(i).cos()).collect()
            }
            CovKernel::BrownianMinPlusTau { .. } => {
                let sd = (self.tau / self.m as f64).sqrt();
                let mut w = 0.0;
                let mut out = Vec::with_capacity(n);
                out.push(0.0);
                for _ in 1..n {
                    w += sd * rng.sample::<f64, _>(StandardNormal);
                    out.push(w);
                }
                out
            }
            CovKernel::UvProduct { u, v, .. } => {
                // v(s) W(u(s) / v(s))
                let mut w = 0.0;
                let mut g_prev = 0.0;
                (0..n)
                    .map(|i| {
                        let s = self.node(i);
                        let g = u(s) / v(s);
                        let z: f64 = rng.sample(StandardNormal);
                        w += (g - g_prev).max(0.0).sqrt() * z;
                        g_prev = g;
                        v(s) * w
                    })
                    .collect()
            }
            CovKernel::Tabulated(_) => {
                let l = self.chol.as_ref().expect("factor built for tabulated kernels").l();
                let z = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
                (l * z).iter().copied().collect()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<History> {
        History::scalar(self.tau, &self.sample_values(rng))
    }

    pub fn kernel(&self) -> &CovKernel {
        &self.kernel
    }

    /// Empirical covariance check helper: the kernel on the sampling grid.
    pub fn gram(&self) -> DMatrix<f64> {
        self.kernel.gram(self.tau, self.m + 1)
    }
}

/// One history drawn with a generator seeded from `seed`.
pub fn sample_gaussian_history(kernel: &CovKernel, m: usize, tau: f64, seed: u64) -> Result<History> {
    let s = GaussianSampler::new(kernel.clone(), m, tau)?;
    s.sample(&mut ChaCha8Rng::seed_from_u64(seed))
}
