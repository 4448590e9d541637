use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Bounded additive perturbation entering a delay equation.
///
/// A realization is a right-continuous piecewise-constant path, constant on
/// `[k T, (k+1) T)` for the resample interval `T`, with i.i.d. values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseProcess {
    None,
    PiecewiseConstantUniform {
        lo: f64,
        hi: f64,
        resample_interval: f64,
    },
}

impl NoiseProcess {
    pub fn is_none(&self) -> bool {
        matches!(self, NoiseProcess::None)
    }

    /// Deterministic realization for `(seed, stream)`.
    pub fn path(&self, seed: u64, stream: u64) -> NoisePath {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        NoisePath {
            process: *self,
            rng,
            segment: None,
            value: 0.0,
        }
    }

    /// The first `n` segment values of the realization for `(seed, stream)`.
    pub fn segments(&self, seed: u64, stream: u64, n: usize) -> Vec<f64> {
        let mut p = self.path(seed, stream);
        (0..n as u64).map(|k| p.segment_value(k)).collect()
    }
}

/// A realization consumed forward in time.
#[derive(Debug, Clone)]
pub struct NoisePath {
    process: NoiseProcess,
    rng: ChaCha8Rng,
    segment: Option<u64>,
    value: f64,
}

impl NoisePath {
    /// Value at time `t >= 0`. Times must be visited in non-decreasing order.
    pub fn value_at(&mut self, t: f64) -> f64 {
        match self.process {
            NoiseProcess::None => 0.0,
            NoiseProcess::PiecewiseConstantUniform {
                resample_interval, ..
            } => self.segment_value((t / resample_interval).floor().max(0.0) as u64),
        }
    }

    fn segment_value(&mut self, k: u64) -> f64 {
        let NoiseProcess::PiecewiseConstantUniform { lo, hi, .. } = self.process else {
            return 0.0;
        };
        let start = match self.segment {
            Some(s) if s == k => return self.value,
            Some(s) => {
                assert!(k > s, "noise path must be consumed forward in time");
                s + 1
            }
            None => 0,
        };
        for _ in start..=k {
            self.value = lo + (hi - lo) * self.rng.random::<f64>();
        }
        self.segment = Some(k);
        self.value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const U: NoiseProcess = NoiseProcess::PiecewiseConstantUniform {
        lo: 0.0,
        hi: 0.2,
        resample_interval: 1.0,
    };

    #[test]
    fn same_seed_same_path() {
        assert_eq!(U.segments(7, 3, 100), U.segments(7, 3, 100));
        assert_ne!(U.segments(7, 3, 100), U.segments(7, 4, 100));
    }

    #[test]
    fn constant_within_segment() {
        let mut p = U.path(1, 0);
        let a = p.value_at(2.0);
        let b = p.value_at(2.999);
        let c = p.value_at(3.0);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(c, U.segments(1, 0, 4)[3]);
    }

    #[test]
    fn values_in_support() {
        assert!(U.segments(9, 0, 1000).iter().all(|v| (0.0..0.2).contains(v)));
    }

    #[test]
    fn none_is_zero() {
        let mut p = NoiseProcess::None.path(0, 0);
        assert_eq!(p.value_at(5.0), 0.0);
    }
}
