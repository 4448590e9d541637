use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Counts over `bins` equal bins of `[lo, hi]`. Values outside the range are
/// clamped into the edge bins and tallied in `clamped`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    clamped: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "histogram needs lo < hi and at least one bin, got [{lo}, {hi}] with {bins}"
            )));
        }
        Ok(Self {
            lo,
            hi,
            counts: vec![0; bins],
            clamped: 0,
        })
    }

    pub fn from_samples(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        let mut h = Self::new(lo, hi, bins)?;
        for &x in samples {
            h.push(x);
        }
        Ok(h)
    }

    /// Range spanning the samples; a zero-width range is widened slightly so
    /// that a point mass falls into one interior bin.
    pub fn auto_range(samples: &[f64]) -> Result<(f64, f64)> {
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InsufficientData("no finite samples to bin".into()));
        }
        if hi - lo <= 1e-12 * lo.abs().max(1.0) {
            let pad = 1e-9 * lo.abs().max(1.0);
            return Ok((lo - pad, hi + pad));
        }
        Ok((lo, hi))
    }

    pub(crate) fn bin_of(&self, x: f64) -> (usize, bool) {
        let b = self.counts.len();
        let pos = (x - self.lo) / (self.hi - self.lo) * b as f64;
        if !(pos >= 0.0) {
            (0, x != self.lo)
        } else if pos >= b as f64 {
            (b - 1, x > self.hi)
        } else {
            (pos as usize, false)
        }
    }

    pub fn push(&mut self, x: f64) {
        let (i, out) = self.bin_of(x);
        self.counts[i] += 1;
        self.clamped += out as u64;
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn clamped(&self) -> u64 {
        self.clamped
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        (self.lo + i as f64 * w, self.lo + (i + 1) as f64 * w)
    }

    /// `counts / (n · width)`.
    pub fn densities(&self) -> Vec<f64> {
        let n = self.n().max(1) as f64;
        let w = self.width();
        self.counts.iter().map(|&c| c as f64 / (n * w)).collect()
    }

    pub fn occupied(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// L¹ distance between the two histogram densities; both must share bins.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        debug_assert!(self.lo == other.lo && self.hi == other.hi && self.bins() == other.bins());
        let w = self.width();
        self.densities()
            .iter()
            .zip(other.densities())
            .map(|(a, b)| (a - b).abs() * w)
            .sum()
    }

    /// Rows `t,bin_left,bin_right,density`.
    pub fn write_rows(&self, t: f64, out: &mut String) {
        for (i, d) in self.densities().iter().enumerate() {
            let (l, r) = self.edges(i);
            let _ = writeln!(out, "{t:.16e},{l:.16e},{r:.16e},{d:.16e}");
        }
    }
}

/// Two-dimensional counterpart of [`Histogram`], bins indexed `[ix * ny + iy]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2D {
    x: Histogram,
    y: Histogram,
    counts: Vec<u64>,
}

impl Histogram2D {
    pub fn new(x: (f64, f64, usize), y: (f64, f64, usize)) -> Result<Self> {
        let xh = Histogram::new(x.0, x.1, x.2)?;
        let yh = Histogram::new(y.0, y.1, y.2)?;
        Ok(Self {
            counts: vec![0; x.2 * y.2],
            x: xh,
            y: yh,
        })
    }

    pub fn push(&mut self, x: f64, y: f64) {
        let (i, _) = self.x.bin_of(x);
        let (j, _) = self.y.bin_of(y);
        self.counts[i * self.y.bins() + j] += 1;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts summed over `y`, on the `x` bins.
    pub fn x_marginal_counts(&self) -> Vec<u64> {
        self.counts.chunks(self.y.bins()).map(|r| r.iter().sum()).collect()
    }

    /// Rows `t,x_left,x_right,y_left,y_right,density`.
    pub fn write_rows(&self, t: f64, out: &mut String) {
        let n = self.n().max(1) as f64;
        let area = self.x.width() * self.y.width();
        for i in 0..self.x.bins() {
            let (xl, xr) = self.x.edges(i);
            for j in 0..self.y.bins() {
                let (yl, yr) = self.y.edges(j);
                let d = self.counts[i * self.y.bins() + j] as f64 / (n * area);
                let _ = writeln!(out, "{t:.16e},{xl:.16e},{xr:.16e},{yl:.16e},{yr:.16e},{d:.16e}");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn densities_integrate_to_one() {
        let h = Histogram::from_samples(&[0.1, 0.2, 0.25, 0.9, 1.5], 0.0, 1.0, 10).unwrap();
        assert_eq!(h.n(), 5);
        assert_eq!(h.clamped(), 1);
        let mass: f64 = h.densities().iter().map(|d| d * h.width()).sum();
        assert!((mass - 1.0).abs() < 1e-15);
    }

    #[test]
    fn point_mass_single_bin() {
        let s = [0.3678; 4];
        let (lo, hi) = Histogram::auto_range(&s).unwrap();
        let h = Histogram::from_samples(&s, lo, hi, 100).unwrap();
        assert_eq!(h.occupied(), 1);
        assert_eq!(h.clamped(), 0);
    }

    #[test]
    fn upper_edge_is_inside() {
        let h = Histogram::from_samples(&[1.0], 0.0, 1.0, 4).unwrap();
        assert_eq!(h.counts(), &[0, 0, 0, 1]);
        assert_eq!(h.clamped(), 0);
    }
}
