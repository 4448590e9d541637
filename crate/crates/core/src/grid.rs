//! Piecewise-constant densities on a uniform partition of an interval.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Normalization tolerance on the Riemann sum.
pub const MASS_TOL: f64 = 1e-9;

/// Cell-average density values on `N` equal cells of `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
}

impl GridDensity {
    /// Builds a density, rejecting malformed grids and negative values.
    /// The values are taken as-is; call [`GridDensity::normalized`] to rescale.
    pub fn new(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidGrid(format!("need lo < hi, got [{lo}, {hi}]")));
        }
        if values.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidGrid(format!(
                "density values must be finite and non-negative, found {v}"
            )));
        }
        Ok(Self { lo, hi, values })
    }

    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(lo, hi, vec![1.0 / (hi - lo); n])
    }

    /// Normalized indicator of `[a, b]`, exact cell averages (partial cells
    /// get their overlap fraction).
    pub fn indicator(lo: f64, hi: f64, n: usize, a: f64, b: f64) -> Result<Self> {
        let g = Self::new(lo, hi, vec![0.0; n.max(2)])?;
        let (a, b) = (a.max(lo), b.min(hi));
        if b <= a {
            return Err(Error::InvalidGrid(format!(
                "indicator window [{a}, {b}] has no overlap with [{lo}, {hi}]"
            )));
        }
        let w = g.width();
        let values = (0..n)
            .map(|i| {
                let (l, r) = g.cell(i);
                overlap(l, r, a, b) / w / (b - a)
            })
            .collect();
        Self::new(lo, hi, values)
    }

    /// Samples a non-negative function at cell midpoints and normalizes.
    pub fn from_fn(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let w = (hi - lo) / n as f64;
        let values = (0..n).map(|i| f(lo + (i as f64 + 0.5) * w)).collect();
        Self::new(lo, hi, values)?.normalized()
    }

    /// Strictly positive random density: i.i.d. cell values uniform on
    /// `[0.05, 1.05)`, normalized. Deterministic in `seed`.
    pub fn random_positive(lo: f64, hi: f64, n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
        Self::new(lo, hi, values)?.normalized()
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.values.len() as f64
    }

    pub fn cell(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        let l = self.lo + i as f64 * w;
        let r = if i + 1 == self.values.len() {
            self.hi
        } else {
            self.lo + (i + 1) as f64 * w
        };
        (l, r)
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.width()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let m = self.mass();
        if !(m > 0.0) {
            return Err(Error::NotNormalized { mass: m });
        }
        self.values.iter_mut().for_each(|v| *v /= m);
        Ok(self)
    }

    pub fn check_normalized(&self) -> Result<()> {
        let m = self.mass();
        if (m - 1.0).abs() > MASS_TOL {
            return Err(Error::NotNormalized { mass: m });
        }
        Ok(())
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.len() == other.len()
    }

    /// L¹ distance between two densities on the same grid.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        assert!(self.same_grid(other), "L1 distance needs identical grids");
        l1(&self.values, &other.values, self.width())
    }

    /// Exact integral over `[a, b]` with partial cells weighted by the
    /// covered fraction.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        integrate_cells(&self.values, self.lo, self.hi, a, b)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_left,x_right,density\n");
        for (i, v) in self.values.iter().enumerate() {
            let (l, r) = self.cell(i);
            let _ = writeln!(out, "{l:.16e},{r:.16e},{v:.16e}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == "x_left,x_right,density" => {}
            Some((i, h)) => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected header `x_left,x_right,density`, got `{h}`"),
                })
            }
            None => {
                return Err(Error::Parse {
                    line: 1,
                    message: "empty input".into(),
                })
            }
        }
        let mut lo = None;
        let mut hi = 0.0;
        let mut values = Vec::new();
        for (i, line) in lines {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected 3 columns, got {}", cols.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    message: format!("`{s}`: {e}"),
                })
            };
            let (l, r, v) = (parse(cols[0])?, parse(cols[1])?, parse(cols[2])?);
            lo.get_or_insert(l);
            hi = r;
            values.push(v);
        }
        let lo = lo.ok_or(Error::Parse {
            line: 2,
            message: "no cells".into(),
        })?;
        Self::new(lo, hi, values)
    }
}

pub(crate) fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

pub(crate) fn l1(a: &[f64], b: &[f64], width: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * width
}

/// ∫_a^b of a piecewise-constant function given by cell values on `[lo, hi]`.
pub(crate) fn integrate_cells(values: &[f64], lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    let n = values.len();
    let w = (hi - lo) / n as f64;
    let (a, b) = (a.max(lo), b.min(hi));
    if b <= a {
        return 0.0;
    }
    let first = (((a - lo) / w).floor() as usize).min(n - 1);
    let last = (((b - lo) / w).ceil() as usize).min(n);
    let mut sum = 0.0;
    for (i, v) in values.iter().enumerate().take(last).skip(first) {
        let l = lo + i as f64 * w;
        let r = if i + 1 == n { hi } else { lo + (i + 1) as f64 * w };
        sum += v * overlap(l, r, a, b);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridDensity::new(1.0, 0.0, vec![1.0, 1.0]).is_err());
        assert!(GridDensity::new(0.0, 1.0, vec![1.0]).is_err());
        assert!(GridDensity::new(0.0, 1.0, vec![1.0, -0.5]).is_err());
        assert!(GridDensity::new(0.0, 1.0, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn indicator_partial_cells() {
        let f = GridDensity::indicator(0.0, 1.0, 4, 0.1, 0.6).unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-15);
        assert!((f.values()[0] - 0.6 * 2.0).abs() < 1e-12);
        assert!((f.values()[2] - 0.4 * 2.0).abs() < 1e-12);
        assert_eq!(f.values()[3], 0.0);
    }

    #[test]
    fn integrate_partial_window() {
        let f = GridDensity::uniform(0.0, 1.0, 10).unwrap();
        assert!((f.integrate(0.05, 0.55) - 0.5).abs() < 1e-15);
        assert_eq!(f.integrate(0.3, 0.3), 0.0);
        assert!((f.integrate(-1.0, 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let f = GridDensity::from_fn(0.0, 1.0, 7, |x| 1.0 + (3.0 * x).sin().powi(2)).unwrap();
        let g = GridDensity::from_csv(&f.to_csv()).unwrap();
        assert_eq!(f.values(), g.values());
        assert_eq!(f.lo(), g.lo());
        assert_eq!(f.hi(), g.hi());
    }

    #[test]
    fn csv_bad_header() {
        let e = GridDensity::from_csv("a,b,c\n0,1,1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }
}
