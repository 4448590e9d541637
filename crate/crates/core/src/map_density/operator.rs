//! Exact cell-averaged transfer operators for piecewise-affine interval maps.
//!
//! Every map handled here is a finite union of affine branches, so the
//! preimage of a cell is a union of intervals with closed-form endpoints and
//! `Pf` on a cell is the integral of `f` over that union divided by the cell
//! width. The operator is assembled once as a sparse matrix.

use crate::grid::{overlap, GridDensity};

/// `y = slope * x + intercept` on `[x0, x1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineBranch {
    pub x0: f64,
    pub x1: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl AffineBranch {
    fn preimage(&self, y0: f64, y1: f64) -> Option<(f64, f64)> {
        let p = (y0 - self.intercept) / self.slope;
        let q = (y1 - self.intercept) / self.slope;
        let (p, q) = if p <= q { (p, q) } else { (q, p) };
        let l = p.max(self.x0);
        let r = q.min(self.x1);
        (r > l).then_some((l, r))
    }
}

/// A map of `[0, 1]` into itself built from affine branches whose domains
/// partition `[0, 1]`.
pub trait IntervalMap: Send + Sync {
    fn name(&self) -> &'static str;
    fn apply(&self, x: f64) -> f64;
    fn branches(&self) -> Vec<AffineBranch>;
}

/// Tent map `x -> a x` on `[0, 1/2)`, `a (1 - x)` on `[1/2, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hat {
    pub a: f64,
}

impl IntervalMap for Hat {
    fn name(&self) -> &'static str {
        "hat"
    }

    fn apply(&self, x: f64) -> f64 {
        if x < 0.5 {
            self.a * x
        } else {
            self.a * (1.0 - x)
        }
    }

    fn branches(&self) -> Vec<AffineBranch> {
        vec![
            AffineBranch {
                x0: 0.0,
                x1: 0.5,
                slope: self.a,
                intercept: 0.0,
            },
            AffineBranch {
                x0: 0.5,
                x1: 1.0,
                slope: -self.a,
                intercept: self.a,
            },
        ]
    }
}

/// Circle map `x -> (a x + b) mod 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keener {
    pub a: f64,
    pub b: f64,
}

impl IntervalMap for Keener {
    fn name(&self) -> &'static str {
        "keener"
    }

    fn apply(&self, x: f64) -> f64 {
        (self.a * x + self.b).rem_euclid(1.0)
    }

    fn branches(&self) -> Vec<AffineBranch> {
        // the bracket a x + b stays below 2 for 0 < a, b < 1
        let wrap = (1.0 - self.b) / self.a;
        let mut out = vec![AffineBranch {
            x0: 0.0,
            x1: wrap.min(1.0),
            slope: self.a,
            intercept: self.b,
        }];
        if wrap < 1.0 {
            out.push(AffineBranch {
                x0: wrap,
                x1: 1.0,
                slope: self.a,
                intercept: self.b - 1.0,
            });
        }
        out
    }
}

/// Sparse operator on cell values of an `n`-cell grid over `[0, 1]`.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    n: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
}

impl TransferMatrix {
    pub fn assemble(map: &dyn IntervalMap, n: usize) -> Self {
        let w = 1.0 / n as f64;
        let branches = map.branches();
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        row_start.push(0);
        for j in 0..n {
            let (y0, y1) = cell(j, n);
            for br in &branches {
                let Some((p, q)) = br.preimage(y0, y1) else {
                    continue;
                };
                let first = ((p / w).floor() as usize).min(n - 1);
                let last = ((q / w).ceil() as usize).clamp(first + 1, n);
                for i in first..last {
                    let (l, r) = cell(i, n);
                    let len = overlap(l, r, p, q);
                    if len > 0.0 {
                        cols.push(i);
                        weights.push(len / w);
                    }
                }
            }
            row_start.push(cols.len());
        }
        Self {
            n,
            row_start,
            cols,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Applies the operator to arbitrary (possibly signed) cell values.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.n, "grid size mismatch");
        (0..self.n)
            .map(|j| {
                let (s, e) = (self.row_start[j], self.row_start[j + 1]);
                self.cols[s..e]
                    .iter()
                    .zip(&self.weights[s..e])
                    .map(|(&i, &w)| w * values[i])
                    .sum()
            })
            .collect()
    }
}

fn cell(i: usize, n: usize) -> (f64, f64) {
    let w = 1.0 / n as f64;
    let r = if i + 1 == n { 1.0 } else { (i + 1) as f64 * w };
    (i as f64 * w, r)
}

/// Antiderivative of the tent `max(0, w - |x|)`.
fn tent_integral(x: f64, w: f64) -> f64 {
    if x <= -w {
        0.0
    } else if x <= 0.0 {
        0.5 * (x + w) * (x + w)
    } else if x < w {
        w * w - 0.5 * (w - x) * (w - x)
    } else {
        w * w
    }
}

/// Circular (mod 1) convolution with a piecewise-constant noise density,
/// reduced to a kernel over cell offsets on the target grid.
#[derive(Debug, Clone)]
pub struct CircularConvolution {
    n: usize,
    /// (offset, weight) pairs; result_j = Σ w · g_{(j - offset) mod n}
    taps: Vec<(isize, f64)>,
}

impl CircularConvolution {
    pub fn new(noise: &GridDensity, n: usize) -> Self {
        let w = 1.0 / n as f64;
        let nw = noise.width();
        let d_min = (noise.lo() / w).floor() as isize - 1;
        let d_max = (noise.hi() / w).ceil() as isize + 1;
        let mut taps = Vec::new();
        for d in d_min..=d_max {
            let a = d as f64 * w;
            let mut acc = 0.0;
            for (k, &nk) in noise.values().iter().enumerate() {
                if nk == 0.0 {
                    continue;
                }
                let s0 = noise.lo() + k as f64 * nw;
                let s1 = s0 + nw;
                if s1 <= a - w || s0 >= a + w {
                    continue;
                }
                acc += nk * (tent_integral(s1 - a, w) - tent_integral(s0 - a, w));
            }
            if acc != 0.0 {
                taps.push((d, acc / w));
            }
        }
        Self { n, taps }
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.n, "grid size mismatch");
        let n = self.n as isize;
        (0..n)
            .map(|j| {
                self.taps
                    .iter()
                    .map(|&(d, wt)| wt * values[(j - d).rem_euclid(n) as usize])
                    .sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hat_branches_partition_unit_interval() {
        let b = Hat { a: 1.7 }.branches();
        assert_eq!(b[0].x0, 0.0);
        assert_eq!(b[0].x1, b[1].x0);
        assert_eq!(b[1].x1, 1.0);
    }

    #[test]
    fn keener_branch_images_cover_circle() {
        let k = Keener { a: 0.5, b: 0.7 };
        let b = k.branches();
        assert_eq!(b.len(), 2);
        assert!((b[0].x1 - 0.6).abs() < 1e-15);
        for x in [0.0, 0.3, 0.59, 0.61, 0.99] {
            let br = b.iter().find(|br| x >= br.x0 && x < br.x1).unwrap();
            assert!((br.slope * x + br.intercept - k.apply(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn column_sums_preserve_mass() {
        let m = TransferMatrix::assemble(&Hat { a: 1.37 }, 257);
        let mut col = vec![0.0; 257];
        for j in 0..257 {
            for k in m.row_start[j]..m.row_start[j + 1] {
                col[m.cols[k]] += m.weights[k];
            }
        }
        for c in col {
            assert!((c - 1.0).abs() < 1e-12, "{c}");
        }
    }

    #[test]
    fn tent_integral_total() {
        assert!((tent_integral(10.0, 0.25) - 0.0625).abs() < 1e-16);
        assert!((tent_integral(0.0, 0.25) - 0.03125).abs() < 1e-16);
    }

    #[test]
    fn convolution_taps_sum_to_one() {
        let noise = GridDensity::uniform(0.0, 0.2, 37).unwrap();
        let c = CircularConvolution::new(&noise, 100);
        let s: f64 = c.taps.iter().map(|t| t.1).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}
