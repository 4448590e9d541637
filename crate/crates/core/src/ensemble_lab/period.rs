use super::{DensitySnapshot, Histogram};

/// Acceptance threshold on the mean L¹ distance at the period.
pub const DEFAULT_PERIOD_TOL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPeriod {
    /// Period in snapshot steps.
    pub lag: usize,
    /// `lag · dt`.
    pub period: f64,
    /// Mean L¹ distance between snapshots one period apart.
    pub distance: f64,
    /// Mean of the same distance over the shorter lags.
    pub mismatch: f64,
}

/// Smallest lag `k ≥ 2` at which snapshots repeat: mean L¹ distance below
/// `tol` and below half the mean distance at lags `1..k`. Only lags leaving
/// at least three periods in the sequence are tried. A sequence that already
/// repeats at lag 1 is stationary and reported as `None`.
pub fn detect_period_in(hists: &[Histogram], dt: f64, tol: f64) -> Option<DensityPeriod> {
    let n = hists.len();
    if n < 7 {
        return None;
    }
    let kmax = (n - 1) / 3;
    let dist = |k: usize| -> f64 {
        let pairs = n - k;
        (0..pairs).map(|i| hists[i].l1_distance(&hists[i + k])).sum::<f64>() / pairs as f64
    };
    let d: Vec<f64> = (0..=kmax).map(|k| if k == 0 { 0.0 } else { dist(k) }).collect();
    if d[1] < tol {
        return None;
    }
    (2..=kmax).find_map(|k| {
        let mismatch = d[1..k].iter().sum::<f64>() / (k - 1) as f64;
        (d[k] < tol && d[k] < 0.5 * mismatch).then_some(DensityPeriod {
            lag: k,
            period: k as f64 * dt,
            distance: d[k],
            mismatch,
        })
    })
}

pub fn detect_density_period(snapshots: &[DensitySnapshot], dt: f64, tol: f64) -> Option<DensityPeriod> {
    let hists: Vec<Histogram> = snapshots.iter().map(|s| s.marginal.clone()).collect();
    detect_period_in(&hists, dt, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(samples: &[f64]) -> Histogram {
        Histogram::from_samples(samples, 0.0, 1.0, 10).unwrap()
    }

    #[test]
    fn alternating_pair() {
        let a = hist(&[0.05, 0.15]);
        let b = hist(&[0.85, 0.95]);
        let seq: Vec<Histogram> = (0..12).map(|i| if i % 2 == 0 { a.clone() } else { b.clone() }).collect();
        let p = detect_period_in(&seq, 0.1, DEFAULT_PERIOD_TOL).unwrap();
        assert_eq!(p.lag, 2);
        assert!((p.period - 0.2).abs() < 1e-15);
    }

    #[test]
    fn stationary_has_no_period() {
        let a = hist(&[0.5]);
        assert_eq!(detect_period_in(&vec![a; 12], 0.1, DEFAULT_PERIOD_TOL), None);
    }

    #[test]
    fn three_cycle() {
        let hs = [hist(&[0.05]), hist(&[0.45]), hist(&[0.85])];
        let seq: Vec<Histogram> = (0..15).map(|i| hs[i % 3].clone()).collect();
        assert_eq!(detect_period_in(&seq, 1.0, DEFAULT_PERIOD_TOL).unwrap().lag, 3);
    }
}
