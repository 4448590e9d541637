use super::MapSpec;
use crate::error::Result;
use crate::grid::GridDensity;

/// Default L¹ tolerance for cycle detection.
pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_BURN_IN: usize = 200;
pub const DEFAULT_MAX_PERIOD: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodReport {
    pub period: Option<usize>,
    pub burn_in: usize,
    /// Largest L¹(f_{k+r}, f_k) over the verification window of the reported
    /// period, or of the best candidate when no period was accepted.
    pub cycle_distance: f64,
    /// One cycle of densities after burn-in (empty when no period).
    pub basis_snapshots: Vec<GridDensity>,
}

/// Iterates `burn_in` steps, then returns the smallest `r <= max_period`
/// such that `L¹(f_{k+r}, f_k) <= tol` for every `k` in a window of `2r`
/// steps.
pub fn detect_asymptotic_period(
    map: &MapSpec,
    f0: &GridDensity,
    burn_in: usize,
    max_period: usize,
    tol: f64,
) -> Result<PeriodReport> {
    let op = map.evolution(f0.len())?;
    let mut f = f0.clone();
    for _ in 0..burn_in {
        f = op.step(&f)?;
    }
    let max_period = max_period.max(1);
    let mut seq = Vec::with_capacity(3 * max_period);
    seq.push(f);
    let mut best = (f64::INFINITY, None);
    for r in 1..=max_period {
        while seq.len() < 3 * r {
            let next = op.step(seq.last().expect("non-empty"))?;
            seq.push(next);
        }
        let worst = (0..2 * r)
            .map(|k| seq[k + r].l1_distance(&seq[k]))
            .fold(0.0, f64::max);
        if worst <= tol {
            return Ok(PeriodReport {
                period: Some(r),
                burn_in,
                cycle_distance: worst,
                basis_snapshots: seq[..r].to_vec(),
            });
        }
        if worst < best.0 {
            best = (worst, Some(r));
        }
    }
    Ok(PeriodReport {
        period: None,
        burn_in,
        cycle_distance: best.0,
        basis_snapshots: Vec::new(),
    })
}
