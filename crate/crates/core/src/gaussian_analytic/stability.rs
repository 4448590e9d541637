use std::f64::consts::{FRAC_PI_2, PI};

use super::LinearDdeParams;
use crate::error::Result;

/// Margins within this distance of zero are reported as [`Stability::Boundary`].
pub const BOUNDARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityClass {
    pub verdict: Stability,
    /// `1 - aτ`, `-(bτ + aτ)` and `bτ + aτ cos κ + κ sin κ`; all positive
    /// exactly when every characteristic root has negative real part.
    pub margins: [f64; 3],
    pub kappa: f64,
}

/// Classifies `x' = a x + b x(t - τ)` by the classical three-inequality test.
///
/// `κ` solves `κ = aτ tan κ` in `(0, π)`. No such root exists for `aτ ≥ 1`,
/// where the first margin already fails; `κ` is then reported as its limit 0.
pub fn hayes_stable(p: &LinearDdeParams) -> Result<StabilityClass> {
    p.validate()?;
    let at = p.a * p.tau;
    let bt = p.b * p.tau;
    let kappa = kappa_root(at);
    let margins = [
        1.0 - at,
        -(bt + at),
        bt + at * kappa.cos() + kappa * kappa.sin(),
    ];
    let verdict = if margins.iter().any(|&m| m < -BOUNDARY_TOL) {
        Stability::Unstable
    } else if margins.iter().any(|&m| m.abs() <= BOUNDARY_TOL) {
        Stability::Boundary
    } else {
        Stability::Stable
    };
    Ok(StabilityClass {
        verdict,
        margins,
        kappa,
    })
}

fn kappa_root(at: f64) -> f64 {
    if at == 0.0 {
        return FRAC_PI_2;
    }
    if at >= 1.0 {
        return 0.0;
    }
    // κ cos κ - aτ sin κ has the same roots without the pole of tan at π/2
    let g = |k: f64| k * k.cos() - at * k.sin();
    let (mut lo, mut hi) = if at > 0.0 { (1e-9, FRAC_PI_2) } else { (FRAC_PI_2, PI) };
    if g(lo) <= 0.0 {
        return lo;
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
