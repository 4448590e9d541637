//! Frobenius–Perron iteration for one-dimensional maps on a uniform grid.
//!
//! Densities live on `[0, 1]`. Operators are assembled by exact
//! preimage-interval overlap, so mass and positivity are preserved up to
//! rounding. The density-dependent hat map is nonlinear: its slope is
//! recomputed from the current density before every step.

mod operator;
mod period;

pub use operator::{AffineBranch, CircularConvolution, Hat, IntervalMap, Keener, TransferMatrix};
pub use period::{
    detect_asymptotic_period, PeriodReport, DEFAULT_BURN_IN, DEFAULT_MAX_PERIOD, DEFAULT_TOL,
};

use crate::error::{check_range, Error, Result};
use crate::grid::GridDensity;

/// Default number of cells.
pub const DEFAULT_CELLS: usize = 4096;

/// A map whose density evolution can be iterated.
#[derive(Debug, Clone, PartialEq)]
pub enum MapSpec {
    Hat { a: f64 },
    Keener { a: f64, b: f64 },
    NoisyKeener { a: f64, b: f64, noise: GridDensity },
    DensityDependentHat { window_start: f64, delta: f64 },
}

impl MapSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MapSpec::Hat { .. } => "hat",
            MapSpec::Keener { .. } => "keener",
            MapSpec::NoisyKeener { .. } => "noisy-keener",
            MapSpec::DensityDependentHat { .. } => "density-hat",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MapSpec::Hat { a } => check_range("a", *a, *a > 0.0 && *a <= 2.0, "0 < a <= 2"),
            MapSpec::Keener { a, b } => check_keener(*a, *b),
            MapSpec::NoisyKeener { a, b, noise } => {
                check_keener(*a, *b)?;
                check_noise(noise)
            }
            MapSpec::DensityDependentHat {
                window_start,
                delta,
            } => check_window(*window_start, *delta),
        }
    }

    /// Builds the evolution operator for densities on an `n`-cell grid.
    pub fn evolution(&self, n: usize) -> Result<Box<dyn DensityEvolution>> {
        self.validate()?;
        Ok(match self {
            MapSpec::Hat { a } => Box::new(LinearEvolution::new(&Hat { a: *a }, n, None)),
            MapSpec::Keener { a, b } => {
                Box::new(LinearEvolution::new(&Keener { a: *a, b: *b }, n, None))
            }
            MapSpec::NoisyKeener { a, b, noise } => Box::new(LinearEvolution::new(
                &Keener { a: *a, b: *b },
                n,
                Some(noise),
            )),
            MapSpec::DensityDependentHat {
                window_start,
                delta,
            } => Box::new(DensityDependentHat {
                window_start: *window_start,
                delta: *delta,
            }),
        })
    }
}

impl MapSpec {
    /// The pointwise map `x -> S(x)` (the noise-free part for noisy maps);
    /// `None` for the density-dependent hat, whose slope depends on a density.
    pub fn point_map(&self) -> Option<Box<dyn IntervalMap>> {
        match self {
            MapSpec::Hat { a } => Some(Box::new(Hat { a: *a })),
            MapSpec::Keener { a, b } | MapSpec::NoisyKeener { a, b, .. } => {
                Some(Box::new(Keener { a: *a, b: *b }))
            }
            MapSpec::DensityDependentHat { .. } => None,
        }
    }

    /// The transfer operator as a linear map on signed cell values.
    pub fn linear_evolution(&self, n: usize) -> Result<LinearEvolution> {
        self.validate()?;
        match self {
            MapSpec::Hat { a } => Ok(LinearEvolution::new(&Hat { a: *a }, n, None)),
            MapSpec::Keener { a, b } => Ok(LinearEvolution::new(&Keener { a: *a, b: *b }, n, None)),
            MapSpec::NoisyKeener { a, b, noise } => Ok(LinearEvolution::new(
                &Keener { a: *a, b: *b },
                n,
                Some(noise),
            )),
            MapSpec::DensityDependentHat { .. } => Err(Error::InvalidGrid(
                "the density-dependent hat map has no linear transfer operator".into(),
            )),
        }
    }
}

/// One step of density evolution on a fixed grid.
pub trait DensityEvolution: Send + Sync {
    fn step(&self, f: &GridDensity) -> Result<GridDensity>;

    /// `true` when `step` extends linearly to signed functions.
    fn is_linear(&self) -> bool;
}

/// Pushforward under a piecewise-affine map, optionally followed by
/// circular convolution with an additive noise density.
pub struct LinearEvolution {
    matrix: TransferMatrix,
    noise: Option<CircularConvolution>,
}

impl LinearEvolution {
    pub fn new(map: &dyn IntervalMap, n: usize, noise: Option<&GridDensity>) -> Self {
        Self {
            matrix: TransferMatrix::assemble(map, n),
            noise: noise.map(|g| CircularConvolution::new(g, n)),
        }
    }

    /// Applies the operator to signed cell values.
    pub fn apply_values(&self, values: &[f64]) -> Vec<f64> {
        let pushed = self.matrix.apply(values);
        match &self.noise {
            Some(c) => c.apply(&pushed),
            None => pushed,
        }
    }
}

impl DensityEvolution for LinearEvolution {
    fn step(&self, f: &GridDensity) -> Result<GridDensity> {
        check_unit(f)?;
        if f.len() != self.matrix.len() {
            return Err(Error::InvalidGrid(format!(
                "operator built for {} cells, density has {}",
                self.matrix.len(),
                f.len()
            )));
        }
        GridDensity::new(0.0, 1.0, clamp_rounding(self.apply_values(f.values())))
    }

    fn is_linear(&self) -> bool {
        true
    }
}

struct DensityDependentHat {
    window_start: f64,
    delta: f64,
}

impl DensityEvolution for DensityDependentHat {
    fn step(&self, f: &GridDensity) -> Result<GridDensity> {
        pseudo_fp_hat(f, self.window_start, self.delta)
    }

    fn is_linear(&self) -> bool {
        false
    }
}

// sums of non-negative terms cannot go negative; this only strips -0.0
fn clamp_rounding(mut v: Vec<f64>) -> Vec<f64> {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
    v
}

fn check_unit(f: &GridDensity) -> Result<()> {
    if f.lo() != 0.0 || f.hi() != 1.0 {
        return Err(Error::DomainMismatch {
            expected_lo: 0.0,
            expected_hi: 1.0,
            lo: f.lo(),
            hi: f.hi(),
        });
    }
    Ok(())
}

fn check_keener(a: f64, b: f64) -> Result<()> {
    check_range("a", a, a > 0.0 && a < 1.0, "0 < a < 1")?;
    check_range("b", b, b > 0.0 && b < 1.0, "0 < b < 1")
}

fn check_noise(noise: &GridDensity) -> Result<()> {
    if noise.lo() != 0.0 || noise.hi() > 1.0 {
        return Err(Error::DomainMismatch {
            expected_lo: 0.0,
            expected_hi: 1.0,
            lo: noise.lo(),
            hi: noise.hi(),
        });
    }
    noise.check_normalized()
}

fn check_window(start: f64, delta: f64) -> Result<()> {
    check_range("A", start, start >= 0.0, "A >= 0")?;
    check_range("delta", delta, delta >= 0.0, "delta >= 0")?;
    check_range(
        "A + delta",
        start + delta,
        start + delta <= 1.0,
        "[A, A + delta] inside [0, 1]",
    )
}

/// Hat-map transfer operator `Pf(x) = (f(x/a) + f(1 - x/a)) / a` for `1 < a <= 2`.
pub fn fp_hat(f: &GridDensity, a: f64) -> Result<GridDensity> {
    check_unit(f)?;
    check_range("a", a, a > 1.0 && a <= 2.0, "1 < a <= 2")?;
    LinearEvolution::new(&Hat { a }, f.len(), None).step(f)
}

/// Transfer operator of `x -> (a x + b) mod 1`, followed by circular
/// convolution with `noise` when given (the noise is added inside the mod).
pub fn fp_keener(
    f: &GridDensity,
    a: f64,
    b: f64,
    noise: Option<&GridDensity>,
) -> Result<GridDensity> {
    check_unit(f)?;
    check_keener(a, b)?;
    if let Some(g) = noise {
        check_noise(g)?;
    }
    LinearEvolution::new(&Keener { a, b }, f.len(), noise).step(f)
}

/// `1 + ∫_A^{A+δ} f`, exact on the grid.
pub fn a_functional(f: &GridDensity, window_start: f64, delta: f64) -> Result<f64> {
    check_unit(f)?;
    check_window(window_start, delta)?;
    Ok(1.0 + f.integrate(window_start, window_start + delta))
}

/// Nonlinear evolution of the density-dependent hat map: the hat operator with
/// slope `a[f]`, whose image `[0, a[f]/2]` carries the indicator factor.
pub fn pseudo_fp_hat(f: &GridDensity, window_start: f64, delta: f64) -> Result<GridDensity> {
    let a = a_functional(f, window_start, delta)?;
    // mass outside [0, 1] from rounding in a[f] would break the map's range
    let a = a.min(2.0);
    LinearEvolution::new(&Hat { a }, f.len(), None).step(f)
}
