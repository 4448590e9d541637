use std::sync::Arc;

use ddlab_core::dde_engine::{DdeField, HatDde, KeenerDde, NoiseProcess};
use ddlab_core::gaussian_analytic::{CovKernel, TabulatedKernel};
use ddlab_core::map_density::MapSpec;
use ddlab_core::GridDensity;

use crate::config::{key, Default::*, KeySpec, Ty::*};
use crate::registry::Family;
use crate::run::RunError;

const HAT_MAP: &[KeySpec] = &[key("params", "a", Float, Required)];
const KEENER_MAP: &[KeySpec] = &[
    key("params", "a", Float, Required),
    key("params", "b", Float, Required),
];
const NOISY_KEENER_MAP: &[KeySpec] = &[
    key("params", "a", Float, Required),
    key("params", "b", Float, Required),
    key("params", "noise_lo", Float, Value("0.0")),
    key("params", "noise_hi", Float, Required),
];
const DENSITY_HAT_MAP: &[KeySpec] = &[
    key("params", "window_start", Float, Required),
    key("params", "delta", Float, Required),
];

pub fn maps() -> Family<MapSpec> {
    let mut f = Family::new("map");
    f.register_fn("hat", HAT_MAP, |p| Ok(MapSpec::Hat { a: p.f64("a") }));
    f.register_fn("keener", KEENER_MAP, |p| {
        Ok(MapSpec::Keener {
            a: p.f64("a"),
            b: p.f64("b"),
        })
    });
    f.register_fn("noisy-keener", NOISY_KEENER_MAP, |p| {
        let cells = p.get("cells").map(|_| p.usize("cells")).unwrap_or(ddlab_core::map_density::DEFAULT_CELLS);
        let noise = GridDensity::indicator(0.0, 1.0, cells, p.f64("noise_lo"), p.f64("noise_hi"))?;
        Ok(MapSpec::NoisyKeener {
            a: p.f64("a"),
            b: p.f64("b"),
            noise,
        })
    });
    f.register_fn("density-hat", DENSITY_HAT_MAP, |p| {
        Ok(MapSpec::DensityDependentHat {
            window_start: p.f64("window_start"),
            delta: p.f64("delta"),
        })
    });
    f
}

const HAT_DDE: &[KeySpec] = &[
    key("params", "alpha", Float, Required),
    key("params", "a", Float, Required),
];
const KEENER_DDE: &[KeySpec] = &[
    key("params", "alpha", Float, Required),
    key("params", "a", Float, Required),
    key("params", "b", Float, Required),
    key("params", "noise_lo", Float, Value("0.0")),
    key("params", "noise_hi", Float, Value("0.0")),
    // defaults to one value per delay
    key("params", "noise_interval", Float, Optional),
];

/// Delay systems driven by scalar initial functions. Every member reads
/// `tau` from the kind's own keys.
pub fn systems() -> Family<DdeField> {
    let mut f = Family::new("system");
    f.register_fn("hat", HAT_DDE, |p| {
        Ok(DdeField::Hat(HatDde {
            alpha: p.f64("alpha"),
            a: p.f64("a"),
            tau: p.f64("tau"),
        }))
    });
    f.register_fn("keener", KEENER_DDE, |p| {
        let tau = p.f64("tau");
        let (lo, hi) = (p.f64("noise_lo"), p.f64("noise_hi"));
        let noise = if lo == 0.0 && hi == 0.0 {
            NoiseProcess::None
        } else {
            NoiseProcess::PiecewiseConstantUniform {
                lo,
                hi,
                resample_interval: p.opt_f64("noise_interval").unwrap_or(tau),
            }
        };
        Ok(DdeField::Keener(KeenerDde {
            alpha: p.f64("alpha"),
            a: p.f64("a"),
            b: p.f64("b"),
            tau,
            noise,
        }))
    });
    f
}

const NO_KEYS: &[KeySpec] = &[];
const EXPONENTIAL: &[KeySpec] = &[key("params", "length", Float, Value("1.0"))];
const TABULATED: &[KeySpec] = &[key("params", "kernel_file", Str, Required)];

/// Initial covariance kernels. Members read `tau` from the kind's keys.
pub fn kernels() -> Family<CovKernel> {
    let mut f = Family::new("kernel");
    f.register_fn("cosine", NO_KEYS, |_| Ok(CovKernel::Cosine));
    f.register_fn("cosine-degenerate", NO_KEYS, |_| Ok(CovKernel::CosineDegenerate));
    f.register_fn("brownian", NO_KEYS, |p| {
        Ok(CovKernel::BrownianMinPlusTau { tau: p.f64("tau") })
    });
    // sinh((s1 + τ)/ℓ) e^{-(s2 + τ)/ℓ} for s1 <= s2: half the covariance of an
    // Ornstein–Uhlenbeck path started at 0 at s = -τ
    f.register_fn("pinned-ou", EXPONENTIAL, |p| {
        let (tau, l) = (p.f64("tau"), p.f64("length"));
        if !(l > 0.0 && l.is_finite()) {
            return Err(RunError::invalid(format!("`length` = {l} must be positive")));
        }
        Ok(CovKernel::UvProduct {
            tau,
            u: Arc::new(move |s| ((s + tau) / l).sinh()),
            v: Arc::new(move |s| (-(s + tau) / l).exp()),
        })
    });
    f.register_fn("tabulated", TABULATED, |p| {
        let path = p.str("kernel_file");
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Io(format!("{path}: {e}")))?;
        let k = TabulatedKernel::from_csv(&text)?;
        let tau = p.f64("tau");
        if (k.tau() - tau).abs() > 1e-12 * tau {
            return Err(RunError::invalid(format!(
                "kernel file covers tau = {}, config has tau = {tau}",
                k.tau()
            )));
        }
        Ok(CovKernel::Tabulated(k))
    });
    f
}
