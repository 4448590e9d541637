//! Numerical laboratory for density evolution under delayed dynamics.
//!
//! * [`map_density`]: transfer-operator iteration for one-dimensional maps.
//! * [`dde_engine`]: fixed-step method-of-steps integration of delay equations.
//! * [`ensemble_lab`]: ensembles of initial functions and histogram estimates.
//! * [`gaussian_analytic`]: exact propagation of Gaussian initial measures
//!   under the linear delay equation `x' = a x + b x(t - τ)`.
//! * [`kicked_dynamics`]: velocity kicks driven by a chaotic map.

pub mod dde_engine;
pub mod ensemble_lab;
pub mod error;
pub mod gaussian_analytic;
pub mod grid;
pub mod kicked_dynamics;
pub mod map_density;
pub mod quadrature;

pub use error::{Error, Result};
pub use grid::GridDensity;
