//! Numerical laboratory for a divergence-free checkerboard-mixing vector field
//! on the flat 2-torus.
//!
//! The crate provides four layers:
//!
//! * [`torus`] — geometry of `T² = R²/Z²`, continuous sampled paths, and the
//!   path transforms (stopping, head reversal, time reversal) used by the
//!   statistical analyses.
//! * [`field`] and [`flow`] — the dyadically rescaled rotor field, its exact
//!   measure-preserving Lagrangian flow in closed form, and the transported
//!   black/white checkerboard densities.
//! * [`sde`] — Monte Carlo integration of `dX = b(t, X) dt + ν dW` on the
//!   torus with a counter-based deterministic RNG, reproducible bit-for-bit
//!   across thread counts.
//! * [`stats`] and [`diagnostics`] — empirical measures, circular Wasserstein
//!   distances, chi-square uniformity tests, grid disintegrations, and the
//!   path-regularity seminorms used to probe the small-noise limit.

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod flow;
pub mod rng;
pub mod sde;
pub mod stats;
pub mod torus;

pub use error::{Error, Result};
pub use field::{cell_at, CellAddress, CheckerboardDensity, DepauwField, Stage};
pub use flow::{integral_curve, loop_advance, FlowQuery};
pub use rng::CounterRng;
pub use sde::{simulate, DriftField, Integrator, InitialLaw, PathEnsemble, SdeConfig, ZeroDrift};
pub use stats::EmpiricalMeasure;
pub use torus::{torus_dist, Path, TorusPoint};
