//! Pseudospectral solver suite for the pseudo-relativistic Hartree equation
//! with an attractive Coulomb interaction and a repulsive long-range Riesz
//! perturbation, on a periodic 3D box:
//!
//! ```text
//! i dpsi/dt = sqrt(-lap + m^2) psi + beta (|x|^-alpha * |psi|^2) psi
//!             - (|x|^-1 * |psi|^2) psi,       0 < alpha < 1.
//! ```
//!
//! The crate computes constrained ground states of the associated energy by
//! normalized gradient flow, the scale-invariant interpolation-inequality
//! optimizer `Q` (hence the critical mass `N_c`), time evolution by Strang
//! splitting with conservation monitors, and the small-`beta` scaling and
//! concentration diagnostics of the ground-state family.
//!
//! See the `examples/` directory for one runnable demonstration per major
//! capability, and the `boson-star` binary for batch drivers.

pub mod asymptotics;
pub mod cli;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod fft;
pub mod field_io;
pub mod grid;
pub mod ground_state;
pub mod resample;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{ComplexField, Grid, ModelParams};
