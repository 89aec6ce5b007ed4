//! Thermodynamic formalism on subshifts of finite type, Markov coding of a
//! hyperbolic toral suspension flow, realization of expansion cocycles as
//! leaf measures, and divergence correction on periodic grids.
//!
//! Module map:
//! - [`sft`]: transition matrices, admissible words, the shift metric.
//! - [`thermo`]: pressure, pressure roots, Gibbs eigen-data.
//! - [`coding`]: the suspension flow, its Markov partition, itineraries,
//!   `pi_A`, the cocycle `u`, `f_A` and the flow cocycles.
//! - [`realization`]: leaf measures `nu_p`, Radon–Nikodym checks and
//!   reparametrizations.
//! - [`volume`]: conformal divergence, mollification, Poisson correction.

pub mod coding;
pub mod error;
pub mod linalg;
pub mod realization;
pub mod sft;
pub mod thermo;
pub mod volume;

pub use error::{Error, Result};
pub use sft::{d_sigma, shift, Cylinder, TransitionMatrix, Word};
pub use thermo::{GibbsData, Potential, PressureEstimate};
