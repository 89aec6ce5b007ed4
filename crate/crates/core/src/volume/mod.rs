//! Divergence for conformal metrics, mollification and the gradient
//! correction that makes a field preserve the volume of `e^h g_0`, on
//! periodic grids over the flat torus.

pub mod demo;
pub mod grid;
pub mod ops;
pub mod poisson;

pub use demo::{analytic_pair, invariant_volume_demo, DemoOptions, DemoReport, DemoRow};
pub use grid::{pairwise_sum, FieldSidecar, GridScalarField, GridVectorField};
pub use ops::{conformal_residual, divergence, mollify, mollify_vector, weighted_gradient, weighted_laplacian};
pub use poisson::{poisson_correct, Correction, PoissonOptions};
