//! Pressure, pressure roots and Gibbs measures for locally constant potentials.

mod gibbs;
mod potential;
mod pressure;
mod rho;

pub use gibbs::{gibbs, gibbs_with, GibbsData, GibbsExport};
pub use potential::Potential;
pub use pressure::{
    birkhoff_extremes, iterate_system, pressure_partition_sum, pressure_partition_sum_with_budget,
    transfer_matrix, transfer_spectral_pressure, transfer_spectral_pressure_with, PressureEstimate,
    PressureMethod, SolverOptions, MIXING_SEARCH,
};
pub use rho::{find_rho, find_rho_with, Rho, RhoOptions};
