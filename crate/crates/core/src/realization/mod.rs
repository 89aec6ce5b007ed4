//! Realization of the expansion cocycle `exp(ρ ∫ f)` as a family of
//! measures `{ν_p}` on strong-unstable leaves, with the leafwise
//! reparametrizations `η_p` and numerical checks of the defining identities.

pub mod family;
pub mod reparam;
pub mod verify;

pub use family::{
    realize, Chart, CylinderCdf, FamilyExport, FamilyHeader, LeafMeasureFamily, LeafSegment, MuTable,
    Piece, RealizeOptions, SegmentMeasure,
};
pub use reparam::{check_chart_transition, reparametrize, ChartTransitionReport, HolderFit, Reparametrization};
pub use verify::{
    deformed_cocycle_check, holonomy_derivative, overlap_consistency, rho_equals_one_check,
    same_leaf_consistency, verify_radon_nikodym, verify_radon_nikodym_on, window_series, DeformedReport,
    HolonomyReport, OverlapReport, RhoOneReport, RnReport, WindowEstimate, WindowSeries,
};
