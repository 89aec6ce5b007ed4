//! The concrete Anosov flow: a hyperbolic toral automorphism suspended
//! under a roof, its Markov partition and symbolic coding, the stable
//! holonomy cocycle `u`, the induced `f_A`, and the expansion cocycles.

pub mod cocycle;
pub mod holonomy;
pub mod itinerary;
pub mod observable;
pub mod partition;
pub mod quad;
pub mod system;
pub mod torus;
pub mod trig;

pub use cocycle::{alpha, alpha_perp, beta, check_property_a, psi_s, psi_u, PropertyAReport};
pub use holonomy::{
    align, eta, f_a, f_a_at, f_a_potential, orbit_integral, telescoping_check, theta_s, theta_u, u, u_pair,
    u_to_model,
    unstable_lift, FaPotential, StablePair, TelescopingReport, UOptions, UValue,
};
pub use itinerary::{fit_contraction_exponent, itinerary, round_trip, Itinerary, ItineraryOptions, RoundTrip};
pub use observable::{
    orbit_integral_quad, ConstantFn, ContractionRate, Observable, TrigFlowFunction, WithCoboundary,
};
pub use partition::{build_partition, Located, MarkovPartition, MarkovReport, PiA, Rect};
pub use quad::adaptive_simpson;
pub use system::{system_hash, ConformalWeight, FlowPoint, SuspensionSystem, SystemConfig};
pub use torus::{ToralAutomorphism, TorusPoint};
pub use trig::{TrigPoly, TrigTerm};
