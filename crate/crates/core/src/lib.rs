//! Contour-dynamics solver for a two-phase Darcy free-boundary problem with a pressure-dependent source.

pub mod densities;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod growth_potential;
pub mod kernels;
pub mod layer_ops;
pub mod pressure;
pub mod spectral;

pub use error::{Error, Result};
pub use evolution::{DiagRecord, Scheme, SimParams, SimState};
pub use geometry::{InterfacePair, ReferenceMap};
pub use kernels::KernelPoint;
pub use pressure::GrowthLaw;
pub use spectral::PeriodicField;
