//! Spectral stability toolkit for self-gravitating polytropic steady states.
//!
//! The pipeline: build a polytrope, map its orbit geometry (turning points,
//! radial periods, action-angle variables) over the admissible `(E, l)`
//! domain, assemble the associated integral operator as a symmetric Nystrom
//! matrix, trace its top eigenvalue curve, and cross-check the resulting
//! lowest-mode estimate against a Galerkin matrix and a norm-preserving
//! gradient flow.

pub mod birman_schwinger;
pub mod error;
pub mod flow;
pub mod interp;
pub mod orbits;
pub mod phase_space;
pub mod potential;
pub mod quad;
pub mod roots;
pub mod steady_state;

pub use error::{Error, Result};
pub use potential::{Harmonic, Isochrone, Kepler, RadialPotential, WithCutoff};
pub use steady_state::{build_polytrope, PolytropeParams, SteadyState};
