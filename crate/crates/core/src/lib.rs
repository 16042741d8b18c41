//! Linear (in)stability of surface waves on two-phase circular flows.
//!
//! A circular background flow occupies a disk or annulus (inner fluid) and
//! an annulus or exterior region (outer fluid), separated by the interface
//! `r = 1`. Perturbing the interface with an azimuthal wave of integer
//! number `k` leads to a pair of second-order boundary-value problems of
//! Rayleigh type in the log-radius coordinate, coupled through a dispersion
//! relation for the complex phase velocity `c`. A mode with `Im c > 0`
//! grows exponentially.
//!
//! The crate provides:
//!
//! - [`profiles`]: angular-velocity profiles and problem setups;
//! - [`rayleigh`]: adaptive shooting for the side boundary-value problems;
//! - [`dispersion`]: the dispersion residual, closed-form oracle relations,
//!   and the small-density-ratio expansion;
//! - [`mode_search`]: argument-principle root counting and Newton polish
//!   over complex search regions;
//! - [`semicircle`]: the Howard-type bound on unstable phase velocities and
//!   its integral-identity verification;
//! - [`critical_layer`]: the real 4-vector formulation, its singular limit
//!   with jump conditions, and the small-density bifurcation solver.

pub mod critical_layer;
pub mod dispersion;
pub mod error;
pub mod mode_search;
pub mod ode;
pub mod profiles;
pub mod rayleigh;
pub mod semicircle;
pub mod spline;

pub use error::{Error, Result};
pub use profiles::{AngularProfile, Domain, ProblemSetup, Side};
pub use rayleigh::Mode;
