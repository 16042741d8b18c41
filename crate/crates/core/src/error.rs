//! Error types shared across the solver stack.

use num_complex::Complex64;
use thiserror::Error;

/// All failure modes of the library, tagged by the operation family that
/// produced them.
#[derive(Debug, Clone, Error)]
pub enum Error {
    // ---- profile evaluation ----
    #[error("point s = {s} is outside the profile domain [{lo}, {hi}]")]
    OutOfDomain { s: f64, lo: f64, hi: f64 },
    #[error("profile vorticity derivative is distributional at s = {s}; pointwise evaluation refused")]
    DistributionalPoint { s: f64 },
    #[error("profile is unbounded on its domain")]
    Unbounded,
    #[error("value {value} is not a regular value: |w'| = {w_dot_abs:e} at s = {s} is below the floor {floor:e}")]
    NotRegularValue { value: f64, s: f64, w_dot_abs: f64, floor: f64 },
    #[error("tangency suspected near s = {s}: |w - value| = {defect:e} without a sign change")]
    TangencySuspected { s: f64, defect: f64 },
    #[error("invalid profile specification: {0}")]
    BadProfile(String),
    #[error("invalid problem setup: {0}")]
    BadSetup(String),

    // ---- boundary-value solves ----
    #[error("Rayleigh coefficient is singular on the integration path: c = {c} with Im c = 0 lies within {margin:e} of the angular-velocity range")]
    SingularCoefficient { c: Complex64, margin: f64 },
    #[error("interface value |zeta(0)| = {abs:e} is below {threshold:e} of the trace amplitude; c is a fixed-boundary eigenvalue and the zeta(0) = 1 normalization is impossible")]
    InterfaceZero { abs: f64, threshold: f64 },
    #[error("adaptive integrator failed at s = {s}: {reason}")]
    IntegratorFailure { s: f64, reason: String },

    // ---- dispersion relations ----
    #[error("incomplete or inconsistent oracle parameters: {0}")]
    BadParams(String),
    #[error("small-density expansion has no stable branch: discriminant = {discriminant:e} <= 0")]
    StableBranchMissing { discriminant: f64 },
    #[error("cubic roots stayed real (min |Im| = {min_im:e}); s* calibration failed")]
    NoComplexPair { min_im: f64 },
    #[error("no s* solves the calibration equation on (0, {s_max}]")]
    NoSolution { s_max: f64 },

    // ---- mode search ----
    #[error("|D| = {d_abs:e} on the search contour near c = {c}; root suspected on the boundary")]
    BoundaryRootSuspected { c: Complex64, d_abs: f64 },
    #[error("Newton iteration stagnated in cell [{re_lo}, {re_hi}] x [{im_lo}, {im_hi}]: {reason}")]
    NonConvergence { re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64, reason: String },
    #[error("invalid search region: {0}")]
    BadRegion(String),

    // ---- semicircle identities ----
    #[error("trace has {got} samples on the {side} side; at least {need} are required for quadrature")]
    InsufficientTrace { side: &'static str, got: usize, need: usize },

    // ---- critical layer ----
    #[error("Pythagorean identity drift {defect:e} exceeds {tol:e} along the critical-layer trace")]
    IdentityDrift { defect: f64, tol: f64 },
    #[error("instability-theorem hypotheses violated: {0}")]
    HypothesisViolated(String),
    #[error("predicted bifurcation coefficient {c_sharp:e} is not positive")]
    ZeroPrediction { c_sharp: f64 },
    #[error("two-parameter Newton diverged after {iterations} iterations: residuals ({r1:e}, {r2:e})")]
    NewtonDiverged { iterations: usize, r1: f64, r2: f64 },
    #[error("converged growth rate Im c = {im_c:e} <= 0 contradicts the bifurcation prediction")]
    LeftHalfPlane { im_c: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
