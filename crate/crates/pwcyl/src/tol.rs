//! Central tolerances and default analysis parameters.
//!
//! Every threshold used by the analysis pipeline lives here with a short
//! justification, so numeric policy is auditable in one place.

/// Coefficient-wise residual allowed when a change of variables is verified
/// symbolically (the transformed vector field is reconstructed and compared
/// entry by entry). Pure arithmetic, no integration error.
pub const COEFF_EPS: f64 = 1e-12;

/// Default zero test for spectral quantities (`c`, `d`, `c^2 + 4d`).
/// Type boundaries are measure-zero and user parameters are typically exact
/// rationals, so this only has to absorb a few ulps of input arithmetic.
pub const DISC_EPS: f64 = 1e-12;

/// Half-return refinement target: the crossing time is polished until
/// `|z(tau)| < HALF_MAP_Z_TOL * (1 + |y_entry|)`.
pub const HALF_MAP_Z_TOL: f64 = 1e-12;

/// Residual bound for an isolated cylinder root of `Q(y0) = P-(P+(y0)) - y0`.
pub const CYLINDER_RESIDUAL_TOL: f64 = 1e-10;

/// Trust cap on the intermediate plane-crossing value `|y1| = |P+(y0)|`.
/// Near an escape threshold the first exit grows without bound, and the
/// second half map then reconstructs an O(1) result by cancelling terms of
/// magnitude `|y1|`; beyond `1e6` that cancellation eats more than half the
/// f64 mantissa relative to the cylinder residual scale, so such cells are
/// reported as unresolved rather than trusted.
pub const Y_EXIT_TRUST_CAP: f64 = 1e6;

/// Resolution floor on plane-crossing values entering a composed return map.
/// A fold excursion from `|y| = 1e-4` only reaches `|z| ~ 5e-9`, a few
/// thousand times the crossing tolerance; below this floor the excursion
/// depth approaches the tolerance itself and the return data is noise.
pub const Y_RESOLVE_FLOOR: f64 = 1e-4;

/// A parameter family counts as a continuum of cylinders when `max |Q|` over
/// the scan grid stays below this bound.
pub const CONTINUUM_MAX_Q: f64 = 1e-8;

/// Perturbation applied to `c_minus` by the secondary continuum check; a true
/// continuum must break under it.
pub const CONTINUUM_BREAK_DELTA: f64 = 1e-6;

/// `|Q|` level under which a sign-preserving local minimum of `Q` is probed
/// as a possible tangential (double) root.
pub const BOUNDARY_CASE_PROBE: f64 = 1e-9;

/// Event localization target of the independent integrator.
pub const ORACLE_EVENT_Z_TOL: f64 = 1e-12;

/// Tangency guard: an orbit reaching the switching plane with `|y|` below
/// this value is flagged as a fold hit rather than continued.
pub const FOLD_GUARD: f64 = 1e-9;

/// Full-period closure residual accepted for an oracle-verified limit cycle.
pub const CLOSURE_TOL: f64 = 1e-6;

/// Two return-map scales count as reciprocal (`rho = 1/xi`) within this.
pub const UNIT_MULTIPLIER_TOL: f64 = 1e-12;

/// Absolute zero test on the pair invariants `kappa`, `lambda`. Constant
/// table rows produce exact zeros; expression rows are O(1) in practice.
pub const KAPPA_LAMBDA_ZERO: f64 = 1e-13;

/// Return-time searches give up after `T_MAX_FACTOR` characteristic times.
pub const T_MAX_FACTOR: f64 = 1e3;

/// Relative step used by the finite-difference multiplier estimate.
pub const MULTIPLIER_FD_STEP: f64 = 1e-6;

/// Default cylinder-search window (entry values `y0`).
pub const DEFAULT_Y_MIN: f64 = 1e-3;
pub const DEFAULT_Y_MAX: f64 = 50.0;

/// Default number of (log-spaced) scan nodes for the cylinder search.
pub const DEFAULT_GRID_NODES: usize = 512;

/// Default number of samples of a periodic-orbit surface.
pub const DEFAULT_SURFACE_NODES: usize = 12;

/// Default tolerances of the independent integrator.
pub const ORACLE_RTOL: f64 = 1e-12;
pub const ORACLE_ATOL: f64 = 1e-14;
