//! Analysis toolkit for piecewise linear differential systems in `R^3` with
//! two linear-affine pieces separated by the plane `z = 0`.
//!
//! The crate canonicalizes such systems, classifies each piece by its planar
//! spectrum, derives the pair-level invariants that decide the global orbit
//! structure (scrolls, a unique invariant cylinder, or infinitely many
//! cylinders), and numerically constructs the predicted invariant cylinders,
//! limit cycles and periodic-orbit surfaces. Every closed-form computation is
//! cross-validated by an independent event-detecting Runge–Kutta integrator.
//!
//! Module map:
//!
//! * [`model`] — raw, quasinormal and canonical parameter records, tangency
//!   line analysis, and the changes of variables between the forms.
//! * [`spectral`] — per-piece eigen-classification, the `(alpha, beta)`
//!   exponents, the `(kappa, lambda)` pair invariants and the structure
//!   classifier.
//! * [`flow`] — closed-form flows of the canonical pieces, half-return maps
//!   on the switching plane, and the affine maps of the `x` coordinate.
//! * [`cycles`] — cylinder search, limit-cycle construction, periodic
//!   surfaces, the focus–focus special path, and the table audit.
//! * [`oracle`] — the independent adaptive integrator with `z = 0` event
//!   detection; validates everything above through a separate code path.
//! * [`cli`] — scenario parsing and the command-line front end.

pub mod cli;
pub mod cycles;
pub mod flow;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod spectral;
pub mod tol;
