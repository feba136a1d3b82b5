//! Numerical tolerances used by the structural checks.
//!
//! All supported dimensions stay at or below the configured cap, so
//! conditioning is benign and absolute tolerances are appropriate.

/// Structural checks: Hermiticity, completeness, unit trace.
pub const STRUCTURAL: f64 = 1e-10;

/// Positivity floor for eigenvalues of nominally PSD operators.
pub const EIG_FLOOR: f64 = -1e-10;

/// Behavior equality threshold (total variation distance).
pub const BEHAVIOR: f64 = 1e-10;

/// Entrywise equality for exact algebraic identities.
pub const ENTRYWISE: f64 = 1e-12;

/// Slack allowed on individual probabilities around [0, 1].
pub const PROB_RANGE: f64 = 1e-12;
