//! Numerical tolerances, collected in one place so every threshold used by a
//! check is pinned rather than ad hoc.

/// Default absolute tolerance for floating-point comparisons.
pub const DEFAULT_ABS: f64 = 1e-9;

/// Maximum ‖P·T − I‖_max accepted when constructing a factorization.
pub const FACTORIZATION_RESIDUAL: f64 = 1e-10;

/// Maximum ‖P·z‖_max for a vector z claimed to lie in ker P.
pub const KERNEL_MEMBERSHIP: f64 = 1e-9;

/// Smallest pivot magnitude accepted during row reduction; anything below is
/// treated as zero so the pivot pattern stays combinatorially unambiguous.
pub const PIVOT_THRESHOLD: f64 = 1e-8;

/// Entries below this are snapped to exact zero after row reduction.
pub const RREF_CLEANUP: f64 = 1e-12;

/// Agreement required between the primal extension optimum and the dual
/// functional norm, and for validating dual certificates.
pub const DUALITY_GAP: f64 = 1e-8;

/// Tolerance on the witness equations P·w = Σ ε_i e_i and P·α = 0.
pub const WITNESS_EQUATION: f64 = 1e-8;

/// Reduced-cost / pivot threshold inside the simplex solver.
pub const SIMPLEX_EPS: f64 = 1e-9;

/// Default cap on K for exact sign-vertex enumeration (2^{K−1} vertices).
pub const DEFAULT_EXACT_NORM_MAX_K: usize = 20;
