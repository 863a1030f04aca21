//! Desk-scale numerical experiments around factoring the identity operator on
//! ℓ_p^n (0 < p ≤ 1) through a sup-normed coordinate space ℓ_∞^K.
//!
//! The crate computes the two operator norms attached to a factorization
//! Id = P∘T (the embedding into ℓ_∞^K and the retraction back), builds the
//! explicit Hadamard-based factorization that attains the n^{1/p−1/2} upper
//! bound, and constructs witness vectors w with P(w) = Σ ±e_i and small
//! sup-norm. The sup-norm of the best witness certifies a lower bound on the
//! retraction norm, and the `study` module measures how that bound scales
//! with n.

pub mod cli;
pub mod error;
pub mod extension;
pub mod factorization;
pub mod kernel;
pub mod linalg;
pub mod quasinorm;
pub mod seeding;
pub mod signs;
pub mod simplex;
pub mod study;
pub mod tol;
pub mod witness;

pub use error::{Error, Result};

/// Natural logarithm clamped below at 1, so that n = 1, 2 do not degenerate
/// the √(n log n) scales used throughout.
pub fn clamped_ln(n: usize) -> f64 {
    (n as f64).ln().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::clamped_ln;

    #[test]
    fn clamp_covers_small_n() {
        assert_eq!(clamped_ln(1), 1.0);
        assert_eq!(clamped_ln(2), 1.0);
        assert!((clamped_ln(8) - 8f64.ln()).abs() < 1e-15);
    }
}
