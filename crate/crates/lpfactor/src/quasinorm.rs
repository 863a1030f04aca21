//! Quasi-norms on ℓ_p^n for 0 < p ≤ 1 and the two operator norms attached to
//! a factorization through ℓ_∞^K.
//!
//! For p ≤ 1 the unit ball of ℓ_p^n has extreme points ±e_i, so the norm of
//! an operator into ℓ_∞^K is the largest column sup. The norm of an operator
//! out of ℓ_∞^K is estimated over the vertices of the hypercube [−1,1]^K,
//! exactly by enumeration when K is small and by greedy sign flips otherwise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::seeding;
use crate::tol;

/// Quasi-norm exponent restricted to (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PExponent(f64);

impl PExponent {
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 0.0 || p > 1.0 {
            return Err(Error::InvalidExponent(p));
        }
        Ok(PExponent(p))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PExponent {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        PExponent::new(p)
    }
}

impl From<PExponent> for f64 {
    fn from(p: PExponent) -> f64 {
        p.0
    }
}

/// Which way an operator maps relative to the sup-normed space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// K×n matrix of a map ℓ_p^n → ℓ_∞^K; column i is the image of e_i.
    IntoSupSpace,
    /// n×K matrix of a map ℓ_∞^K → ℓ_p^n.
    FromSupSpace,
}

/// Dense operator matrix tagged with its orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    mat: Mat,
    orientation: Orientation,
}

impl OperatorMatrix {
    pub fn into_sup_space(mat: Mat) -> Result<Self> {
        Self::tagged(mat, Orientation::IntoSupSpace)
    }

    pub fn from_sup_space(mat: Mat) -> Result<Self> {
        Self::tagged(mat, Orientation::FromSupSpace)
    }

    fn tagged(mat: Mat, orientation: Orientation) -> Result<Self> {
        if !mat.is_finite() {
            return Err(Error::NonFinite("operator matrix"));
        }
        Ok(OperatorMatrix { mat, orientation })
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn rows(&self) -> usize {
        self.mat.rows()
    }

    pub fn cols(&self) -> usize {
        self.mat.cols()
    }

    fn expect(&self, orientation: Orientation, what: &'static str) -> Result<()> {
        if self.orientation != orientation {
            return Err(Error::Orientation(what));
        }
        Ok(())
    }
}

/// (Σ_i |x_i|^p)^{1/p}; positively homogeneous, and a quasi-norm for p < 1.
pub fn p_quasinorm(x: &[f64], p: PExponent) -> f64 {
    let p = p.get();
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    let sum: f64 = x.iter().map(|v| v.abs().powf(p)).sum();
    sum.powf(1.0 / p)
}

/// max_i |x_i|.
pub fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Norm of an operator ℓ_p^n → ℓ_∞^K.
///
/// Valid for p ≤ 1 only, which the `PExponent` type already enforces: the
/// extreme points of the ℓ_p unit ball are ±e_i, so the norm is the largest
/// entry magnitude of the matrix.
pub fn norm_into_sup(op: &OperatorMatrix, _p: PExponent) -> Result<f64> {
    op.expect(Orientation::IntoSupSpace, "norm_into_sup needs an operator into the sup space")?;
    Ok(op.mat().max_abs())
}

/// Vertex maximum of ‖Pσ‖_p over σ ∈ {−1,+1}^K by exact enumeration.
///
/// For p = 1 the map σ ↦ ‖Pσ‖₁ is convex, so this equals the operator norm
/// ‖P‖_{∞→1}. For p < 1 convexity fails and the ball sup can sit strictly
/// inside a face (see the counterexample test below), so the vertex maximum
/// is a certified lower estimate of the operator norm;
/// [`norm_from_sup_certified_upper`] provides the matching upper estimate.
///
/// The quasi-norm is even in σ, so only 2^{K−1} vertices are visited (the
/// last coordinate stays +1). Each image P·σ is computed fresh so the result
/// carries no path-dependent rounding. Refuses K > `max_k`; use
/// [`norm_from_sup_search`] above the cap.
pub fn norm_from_sup_exact(op: &OperatorMatrix, p: PExponent, max_k: usize) -> Result<f64> {
    op.expect(Orientation::FromSupSpace, "norm_from_sup_exact needs an operator from the sup space")?;
    let k = op.cols();
    if k == 0 {
        return Err(Error::Dimension("operator has no columns".into()));
    }
    if k > max_k || k > 63 {
        return Err(Error::EnumerationTooLarge {
            cols: k,
            max: max_k.min(63),
        });
    }
    let mat = op.mat();
    let n = mat.rows();
    let mut image = vec![0.0f64; n];
    let mut best = 0.0f64;
    for mask in 0u64..(1 << (k - 1)) {
        for (i, out) in image.iter_mut().enumerate() {
            let row = mat.row(i);
            let mut sum = 0.0;
            for (j, &a) in row.iter().enumerate() {
                sum += if mask >> j & 1 == 1 { -a } else { a };
            }
            *out = sum;
        }
        best = best.max(p_quasinorm(&image, p));
    }
    Ok(best)
}

/// Greedy local search for the same vertex maximum: steepest single-flip
/// ascent from `restarts` random vertices. Always a lower bound on the exact
/// enumeration, and deterministic for a fixed seed.
pub fn norm_from_sup_search(
    op: &OperatorMatrix,
    p: PExponent,
    restarts: u64,
    seed: u64,
) -> Result<f64> {
    op.expect(Orientation::FromSupSpace, "norm_from_sup_search needs an operator from the sup space")?;
    if restarts == 0 {
        return Err(Error::OutOfRange("restarts must be at least 1".into()));
    }
    let mat = op.mat();
    let (n, k) = (mat.rows(), mat.cols());
    let mut rng = seeding::rng_from(seed);
    let mut best = 0.0f64;
    let mut flipped = vec![0.0; n];
    for _ in 0..restarts {
        let mut signs: Vec<f64> = (0..k)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let mut image = vec![0.0f64; n];
        for i in 0..n {
            image[i] = mat.row(i).iter().zip(&signs).map(|(a, s)| a * s).sum();
        }
        let mut value = p_quasinorm(&image, p);
        loop {
            let mut best_flip = None;
            let mut best_gain = tol::DEFAULT_ABS;
            for j in 0..k {
                let delta = -2.0 * signs[j];
                for i in 0..n {
                    flipped[i] = image[i] + delta * mat.get(i, j);
                }
                let candidate = p_quasinorm(&flipped, p);
                if candidate - value > best_gain {
                    best_gain = candidate - value;
                    best_flip = Some(j);
                }
            }
            match best_flip {
                Some(j) => {
                    let delta = -2.0 * signs[j];
                    for i in 0..n {
                        image[i] += delta * mat.get(i, j);
                    }
                    signs[j] = -signs[j];
                    value = p_quasinorm(&image, p);
                }
                None => break,
            }
        }
        best = best.max(value);
    }
    Ok(best)
}

/// ‖Id : ℓ_1^n → ℓ_p^n‖ = n^{1/p − 1}.
pub fn identity_embedding_norm(n: usize, p: PExponent) -> Result<f64> {
    if n == 0 {
        return Err(Error::OutOfRange("dimension must be at least 1".into()));
    }
    Ok((n as f64).powf(1.0 / p.get() - 1.0))
}

/// Certified upper bound for the operator norm ℓ_∞^K → ℓ_p^n: factor through
/// ℓ_1^n as ‖Id: ℓ_1 → ℓ_p‖ · ‖P: ℓ_∞ → ℓ_1‖ = n^{1/p−1} times the exact
/// ℓ_1 vertex maximum. For p = 1 this coincides with [`norm_from_sup_exact`].
pub fn norm_from_sup_certified_upper(
    op: &OperatorMatrix,
    p: PExponent,
    max_k: usize,
) -> Result<f64> {
    let l1 = norm_from_sup_exact(op, PExponent::new(1.0).expect("1 is a valid exponent"), max_k)?;
    Ok(identity_embedding_norm(op.rows(), p)? * l1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(v: f64) -> PExponent {
        PExponent::new(v).unwrap()
    }

    /// Independent oracle: all 2^K vertices, each image recomputed from
    /// scratch. Checks both the Gray-code updates and the ±σ symmetry.
    fn exact_by_full_enumeration(op: &OperatorMatrix, pe: PExponent) -> f64 {
        let mat = op.mat();
        let (n, k) = (mat.rows(), mat.cols());
        let mut best = 0.0f64;
        for mask in 0u64..(1 << k) {
            let signs: Vec<f64> = (0..k)
                .map(|j| if mask >> j & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            let image: Vec<f64> = (0..n)
                .map(|i| mat.row(i).iter().zip(&signs).map(|(a, s)| a * s).sum())
                .collect();
            best = best.max(p_quasinorm(&image, pe));
        }
        best
    }

    #[test]
    fn exponent_rejects_out_of_range() {
        assert!(PExponent::new(0.0).is_err());
        assert!(PExponent::new(-0.5).is_err());
        assert!(PExponent::new(1.5).is_err());
        assert!(PExponent::new(f64::NAN).is_err());
        assert!(PExponent::new(1.0).is_ok());
        assert!(PExponent::new(1e-6).is_ok());
    }

    #[test]
    fn quasinorm_examples() {
        assert_eq!(p_quasinorm(&[3.0, 4.0], p(1.0)), 7.0);
        assert!((p_quasinorm(&[1.0, 1.0, 1.0, 1.0], p(0.5)) - 16.0).abs() < 1e-12);
        let mut e3 = vec![0.0; 5];
        e3[2] = 1.0;
        for q in [0.3, 0.5, 1.0] {
            assert!((p_quasinorm(&e3, p(q)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(sup_norm(&[1.0, -2.0, 0.5]), 2.0);
        assert_eq!(sup_norm(&[0.0, 0.0]), 0.0);
        assert_eq!(sup_norm(&vec![1.0; 17]), 1.0);
    }

    #[test]
    fn into_sup_norm_examples() {
        let t = OperatorMatrix::into_sup_space(
            Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap(),
        )
        .unwrap();
        assert_eq!(norm_into_sup(&t, p(0.5)).unwrap(), 1.0);

        let d = OperatorMatrix::into_sup_space(
            Mat::from_rows(&[vec![0.5, 0.0], vec![0.0, 2.0]]).unwrap(),
        )
        .unwrap();
        assert_eq!(norm_into_sup(&d, p(1.0)).unwrap(), 2.0);
    }

    #[test]
    fn orientation_is_checked() {
        let m = Mat::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let from = OperatorMatrix::from_sup_space(m.clone()).unwrap();
        assert!(norm_into_sup(&from, p(1.0)).is_err());
        let into = OperatorMatrix::into_sup_space(m).unwrap();
        assert!(norm_from_sup_exact(&into, p(1.0), 20).is_err());
    }

    #[test]
    fn from_sup_exact_examples() {
        // frozen from the 4-vertex brute force: every vertex maps to ±e_i
        let half_h2 = OperatorMatrix::from_sup_space(
            Mat::from_rows(&[vec![0.5, 0.5], vec![0.5, -0.5]]).unwrap(),
        )
        .unwrap();
        assert!((norm_from_sup_exact(&half_h2, p(0.5), 20).unwrap() - 1.0).abs() < 1e-12);

        let one = OperatorMatrix::from_sup_space(Mat::from_rows(&[vec![1.0]]).unwrap()).unwrap();
        assert_eq!(norm_from_sup_exact(&one, p(0.7), 20).unwrap(), 1.0);

        let k = 6;
        let avg = OperatorMatrix::from_sup_space(
            Mat::from_rows(&[vec![1.0 / k as f64; k]]).unwrap(),
        )
        .unwrap();
        assert!((norm_from_sup_exact(&avg, p(1.0), 20).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn from_sup_exact_refuses_large_k() {
        let wide = OperatorMatrix::from_sup_space(Mat::zeros(1, 21)).unwrap();
        match norm_from_sup_exact(&wide, p(1.0), 20) {
            Err(Error::EnumerationTooLarge { cols: 21, max: 20 }) => {}
            other => panic!("expected enumeration refusal, got {other:?}"),
        }
    }

    #[test]
    fn vertex_maximum_misses_face_points_below_p_one() {
        // for p < 1 the ball sup need not sit at a vertex: on (1/2)·H₂ every
        // vertex maps to ±e_i (value 1), while the face point (1, 0) maps to
        // (1/2, 1/2) with quasi-norm 2
        let op = OperatorMatrix::from_sup_space(
            Mat::from_rows(&[vec![0.5, 0.5], vec![0.5, -0.5]]).unwrap(),
        )
        .unwrap();
        let half = p(0.5);
        let vertex_max = norm_from_sup_exact(&op, half, 20).unwrap();
        assert!((vertex_max - 1.0).abs() < 1e-12);
        let face_value = p_quasinorm(&op.mat().mul_vec(&[1.0, 0.0]).unwrap(), half);
        assert!((face_value - 2.0).abs() < 1e-12);
        assert!(face_value > vertex_max + 0.9);
        // the certified upper bound covers the whole ball
        let upper = norm_from_sup_certified_upper(&op, half, 20).unwrap();
        assert!(upper + 1e-12 >= face_value, "upper {upper}");
        // at p = 1 convexity restores vertex attainment and both sides agree
        let one = p(1.0);
        assert_eq!(
            norm_from_sup_exact(&op, one, 20).unwrap(),
            norm_from_sup_certified_upper(&op, one, 20).unwrap()
        );
    }

    #[test]
    fn search_matches_exact_on_spec_instance() {
        let half_h2 = OperatorMatrix::from_sup_space(
            Mat::from_rows(&[vec![0.5, 0.5], vec![0.5, -0.5]]).unwrap(),
        )
        .unwrap();
        let s = norm_from_sup_search(&half_h2, p(0.5), 8, 3).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn search_climbs_identity_to_all_ones() {
        let n = 5;
        let id = OperatorMatrix::from_sup_space(Mat::identity(n)).unwrap();
        let s = norm_from_sup_search(&id, p(1.0), 1, 11).unwrap();
        assert!((s - n as f64).abs() < 1e-12);
    }

    #[test]
    fn embedding_norm_examples() {
        assert!((identity_embedding_norm(4, p(0.5)).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(identity_embedding_norm(1, p(0.3)).unwrap(), 1.0);
        assert_eq!(identity_embedding_norm(9, p(1.0)).unwrap(), 1.0);
        assert!(identity_embedding_norm(0, p(1.0)).is_err());
    }

    prop_compose! {
        fn small_vec()(len in 1usize..8, raw in prop::collection::vec(-10.0f64..10.0, 8)) -> Vec<f64> {
            raw[..len].to_vec()
        }
    }

    prop_compose! {
        fn small_exponent()(q in 0.2f64..=1.0) -> PExponent {
            PExponent::new(q).unwrap()
        }
    }

    prop_compose! {
        fn small_from_sup()(n in 1usize..4, k in 1usize..7, raw in prop::collection::vec(-3.0f64..3.0, 28)) -> OperatorMatrix {
            let data = raw[..n * k].to_vec();
            OperatorMatrix::from_sup_space(Mat::from_vec(n, k, data).unwrap()).unwrap()
        }
    }

    proptest! {
        #[test]
        fn p_power_is_subadditive(x in small_vec(), y in small_vec(), pe in small_exponent()) {
            let len = x.len().min(y.len());
            let sum: Vec<f64> = x[..len].iter().zip(&y[..len]).map(|(a, b)| a + b).collect();
            let q = pe.get();
            let lhs = p_quasinorm(&sum, pe).powf(q);
            let rhs = p_quasinorm(&x[..len], pe).powf(q) + p_quasinorm(&y[..len], pe).powf(q);
            prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn quasinorm_is_homogeneous(x in small_vec(), c in -5.0f64..5.0, pe in small_exponent()) {
            let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
            let lhs = p_quasinorm(&scaled, pe);
            let rhs = c.abs() * p_quasinorm(&x, pe);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn quasinorm_nonincreasing_in_p(x in small_vec(), a in 0.2f64..1.0, b in 0.2f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let n_lo = p_quasinorm(&x, PExponent::new(lo).unwrap());
            let n_hi = p_quasinorm(&x, PExponent::new(hi).unwrap());
            prop_assert!(n_lo >= n_hi - 1e-9 * (1.0 + n_hi.abs()));
        }

        #[test]
        fn search_never_exceeds_exact(op in small_from_sup(), pe in small_exponent(), seed in 0u64..1000) {
            let exact = norm_from_sup_exact(&op, pe, 20).unwrap();
            let search = norm_from_sup_search(&op, pe, 4, seed).unwrap();
            prop_assert!(search <= exact + 1e-9);
        }

        #[test]
        fn search_with_many_restarts_matches_exact(op in small_from_sup(), pe in small_exponent(), seed in 0u64..1000) {
            let exact = norm_from_sup_exact(&op, pe, 20).unwrap();
            let search = norm_from_sup_search(&op, pe, 32, seed).unwrap();
            prop_assert!((search - exact).abs() <= 1e-9 * (1.0 + exact));
        }

        #[test]
        fn halved_enumeration_matches_naive(op in small_from_sup(), pe in small_exponent()) {
            let fast = norm_from_sup_exact(&op, pe, 20).unwrap();
            let naive = exact_by_full_enumeration(&op, pe);
            prop_assert!((fast - naive).abs() <= 1e-9 * (1.0 + naive));
        }

        #[test]
        fn certified_upper_dominates_vertex_maximum(op in small_from_sup(), pe in small_exponent()) {
            let vertex = norm_from_sup_exact(&op, pe, 20).unwrap();
            let upper = norm_from_sup_certified_upper(&op, pe, 20).unwrap();
            prop_assert!(vertex <= upper + 1e-9 * (1.0 + upper));
        }

        #[test]
        fn exact_dominates_sampled_vertices(op in small_from_sup(), pe in small_exponent(), mask in 0u64..64) {
            let exact = norm_from_sup_exact(&op, pe, 20).unwrap();
            let k = op.cols();
            let signs: Vec<f64> = (0..k).map(|j| if mask >> j & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let image = op.mat().mul_vec(&signs).unwrap();
            prop_assert!(p_quasinorm(&image, pe) <= exact + 1e-9);
        }
    }
}
