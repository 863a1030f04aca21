//! Sign matrices and the probabilistic machinery behind the tail-bound and
//! sign-selection steps: Sylvester–Hadamard matrices, Rademacher sign
//! patterns on dyadic atoms, subgaussian tail estimates for ±1 sums, and a
//! sampling search for sign vectors that keep every functional small.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clamped_ln;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::seeding;

/// Exponent constant reported alongside the n^{−c·α²} tail form: optimizing
/// the q-th moment bound ‖f‖_q ≤ √(2q) over q gives exp(−λ²/(2e)), so
/// c₀ = 1/(2e) with the Khintchine constant taken as √2.
pub const TAIL_EXPONENT_C0: f64 = 1.0 / (2.0 * std::f64::consts::E);

/// Chunk size for partitioning Monte Carlo trials; each chunk runs on its own
/// derived seed so totals do not depend on scheduling.
const MC_CHUNK: u64 = 8192;

/// Matrix with entries in {−1, +1}, stored exactly as integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

impl SignMatrix {
    fn filled(rows: usize, cols: usize) -> Self {
        SignMatrix {
            rows,
            cols,
            data: vec![1; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.data[i * self.cols + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: i8) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Column as a sign pattern, used for distinctness checks.
    pub fn col(&self, j: usize) -> Vec<i8> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_mat(&self) -> Mat {
        Mat::from_vec(
            self.rows,
            self.cols,
            self.data.iter().map(|&v| v as f64).collect(),
        )
        .expect("sign matrix dimensions are consistent")
    }

    /// Integer Gram matrix H·Hᵀ, exact.
    pub fn gram(&self) -> Vec<Vec<i64>> {
        (0..self.rows)
            .map(|a| {
                (0..self.rows)
                    .map(|b| {
                        self.row(a)
                            .iter()
                            .zip(self.row(b))
                            .map(|(&x, &y)| x as i64 * y as i64)
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Sylvester–Hadamard matrix H_{2^k} by recursive doubling; rows are pairwise
/// orthogonal in exact integer arithmetic.
pub fn sylvester_hadamard(k: usize) -> Result<SignMatrix> {
    if k > 16 {
        return Err(Error::OutOfRange(format!(
            "Hadamard doubling capped at k = 16, got {k}"
        )));
    }
    let size = 1usize << k;
    let mut h = SignMatrix::filled(size, size);
    let mut block = 1;
    while block < size {
        for i in 0..block {
            for j in 0..block {
                let v = h.get(i, j);
                h.set(i, j + block, v);
                h.set(i + block, j, v);
                h.set(i + block, j + block, -v);
            }
        }
        block *= 2;
    }
    Ok(h)
}

/// The first n Rademacher sign patterns evaluated on the 2^n dyadic atoms:
/// entry (i, j) is +1 when bit i of atom j's dyadic expansion (most
/// significant first) is 0. Every column is a distinct sign vector.
pub fn rademacher_matrix(n: usize) -> Result<SignMatrix> {
    if n == 0 || n > 20 {
        return Err(Error::OutOfRange(format!(
            "Rademacher atom matrix needs 1 ≤ n ≤ 20, got {n}"
        )));
    }
    let cols = 1usize << n;
    let mut m = SignMatrix::filled(n, cols);
    for i in 0..n {
        for j in 0..cols {
            let bit = (j >> (n - 1 - i)) & 1;
            m.set(i, j, if bit == 0 { 1 } else { -1 });
        }
    }
    Ok(m)
}

/// i.i.d. uniform ±1 matrix, deterministic for a fixed seed.
pub fn random_sign_matrix(n: usize, k: usize, seed: u64) -> Result<SignMatrix> {
    if n == 0 || k == 0 {
        return Err(Error::OutOfRange("sign matrix needs n, K ≥ 1".into()));
    }
    let mut rng = seeding::rng_from(seed);
    let mut m = SignMatrix::filled(n, k);
    for i in 0..n {
        for j in 0..k {
            m.set(i, j, if rng.gen::<bool>() { 1 } else { -1 });
        }
    }
    Ok(m)
}

/// How a tail probability was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailSource {
    Exact { patterns: u64 },
    MonteCarlo { trials: u64 },
}

/// Tail probability of |Σ ε_i α_i| above a threshold, together with the two
/// closed-form bounds it is compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub threshold: f64,
    pub empirical_probability: f64,
    /// 2·exp(−λ²/(2Σα²)), parameter-free and strictly checkable for λ ≥ 0.
    pub bound_hoeffding: f64,
    /// n^{−c₀·λ²/(max(ln n,1)·Σα²)} with c₀ recorded in `power_form_c0`.
    pub bound_power_form: f64,
    pub power_form_c0: f64,
    pub source: TailSource,
}

fn check_coeffs(coeffs: &[f64]) -> Result<f64> {
    if coeffs.is_empty() {
        return Err(Error::OutOfRange("coefficient vector is empty".into()));
    }
    if coeffs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("coefficient vector"));
    }
    Ok(coeffs.iter().map(|v| v * v).sum())
}

fn tail_bounds(n: usize, sum_sq: f64, threshold: f64) -> (f64, f64) {
    if sum_sq == 0.0 {
        // degenerate sum: the tail is 0 for λ ≥ 0 and 1 for λ < 0
        let p = if threshold < 0.0 { 1.0 } else { 0.0 };
        return (2.0 * p, p);
    }
    let hoeffding = 2.0 * (-threshold * threshold / (2.0 * sum_sq)).exp();
    let exponent = TAIL_EXPONENT_C0 * threshold * threshold / (clamped_ln(n) * sum_sq);
    let power_form = (n as f64).powf(-exponent);
    (hoeffding, power_form)
}

/// Exact tail of |Σ ε_i α_i| over all 2^n sign patterns (n ≤ 20). The running
/// sum is updated one flip at a time in Gray-code order.
pub fn khintchine_tail_exact(coeffs: &[f64], threshold: f64) -> Result<TailEstimate> {
    let n = coeffs.len();
    if n > 20 {
        return Err(Error::OutOfRange(format!(
            "exact tail enumeration capped at n = 20, got {n}"
        )));
    }
    let sum_sq = check_coeffs(coeffs)?;
    let patterns = 1u64 << n;
    let mut signs = vec![1.0f64; n];
    let mut sum: f64 = coeffs.iter().sum();
    let mut hits = if sum.abs() > threshold { 1u64 } else { 0 };
    let mut prev_gray = 0u64;
    for g in 1..patterns {
        let gray = g ^ (g >> 1);
        let flip = (gray ^ prev_gray).trailing_zeros() as usize;
        prev_gray = gray;
        signs[flip] = -signs[flip];
        sum += 2.0 * signs[flip] * coeffs[flip];
        if sum.abs() > threshold {
            hits += 1;
        }
    }
    let (bound_hoeffding, bound_power_form) = tail_bounds(n, sum_sq, threshold);
    Ok(TailEstimate {
        threshold,
        empirical_probability: hits as f64 / patterns as f64,
        bound_hoeffding,
        bound_power_form,
        power_form_c0: TAIL_EXPONENT_C0,
        source: TailSource::Exact { patterns },
    })
}

/// Splits `total` trials into deterministic chunks, runs `count` on each with
/// its derived seed, and sums the hit counts.
fn chunked_monte_carlo<F>(total: u64, seed: u64, count: F) -> u64
where
    F: Fn(u64, u64) -> u64 + Sync,
{
    let chunks = total.div_ceil(MC_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let trials = MC_CHUNK.min(total - c * MC_CHUNK);
            count(seeding::derive_seed(seed, c), trials)
        })
        .sum()
}

/// Monte Carlo tail of |Σ ε_i α_i|, for coefficient counts beyond exact
/// enumeration; deterministic for a fixed seed.
pub fn khintchine_tail_mc(
    coeffs: &[f64],
    threshold: f64,
    trials: u64,
    seed: u64,
) -> Result<TailEstimate> {
    if trials == 0 {
        return Err(Error::OutOfRange("trials must be at least 1".into()));
    }
    let sum_sq = check_coeffs(coeffs)?;
    let hits = chunked_monte_carlo(trials, seed, |chunk_seed, chunk_trials| {
        let mut rng = seeding::rng_from(chunk_seed);
        let mut h = 0u64;
        for _ in 0..chunk_trials {
            let mut sum = 0.0f64;
            for &a in coeffs {
                sum += if rng.gen::<bool>() { a } else { -a };
            }
            if sum.abs() > threshold {
                h += 1;
            }
        }
        h
    });
    let (bound_hoeffding, bound_power_form) = tail_bounds(coeffs.len(), sum_sq, threshold);
    Ok(TailEstimate {
        threshold,
        empirical_probability: hits as f64 / trials as f64,
        bound_hoeffding,
        bound_power_form,
        power_form_c0: TAIL_EXPONENT_C0,
        source: TailSource::MonteCarlo { trials },
    })
}

/// Estimates the q-th moment (E|Σ ε_i α_i|^q)^{1/q} with the coefficients
/// normalized to Σα² = 1, and returns (moment, moment/√q).
pub fn khintchine_moment_check(
    coeffs: &[f64],
    q: f64,
    trials: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if !(q >= 1.0) {
        return Err(Error::OutOfRange(format!("moment order must be ≥ 1, got {q}")));
    }
    if trials == 0 {
        return Err(Error::OutOfRange("trials must be at least 1".into()));
    }
    let sum_sq = check_coeffs(coeffs)?;
    if sum_sq == 0.0 {
        return Err(Error::OutOfRange("coefficients are identically zero".into()));
    }
    let scale = sum_sq.sqrt();
    let normalized: Vec<f64> = coeffs.iter().map(|a| a / scale).collect();
    // accumulate per-chunk sums of |S|^q in fixed-point-free f64; chunk order
    // is deterministic so the final sum is too
    let chunks = trials.div_ceil(MC_CHUNK);
    let total: f64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let chunk_trials = MC_CHUNK.min(trials - c * MC_CHUNK);
            let mut rng = seeding::rng_from(seeding::derive_seed(seed, c));
            let mut acc = 0.0f64;
            for _ in 0..chunk_trials {
                let mut sum = 0.0f64;
                for &a in &normalized {
                    sum += if rng.gen::<bool>() { a } else { -a };
                }
                acc += sum.abs().powf(q);
            }
            acc
        })
        .sum();
    let moment = (total / trials as f64).powf(1.0 / q);
    Ok((moment, moment / q.sqrt()))
}

/// Samples sign vectors ε ∈ {±1}^n and returns the first one with
/// max_j |Σ_i ε_i F[i,j]| ≤ (5/4)·α·√(n·ln n), together with the fraction of
/// all samples that met the bound. Errors with `NotFound` when no sample
/// qualifies, which signals that α is too small for this matrix.
pub fn lemma2_sign_search(
    functionals: &Mat,
    alpha: f64,
    samples: u64,
    seed: u64,
) -> Result<(Vec<i8>, f64)> {
    let n = functionals.rows();
    if n < 2 {
        return Err(Error::OutOfRange(format!(
            "sign search needs at least 2 rows, got {n}"
        )));
    }
    if samples == 0 {
        return Err(Error::OutOfRange("samples must be at least 1".into()));
    }
    if !functionals.is_finite() {
        return Err(Error::NonFinite("functional matrix"));
    }
    let bound = 1.25 * alpha * (n as f64 * clamped_ln(n)).sqrt();
    let cols = functionals.cols();
    let mut rng = seeding::rng_from(seed);
    let mut good = 0u64;
    let mut first_good: Option<Vec<i8>> = None;
    for _ in 0..samples {
        let signs: Vec<i8> = (0..n)
            .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
            .collect();
        let mut worst = 0.0f64;
        for j in 0..cols {
            let mut sum = 0.0;
            for i in 0..n {
                sum += signs[i] as f64 * functionals.get(i, j);
            }
            worst = worst.max(sum.abs());
            if worst > bound {
                break;
            }
        }
        if worst <= bound {
            good += 1;
            if first_good.is_none() {
                first_good = Some(signs);
            }
        }
    }
    match first_good {
        Some(signs) => Ok((signs, good as f64 / samples as f64)),
        None => Err(Error::NotFound { samples }),
    }
}
