//! Witness construction: from a factorization Id = P∘T and a sign vector ε,
//! build w ∈ ℓ_∞^K with P(w) = Σ ε_i e_i and controlled sup-norm.
//!
//! The pipeline mirrors the constructive argument it implements: combine the
//! embedding columns into R = Σ ε_i T(e_i), extend the functional prescribed
//! by R on the span of the kernel rows at the distinguished atoms with
//! minimal sup-norm, fold the defect R − h back through the kernel
//! representation to get a correction α ∈ ker P, and set w = R − α. Off the
//! distinguished atoms w equals the extension h; on them it equals R. The
//! quasi-norm of Σ ε_i e_i divided by ‖w‖_∞ is then a certified lower bound
//! for the norm of P.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clamped_ln;
use crate::error::{Error, Result};
use crate::extension::{min_sup_norm_extension, ExtensionProblem};
use crate::factorization::Factorization;
use crate::kernel::{kernel_representation, KernelRepresentation};
use crate::linalg::Mat;
use crate::quasinorm::{p_quasinorm, sup_norm, OperatorMatrix, Orientation, PExponent};
use crate::seeding;
use rand::Rng;

/// A constructed witness and the quantities derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessResult {
    /// The sign vector ε.
    #[serde(rename = "epsilon")]
    pub signs: Vec<i8>,
    /// Minimal sup-norm extension h on the K atoms.
    #[serde(rename = "h")]
    pub extension: Vec<f64>,
    /// Kernel correction α; P·α = 0.
    #[serde(rename = "alpha")]
    pub kernel_correction: Vec<f64>,
    /// w = R − α with P·w = Σ ε_i e_i.
    #[serde(rename = "w")]
    pub witness: Vec<f64>,
    #[serde(rename = "sup_w")]
    pub sup_witness: f64,
    /// sup_w / √(n·max(ln n, 1)), the measured constant of the construction.
    pub ratio: f64,
    /// ‖Σ ε_i e_i‖_p / sup_w, a lower bound for the norm of P.
    pub implied_lower_bound: f64,
}

fn check_signs(signs: &[i8], n: usize) -> Result<()> {
    if signs.len() != n {
        return Err(Error::Dimension(format!(
            "sign vector has {} entries, expected {n}",
            signs.len()
        )));
    }
    if signs.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::OutOfRange("sign vector entries must be ±1".into()));
    }
    Ok(())
}

/// R = Σ_i ε_i·T(e_i): the embedding columns combined by a sign vector.
pub fn signed_image(signs: &[i8], embed: &OperatorMatrix) -> Result<Vec<f64>> {
    if embed.orientation() != Orientation::IntoSupSpace {
        return Err(Error::Orientation("signed_image needs an operator into the sup space"));
    }
    check_signs(signs, embed.cols())?;
    let mat = embed.mat();
    Ok((0..mat.rows())
        .map(|t| {
            signs
                .iter()
                .enumerate()
                .map(|(i, &s)| s as f64 * mat.get(t, i))
                .sum()
        })
        .collect())
}

fn construct_with(
    f: &Factorization,
    rep: &KernelRepresentation,
    signs: &[i8],
) -> Result<WitnessResult> {
    let n = f.n();
    let k = f.k();
    check_signs(signs, n)?;
    let r = signed_image(signs, f.embed())?;
    let measure = 1.0 / k as f64;

    // functionals: the kernel rows at the distinguished atoms
    let mut m = Mat::zeros(n, k);
    for (row, &atom) in rep.distinguished.iter().enumerate() {
        for t in 0..k {
            m.set(row, t, rep.w.get(atom, t));
        }
    }
    let prob = ExtensionProblem::for_vector(m, &r, measure)?;
    let sol = min_sup_norm_extension(&prob)?;
    let h = sol.extension;

    // α(s) = Σ_t (R_t − h_t)·W[s,t]; the 1/measure of the integral cancels
    // against the atom measure
    let defect: Vec<f64> = r.iter().zip(&h).map(|(a, b)| a - b).collect();
    let alpha = rep.w.mul_vec(&defect)?;
    let witness: Vec<f64> = r.iter().zip(&alpha).map(|(a, b)| a - b).collect();
    let sup_witness = sup_norm(&witness);
    if sup_witness <= 0.0 {
        return Err(Error::Numerics("witness collapsed to zero".into()));
    }
    let signs_f64: Vec<f64> = signs.iter().map(|&s| s as f64).collect();
    let implied_lower_bound = p_quasinorm(&signs_f64, f.p()) / sup_witness;
    Ok(WitnessResult {
        signs: signs.to_vec(),
        extension: h,
        kernel_correction: alpha,
        witness,
        sup_witness,
        ratio: sup_witness / (n as f64 * clamped_ln(n)).sqrt(),
        implied_lower_bound,
    })
}

/// Runs the construction for one sign vector. Rank or pivot failures from the
/// kernel machinery propagate unchanged.
pub fn construct_witness(f: &Factorization, signs: &[i8]) -> Result<WitnessResult> {
    let rep = kernel_representation(f.retract())?;
    construct_with(f, &rep, signs)
}

/// Samples `tries` sign vectors and keeps the witness with the smallest
/// sup-norm; ties break lexicographically on the sign vector, so the result
/// does not depend on scheduling. Individual failures are skipped.
pub fn search_witness(f: &Factorization, tries: u64, seed: u64) -> Result<WitnessResult> {
    if tries == 0 {
        return Err(Error::OutOfRange("tries must be at least 1".into()));
    }
    let rep = kernel_representation(f.retract())?;
    let n = f.n();
    let best = (0..tries)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = seeding::rng_from(seeding::derive_seed(seed, i));
            let signs: Vec<i8> = (0..n)
                .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
                .collect();
            construct_with(f, &rep, &signs).ok()
        })
        .reduce_with(|a, b| {
            if (b.sup_witness, &b.signs) < (a.sup_witness, &a.signs) {
                b
            } else {
                a
            }
        });
    best.ok_or(Error::AllDrawsFailed(tries))
}

/// ‖Σ ε_i e_i‖_p / sup_w, which by homogeneity is a lower bound for the true
/// norm of P: the rescaled witness w/sup_w sits in the unit ball and P maps
/// it onto Σ ε_i e_i / sup_w.
pub fn lower_bound_from_witness(f: &Factorization, w: &WitnessResult) -> f64 {
    let signs_f64: Vec<f64> = w.signs.iter().map(|&s| s as f64).collect();
    p_quasinorm(&signs_f64, f.p()) / w.sup_witness
}

/// Scaling ingredients for the unit-vector basis of ℓ_p^n: every sign choice
/// gives ‖Σ ±e_i‖_p = n^{1/p}, and stripping the √log factor from the lower
/// bound leaves the exponent 1/p − 1/2.
pub fn scaling_prediction(n: usize, p: PExponent) -> (f64, f64) {
    ((n as f64).powf(1.0 / p.get()), 1.0 / p.get() - 0.5)
}

impl WitnessResult {
    /// Worst violation of the defining equations, recomputed from the
    /// factorization: P·w = Σ ε_i e_i, P·α = 0, w = R − α, and w = h off the
    /// distinguished atoms.
    pub fn max_equation_violation(&self, f: &Factorization) -> Result<f64> {
        let rep = kernel_representation(f.retract())?;
        let image = f.retract().mat().mul_vec(&self.witness)?;
        let mut worst = 0.0f64;
        for (i, v) in image.iter().enumerate() {
            worst = worst.max((v - self.signs[i] as f64).abs());
        }
        let alpha_image = f.retract().mat().mul_vec(&self.kernel_correction)?;
        for v in alpha_image {
            worst = worst.max(v.abs());
        }
        let r = signed_image(&self.signs, f.embed())?;
        for t in 0..f.k() {
            worst = worst.max((self.witness[t] - (r[t] - self.kernel_correction[t])).abs());
        }
        let mut distinguished = vec![false; f.k()];
        for &atom in &rep.distinguished {
            distinguished[atom] = true;
        }
        for t in 0..f.k() {
            if distinguished[t] {
                // the correction vanishes on distinguished atoms, so the
                // witness coincides with the combined image there
                worst = worst.max((self.witness[t] - r[t]).abs());
            } else {
                worst = worst.max((self.witness[t] - self.extension[t]).abs());
            }
        }
        Ok(worst)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
