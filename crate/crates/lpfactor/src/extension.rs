//! Minimal sup-norm extension of a functional prescribed on a subspace.
//!
//! The data is a family of functionals (rows of M, weighted by an atom
//! measure) and target values b. The primal problem, minimizing ‖h‖_∞
//! subject to measure·M·h = b, is the norm-preserving extension step: its optimum equals the norm of the
//! restricted functional on the span of the rows, which
//! [`restricted_functional_norm`] computes independently as the dual program
//! over span coefficients. Both reduce to small equality-form LPs.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::simplex::{solve, StandardLp};

/// Extension data: row i of `functionals` is a functional on ℝ^K under the
/// pairing ⟨g, h⟩ = measure·Σ_t g_t·h_t, and `targets` holds the values the
/// extension must reproduce.
#[derive(Debug, Clone)]
pub struct ExtensionProblem {
    functionals: Mat,
    targets: Vec<f64>,
    measure: f64,
}

impl ExtensionProblem {
    pub fn new(functionals: Mat, targets: Vec<f64>, measure: f64) -> Result<Self> {
        if targets.len() != functionals.rows() {
            return Err(Error::Dimension(format!(
                "{} functionals but {} targets",
                functionals.rows(),
                targets.len()
            )));
        }
        if !(measure > 0.0) || !measure.is_finite() {
            return Err(Error::OutOfRange(format!("measure must be positive, got {measure}")));
        }
        if !functionals.is_finite() || targets.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("extension problem"));
        }
        Ok(ExtensionProblem {
            functionals,
            targets,
            measure,
        })
    }

    /// Consistent targets for a prescribed vector: b = measure·M·r.
    pub fn for_vector(functionals: Mat, r: &[f64], measure: f64) -> Result<Self> {
        let targets = functionals
            .mul_vec(r)?
            .into_iter()
            .map(|v| measure * v)
            .collect();
        Self::new(functionals, targets, measure)
    }

    pub fn functionals(&self) -> &Mat {
        &self.functionals
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn dimension(&self) -> usize {
        self.functionals.cols()
    }
}

/// Dual multipliers returned with the extension, enough to certify
/// optimality by weak duality.
#[derive(Debug, Clone)]
pub struct ExtensionCertificate {
    /// One multiplier per prescribed functional.
    pub multipliers: Vec<f64>,
    /// Σ_i y_i·b_i; equals the optimum at an exact optimum.
    pub dual_objective: f64,
    /// measure·Σ_t |Σ_i y_i·M[i,t]|; dual feasibility requires ≤ 1.
    pub aggregate: f64,
}

/// Solution of the extension problem.
#[derive(Debug, Clone)]
pub struct ExtensionSolution {
    pub extension: Vec<f64>,
    pub optimum: f64,
    pub certificate: ExtensionCertificate,
}

/// Solves min ‖h‖_∞ subject to measure·M·h = b.
///
/// LP variables are the split h = h⁺ − h⁻ plus per-coordinate slacks s and
/// the bound u, coupled by h⁺_t + h⁻_t + s_t = u. A second pass minimizes
/// Σ|h_t| with the sup pinned at the optimum, so coordinates the constraints
/// leave free come back as exact zeros and the returned extension is
/// canonical.
pub fn min_sup_norm_extension(prob: &ExtensionProblem) -> Result<ExtensionSolution> {
    let n = prob.functionals.rows();
    let k = prob.functionals.cols();
    let nv = 3 * k + 1;
    let rows = n + k;
    let mut a = Mat::zeros(rows, nv);
    let mut rhs = vec![0.0f64; rows];
    for i in 0..n {
        for t in 0..k {
            let v = prob.measure * prob.functionals.get(i, t);
            a.set(i, t, v);
            a.set(i, k + t, -v);
        }
        rhs[i] = prob.targets[i];
    }
    for t in 0..k {
        a.set(n + t, t, 1.0);
        a.set(n + t, k + t, 1.0);
        a.set(n + t, 2 * k + t, 1.0);
        a.set(n + t, 3 * k, -1.0);
    }
    let mut objective = vec![0.0f64; nv];
    objective[3 * k] = 1.0;
    let sol = solve(&StandardLp {
        constraints: a.clone(),
        rhs: rhs.clone(),
        objective,
    })?;
    let extension = canonicalize(&a, &rhs, n, k, sol.value)
        .unwrap_or_else(|_| (0..k).map(|t| sol.x[t] - sol.x[k + t]).collect());
    let multipliers: Vec<f64> = sol.duals[..n].to_vec();
    let mut aggregate = 0.0;
    for t in 0..k {
        let combined: f64 = (0..n)
            .map(|i| multipliers[i] * prob.functionals.get(i, t))
            .sum();
        aggregate += prob.measure * combined.abs();
    }
    let dual_objective = multipliers
        .iter()
        .zip(&prob.targets)
        .map(|(y, b)| y * b)
        .sum();
    Ok(ExtensionSolution {
        extension,
        optimum: sol.value,
        certificate: ExtensionCertificate {
            multipliers,
            dual_objective,
            aggregate,
        },
    })
}

/// Second pass of the extension solve: with the sup-norm pinned at
/// `optimum`, minimize Σ(h⁺_t + h⁻_t). Reuses the constraint block with the
/// bound column frozen, i.e. h⁺_t + h⁻_t + s_t = optimum.
fn canonicalize(a: &Mat, rhs: &[f64], n: usize, k: usize, optimum: f64) -> Result<Vec<f64>> {
    let nv = 3 * k;
    let rows = n + k;
    let mut a2 = Mat::zeros(rows, nv);
    let mut rhs2 = rhs.to_vec();
    for i in 0..rows {
        for j in 0..nv {
            a2.set(i, j, a.get(i, j));
        }
    }
    for t in 0..k {
        rhs2[n + t] = optimum;
    }
    let mut objective = vec![0.0f64; nv];
    objective[..2 * k].fill(1.0);
    let sol = solve(&StandardLp {
        constraints: a2,
        rhs: rhs2,
        objective,
    })?;
    Ok((0..k).map(|t| sol.x[t] - sol.x[k + t]).collect())
}

/// Norm of the restricted functional on the span of the rows of M: maximizes
/// Σ_i c_i·b_i over span coefficients c with the L1 bound
/// measure·Σ_t |(Mᵀc)_t| ≤ 1. This is the independent dual route; it must
/// agree with the primal optimum by strong duality.
pub fn restricted_functional_norm(prob: &ExtensionProblem) -> Result<f64> {
    let n = prob.functionals.rows();
    let k = prob.functionals.cols();
    // variables: c⁺ (n), c⁻ (n), g⁺ (K), g⁻ (K), slack
    let nv = 2 * n + 2 * k + 1;
    let rows = k + 1;
    let mut a = Mat::zeros(rows, nv);
    let mut rhs = vec![0.0f64; rows];
    for t in 0..k {
        for i in 0..n {
            let v = prob.functionals.get(i, t);
            a.set(t, i, v);
            a.set(t, n + i, -v);
        }
        a.set(t, 2 * n + t, -1.0);
        a.set(t, 2 * n + k + t, 1.0);
    }
    for t in 0..k {
        a.set(k, 2 * n + t, prob.measure);
        a.set(k, 2 * n + k + t, prob.measure);
    }
    a.set(k, 2 * n + 2 * k, 1.0);
    rhs[k] = 1.0;
    let mut objective = vec![0.0f64; nv];
    for i in 0..n {
        objective[i] = -prob.targets[i];
        objective[n + i] = prob.targets[i];
    }
    let sol = solve(&StandardLp {
        constraints: a,
        rhs,
        objective,
    })?;
    Ok(-sol.value)
}

/// Worst violation among: primal feasibility of h, |h| staying within the
/// optimum, dual feasibility of the certificate, and the duality gap.
pub fn certificate_violation(prob: &ExtensionProblem, sol: &ExtensionSolution) -> f64 {
    let image = prob
        .functionals
        .mul_vec(&sol.extension)
        .expect("extension has K entries");
    let primal_residual = image
        .iter()
        .zip(&prob.targets)
        .fold(0.0f64, |m, (v, b)| m.max((prob.measure * v - b).abs()));
    let sup_h = sol.extension.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bound_violation = (sup_h - sol.optimum).max(0.0);
    let dual_feasibility = (sol.certificate.aggregate - 1.0).max(0.0);
    let gap = (sol.certificate.dual_objective - sol.optimum).abs();
    primal_residual
        .max(bound_violation)
        .max(dual_feasibility)
        .max(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;
    use crate::tol;
    use rand::Rng;

    fn problem(rows: &[Vec<f64>], targets: &[f64], measure: f64) -> ExtensionProblem {
        ExtensionProblem::new(Mat::from_rows(rows).unwrap(), targets.to_vec(), measure).unwrap()
    }

    #[test]
    fn symmetric_two_point_extension() {
        // (1/2)(h₁ + h₂) = 1 forces h = (1,1)
        let prob = problem(&[vec![1.0, 1.0]], &[1.0], 0.5);
        let sol = min_sup_norm_extension(&prob).unwrap();
        assert!((sol.optimum - 1.0).abs() < 1e-9);
        assert!((sol.extension[0] - 1.0).abs() < 1e-9);
        assert!((sol.extension[1] - 1.0).abs() < 1e-9);
        assert!(certificate_violation(&prob, &sol) <= tol::DUALITY_GAP);
    }

    #[test]
    fn zero_targets_give_zero_extension() {
        let prob = problem(&[vec![1.0, -2.0, 3.0]], &[0.0], 1.0 / 3.0);
        let sol = min_sup_norm_extension(&prob).unwrap();
        assert_eq!(sol.optimum, 0.0);
        assert!(sol.extension.iter().all(|v| v.abs() < 1e-12));
        assert_eq!(restricted_functional_norm(&prob).unwrap(), 0.0);
    }

    #[test]
    fn frozen_three_point_example() {
        // optimum = |b|·K/‖row‖₁ = 1·3/3 = 1, h = (1, 1, 0) with the free
        // coordinate canonically at zero
        let prob = problem(&[vec![2.0, 1.0, 0.0]], &[1.0], 1.0 / 3.0);
        let sol = min_sup_norm_extension(&prob).unwrap();
        assert!((sol.optimum - 1.0).abs() < 1e-9);
        assert!((sol.extension[0] - 1.0).abs() < 1e-9);
        assert!((sol.extension[1] - 1.0).abs() < 1e-9);
        assert!(sol.extension[2].abs() < 1e-9);
        assert!(certificate_violation(&prob, &sol) <= tol::DUALITY_GAP);
    }

    #[test]
    fn restricted_norm_mean_functional() {
        // span of (1,1) under measure 1/2: the norm of y ↦ mean(y) is 1
        let prob = problem(&[vec![1.0, 1.0]], &[1.0], 0.5);
        let norm = restricted_functional_norm(&prob).unwrap();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    /// Coarse independent check for one-row problems: the dual reduces to
    /// optimum = |b|/(measure·‖row‖₁).
    #[test]
    fn one_row_closed_form() {
        let rows = vec![vec![0.5, -1.5, 2.0, 0.0]];
        for (b, measure) in [(1.0, 0.25), (-0.75, 0.25), (2.0, 0.1)] {
            let prob = problem(&rows, &[b], measure);
            let closed = b.abs() / (measure * rows[0].iter().map(|v| v.abs()).sum::<f64>());
            let sol = min_sup_norm_extension(&prob).unwrap();
            assert!((sol.optimum - closed).abs() < 1e-9, "b={b}");
            let dual = restricted_functional_norm(&prob).unwrap();
            assert!((dual - closed).abs() < 1e-9, "b={b}");
        }
    }

    #[test]
    fn strong_duality_on_random_instances() {
        for seed in 0..30u64 {
            let mut rng = seeding::rng_from(seed);
            let n = 1 + (seed % 4) as usize;
            let k = n + 1 + (seed % 9) as usize;
            let mut m = Mat::zeros(n, k);
            for i in 0..n {
                for t in 0..k {
                    m.set(i, t, rng.gen_range(-1.0..=1.0));
                }
            }
            let r: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..=2.0)).collect();
            let prob = ExtensionProblem::for_vector(m, &r, 1.0 / k as f64).unwrap();
            let sol = min_sup_norm_extension(&prob).unwrap();
            let dual = restricted_functional_norm(&prob).unwrap();
            assert!(
                (sol.optimum - dual).abs() <= tol::DUALITY_GAP,
                "seed {seed}: primal {} dual {dual}",
                sol.optimum
            );
            assert!(certificate_violation(&prob, &sol) <= tol::DUALITY_GAP, "seed {seed}");
            // prescribing the values of r itself keeps the optimum below ‖r‖_∞
            let sup_r = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!(sol.optimum <= sup_r + 1e-9);
        }
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        assert!(ExtensionProblem::new(Mat::zeros(2, 3), vec![1.0], 0.5).is_err());
        assert!(ExtensionProblem::new(Mat::zeros(1, 2), vec![1.0], 0.0).is_err());
    }
}
