//! Dense two-phase tableau simplex for equality-form linear programs:
//! minimize c·x subject to A·x = b, x ≥ 0.
//!
//! The extension problems this solver exists for are heavily degenerate
//! (most right-hand sides are zero), so the implementation leans on the
//! standard stabilizers: rows are equilibrated to unit max, singleton
//! columns seed the initial basis so artificials only cover the rest,
//! pricing is steepest-coefficient with a permanent switch to Bland's rule
//! when the objective stalls, and reduced costs are refreshed from scratch
//! periodically to cap drift. Rules are deterministic functions of the
//! tableau, so every run is reproducible. Redundant rows discovered in
//! phase one are dropped and their multipliers reported as zero. The dual
//! vector is recovered at the end by solving Bᵀy = c_B against the
//! original columns, so weak-duality checks go through the caller's own
//! data.

use crate::error::{Error, Result};
use crate::linalg::{solve_square, Mat};
use crate::tol;

/// Equality-form LP data.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub constraints: Mat,
    pub rhs: Vec<f64>,
    pub objective: Vec<f64>,
}

/// Primal solution with the dual multipliers of the final basis.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub duals: Vec<f64>,
}

const MAX_PIVOTS: usize = 100_000;
/// Pivots without objective progress before switching to Bland's rule.
const STALL_LIMIT: usize = 200;
/// Reduced costs are recomputed from scratch this often.
const REFRESH_EVERY: usize = 256;
/// Reduced costs less negative than this are treated as zero when their
/// column offers no pivot; a genuine unbounded ray must beat it.
const UNBOUNDED_THRESHOLD: f64 = 1e-6;

struct Tableau {
    rows: usize,
    width: usize, // variables + 1 rhs column
    data: Vec<f64>,
    obj: Vec<f64>, // reduced costs + negated objective value
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn objective_value(&self) -> f64 {
        -self.obj[self.width - 1]
    }

    /// Recomputes the reduced-cost row from the cost vector (one entry per
    /// variable column).
    fn refresh_obj(&mut self, costs: &[f64]) {
        let w = self.width;
        for j in 0..w - 1 {
            let mut red = costs[j];
            for i in 0..self.rows {
                let cb = costs[self.basis[i]];
                if cb != 0.0 {
                    red -= cb * self.at(i, j);
                }
            }
            self.obj[j] = red;
        }
        let mut value = 0.0;
        for i in 0..self.rows {
            value += costs[self.basis[i]] * self.rhs(i);
        }
        self.obj[w - 1] = -value;
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(row, col);
        for j in 0..w {
            self.data[row * w + j] *= inv;
        }
        self.data[row * w + col] = 1.0;
        for i in 0..self.rows {
            if i == row {
                continue;
            }
            let factor = self.at(i, col);
            if factor == 0.0 {
                continue;
            }
            for j in 0..w {
                self.data[i * w + j] -= factor * self.data[row * w + j];
            }
            self.data[i * w + col] = 0.0;
        }
        let factor = self.obj[col];
        if factor != 0.0 {
            for j in 0..w {
                self.obj[j] -= factor * self.data[row * w + j];
            }
            self.obj[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Leaving row for an entering column: minimum ratio, ties resolved by
    /// largest pivot magnitude (or lowest basic index under Bland's rule).
    fn ratio_test(&self, entering: usize, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.rows {
            let t = self.at(i, entering);
            if t <= tol::SIMPLEX_EPS {
                continue;
            }
            let ratio = self.rhs(i) / t;
            let better = match best {
                None => true,
                Some((bi, br)) => {
                    if ratio < br - 1e-9 {
                        true
                    } else if ratio > br + 1e-9 {
                        false
                    } else if bland {
                        self.basis[i] < self.basis[bi]
                    } else {
                        t > self.at(bi, entering)
                    }
                }
            };
            if better {
                best = Some((i, ratio));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Pivots until no eligible column has a reduced cost below −eps.
    fn run(&mut self, eligible: usize, costs: &[f64]) -> Result<()> {
        let mut bland = false;
        let mut stall = 0usize;
        let mut last_value = self.objective_value();
        let mut skipped = vec![false; eligible];
        for iter in 0..MAX_PIVOTS {
            if iter > 0 && iter % REFRESH_EVERY == 0 {
                self.refresh_obj(costs);
            }
            skipped.iter_mut().for_each(|s| *s = false);
            let pivot = loop {
                let entering = if bland {
                    (0..eligible).find(|&j| !skipped[j] && self.obj[j] < -tol::SIMPLEX_EPS)
                } else {
                    let mut best: Option<(usize, f64)> = None;
                    for j in 0..eligible {
                        if skipped[j] || self.obj[j] >= -tol::SIMPLEX_EPS {
                            continue;
                        }
                        if best.map_or(true, |(_, b)| self.obj[j] < b) {
                            best = Some((j, self.obj[j]));
                        }
                    }
                    best.map(|(j, _)| j)
                };
                let entering = match entering {
                    Some(j) => j,
                    None => return Ok(()), // optimal
                };
                match self.ratio_test(entering, bland) {
                    Some(row) => break Some((row, entering)),
                    None => {
                        if self.obj[entering] < -UNBOUNDED_THRESHOLD {
                            return Err(Error::Unbounded);
                        }
                        // numerically zero direction; ignore this column
                        skipped[entering] = true;
                    }
                }
            };
            if let Some((row, col)) = pivot {
                self.pivot(row, col);
            }
            let value = self.objective_value();
            if last_value - value > 1e-12 {
                stall = 0;
                last_value = value;
            } else {
                stall += 1;
                if stall > STALL_LIMIT {
                    bland = true;
                }
            }
        }
        Err(Error::Numerics("simplex exceeded pivot budget".into()))
    }
}

/// Solves the LP. Errors: `Infeasible` when phase one cannot zero the
/// artificials, `Unbounded` when a column offers unbounded descent.
pub fn solve(lp: &StandardLp) -> Result<LpSolution> {
    let m = lp.constraints.rows();
    let nv = lp.constraints.cols();
    if lp.rhs.len() != m || lp.objective.len() != nv {
        return Err(Error::Dimension(format!(
            "LP shapes disagree: {m} rows, {} rhs entries, {nv} columns, {} costs",
            lp.rhs.len(),
            lp.objective.len()
        )));
    }
    if !lp.constraints.is_finite()
        || lp.rhs.iter().any(|v| !v.is_finite())
        || lp.objective.iter().any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("linear program"));
    }

    // equilibrate rows to unit max and flip signs so the rhs is nonnegative
    let width = nv + m + 1;
    let mut data = vec![0.0f64; m * width];
    for i in 0..m {
        let row_max = (0..nv)
            .map(|j| lp.constraints.get(i, j).abs())
            .fold(0.0f64, f64::max);
        let mut s = if row_max > 0.0 { 1.0 / row_max } else { 1.0 };
        if lp.rhs[i] * s < 0.0 {
            s = -s;
        }
        for j in 0..nv {
            data[i * width + j] = s * lp.constraints.get(i, j);
        }
        data[i * width + nv + i] = 1.0;
        data[i * width + width - 1] = s * lp.rhs[i];
    }
    let mut tab = Tableau {
        rows: m,
        width,
        data,
        obj: vec![0.0; width],
        basis: (nv..nv + m).collect(),
    };

    // crash: singleton columns with a solid positive entry replace the
    // artificial of their row
    for j in 0..nv {
        let mut nonzero_rows = (0..m).filter(|&i| tab.at(i, j) != 0.0);
        if let (Some(i), None) = (nonzero_rows.next(), nonzero_rows.next()) {
            if tab.basis[i] >= nv && tab.at(i, j) > 0.25 {
                let inv = 1.0 / tab.at(i, j);
                for col in 0..width {
                    tab.data[i * width + col] *= inv;
                }
                tab.data[i * width + j] = 1.0;
                tab.basis[i] = j;
            }
        }
    }

    // phase one: minimize the sum of the remaining artificials
    let mut phase1_costs = vec![0.0f64; nv + m];
    phase1_costs[nv..].fill(1.0);
    tab.refresh_obj(&phase1_costs);
    tab.run(nv, &phase1_costs)?;
    let infeasibility = tab.objective_value();
    if infeasibility > tol::DUALITY_GAP {
        return Err(Error::Infeasible(infeasibility));
    }

    // drive leftover artificials out of the basis; rows that offer no pivot
    // are redundant and get dropped
    let mut dead_rows = Vec::new();
    for i in 0..m {
        if tab.basis[i] < nv {
            continue;
        }
        let pivot_col = (0..nv).find(|&j| tab.at(i, j).abs() > tol::SIMPLEX_EPS);
        match pivot_col {
            Some(j) => tab.pivot(i, j),
            None => dead_rows.push(i),
        }
    }

    // phase two on a fresh tableau without artificial columns or dead rows
    let kept: Vec<usize> = (0..m).filter(|i| !dead_rows.contains(i)).collect();
    let rows2 = kept.len();
    let width2 = nv + 1;
    let mut data2 = vec![0.0f64; rows2 * width2];
    let mut basis2 = Vec::with_capacity(rows2);
    for (r, &i) in kept.iter().enumerate() {
        for j in 0..nv {
            data2[r * width2 + j] = tab.at(i, j);
        }
        data2[r * width2 + nv] = tab.rhs(i).max(0.0);
        basis2.push(tab.basis[i]);
    }
    let mut tab2 = Tableau {
        rows: rows2,
        width: width2,
        data: data2,
        obj: vec![0.0; width2],
        basis: basis2,
    };
    tab2.refresh_obj(&lp.objective);
    tab2.run(nv, &lp.objective)?;

    let mut x = vec![0.0f64; nv];
    for r in 0..rows2 {
        x[tab2.basis[r]] = tab2.rhs(r).max(0.0);
    }
    let value = lp
        .objective
        .iter()
        .zip(&x)
        .map(|(c, v)| c * v)
        .sum::<f64>();

    // duals from Bᵀy = c_B over the original columns of the kept rows
    let mut duals = vec![0.0f64; m];
    if rows2 > 0 {
        let mut basis_mat = Mat::zeros(rows2, rows2);
        for (r, &orig_row) in kept.iter().enumerate() {
            for (c, &var) in tab2.basis.iter().enumerate() {
                basis_mat.set(r, c, lp.constraints.get(orig_row, var));
            }
        }
        let cb = Mat::from_vec(
            rows2,
            1,
            tab2.basis.iter().map(|&v| lp.objective[v]).collect(),
        )?;
        let y = solve_square(&basis_mat.transpose(), &cb)?;
        for (r, &orig_row) in kept.iter().enumerate() {
            duals[orig_row] = y.get(r, 0);
        }
    }

    Ok(LpSolution { x, value, duals })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(rows: &[Vec<f64>], rhs: &[f64], obj: &[f64]) -> StandardLp {
        StandardLp {
            constraints: Mat::from_rows(rows).unwrap(),
            rhs: rhs.to_vec(),
            objective: obj.to_vec(),
        }
    }

    fn assert_dual_certificate(p: &StandardLp, s: &LpSolution) {
        // dual feasibility Aᵀy ≤ c and strong duality bᵀy = value
        let m = p.constraints.rows();
        let nv = p.constraints.cols();
        for j in 0..nv {
            let col_dot: f64 = (0..m).map(|i| p.constraints.get(i, j) * s.duals[i]).sum();
            assert!(col_dot <= p.objective[j] + 1e-7, "column {j}: {col_dot}");
        }
        let dual_value: f64 = p.rhs.iter().zip(&s.duals).map(|(b, y)| b * y).sum();
        assert!((dual_value - s.value).abs() <= 1e-7, "gap {}", dual_value - s.value);
    }

    #[test]
    fn textbook_two_variable_lp() {
        // min −3x − 5y with x + s1 = 4, 2y + s2 = 12, 3x + 2y + s3 = 18
        let p = lp(
            &[
                vec![1.0, 0.0, 1.0, 0.0, 0.0],
                vec![0.0, 2.0, 0.0, 1.0, 0.0],
                vec![3.0, 2.0, 0.0, 0.0, 1.0],
            ],
            &[4.0, 12.0, 18.0],
            &[-3.0, -5.0, 0.0, 0.0, 0.0],
        );
        let s = solve(&p).unwrap();
        assert!((s.value + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9);
        assert!((s.x[1] - 6.0).abs() < 1e-9);
        assert_dual_certificate(&p, &s);
    }

    #[test]
    fn negative_rhs_rows_are_flipped() {
        // x − y = −2, x + y = 4  →  x = 1, y = 3
        let p = lp(
            &[vec![1.0, -1.0], vec![1.0, 1.0]],
            &[-2.0, 4.0],
            &[1.0, 1.0],
        );
        let s = solve(&p).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-9);
        assert!((s.x[1] - 3.0).abs() < 1e-9);
        assert_dual_certificate(&p, &s);
    }

    #[test]
    fn detects_infeasible() {
        // x = 1 and x = 2 cannot both hold
        let p = lp(&[vec![1.0], vec![1.0]], &[1.0, 2.0], &[0.0]);
        match solve(&p) {
            Err(Error::Infeasible(_)) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn detects_unbounded() {
        // min −x with x − y = 0: x can grow forever
        let p = lp(&[vec![1.0, -1.0]], &[0.0], &[-1.0, 0.0]);
        match solve(&p) {
            Err(Error::Unbounded) => {}
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn redundant_rows_get_zero_multipliers() {
        // second row is twice the first
        let p = lp(
            &[vec![1.0, 1.0], vec![2.0, 2.0]],
            &[2.0, 4.0],
            &[1.0, 2.0],
        );
        let s = solve(&p).unwrap();
        assert!((s.value - 2.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9);
        assert_dual_certificate(&p, &s);
        assert_eq!(s.duals[1], 0.0);
    }

    #[test]
    fn zero_rows_are_dropped() {
        let p = lp(
            &[vec![0.0, 0.0], vec![1.0, 1.0]],
            &[0.0, 3.0],
            &[2.0, 1.0],
        );
        let s = solve(&p).unwrap();
        assert!((s.value - 3.0).abs() < 1e-9);
        assert_dual_certificate(&p, &s);
    }

    #[test]
    fn degenerate_vertices_terminate() {
        // multiple constraints active at the optimum; the stall guard must
        // not loop
        let p = lp(
            &[
                vec![1.0, 1.0, 1.0, 0.0],
                vec![1.0, -1.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0, 0.0],
            ],
            &[1.0, 1.0, 1.0],
            &[-1.0, -1.0, 0.0, 0.0],
        );
        let s = solve(&p).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-9);
        assert!(s.x[1].abs() < 1e-9);
        assert_dual_certificate(&p, &s);
    }

    #[test]
    fn mostly_zero_rhs_instances_stay_stable() {
        // the shape that used to thrash: many zero right-hand sides coupled
        // through one normalization row
        let p = lp(
            &[
                vec![1.0, -1.0, 0.3, 0.0, 0.0, 0.0],
                vec![0.5, 1.0, 0.0, 0.3, 0.0, 0.0],
                vec![-0.25, 0.75, 0.0, 0.0, 1.0, 0.0],
                vec![0.2, 0.2, 0.2, 0.2, 0.2, 1.0],
            ],
            &[0.0, 0.0, 0.0, 1.0],
            &[-1.0, -0.5, 0.0, 0.0, 0.0, 0.0],
        );
        let s = solve(&p).unwrap();
        assert_dual_certificate(&p, &s);
    }

    #[test]
    fn deterministic_across_runs() {
        let p = lp(
            &[vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]],
            &[6.0, 9.0],
            &[-2.0, -3.0, 0.0, 0.0],
        );
        let a = solve(&p).unwrap();
        let b = solve(&p).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.duals, b.duals);
    }
}
