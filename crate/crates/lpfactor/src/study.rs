//! Scaling study: sweep a grid of (n, p), run the witness search on the
//! explicit factorization for each cell, and fit log-log slopes of the
//! resulting bounds against n.
//!
//! The certified lower bound behaves like n^{1/p−1/2} up to a √log factor;
//! multiplying it by √(max(ln n,1)) before fitting isolates the polynomial
//! exponent. The upper-bound column is the closed formula n^{1/p−1/2}, so its
//! fitted slope recovers the exponent to machine precision and anchors the
//! comparison.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clamped_ln;
use crate::error::{Error, Result};
use crate::factorization::build_explicit_factorization;
use crate::quasinorm::{norm_from_sup_exact, PExponent};
use crate::seeding;
use crate::tol;
use crate::witness::{lower_bound_from_witness, search_witness};

/// Grid and sampling parameters for one study run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub n_grid: Vec<usize>,
    pub p_list: Vec<f64>,
    pub tries_per_cell: u64,
    pub seed: u64,
    #[serde(rename = "exact_norm_max_K")]
    pub exact_norm_max_k: usize,
    pub output_path: String,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n_grid: vec![8, 16, 32, 64, 128],
            p_list: vec![0.5, 1.0],
            tries_per_cell: 64,
            seed: 7,
            exact_norm_max_k: tol::DEFAULT_EXACT_NORM_MAX_K,
            output_path: "study.csv".into(),
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::OutOfRange("n_grid is empty".into()));
        }
        if !self.n_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::OutOfRange("n_grid must be strictly ascending".into()));
        }
        if self.p_list.is_empty() {
            return Err(Error::OutOfRange("p_list is empty".into()));
        }
        for &p in &self.p_list {
            PExponent::new(p)?;
        }
        if self.tries_per_cell == 0 {
            return Err(Error::OutOfRange("tries_per_cell must be at least 1".into()));
        }
        Ok(())
    }
}

/// One (n, p) cell of the study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub p: f64,
    pub upper_formula: f64,
    #[serde(rename = "exact_norm_P")]
    pub exact_norm_p: Option<f64>,
    pub witness_sup_w: f64,
    pub witness_ratio: f64,
    pub lower_bound: f64,
    pub lower_bound_adj: f64,
}

/// Log-log fits for one exponent p.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PFit {
    pub p: f64,
    pub lower_adj_slope: f64,
    pub lower_adj_intercept: f64,
    pub lower_adj_r2: f64,
    pub upper_slope: f64,
}

/// A cell the engine could not complete; the study records it and moves on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub n: usize,
    pub p: f64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub fits: Vec<PFit>,
    pub failures: Vec<CellFailure>,
    /// max/min of witness_ratio across all successful cells.
    pub ratio_spread: f64,
}

/// Least-squares line through (ln x, ln y). Errors on fewer than two distinct
/// x values or on non-positive coordinates.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::DegenerateInput("log-log fit needs positive coordinates".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    if sxx <= 1e-30 {
        return Err(Error::DegenerateInput("all x values coincide".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = logs
        .iter()
        .map(|p| {
            let fit = intercept + slope * p.0;
            (p.1 - fit) * (p.1 - fit)
        })
        .sum();
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    let r2 = if ss_tot <= 1e-30 {
        if ss_res <= 1e-30 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok((slope, intercept, r2))
}

fn run_cell(cfg: &StudyConfig, n: usize, p: f64, cell_seed: u64) -> Result<StudyRow> {
    let pe = PExponent::new(p)?;
    let f = build_explicit_factorization(n, pe)?;
    let w = search_witness(&f, cfg.tries_per_cell, cell_seed)?;
    let exact_norm_p = if f.k() <= cfg.exact_norm_max_k {
        Some(norm_from_sup_exact(f.retract(), pe, cfg.exact_norm_max_k)?)
    } else {
        None
    };
    let lower_bound = lower_bound_from_witness(&f, &w);
    Ok(StudyRow {
        n,
        k: f.k(),
        p,
        upper_formula: (n as f64).powf(1.0 / p - 0.5),
        exact_norm_p,
        witness_sup_w: w.sup_witness,
        witness_ratio: w.ratio,
        lower_bound,
        lower_bound_adj: lower_bound * clamped_ln(n).sqrt(),
    })
}

/// Runs every cell of the grid (in parallel, with per-cell derived seeds so
/// the outcome is deterministic), collects rows in grid order, and fits the
/// per-p slopes.
pub fn run_scaling_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = (0..cfg.p_list.len())
        .flat_map(|pi| (0..cfg.n_grid.len()).map(move |ni| (pi, ni)))
        .collect();
    let outcomes: Vec<std::result::Result<StudyRow, CellFailure>> = cells
        .par_iter()
        .enumerate()
        .map(|(cell_index, &(pi, ni))| {
            let n = cfg.n_grid[ni];
            let p = cfg.p_list[pi];
            run_cell(cfg, n, p, seeding::derive_seed(cfg.seed, cell_index as u64)).map_err(|e| {
                CellFailure {
                    n,
                    p,
                    message: e.to_string(),
                }
            })
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(fail) => failures.push(fail),
        }
    }

    let mut fits = Vec::new();
    for &p in &cfg.p_list {
        let cell_rows: Vec<&StudyRow> = rows.iter().filter(|r| r.p == p).collect();
        if cell_rows.len() < 2 {
            continue;
        }
        let lower_pts: Vec<(f64, f64)> = cell_rows
            .iter()
            .map(|r| (r.n as f64, r.lower_bound_adj))
            .collect();
        let upper_pts: Vec<(f64, f64)> = cell_rows
            .iter()
            .map(|r| (r.n as f64, r.upper_formula))
            .collect();
        let (lower_adj_slope, lower_adj_intercept, lower_adj_r2) = fit_loglog_slope(&lower_pts)?;
        let (upper_slope, _, _) = fit_loglog_slope(&upper_pts)?;
        fits.push(PFit {
            p,
            lower_adj_slope,
            lower_adj_intercept,
            lower_adj_r2,
            upper_slope,
        });
    }

    let ratios: Vec<f64> = rows.iter().map(|r| r.witness_ratio).collect();
    let ratio_spread = match (
        ratios.iter().cloned().fold(f64::INFINITY, f64::min),
        ratios.iter().cloned().fold(0.0f64, f64::max),
    ) {
        (min, max) if min > 0.0 && min.is_finite() => max / min,
        _ => f64::NAN,
    };

    Ok(StudyReport {
        rows,
        fits,
        failures,
        ratio_spread,
    })
}

/// Writes rows with the fixed header
/// `n,K,p,upper_formula,exact_norm_P,witness_sup_w,witness_ratio,lower_bound,lower_bound_adj`.
pub fn write_csv<W: Write>(rows: &[StudyRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<StudyRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_power_law() {
        let points: Vec<(f64, f64)> = (1..=6).map(|i| (i as f64, (i as f64).powf(1.5))).collect();
        let (slope, _, r2) = fit_loglog_slope(&points).unwrap();
        assert!((slope - 1.5).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_of_constant_is_flat() {
        let points = vec![(1.0, 3.0), (2.0, 3.0), (4.0, 3.0)];
        let (slope, intercept, r2) = fit_loglog_slope(&points).unwrap();
        assert!(slope.abs() < 1e-12);
        assert!((intercept - 3.0f64.ln()).abs() < 1e-12);
        assert_eq!(r2, 1.0);
    }

    #[test]
    fn fit_with_multiplicative_noise() {
        // y = 2·x^0.5 with ±1% deterministic wobble
        let points: Vec<(f64, f64)> = [8.0f64, 16.0, 32.0, 64.0, 128.0]
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let wobble = 1.0 + 0.01 * if i % 2 == 0 { 1.0 } else { -1.0 };
                (x, 2.0 * x.sqrt() * wobble)
            })
            .collect();
        let (slope, _, _) = fit_loglog_slope(&points).unwrap();
        assert!((slope - 0.5).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(fit_loglog_slope(&[(1.0, 1.0)]).is_err());
        assert!(fit_loglog_slope(&[(2.0, 1.0), (2.0, 3.0)]).is_err());
        assert!(fit_loglog_slope(&[(1.0, 1.0), (-2.0, 3.0)]).is_err());
    }

    #[test]
    fn small_study_runs_and_round_trips() {
        let cfg = StudyConfig {
            n_grid: vec![4, 8, 16],
            p_list: vec![0.5, 1.0],
            tries_per_cell: 8,
            seed: 3,
            exact_norm_max_k: 16,
            output_path: "unused.csv".into(),
        };
        let report = run_scaling_study(&cfg).unwrap();
        assert_eq!(report.rows.len(), 6);
        assert!(report.failures.is_empty());

        // sandwich in every row where the exact norm is available
        for row in &report.rows {
            if let Some(exact) = row.exact_norm_p {
                assert!(row.lower_bound <= exact + tol::DEFAULT_ABS, "row {row:?}");
                assert!(exact <= row.upper_formula + tol::DEFAULT_ABS, "row {row:?}");
            }
        }

        let mut buf = Vec::new();
        write_csv(&report.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "n,K,p,upper_formula,exact_norm_P,witness_sup_w,witness_ratio,lower_bound,lower_bound_adj\n"
        ));
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, report.rows);
    }

    #[test]
    fn study_is_deterministic() {
        let cfg = StudyConfig {
            n_grid: vec![4, 8],
            p_list: vec![1.0],
            tries_per_cell: 4,
            seed: 11,
            exact_norm_max_k: 8,
            output_path: "unused.csv".into(),
        };
        let a = run_scaling_study(&cfg).unwrap();
        let b = run_scaling_study(&cfg).unwrap();
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        write_csv(&a.rows, &mut buf_a).unwrap();
        write_csv(&b.rows, &mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b, "identical config and seed must give identical bytes");
    }

    #[test]
    fn upper_slope_matches_formula_exactly() {
        let cfg = StudyConfig {
            n_grid: vec![8, 16, 32, 64, 128],
            p_list: vec![1.0, 0.5],
            tries_per_cell: 1,
            seed: 0,
            exact_norm_max_k: 0, // skip exact norms, formula fit only
            output_path: "unused.csv".into(),
        };
        let report = run_scaling_study(&cfg).unwrap();
        for fit in &report.fits {
            let expected = 1.0 / fit.p - 0.5;
            assert!(
                (fit.upper_slope - expected).abs() <= 1e-12,
                "p={} slope {}",
                fit.p,
                fit.upper_slope
            );
        }
    }

    #[test]
    fn config_default_round_trips_through_json() {
        let cfg = StudyConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("exact_norm_max_K"));
        let back: StudyConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);

        // partial configs fall back to defaults
        let partial: StudyConfig = serde_json::from_str(r#"{"seed": 42}"#).unwrap();
        assert_eq!(partial.seed, 42);
        assert_eq!(partial.n_grid, StudyConfig::default().n_grid);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = StudyConfig::default();
        cfg.n_grid = vec![8, 8];
        assert!(cfg.validate().is_err());
        cfg.n_grid = vec![];
        assert!(cfg.validate().is_err());
        let mut cfg = StudyConfig::default();
        cfg.p_list = vec![1.5];
        assert!(cfg.validate().is_err());
        let mut cfg = StudyConfig::default();
        cfg.tries_per_cell = 0;
        assert!(cfg.validate().is_err());
    }
}
