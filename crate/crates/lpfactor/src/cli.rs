//! Command-line harness: tail-bound checks, sign search, explicit
//! factorizations, witness runs, the scaling study, and the exact-norm
//! oracle.
//!
//! Exit codes: 0 on success, 1 on invalid arguments, 2 on engine errors.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::json;

use crate::clamped_ln;
use crate::error::{Error, Result};
use crate::factorization::{
    build_explicit_factorization, random_factorization, validate_factorization, Factorization,
};
use crate::quasinorm::{norm_from_sup_exact, norm_from_sup_search, norm_into_sup, PExponent};
use crate::seeding::derive_seed;
use crate::signs::{khintchine_tail_exact, khintchine_tail_mc, lemma2_sign_search, random_sign_matrix};
use crate::study::{run_scaling_study, write_csv, StudyConfig};
use crate::tol;
use crate::witness::{lower_bound_from_witness, search_witness};

#[derive(Parser)]
#[command(name = "lpfactor", version, about = "Factorization experiments for l_p^n through sup-normed spaces")]
struct Cli {
    /// Root seed for randomized subcommands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (JSON; CSV for `study`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

const DEFAULT_SEED: u64 = 7;

#[derive(Subcommand)]
enum Command {
    /// Tail probabilities of |Σ ε_i| against the closed-form bounds.
    Tail {
        /// Number of equal coefficients.
        #[arg(long, default_value_t = 16)]
        n: usize,
        /// Threshold multipliers; each gives λ = α·√(n·ln n).
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 1.5, 2.0])]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Sample sign vectors keeping every column functional small.
    Lemma2 {
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Number of functionals (columns of the random ±1 matrix).
        #[arg(long, default_value_t = 64)]
        cols: usize,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value_t = 200)]
        samples: u64,
    },
    /// Build and validate the explicit Hadamard factorization.
    Explicit {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        /// Cap on K for exact vertex enumeration of the retraction norm.
        #[arg(long, default_value_t = tol::DEFAULT_EXACT_NORM_MAX_K)]
        max_exact_k: usize,
    },
    /// Construct a witness and report the implied lower bound.
    Witness {
        /// Serialized factorization to load; otherwise one is generated.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        /// Atom count for --random (defaults to n).
        #[arg(long)]
        k: Option<usize>,
        /// Generate a random instance instead of the explicit one.
        #[arg(long, default_value_t = false)]
        random: bool,
        #[arg(long, default_value_t = 64)]
        tries: u64,
        #[arg(long, default_value_t = tol::DEFAULT_EXACT_NORM_MAX_K)]
        max_exact_k: usize,
    },
    /// Scaling study over a grid of (n, p); writes CSV.
    Study {
        /// JSON config; command-line flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        n_grid: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        p_list: Option<Vec<f64>>,
        #[arg(long)]
        tries: Option<u64>,
        #[arg(long)]
        max_exact_k: Option<usize>,
    },
    /// Exact vertex-enumeration value of the retraction norm.
    Oracle {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = tol::DEFAULT_EXACT_NORM_MAX_K)]
        max_exact_k: usize,
        /// Fall back to greedy search with this many restarts when K exceeds
        /// the enumeration cap.
        #[arg(long)]
        search: Option<u64>,
    },
}

/// Parses and runs `argv`, returning the process exit code.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            };
        }
    };
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    match run(cli.command, seed, cli.seed, cli.out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidExponent(_) | Error::OutOfRange(_) | Error::DegenerateInput(_) => 1,
                _ => 2,
            }
        }
    }
}

fn run(command: Command, seed: u64, seed_flag: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    match command {
        Command::Tail { n, alpha, trials } => run_tail(n, &alpha, trials, seed, out),
        Command::Lemma2 {
            n,
            cols,
            alpha,
            samples,
        } => run_lemma2(n, cols, alpha, samples, seed, out),
        Command::Explicit { n, p, max_exact_k } => run_explicit(n, p, max_exact_k, out),
        Command::Witness {
            input,
            n,
            p,
            k,
            random,
            tries,
            max_exact_k,
        } => run_witness(input, n, p, k, random, tries, max_exact_k, seed, out),
        Command::Study {
            config,
            n_grid,
            p_list,
            tries,
            max_exact_k,
        } => run_study(config, n_grid, p_list, tries, max_exact_k, seed_flag, out),
        Command::Oracle {
            input,
            n,
            p,
            max_exact_k,
            search,
        } => run_oracle(input, n, p, max_exact_k, search, seed, out),
    }
}

fn write_out(out: Option<PathBuf>, contents: &str) -> Result<()> {
    if let Some(path) = out {
        std::fs::write(&path, contents)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_tail(n: usize, alphas: &[f64], trials: u64, seed: u64, out: Option<PathBuf>) -> Result<()> {
    if n == 0 {
        return Err(Error::OutOfRange("n must be at least 1".into()));
    }
    let coeffs = vec![1.0f64; n];
    let sum_sq = n as f64;
    let mut records = Vec::new();
    println!("tail of |sum of {n} signs|, thresholds alpha*sqrt(n*ln n):");
    for (i, &alpha) in alphas.iter().enumerate() {
        let threshold = alpha * (sum_sq * clamped_ln(n)).sqrt();
        let exact = if n <= 20 {
            Some(khintchine_tail_exact(&coeffs, threshold)?)
        } else {
            None
        };
        let mc = khintchine_tail_mc(&coeffs, threshold, trials, derive_seed(seed, i as u64))?;
        match &exact {
            Some(e) => println!(
                "  alpha={alpha:<4} lambda={threshold:9.4}  exact={:<12.6e} mc={:<12.6e} hoeffding={:<12.6e} power-form={:.6e}",
                e.empirical_probability, mc.empirical_probability, e.bound_hoeffding, e.bound_power_form
            ),
            None => println!(
                "  alpha={alpha:<4} lambda={threshold:9.4}  mc={:<12.6e} hoeffding={:<12.6e} power-form={:.6e}",
                mc.empirical_probability, mc.bound_hoeffding, mc.bound_power_form
            ),
        }
        records.push(json!({
            "alpha": alpha,
            "threshold": threshold,
            "exact": exact,
            "monte_carlo": mc,
        }));
    }
    write_out(out, &serde_json::to_string_pretty(&records)?)
}

fn run_lemma2(
    n: usize,
    cols: usize,
    alpha: f64,
    samples: u64,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<()> {
    let f = random_sign_matrix(n, cols, derive_seed(seed, 0))?.to_mat();
    let bound = 1.25 * alpha * (n as f64 * clamped_ln(n)).sqrt();
    let (signs, fraction) = lemma2_sign_search(&f, alpha, samples, derive_seed(seed, 1))?;
    println!("bound (5/4)*alpha*sqrt(n*ln n) = {bound:.4}");
    println!("first admissible sign vector: {signs:?}");
    println!("fraction of admissible samples: {fraction:.4} (of {samples})");
    write_out(
        out,
        &serde_json::to_string_pretty(&json!({
            "epsilon": signs,
            "good_fraction": fraction,
            "bound": bound,
        }))?,
    )
}

fn run_explicit(n: usize, p: f64, max_exact_k: usize, out: Option<PathBuf>) -> Result<()> {
    let pe = PExponent::new(p)?;
    let f = build_explicit_factorization(n, pe)?;
    let residual = validate_factorization(&f);
    let embed_norm = norm_into_sup(f.embed(), pe)?;
    let upper = (n as f64).powf(1.0 / p - 0.5);
    println!("n = {n}, K = {}, p = {p}", f.k());
    println!("residual(P*T, Id) = {residual:e}");
    println!("norm(T: lp -> linf) = {embed_norm}");
    if f.k() <= max_exact_k {
        let exact = norm_from_sup_exact(f.retract(), pe, max_exact_k)?;
        println!("exact norm(P: linf -> lp) = {exact:.12}");
    } else {
        println!("exact norm(P: linf -> lp) skipped: K = {} exceeds cap {max_exact_k}", f.k());
    }
    println!("upper bound n^(1/p - 1/2) = {upper:.12}");
    if let Some(path) = out {
        f.save(&path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_witness(
    input: Option<PathBuf>,
    n: Option<usize>,
    p: Option<f64>,
    k: Option<usize>,
    random: bool,
    tries: u64,
    max_exact_k: usize,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<()> {
    let f = match input {
        Some(path) => Factorization::load(&path)?,
        None => {
            let n = n.ok_or_else(|| Error::OutOfRange("--n is required without --input".into()))?;
            let p = p.ok_or_else(|| Error::OutOfRange("--p is required without --input".into()))?;
            let pe = PExponent::new(p)?;
            if random {
                random_factorization(n, k.unwrap_or(n), pe, derive_seed(seed, 0xFAC0))?
            } else {
                build_explicit_factorization(n, pe)?
            }
        }
    };
    let w = search_witness(&f, tries, derive_seed(seed, 0))?;
    let bound = lower_bound_from_witness(&f, &w);
    println!("n = {}, K = {}, p = {}", f.n(), f.k(), f.p().get());
    println!("sup |w| = {:.6}", w.sup_witness);
    println!("ratio sup|w| / sqrt(n*ln n) = {:.6}", w.ratio);
    println!("implied lower bound on norm(P) = {bound:.6}");
    println!("witness equations max violation = {:.3e}", w.max_equation_violation(&f)?);
    if f.k() <= max_exact_k {
        let exact = norm_from_sup_exact(f.retract(), f.p(), max_exact_k)?;
        println!("exact norm(P) = {exact:.6} (margin {:.3e})", exact - bound);
    }
    write_out(out, &w.to_json()?)
}

fn run_study(
    config: Option<PathBuf>,
    n_grid: Option<Vec<usize>>,
    p_list: Option<Vec<f64>>,
    tries: Option<u64>,
    max_exact_k: Option<usize>,
    seed_flag: Option<u64>,
    out: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = match config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => StudyConfig::default(),
    };
    if let Some(grid) = n_grid {
        cfg.n_grid = grid;
    }
    if let Some(ps) = p_list {
        cfg.p_list = ps;
    }
    if let Some(t) = tries {
        cfg.tries_per_cell = t;
    }
    if let Some(cap) = max_exact_k {
        cfg.exact_norm_max_k = cap;
    }
    if let Some(s) = seed_flag {
        cfg.seed = s;
    }
    if let Some(path) = out {
        cfg.output_path = path.display().to_string();
    }
    let report = run_scaling_study(&cfg)?;
    let file = std::fs::File::create(&cfg.output_path)?;
    write_csv(&report.rows, file)?;
    println!("wrote {} rows to {}", report.rows.len(), cfg.output_path);
    for fit in &report.fits {
        println!(
            "p = {:<4} lower-adj slope = {:+.4} (target {:+.4}, r2 = {:.4}), upper slope = {:+.4}",
            fit.p,
            fit.lower_adj_slope,
            1.0 / fit.p - 0.5,
            fit.lower_adj_r2,
            fit.upper_slope
        );
    }
    println!("witness ratio spread max/min = {:.4}", report.ratio_spread);
    for failure in &report.failures {
        eprintln!("cell n={} p={} failed: {}", failure.n, failure.p, failure.message);
    }
    Ok(())
}

fn run_oracle(
    input: Option<PathBuf>,
    n: Option<usize>,
    p: Option<f64>,
    max_exact_k: usize,
    search: Option<u64>,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<()> {
    let f = match input {
        Some(path) => Factorization::load(&path)?,
        None => {
            let n = n.ok_or_else(|| Error::OutOfRange("--n is required without --input".into()))?;
            let p = p.ok_or_else(|| Error::OutOfRange("--p is required without --input".into()))?;
            build_explicit_factorization(n, PExponent::new(p)?)?
        }
    };
    let (value, kind) = if f.k() <= max_exact_k {
        (norm_from_sup_exact(f.retract(), f.p(), max_exact_k)?, "exact")
    } else if let Some(restarts) = search {
        (
            norm_from_sup_search(f.retract(), f.p(), restarts, derive_seed(seed, 0))?,
            "search lower estimate",
        )
    } else {
        return Err(Error::EnumerationTooLarge {
            cols: f.k(),
            max: max_exact_k,
        });
    };
    println!("norm(P: linf -> lp) [{kind}] = {value:.12}");
    write_out(
        out,
        &serde_json::to_string_pretty(&json!({
            "norm": value,
            "kind": kind,
            "n": f.n(),
            "K": f.k(),
            "p": f.p().get(),
        }))?,
    )
}
