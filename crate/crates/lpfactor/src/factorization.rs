//! Factorizations Id = P∘T of the identity on ℓ_p^n through ℓ_∞^K: the
//! explicit Hadamard construction, random test instances, validation, and
//! zero-padding of the sup-normed space.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_square, Mat};
use crate::quasinorm::{OperatorMatrix, PExponent};
use crate::seeding;
use crate::signs::sylvester_hadamard;
use crate::tol;

/// A validated factorization: `retract ∘ embed = Id` on ℝ^n within
/// [`tol::FACTORIZATION_RESIDUAL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FactorizationWire", into = "FactorizationWire")]
pub struct Factorization {
    n: usize,
    k: usize,
    p: PExponent,
    embed: OperatorMatrix,
    retract: OperatorMatrix,
}

/// On-disk JSON schema: {n, K, p, T: row-major, P: row-major}.
#[derive(Serialize, Deserialize)]
struct FactorizationWire {
    n: usize,
    #[serde(rename = "K")]
    k: usize,
    p: f64,
    #[serde(rename = "T")]
    embed: Vec<f64>,
    #[serde(rename = "P")]
    retract: Vec<f64>,
}

impl TryFrom<FactorizationWire> for Factorization {
    type Error = Error;

    fn try_from(w: FactorizationWire) -> Result<Self> {
        let p = PExponent::new(w.p)?;
        let embed = Mat::from_vec(w.k, w.n, w.embed)?;
        let retract = Mat::from_vec(w.n, w.k, w.retract)?;
        Factorization::new(w.n, w.k, p, embed, retract)
    }
}

impl From<Factorization> for FactorizationWire {
    fn from(f: Factorization) -> Self {
        FactorizationWire {
            n: f.n,
            k: f.k,
            p: f.p.get(),
            embed: f.embed.mat().data().to_vec(),
            retract: f.retract.mat().data().to_vec(),
        }
    }
}

impl Factorization {
    /// Validates shapes, finiteness, and the identity residual.
    pub fn new(n: usize, k: usize, p: PExponent, embed: Mat, retract: Mat) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::OutOfRange("factorization needs n, K ≥ 1".into()));
        }
        if embed.rows() != k || embed.cols() != n {
            return Err(Error::Dimension(format!(
                "embedding must be {k}x{n}, got {}x{}",
                embed.rows(),
                embed.cols()
            )));
        }
        if retract.rows() != n || retract.cols() != k {
            return Err(Error::Dimension(format!(
                "retraction must be {n}x{k}, got {}x{}",
                retract.rows(),
                retract.cols()
            )));
        }
        let embed = OperatorMatrix::into_sup_space(embed)?;
        let retract = OperatorMatrix::from_sup_space(retract)?;
        let f = Factorization {
            n,
            k,
            p,
            embed,
            retract,
        };
        let residual = f.max_residual();
        if residual > tol::FACTORIZATION_RESIDUAL {
            return Err(Error::FactorizationResidual {
                residual,
                limit: tol::FACTORIZATION_RESIDUAL,
            });
        }
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> PExponent {
        self.p
    }

    pub fn embed(&self) -> &OperatorMatrix {
        &self.embed
    }

    pub fn retract(&self) -> &OperatorMatrix {
        &self.retract
    }

    /// ‖P·T − I‖_max, the validation residual.
    pub fn max_residual(&self) -> f64 {
        self.retract
            .mat()
            .matmul(self.embed.mat())
            .expect("shapes validated at construction")
            .residual_from_identity()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Smallest power of two that is ≥ n, with its exponent.
fn next_power_of_two(n: usize) -> (usize, usize) {
    let mut k = 0;
    let mut size = 1;
    while size < n {
        size *= 2;
        k += 1;
    }
    (size, k)
}

/// The explicit factorization attaining the n^{1/p−1/2} upper bound: K is the
/// smallest power of two ≥ n, column i of the embedding is row i of the
/// Sylvester–Hadamard matrix, and the retraction is (1/K) times those same
/// rows. Row orthogonality makes P·T = I exact, every embedding column has
/// sup-norm 1, and ‖P‖_{∞→p} ≤ n^{1/p−1/2}.
pub fn build_explicit_factorization(n: usize, p: PExponent) -> Result<Factorization> {
    if n == 0 || n > 4096 {
        return Err(Error::OutOfRange(format!(
            "explicit factorization needs 1 ≤ n ≤ 4096, got {n}"
        )));
    }
    let (k, log_k) = next_power_of_two(n);
    let h = sylvester_hadamard(log_k)?;
    let mut embed = Mat::zeros(k, n);
    let mut retract = Mat::zeros(n, k);
    let scale = 1.0 / k as f64;
    for i in 0..n {
        for t in 0..k {
            let v = h.get(i, t) as f64;
            embed.set(t, i, v);
            retract.set(i, t, scale * v);
        }
    }
    Factorization::new(n, k, p, embed, retract)
}

/// ‖P·T − I‖_max of an already-built factorization (0 by construction for the
/// explicit instances, ≤ the construction tolerance for the rest).
pub fn validate_factorization(f: &Factorization) -> f64 {
    f.max_residual()
}

/// Random instance satisfying the witness-construction hypotheses: embedding
/// entries i.i.d. uniform on [−1,1] with each column rescaled to sup-norm
/// exactly 1, retraction the least-squares left inverse (TᵀT)⁻¹Tᵀ. Redraws on
/// rank deficiency and gives up after 16 attempts.
pub fn random_factorization(n: usize, k: usize, p: PExponent, seed: u64) -> Result<Factorization> {
    if n == 0 || k < n {
        return Err(Error::OutOfRange(format!(
            "random factorization needs 1 ≤ n ≤ K, got n={n}, K={k}"
        )));
    }
    const REDRAWS: usize = 16;
    for attempt in 0..REDRAWS {
        let mut rng = seeding::rng_from(seeding::derive_seed(seed, attempt as u64));
        let mut embed = Mat::zeros(k, n);
        for i in 0..n {
            let mut col: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let max = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if max == 0.0 {
                continue; // redraw below via the rank check
            }
            col.iter_mut().for_each(|v| *v /= max);
            for t in 0..k {
                embed.set(t, i, col[t]);
            }
        }
        let gram = embed.transpose().matmul(&embed)?;
        let retract = match solve_square(&gram, &embed.transpose()) {
            Ok(r) => r,
            Err(_) => continue,
        };
        match Factorization::new(n, k, p, embed, retract) {
            Ok(f) => return Ok(f),
            Err(_) => continue,
        }
    }
    Err(Error::DegenerateInstance(REDRAWS))
}

/// Zero-pads the sup-normed space: the embedding gains zero rows, the
/// retraction ignores the new coordinates. Both operator norms and the
/// identity P·T = I are unchanged.
pub fn pad_factorization(f: &Factorization, target_k: usize) -> Result<Factorization> {
    if target_k < f.k() {
        return Err(Error::OutOfRange(format!(
            "cannot pad K={} down to {target_k}",
            f.k()
        )));
    }
    if target_k == f.k() {
        return Ok(f.clone());
    }
    let (n, k) = (f.n(), f.k());
    let mut embed = Mat::zeros(target_k, n);
    let mut retract = Mat::zeros(n, target_k);
    for t in 0..k {
        for i in 0..n {
            embed.set(t, i, f.embed().mat().get(t, i));
            retract.set(i, t, f.retract().mat().get(i, t));
        }
    }
    Factorization::new(n, target_k, f.p(), embed, retract)
}
