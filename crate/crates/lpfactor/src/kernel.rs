//! Kernel of the retraction P : ℓ_∞^K → ℓ_p^n in the combinatorial form the
//! witness construction needs: a row-reduced basis of ker P and the K×K
//! matrix W whose columns either vanish (at the n "distinguished" atoms) or
//! reproduce a reduced kernel vector (at the pivot atoms).
//!
//! Restricted to non-distinguished rows and columns W is exactly the
//! identity, every column lies in ker P, and the nonzero columns span the
//! whole kernel. These four facts are what make the witness correction both
//! a kernel element and computable atom by atom.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::quasinorm::{OperatorMatrix, Orientation};
use crate::tol;

/// Output of [`kernel_representation`].
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRepresentation {
    /// K×K matrix; column t is a kernel vector for pivot atoms t and zero for
    /// distinguished atoms t.
    pub w: Mat,
    /// The n atoms left without a pivot, ascending.
    pub distinguished: Vec<usize>,
    /// (pivot column, row of the reduced kernel basis placed there).
    pub pivot_map: Vec<(usize, usize)>,
}

impl KernelRepresentation {
    pub fn k(&self) -> usize {
        self.w.rows()
    }

    /// max over columns of ‖P · w_col‖_max; diagnostic for tests and the CLI.
    pub fn max_kernel_violation(&self, retract: &OperatorMatrix) -> f64 {
        let product = retract
            .mat()
            .matmul(&self.w)
            .expect("W is K×K by construction");
        product.max_abs()
    }
}

fn expect_from_sup(op: &OperatorMatrix) -> Result<()> {
    if op.orientation() != Orientation::FromSupSpace {
        return Err(Error::Orientation(
            "kernel machinery needs an operator from the sup space",
        ));
    }
    Ok(())
}

/// Basis of ker P as the rows of a (K−n)×K matrix, read off the reduced row
/// echelon form of P: one basis vector per free column, with a one at the
/// free column and the negated reduced entries at the pivot columns.
pub fn kernel_basis(retract: &OperatorMatrix) -> Result<Mat> {
    expect_from_sup(retract)?;
    let n = retract.rows();
    let k = retract.cols();
    let mut reduced = retract.mat().clone();
    let pivots = reduced.rref(tol::PIVOT_THRESHOLD);
    if pivots.len() < n {
        return Err(Error::RankDeficient {
            rank: pivots.len(),
            required: n,
        });
    }
    let pivot_set: Vec<bool> = {
        let mut set = vec![false; k];
        for &c in &pivots {
            set[c] = true;
        }
        set
    };
    let mut basis = Mat::zeros(k - n, k);
    let mut row = 0;
    for free in 0..k {
        if pivot_set[free] {
            continue;
        }
        basis.set(row, free, 1.0);
        for (r, &pc) in pivots.iter().enumerate() {
            basis.set(row, pc, -reduced.get(r, free));
        }
        row += 1;
    }
    Ok(basis)
}

/// Row-reduces the kernel basis and assembles the K×K representation: pivot
/// column c_i of W receives row i of the reduced basis, distinguished columns
/// stay zero. Fails with `PivotInstability` when the reduction cannot recover
/// all K−n pivots above the threshold.
pub fn kernel_representation(retract: &OperatorMatrix) -> Result<KernelRepresentation> {
    expect_from_sup(retract)?;
    let n = retract.rows();
    let k = retract.cols();
    let mut reduced = kernel_basis(retract)?;
    let pivots = reduced.rref(tol::PIVOT_THRESHOLD);
    if pivots.len() < k - n {
        return Err(Error::PivotInstability {
            threshold: tol::PIVOT_THRESHOLD,
            step: pivots.len(),
        });
    }
    let mut w = Mat::zeros(k, k);
    let mut is_pivot = vec![false; k];
    let mut pivot_map = Vec::with_capacity(k - n);
    for (row, &col) in pivots.iter().enumerate() {
        is_pivot[col] = true;
        pivot_map.push((col, row));
        for s in 0..k {
            w.set(s, col, reduced.get(row, s));
        }
    }
    let distinguished: Vec<usize> = (0..k).filter(|&c| !is_pivot[c]).collect();
    Ok(KernelRepresentation {
        w,
        distinguished,
        pivot_map,
    })
}
