//! Successive projection algorithm and its row/column variants.

use ndarray::{Array2, Axis};

use crate::error::{CosepError, Result};
use crate::matrix::{frobenius_norm, IndexSet};

/// Output of [`spa`]: indices in extraction order plus the residual column
/// norm recorded at each step.
#[derive(Debug, Clone)]
pub struct SpaResult {
    pub selected: Vec<usize>,
    pub residual_norms: Vec<f64>,
}

impl SpaResult {
    /// The selection as a sorted index set over the columns of the input.
    pub fn index_set(&self, bound: usize) -> Result<IndexSet> {
        IndexSet::new(self.selected.clone(), bound)
    }
}

/// Greedy column selection: at each step take the residual column with the
/// largest squared l2 norm (lowest index on ties), then project every column
/// onto the orthogonal complement of the chosen one.
///
/// Stops early when the best residual norm drops below `1e-12 * ||M||_F`,
/// returning fewer than `r` indices.
pub fn spa(m: &Array2<f64>, r: usize) -> Result<SpaResult> {
    let n = m.ncols();
    if r == 0 || r > n {
        return Err(CosepError::Dimension(format!(
            "r = {r} out of range for {n} columns"
        )));
    }
    let stop = 1e-12 * frobenius_norm(m);
    let mut residual = m.clone();
    let mut selected = Vec::with_capacity(r);
    let mut residual_norms = Vec::with_capacity(r);

    for _ in 0..r {
        let mut best = 0usize;
        let mut best_sq = f64::NEG_INFINITY;
        for (j, col) in residual.axis_iter(Axis(1)).enumerate() {
            let sq = col.dot(&col);
            if sq > best_sq {
                best_sq = sq;
                best = j;
            }
        }
        let norm = best_sq.max(0.0).sqrt();
        if norm <= stop {
            break;
        }
        selected.push(best);
        residual_norms.push(norm);

        let u = residual.column(best).to_owned() / norm;
        // c <- c - u (u^T c) for every column.
        let coeffs = u.dot(&residual);
        for (j, &cj) in coeffs.iter().enumerate() {
            let mut col = residual.column_mut(j);
            col.scaled_add(-cj, &u);
        }
        // Kill rounding residue in the extracted column.
        residual.column_mut(best).fill(0.0);
    }

    Ok(SpaResult {
        selected,
        residual_norms,
    })
}

/// SPAC: select `r2` columns of `M`.
pub fn spac(m: &Array2<f64>, r2: usize) -> Result<SpaResult> {
    spa(m, r2)
}

/// SPAR: select `r1` rows of `M` by running SPA on the transpose.
pub fn spar(m: &Array2<f64>, r1: usize) -> Result<SpaResult> {
    spa(&m.t().to_owned(), r1)
}

/// SPA+: `r1` rows then `r2` columns, each selected independently.
pub fn spa_plus(m: &Array2<f64>, r1: usize, r2: usize) -> Result<(SpaResult, SpaResult)> {
    Ok((spar(m, r1)?, spac(m, r2)?))
}
