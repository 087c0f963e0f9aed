//! Dense matrix primitives shared by every solver module.
//!
//! Matrices are `ndarray::Array2<f64>` throughout; this module adds the
//! index-set machinery, nonnegativity validation, and the small numerical
//! kernels (power iteration, one-sided Jacobi SVD, pseudoinverse, Sinkhorn
//! balancing) the rest of the crate is built on.

use ndarray::{Array1, Array2, Axis};

use crate::error::{CosepError, Result};

/// Largest `min(rows, cols)` accepted by [`jacobi_svd`] and [`pinv_small`].
/// These routines are intended for the r1 x r2 core only.
pub const SVD_DIM_CAP: usize = 64;

/// An ordered set of 0-based indices into one dimension of a matrix.
///
/// Indices are kept strictly increasing and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    indices: Vec<usize>,
    bound: usize,
}

impl IndexSet {
    /// Builds a set from arbitrary order, sorting and rejecting duplicates
    /// and out-of-range entries.
    pub fn new(mut indices: Vec<usize>, bound: usize) -> Result<Self> {
        indices.sort_unstable();
        for w in indices.windows(2) {
            if w[0] == w[1] {
                return Err(CosepError::Dimension(format!("duplicate index {}", w[0])));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= bound {
                return Err(CosepError::Dimension(format!(
                    "index {last} out of range for dimension {bound}"
                )));
            }
        }
        Ok(IndexSet { indices, bound })
    }

    /// The full set {0, .., bound-1}.
    pub fn full(bound: usize) -> Self {
        IndexSet {
            indices: (0..bound).collect(),
            bound,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Size of the intersection with another set.
    pub fn intersection_count(&self, other: &IndexSet) -> usize {
        self.indices.iter().filter(|i| other.contains(**i)).count()
    }
}

/// Checks that every entry is finite and >= 0.
pub fn check_nonnegative(m: &Array2<f64>) -> Result<()> {
    for &v in m.iter() {
        if !v.is_finite() || v < 0.0 {
            return Err(CosepError::InvalidInput(format!(
                "entry {v} is negative or non-finite"
            )));
        }
    }
    Ok(())
}

/// Returns the indices of any all-zero rows and columns.
pub fn zero_lines(m: &Array2<f64>) -> (Vec<usize>, Vec<usize>) {
    let zrows = m
        .axis_iter(Axis(0))
        .enumerate()
        .filter(|(_, r)| r.iter().all(|&v| v == 0.0))
        .map(|(i, _)| i)
        .collect();
    let zcols = m
        .axis_iter(Axis(1))
        .enumerate()
        .filter(|(_, c)| c.iter().all(|&v| v == 0.0))
        .map(|(j, _)| j)
        .collect();
    (zrows, zcols)
}

/// Extracts the block `M(rows, cols)`, preserving the order of the index sets.
/// `None` selects the whole dimension.
pub fn submatrix(
    m: &Array2<f64>,
    rows: Option<&IndexSet>,
    cols: Option<&IndexSet>,
) -> Result<Array2<f64>> {
    if let Some(r) = rows {
        if r.bound() != m.nrows() {
            return Err(CosepError::Dimension(format!(
                "row index bound {} != matrix rows {}",
                r.bound(),
                m.nrows()
            )));
        }
    }
    if let Some(c) = cols {
        if c.bound() != m.ncols() {
            return Err(CosepError::Dimension(format!(
                "column index bound {} != matrix cols {}",
                c.bound(),
                m.ncols()
            )));
        }
    }
    let out = match (rows, cols) {
        (None, None) => m.clone(),
        (Some(r), None) => m.select(Axis(0), r.indices()),
        (None, Some(c)) => m.select(Axis(1), c.indices()),
        (Some(r), Some(c)) => m.select(Axis(0), r.indices()).select(Axis(1), c.indices()),
    };
    Ok(out)
}

pub fn frobenius_norm(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Squared spectral norm via power iteration on the smaller Gram matrix,
/// started from the all-ones vector.
///
/// If the start vector happens to be orthogonal to the dominant eigenvector
/// (flagged by a vanishing Rayleigh quotient), iteration restarts from
/// canonical basis vectors.
pub fn spectral_norm_sq(m: &Array2<f64>, tol: f64, max_iter: usize) -> f64 {
    let norm = frobenius_norm(m);
    if norm == 0.0 {
        return 0.0;
    }
    // Gram matrix of the thinner side.
    let g = if m.ncols() <= m.nrows() {
        m.t().dot(m)
    } else {
        m.dot(&m.t())
    };
    let n = g.nrows();
    let mut start = Array1::from_elem(n, 1.0);
    for basis in 0..=n {
        if let Some(lam) = power_iterate(&g, &mut start, tol, max_iter) {
            return lam;
        }
        if basis < n {
            start.fill(0.0);
            start[basis] = 1.0;
        }
    }
    // Gram matrix is numerically zero in every probed direction.
    0.0
}

fn power_iterate(g: &Array2<f64>, v0: &Array1<f64>, tol: f64, max_iter: usize) -> Option<f64> {
    let mut v = v0.clone();
    let nv = v.dot(&v).sqrt();
    if nv == 0.0 {
        return None;
    }
    v /= nv;
    let mut lambda = 0.0_f64;
    for _ in 0..max_iter {
        let w = g.dot(&v);
        let nw = w.dot(&w).sqrt();
        if nw <= f64::EPSILON * frobenius_norm(g) {
            return None;
        }
        let rayleigh = v.dot(&w);
        v = w / nw;
        if (rayleigh - lambda).abs() < tol * rayleigh.abs().max(f64::MIN_POSITIVE) {
            return Some(rayleigh.max(0.0));
        }
        lambda = rayleigh;
    }
    Some(lambda.max(0.0))
}

/// One-sided Jacobi SVD of a small matrix.
///
/// Returns `(U, sigma, V)` with `S = U diag(sigma) V^T`, singular values
/// sorted nonincreasing, and U, V column-orthonormal.
pub fn jacobi_svd(s: &Array2<f64>) -> Result<(Array2<f64>, Vec<f64>, Array2<f64>)> {
    let (m, n) = s.dim();
    if m.min(n) > SVD_DIM_CAP {
        return Err(CosepError::UnsupportedSize(m.min(n), SVD_DIM_CAP));
    }
    if m < n {
        // Work on the transpose and swap factors back.
        let (u, sig, v) = jacobi_svd(&s.t().to_owned())?;
        return Ok((v, sig, u));
    }

    let mut a = s.clone(); // columns rotate toward orthogonality
    let mut v = Array2::eye(n);
    let eps = 1e-14 * frobenius_norm(s).max(f64::MIN_POSITIVE);
    for _sweep in 0..60 {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let ap = a.column(p);
                let aq = a.column(q);
                let alpha = ap.dot(&ap);
                let beta = aq.dot(&aq);
                let gamma = ap.dot(&aq);
                off = off.max(gamma.abs());
                if gamma.abs() <= eps * eps {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for i in 0..m {
                    let aip = a[[i, p]];
                    let aiq = a[[i, q]];
                    a[[i, p]] = c * aip - sn * aiq;
                    a[[i, q]] = sn * aip + c * aiq;
                }
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - sn * viq;
                    v[[i, q]] = sn * vip + c * viq;
                }
            }
        }
        if off <= eps * eps {
            break;
        }
    }

    // Column norms are the singular values.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| a.column(j).dot(&a.column(j)).sqrt()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let mut u = Array2::zeros((m, n));
    let mut vv = Array2::zeros((n, n));
    let mut sigma = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let s_j = norms[j];
        sigma.push(s_j);
        if s_j > 0.0 {
            for i in 0..m {
                u[[i, k]] = a[[i, j]] / s_j;
            }
        } else {
            // Null direction: leave the U column zero; it never contributes
            // to the reconstruction and pinv zeroes it anyway.
        }
        for i in 0..n {
            vv[[i, k]] = v[[i, j]];
        }
    }
    Ok((u, sigma, vv))
}

/// Moore-Penrose pseudoinverse of a small matrix via [`jacobi_svd`],
/// truncating singular values below `rank_tol * sigma_max`.
pub fn pinv_small(s: &Array2<f64>, rank_tol: f64) -> Result<Array2<f64>> {
    let (u, sigma, v) = jacobi_svd(s)?;
    let smax = sigma.first().copied().unwrap_or(0.0);
    let cut = rank_tol * smax;
    let k = sigma.len();
    let mut vs = Array2::zeros((s.ncols(), k));
    for j in 0..k {
        if sigma[j] > cut && sigma[j] > 0.0 {
            let inv = 1.0 / sigma[j];
            for i in 0..s.ncols() {
                vs[[i, j]] = v[[i, j]] * inv;
            }
        }
    }
    Ok(vs.dot(&u.t()))
}

/// Default singular-value cutoff for [`pinv_small`].
pub const PINV_RANK_TOL: f64 = 1e-12;

/// Diagonal scalings produced by [`sinkhorn_balance`].
pub struct SinkhornScaling {
    pub row: Array1<f64>,
    pub col: Array1<f64>,
    pub iterations: usize,
}

/// Alternating row/column scaling of a positive matrix.
///
/// Targets: every column of `diag(row) * M * diag(col)` sums to 1 and every
/// row sums to `n/m`. Columns are rescaled first in each pass.
pub fn sinkhorn_balance(m: &Array2<f64>, max_iter: usize, tol: f64) -> Result<SinkhornScaling> {
    let (rows, cols) = m.dim();
    let (zr, zc) = zero_lines(m);
    if !zr.is_empty() || !zc.is_empty() {
        return Err(CosepError::BalanceInfeasible(format!(
            "{} zero rows, {} zero columns",
            zr.len(),
            zc.len()
        )));
    }
    let row_target = cols as f64 / rows as f64;
    let mut dr = Array1::from_elem(rows, 1.0);
    let mut dc = Array1::from_elem(cols, 1.0);
    let mut iterations = max_iter;
    for it in 0..max_iter {
        // Column pass: force column sums to 1.
        for j in 0..cols {
            let s: f64 = (0..rows).map(|i| dr[i] * m[[i, j]]).sum();
            if s <= 0.0 {
                return Err(CosepError::BalanceInfeasible(format!(
                    "column {j} scaled sum is zero"
                )));
            }
            dc[j] = 1.0 / s;
        }
        // Row pass: force row sums to n/m.
        let mut max_dev = 0.0_f64;
        for i in 0..rows {
            let s: f64 = (0..cols).map(|j| m[[i, j]] * dc[j]).sum();
            if s <= 0.0 {
                return Err(CosepError::BalanceInfeasible(format!(
                    "row {i} scaled sum is zero"
                )));
            }
            let new = row_target / s;
            max_dev = max_dev.max((new / dr[i] - 1.0).abs());
            dr[i] = new;
        }
        // Row pass perturbs column sums; converged when it no longer moves.
        if max_dev < tol {
            iterations = it + 1;
            break;
        }
    }
    Ok(SinkhornScaling {
        row: dr,
        col: dc,
        iterations,
    })
}
