//! Quality measures: index accuracy, relative approximation, hard
//! clustering with assignment-matched accuracy, and the exact-CUR residual.

use ndarray::Array2;

use crate::error::{CosepError, Result};
use crate::factors::compute_factors;
use crate::matrix::{frobenius_norm, pinv_small, submatrix, IndexSet, PINV_RANK_TOL};

/// Proportion of correctly identified row and column indices.
pub fn index_accuracy(
    k1: &IndexSet,
    k2: &IndexSet,
    k1_star: &IndexSet,
    k2_star: &IndexSet,
) -> f64 {
    let hits = (k1.intersection_count(k1_star) + k2.intersection_count(k2_star)) as f64;
    let total = (k1_star.len() + k2_star.len()) as f64;
    hits / total
}

/// `1 - min_{P1, P2 >= 0} ||M - P1 M(k1,k2) P2||_F / ||M||_F`, computed via
/// the alternating factor fit.
pub fn relative_approx_cosep(m: &Array2<f64>, k1: &IndexSet, k2: &IndexSet) -> Result<f64> {
    // The exact initial fits land at (or very near) the optimum, so a short
    // polish loop suffices here.
    let f = compute_factors(m, k1, k2, 30, 1e-8)?;
    Ok(1.0 - f.rel_residual)
}

/// `1 - ||M - Mhat||_F / ||M||_F`. Negative values are reported as-is.
pub fn relative_approx_generic(m: &Array2<f64>, mhat: &Array2<f64>) -> f64 {
    1.0 - frobenius_norm(&(m - mhat)) / frobenius_norm(m).max(1e-300)
}

/// Binary one-hot cluster assignment, one 1 per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    /// labels[i] = cluster of item i.
    labels: Vec<usize>,
    clusters: usize,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<usize>, clusters: usize) -> Result<Self> {
        if clusters == 0 || labels.iter().any(|&l| l >= clusters) {
            return Err(CosepError::InvalidInput(
                "cluster label out of range".into(),
            ));
        }
        Ok(ClusterAssignment { labels, clusters })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The dense binary matrix form (items x clusters).
    pub fn matrix(&self) -> Array2<f64> {
        let mut q = Array2::zeros((self.labels.len(), self.clusters));
        for (i, &l) in self.labels.iter().enumerate() {
            q[[i, l]] = 1.0;
        }
        q
    }
}

/// Row-wise argmax with lowest-index tie-break. For clustering the columns
/// of an `r x n` factor, pass its transpose.
pub fn hard_cluster(p: &Array2<f64>) -> Result<ClusterAssignment> {
    let r = p.ncols();
    if r == 0 {
        return Err(CosepError::Dimension("factor has no columns".into()));
    }
    let labels = p
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0usize;
            let mut best_v = row[0];
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > best_v {
                    best_v = v;
                    best = j;
                }
            }
            best
        })
        .collect();
    ClusterAssignment::new(labels, r)
}

/// Maximum-agreement assignment between cluster columns, solved by the
/// Hungarian algorithm on the r x r confusion-count matrix.
fn best_agreement(q: &ClusterAssignment, q_star: &ClusterAssignment) -> usize {
    let r = q.clusters().max(q_star.clusters());
    let mut confusion = vec![vec![0i64; r]; r];
    for (&a, &b) in q.labels().iter().zip(q_star.labels()) {
        confusion[a][b] += 1;
    }
    let assignment = hungarian_max(&confusion);
    assignment
        .iter()
        .enumerate()
        .map(|(j, &k)| confusion[j][k] as usize)
        .sum()
}

/// Maximum-weight perfect matching on a square profit matrix; returns the
/// column matched to each row. Potentials-based shortest augmenting path,
/// O(r^3).
fn hungarian_max(profit: &[Vec<i64>]) -> Vec<usize> {
    let n = profit.len();
    let max_p = profit
        .iter()
        .flat_map(|r| r.iter())
        .copied()
        .max()
        .unwrap_or(0);
    // Convert to a minimization problem.
    let cost: Vec<Vec<i64>> = profit
        .iter()
        .map(|row| row.iter().map(|&p| max_p - p).collect())
        .collect();

    let inf = i64::MAX / 2;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut match_col = vec![0usize; n + 1]; // row matched to each column, 1-based

    for row in 1..=n {
        match_col[0] = row;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        let mut way = vec![0usize; n + 1];
        loop {
            used[j0] = true;
            let i0 = match_col[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if match_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut result = vec![0usize; n];
    for j in 1..=n {
        if match_col[j] > 0 {
            result[match_col[j] - 1] = j - 1;
        }
    }
    result
}

/// `Acc = 1 - min_P sqrt(||Q_P - Q*||_F / (r n))` with the column
/// permutation P chosen by maximum-agreement assignment.
///
/// The Frobenius norm under the radical is not squared; that matches the
/// printed definition, and the assignment minimizer is the same either way.
pub fn clustering_accuracy(q: &ClusterAssignment, q_star: &ClusterAssignment) -> Result<f64> {
    if q.len() != q_star.len() {
        return Err(CosepError::Dimension(format!(
            "assignments cover {} vs {} items",
            q.len(),
            q_star.len()
        )));
    }
    let n = q.len() as f64;
    let r = q.clusters().max(q_star.clusters()) as f64;
    let agree = best_agreement(q, q_star) as f64;
    let mismatch_fro = (2.0 * (n - agree)).sqrt();
    Ok(1.0 - (mismatch_fro / (r * n)).sqrt())
}

/// `||M - M(:,k2) S^+ M(k1,:)||_F / ||M||_F`, the skeleton-approximation
/// residual with the pseudoinverse of the core as the middle factor.
pub fn cur_residual(m: &Array2<f64>, k1: &IndexSet, k2: &IndexSet) -> Result<f64> {
    let c = submatrix(m, None, Some(k2))?;
    let r = submatrix(m, Some(k1), None)?;
    let s = submatrix(m, Some(k1), Some(k2))?;
    let u = pinv_small(&s, PINV_RANK_TOL)?;
    let approx = c.dot(&u).dot(&r);
    Ok(frobenius_norm(&(m - &approx)) / frobenius_norm(m).max(1e-300))
}
