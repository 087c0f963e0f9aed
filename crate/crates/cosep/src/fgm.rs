//! Fast gradient method for separable NMF.
//!
//! Minimizes `F(Y) = 1/2 ||M - MY||_F^2 + lambda tr(Y)` over the non-scaled
//! polytope `Omega = { 0 <= Y <= 1, w_t Y(t,l) <= w_l Y(t,t) }` with
//! Nesterov momentum, then turns `Y` into an index set by one of two
//! post-processing strategies.

use ndarray::{Array1, Array2};

use crate::error::{CosepError, Result};
use crate::matrix::{spectral_norm_sq, IndexSet};
use crate::spa::spa;

/// Column l1-norm weights defining the Omega polytope.
#[derive(Debug, Clone)]
pub struct OmegaWeights {
    w: Vec<f64>,
}

impl OmegaWeights {
    /// Weights from the column l1 norms of `M`. Zero columns are rejected.
    pub fn from_columns(m: &Array2<f64>) -> Result<Self> {
        let mut w = Vec::with_capacity(m.ncols());
        for col in m.columns() {
            let s: f64 = col.iter().map(|v| v.abs()).sum();
            if s <= 0.0 {
                return Err(CosepError::InvalidInput(
                    "matrix has a zero column; Omega weights undefined".into(),
                ));
            }
            w.push(s);
        }
        Ok(OmegaWeights { w })
    }

    pub fn from_raw(w: Vec<f64>) -> Result<Self> {
        if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(CosepError::InvalidWeight(
                "Omega weights must be positive and finite".into(),
            ));
        }
        Ok(OmegaWeights { w })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Solver parameters for [`fgm_snmf`].
#[derive(Debug, Clone)]
pub struct FgmParams {
    /// Trace penalty weight.
    pub lambda: f64,
    pub max_iter: usize,
    /// Initial momentum parameter.
    pub alpha0: f64,
    /// Reset momentum whenever the objective increases.
    pub restart_enabled: bool,
    /// Stop early once the objective stagnates relatively below this for a
    /// few consecutive iterations. 0 disables early stopping.
    pub stagnation_tol: f64,
}

impl FgmParams {
    pub fn new(lambda: f64) -> Self {
        FgmParams {
            lambda,
            max_iter: 1000,
            alpha0: 0.05,
            restart_enabled: true,
            stagnation_tol: 1e-12,
        }
    }

    /// Default penalty for a given matrix: `1e-2 * sigma_max(M)^2 / n`.
    pub fn default_lambda(m: &Array2<f64>) -> f64 {
        1e-2 * spectral_norm_sq(m, 1e-9, 1000) / m.ncols() as f64
    }
}

/// Result of [`fgm_snmf`]: the feasible iterate, its objective history, and
/// the iteration count actually run.
#[derive(Debug, Clone)]
pub struct FgmOutput {
    pub y: Array2<f64>,
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
}

/// Euclidean projection of one row onto its slice of Omega.
///
/// For row `t` the constraints are `0 <= y_l <= min(1, (w_l/w_t) y_t)` for
/// `l != t` and `0 <= y_t <= 1`. For a fixed diagonal value x every
/// off-diagonal clamps independently, so the problem reduces to a convex 1-D
/// minimization in x, solved by bisection on the derivative over [0,1].
pub fn project_omega_row(z: &[f64], diag_pos: usize, w: &OmegaWeights) -> Result<Vec<f64>> {
    let n = z.len();
    if w.len() != n || diag_pos >= n {
        return Err(CosepError::Dimension(format!(
            "projection row length {n}, weights {}, diag {diag_pos}",
            w.len()
        )));
    }
    let ws = w.as_slice();
    let wt = ws[diag_pos];
    if !(wt > 0.0) {
        return Err(CosepError::InvalidWeight("nonpositive diagonal weight".into()));
    }

    // g'(x) = 2(x - z_t) + sum over active off-diagonals 2 c_l (c_l x - z_l),
    // active when the clamp sits at the coupled cap c_l x (and below 1).
    let dg = |x: f64| -> f64 {
        let mut d = 2.0 * (x - z[diag_pos]);
        for l in 0..n {
            if l == diag_pos {
                continue;
            }
            let zl = z[l];
            if zl <= 0.0 {
                continue;
            }
            let c = ws[l] / wt;
            let cap = c * x;
            if cap < 1.0 && cap < zl {
                d += 2.0 * c * (cap - zl);
            }
        }
        d
    };

    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    if dg(lo) >= 0.0 {
        hi = 0.0;
    } else if dg(hi) <= 0.0 {
        lo = 1.0;
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if dg(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let x = 0.5 * (lo + hi);

    let mut y = vec![0.0; n];
    for l in 0..n {
        if l == diag_pos {
            y[l] = x;
        } else {
            let cap = (ws[l] / wt * x).min(1.0);
            y[l] = z[l].clamp(0.0, cap);
        }
    }
    Ok(y)
}

/// `F(Y) = 1/2 ||M - MY||_F^2 + lambda tr(Y)`.
pub fn objective(m: &Array2<f64>, y: &Array2<f64>, lambda: f64) -> f64 {
    let residual = m - &m.dot(y);
    let fit = 0.5 * residual.iter().map(|v| v * v).sum::<f64>();
    let trace: f64 = y.diag().sum();
    fit + lambda * trace
}

/// Gradient of the objective: `M^T(MY - M) + lambda I`.
pub fn gradient(m: &Array2<f64>, y: &Array2<f64>, lambda: f64) -> Array2<f64> {
    let my = m.dot(y);
    let mut g = m.t().dot(&(&my - m));
    for i in 0..g.nrows() {
        g[[i, i]] += lambda;
    }
    g
}

fn project_all_rows(z: &Array2<f64>, w: &OmegaWeights) -> Result<Array2<f64>> {
    let n = z.nrows();
    let mut out = Array2::zeros((n, n));
    for t in 0..n {
        let row = project_omega_row(z.row(t).as_slice().unwrap(), t, w)?;
        out.row_mut(t).assign(&Array1::from_vec(row));
    }
    Ok(out)
}

/// Projected fast gradient descent on the trace-penalized self-expression
/// objective. The reported iterate is always the feasible projected point,
/// not the momentum-extrapolated one.
pub fn fgm_snmf(m: &Array2<f64>, params: &FgmParams) -> Result<FgmOutput> {
    let n = m.ncols();
    let w = OmegaWeights::from_columns(m)?;
    let lip = spectral_norm_sq(m, 1e-9, 1000);
    if lip <= 0.0 {
        return Err(CosepError::InvalidInput("zero matrix".into()));
    }

    let mut y_extra: Array2<f64> = Array2::zeros((n, n)); // extrapolated point
    let mut y_feas: Array2<f64> = Array2::zeros((n, n)); // last projected point
    let mut alpha = params.alpha0;
    let mut trace = Vec::with_capacity(params.max_iter);
    let mut prev_obj = f64::INFINITY;
    let mut stagnant = 0usize;
    let mut iterations = 0usize;

    for k in 0..params.max_iter {
        iterations = k + 1;
        let grad = gradient(m, &y_extra, params.lambda);
        let step = &y_extra - &(grad / lip);
        let y_new = project_all_rows(&step, &w)?;
        let obj = objective(m, &y_new, params.lambda);

        if params.restart_enabled && obj > prev_obj {
            // Momentum overshot: restart from the last feasible point.
            alpha = params.alpha0;
            y_extra = y_feas.clone();
            trace.push(prev_obj);
            continue;
        }

        // alpha_k solves alpha^2 = (1 - alpha) alpha_{k-1}^2.
        let a2 = alpha * alpha;
        let alpha_next = 0.5 * ((a2 * a2 + 4.0 * a2).sqrt() - a2);
        let beta = alpha * (1.0 - alpha) / (a2 + alpha_next);
        y_extra = &y_new + &((&y_new - &y_feas) * beta);
        y_feas = y_new;
        alpha = alpha_next;
        trace.push(obj);

        if params.stagnation_tol > 0.0 {
            if (prev_obj - obj).abs() <= params.stagnation_tol * obj.abs().max(1.0) {
                stagnant += 1;
                if stagnant >= 5 {
                    break;
                }
            } else {
                stagnant = 0;
            }
        }
        prev_obj = obj;
    }

    Ok(FgmOutput {
        y: y_feas,
        objective_trace: trace,
        iterations_run: iterations,
    })
}

/// Indices of the `r` largest diagonal entries (ties to the lowest index),
/// returned sorted.
pub fn postprocess_diag(y: &Array2<f64>, r: usize) -> Result<IndexSet> {
    let n = y.nrows();
    if y.ncols() != n || r > n {
        return Err(CosepError::Dimension(format!(
            "postprocess_diag needs square Y with r <= n (got {}x{}, r = {r})",
            y.nrows(),
            y.ncols()
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        y[[j, j]]
            .partial_cmp(&y[[i, i]])
            .unwrap()
            .then(i.cmp(&j))
    });
    IndexSet::new(order[..r].to_vec(), n)
}

/// SPA on `Y^T` sorts the columns; the first `r` extracted indices are the
/// selection, returned sorted.
pub fn postprocess_spa(y: &Array2<f64>, r: usize) -> Result<IndexSet> {
    let n = y.nrows();
    if y.ncols() != n || r > n {
        return Err(CosepError::Dimension(format!(
            "postprocess_spa needs square Y with r <= n (got {}x{}, r = {r})",
            y.nrows(),
            y.ncols()
        )));
    }
    let res = spa(&y.t().to_owned(), r)?;
    if res.selected.len() < r {
        return Err(CosepError::DegenerateY {
            got: res.selected.len(),
            wanted: r,
            partial: res.selected,
        });
    }
    IndexSet::new(res.selected, n)
}

/// Checks both Omega bound families with the given slack.
pub fn is_in_omega(y: &Array2<f64>, w: &OmegaWeights, slack: f64) -> bool {
    let n = y.nrows();
    let ws = w.as_slice();
    for t in 0..n {
        for l in 0..n {
            let v = y[[t, l]];
            if v < -slack || v > 1.0 + slack {
                return false;
            }
            if ws[t] * v > ws[l] * y[[t, t]] + slack {
                return false;
            }
        }
    }
    true
}
