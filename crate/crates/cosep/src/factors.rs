//! Factor fitting: HALS coordinate-descent NNLS, the alternating solve for
//! (P1, P2) given a selected core, and the A-HALS NMF baseline.

use ndarray::Array2;

use crate::error::{CosepError, Result};
use crate::matrix::{frobenius_norm, submatrix, IndexSet};

/// Default inner iteration cap per NNLS call.
pub const NNLS_INNER_ITERS: usize = 2000;
/// Default relative-change tolerance per NNLS call.
pub const NNLS_TOL: f64 = 1e-12;
/// Inner iteration cap for warm-started polish calls inside the
/// alternating loops; the exact initial fits leave little work to do.
const ALT_INNER_ITERS: usize = 200;

/// Nonnegative factors realizing `M ~= P1 * S * P2`.
#[derive(Debug, Clone)]
pub struct CosFactors {
    pub p1: Array2<f64>,
    pub s: Array2<f64>,
    pub p2: Array2<f64>,
    /// `||M - P1 S P2||_F / ||M||_F`.
    pub rel_residual: f64,
}

/// Approximately solves `min_{V >= 0} ||A - W V||_F^2` by cyclic HALS row
/// updates. `v0` seeds the iteration; `None` starts from zero.
///
/// Rows whose Gram diagonal is numerically zero are zeroed and skipped.
pub fn nnls_hals(
    a: &Array2<f64>,
    w: &Array2<f64>,
    v0: Option<&Array2<f64>>,
    inner_iters: usize,
    tol: f64,
) -> Result<Array2<f64>> {
    let (m, k) = w.dim();
    if a.nrows() != m {
        return Err(CosepError::Dimension(format!(
            "A has {} rows, W has {}",
            a.nrows(),
            m
        )));
    }
    let n = a.ncols();
    let gram = w.t().dot(w); // k x k
    let cross = w.t().dot(a); // k x n
    let diag_max = (0..k).map(|i| gram[[i, i]]).fold(0.0_f64, f64::max);
    let diag_cut = 1e-16 * diag_max;

    let mut v = match v0 {
        Some(v0) => {
            if v0.dim() != (k, n) {
                return Err(CosepError::Dimension(format!(
                    "V0 is {:?}, expected ({k}, {n})",
                    v0.dim()
                )));
            }
            v0.clone()
        }
        // Clamped unconstrained solution; HALS then polishes the active set.
        None => least_squares_warm_start(&gram, &cross),
    };

    for _ in 0..inner_iters {
        let mut change_sq = 0.0_f64;
        let mut norm_sq = 0.0_f64;
        for row in 0..k {
            let gkk = gram[[row, row]];
            if gkk <= diag_cut {
                v.row_mut(row).fill(0.0);
                continue;
            }
            // V(k,:) <- max(0, V(k,:) + (C(k,:) - G(k,:) V) / G(k,k))
            let gv = gram.row(row).dot(&v); // 1 x n
            for j in 0..n {
                let old = v[[row, j]];
                let new = (old + (cross[[row, j]] - gv[j]) / gkk).max(0.0);
                change_sq += (new - old) * (new - old);
                norm_sq += new * new;
                v[[row, j]] = new;
            }
        }
        if change_sq.sqrt() <= tol * norm_sq.sqrt().max(1e-300) {
            break;
        }
    }
    Ok(v)
}

/// `max(0, G^+ C)`: the clamped minimum-norm least-squares solution, which
/// HALS then polishes on the active set. Falls back to a zero start when the
/// Gram matrix is too large for the small-SVD pseudoinverse.
fn least_squares_warm_start(gram: &Array2<f64>, cross: &Array2<f64>) -> Array2<f64> {
    match crate::matrix::pinv_small(gram, 1e-12) {
        Ok(ginv) => {
            let mut v = ginv.dot(cross);
            v.mapv_inplace(|x| x.max(0.0));
            v
        }
        Err(_) => Array2::zeros((gram.nrows(), cross.ncols())),
    }
}

/// Exact NNLS `min_{V >= 0} ||A - W V||_F^2` by Lawson-Hanson active sets,
/// column by column on the normal equations. Intended for small
/// dictionaries (`cols(W)` within the small-SVD cap); unlike HALS it
/// reaches the constrained optimum in finitely many steps even when the
/// Gram matrix is rank-deficient.
pub fn nnls_active_set(a: &Array2<f64>, w: &Array2<f64>) -> Result<Array2<f64>> {
    let (m, k) = w.dim();
    if a.nrows() != m {
        return Err(CosepError::Dimension(format!(
            "A has {} rows, W has {}",
            a.nrows(),
            m
        )));
    }
    let n = a.ncols();
    let gram = w.t().dot(w);
    let cross = w.t().dot(a);
    let diag_max = (0..k).map(|i| gram[[i, i]]).fold(0.0_f64, f64::max);

    let mut v = Array2::zeros((k, n));
    for col in 0..n {
        let c: Vec<f64> = (0..k).map(|i| cross[[i, col]]).collect();
        let c_max = c.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        let tol = 1e-13 * (c_max + diag_max).max(f64::MIN_POSITIVE);

        let mut x = vec![0.0_f64; k];
        let mut passive = vec![false; k];
        for _outer in 0..(3 * k + 10) {
            // Gradient of the residual: w = c - G x.
            let mut best = None;
            let mut best_w = tol;
            for j in 0..k {
                if passive[j] {
                    continue;
                }
                let gx: f64 = (0..k).map(|p| gram[[j, p]] * x[p]).sum();
                let wj = c[j] - gx;
                if wj > best_w {
                    best_w = wj;
                    best = Some(j);
                }
            }
            let Some(j_star) = best else { break };
            passive[j_star] = true;

            // Inner loop: unconstrained solve on the passive set, stepping
            // back whenever a passive variable would go nonpositive.
            for _inner in 0..(3 * k + 10) {
                let idx: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
                let p = idx.len();
                let mut gp = Array2::zeros((p, p));
                let mut cp = Array2::zeros((p, 1));
                for (a_i, &gi) in idx.iter().enumerate() {
                    cp[[a_i, 0]] = c[gi];
                    for (b_i, &gj) in idx.iter().enumerate() {
                        gp[[a_i, b_i]] = gram[[gi, gj]];
                    }
                }
                let z = crate::matrix::pinv_small(&gp, 1e-12)?.dot(&cp);
                if idx.iter().enumerate().all(|(a_i, _)| z[[a_i, 0]] > 0.0) {
                    for j in 0..k {
                        x[j] = 0.0;
                    }
                    for (a_i, &gi) in idx.iter().enumerate() {
                        x[gi] = z[[a_i, 0]];
                    }
                    break;
                }
                // Largest feasible step toward z.
                let mut alpha = 1.0_f64;
                for (a_i, &gi) in idx.iter().enumerate() {
                    let zi = z[[a_i, 0]];
                    if zi <= 0.0 {
                        let xi = x[gi];
                        if xi - zi > 0.0 {
                            alpha = alpha.min(xi / (xi - zi));
                        }
                    }
                }
                for (a_i, &gi) in idx.iter().enumerate() {
                    x[gi] += alpha * (z[[a_i, 0]] - x[gi]);
                    if x[gi] <= tol * 1e-3 {
                        x[gi] = 0.0;
                        passive[gi] = false;
                    }
                }
            }
        }
        for j in 0..k {
            v[[j, col]] = x[j];
        }
    }
    Ok(v)
}

/// Exact NNLS for the left factor: `min_{U >= 0} ||A - U B||_F^2`.
pub fn nnls_active_set_left(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    let vt = nnls_active_set(&a.t().to_owned(), &b.t().to_owned())?;
    Ok(vt.t().to_owned())
}

/// Solves `min_{U >= 0} ||A - U B||_F^2` by transposing into [`nnls_hals`].
pub fn nnls_hals_left(
    a: &Array2<f64>,
    b: &Array2<f64>,
    u0: Option<&Array2<f64>>,
    inner_iters: usize,
    tol: f64,
) -> Result<Array2<f64>> {
    let at = a.t().to_owned();
    let bt = b.t().to_owned();
    let u0t = u0.map(|u| u.t().to_owned());
    let vt = nnls_hals(&at, &bt, u0t.as_ref(), inner_iters, tol)?;
    Ok(vt.t().to_owned())
}

/// Alternating NNLS for the factor pair given a selected core.
///
/// P1 and P2 are initialized against the full selected rows/columns, then
/// refined alternately against `P1 S` and `S P2` until the combined factor
/// change drops below `delta` or `max_iter` passes run.
pub fn compute_factors(
    m: &Array2<f64>,
    k1: &IndexSet,
    k2: &IndexSet,
    max_iter: usize,
    delta: f64,
) -> Result<CosFactors> {
    let s = submatrix(m, Some(k1), Some(k2))?;
    if s.iter().all(|&v| v == 0.0) {
        return Err(CosepError::DegenerateCore("selected core is all zero".into()));
    }
    let m1 = submatrix(m, Some(k1), None)?; // r1 x n
    let m2 = submatrix(m, None, Some(k2))?; // m x r2

    // Exact initial fits against the selected rows/columns; fall back to
    // HALS when the selection exceeds the small-SVD cap.
    let mut p1 = match nnls_active_set_left(m, &m1) {
        Ok(p1) => p1,
        Err(CosepError::UnsupportedSize(_, _)) => {
            nnls_hals_left(m, &m1, None, NNLS_INNER_ITERS, NNLS_TOL)?
        }
        Err(e) => return Err(e),
    };
    let mut p2 = match nnls_active_set(m, &m2) {
        Ok(p2) => p2,
        Err(CosepError::UnsupportedSize(_, _)) => {
            nnls_hals(m, &m2, None, NNLS_INNER_ITERS, NNLS_TOL)?
        }
        Err(e) => return Err(e),
    };

    for _ in 0..max_iter {
        let p1_prev = p1.clone();
        let p2_prev = p2.clone();

        let w = p1.dot(&s);
        p2 = nnls_hals(m, &w, Some(&p2), ALT_INNER_ITERS, NNLS_TOL)?;
        let h = s.dot(&p2);
        p1 = nnls_hals_left(m, &h, Some(&p1), ALT_INNER_ITERS, NNLS_TOL)?;

        let e = frobenius_norm(&(&p1 - &p1_prev)) + frobenius_norm(&(&p2 - &p2_prev));
        if e <= delta {
            break;
        }
    }

    let mnorm = frobenius_norm(m);
    let rel_residual = if mnorm > 0.0 {
        frobenius_norm(&(m - &p1.dot(&s).dot(&p2))) / mnorm
    } else {
        0.0
    };
    Ok(CosFactors {
        p1,
        s,
        p2,
        rel_residual,
    })
}

/// A-HALS NMF baseline: alternating HALS on W and H from a seeded uniform
/// start scaled so `||W H||_F ~= ||M||_F`.
pub fn ahals_nmf(
    m: &Array2<f64>,
    r: usize,
    max_iter: usize,
    seed: u64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let (rows, cols) = m.dim();
    if r == 0 || r > rows.min(cols) {
        return Err(CosepError::Dimension(format!(
            "rank {r} out of range for {rows}x{cols}"
        )));
    }
    let mut rng = crate::rng::stream(seed, 0);
    let mut w = crate::rng::uniform_matrix(&mut rng, rows, r);
    let mut h = crate::rng::uniform_matrix(&mut rng, r, cols);
    let wh_norm = frobenius_norm(&w.dot(&h));
    if wh_norm > 0.0 {
        let scale = (frobenius_norm(m) / wh_norm).sqrt();
        w *= scale;
        h *= scale;
    }

    for _ in 0..max_iter {
        h = nnls_hals(m, &w, Some(&h), NNLS_INNER_ITERS, NNLS_TOL)?;
        w = nnls_hals_left(m, &h, Some(&w), NNLS_INNER_ITERS, NNLS_TOL)?;
    }
    Ok((w, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn residual(a: &Array2<f64>, w: &Array2<f64>, v: &Array2<f64>) -> f64 {
        frobenius_norm(&(a - &w.dot(v)))
    }

    #[test]
    fn nnls_exact_representation_gives_identity() {
        let mut rng = crate::rng::stream(1, 0);
        let w = crate::rng::uniform_matrix(&mut rng, 6, 3) + 0.1;
        let v = nnls_hals(&w.clone(), &w, None, 2000, 1e-12).unwrap();
        let eye: Array2<f64> = Array2::eye(3);
        assert!(frobenius_norm(&(&v - &eye)) < 1e-8, "{v:?}");
    }

    #[test]
    fn nnls_scalar_case() {
        let w = array![[1.0], [2.0], [0.5]];
        let a = &w * 2.0;
        let v = nnls_hals(&a, &w, None, 100, 1e-14).unwrap();
        assert!((v[[0, 0]] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nnls_orthogonal_columns_match_closed_form() {
        let mut rng = crate::rng::stream(2, 0);
        // Orthogonal W: disjoint supports.
        let mut w = Array2::zeros((6, 3));
        w[[0, 0]] = 1.0;
        w[[1, 0]] = 2.0;
        w[[2, 1]] = 1.5;
        w[[3, 1]] = 0.5;
        w[[4, 2]] = 3.0;
        w[[5, 2]] = 1.0;
        let a = crate::rng::uniform_matrix(&mut rng, 6, 4);
        let v = nnls_hals(&a, &w, None, 2000, 1e-13).unwrap();
        let gram_inv = {
            let g = w.t().dot(&w);
            let mut gi = Array2::zeros((3, 3));
            for i in 0..3 {
                gi[[i, i]] = 1.0 / g[[i, i]];
            }
            gi
        };
        let closed = gram_inv.dot(&w.t()).dot(&a).mapv(|x| x.max(0.0));
        assert!(frobenius_norm(&(&v - &closed)) < 1e-8);
    }

    #[test]
    fn nnls_objective_nonincreasing() {
        let mut rng = crate::rng::stream(3, 0);
        let w = crate::rng::uniform_matrix(&mut rng, 8, 3);
        let a = crate::rng::uniform_matrix(&mut rng, 8, 5);
        let mut prev = residual(&a, &w, &Array2::zeros((3, 5)));
        let mut v = Array2::zeros((3, 5));
        for _ in 0..20 {
            v = nnls_hals(&a, &w, Some(&v), 1, 0.0).unwrap();
            let r = residual(&a, &w, &v);
            assert!(r <= prev + 1e-12);
            prev = r;
        }
    }

    #[test]
    fn nnls_degenerate_column_skipped() {
        let w = array![[1.0, 0.0], [1.0, 0.0]];
        let a = array![[2.0], [2.0]];
        let v = nnls_hals(&a, &w, None, 100, 1e-12).unwrap();
        assert!((v[[0, 0]] - 2.0).abs() < 1e-10);
        assert_eq!(v[[1, 0]], 0.0);
    }

    #[test]
    fn compute_factors_exact_when_core_is_whole_matrix() {
        // With the full index sets the fit is underdetermined, so the
        // factors need not be identities, but the residual must vanish.
        let mut rng = crate::rng::stream(4, 0);
        let m = crate::rng::uniform_matrix(&mut rng, 4, 5) + 0.1;
        let k1 = IndexSet::full(4);
        let k2 = IndexSet::full(5);
        let f = compute_factors(&m, &k1, &k2, 200, 1e-8).unwrap();
        assert!(f.p1.iter().all(|&v| v >= 0.0));
        assert!(f.p2.iter().all(|&v| v >= 0.0));
        assert!(f.rel_residual < 1e-8, "residual {}", f.rel_residual);
    }

    #[test]
    fn nnls_active_set_matches_exact_solution() {
        let mut rng = crate::rng::stream(9, 0);
        let w = crate::rng::uniform_matrix(&mut rng, 8, 3) + 0.05;
        let v_true = crate::rng::uniform_matrix(&mut rng, 3, 5);
        let a = w.dot(&v_true);
        let v = nnls_active_set(&a, &w).unwrap();
        assert!(residual(&a, &w, &v) < 1e-10);
    }

    #[test]
    fn nnls_active_set_handles_rank_deficient_dictionary() {
        // Duplicate a column so the Gram matrix is singular; the fit must
        // still reach a zero-residual nonnegative solution.
        let mut rng = crate::rng::stream(10, 0);
        let base = crate::rng::uniform_matrix(&mut rng, 7, 2) + 0.05;
        let mut w = Array2::zeros((7, 3));
        w.column_mut(0).assign(&base.column(0));
        w.column_mut(1).assign(&base.column(1));
        w.column_mut(2).assign(&base.column(0));
        let v_true = crate::rng::uniform_matrix(&mut rng, 3, 4);
        let a = w.dot(&v_true);
        let v = nnls_active_set(&a, &w).unwrap();
        assert!(v.iter().all(|&x| x >= 0.0));
        assert!(residual(&a, &w, &v) < 1e-10, "residual {}", residual(&a, &w, &v));
    }

    #[test]
    fn nnls_active_set_clips_infeasible_target() {
        // Single-column dictionary with a target pointing away from it: the
        // optimum is zero.
        let w = array![[1.0], [1.0]];
        let a = array![[-1.0], [-2.0]];
        let v = nnls_active_set(&a, &w).unwrap();
        assert_eq!(v[[0, 0]], 0.0);
    }

    #[test]
    fn compute_factors_rejects_zero_core() {
        let mut m = Array2::from_elem((3, 3), 1.0);
        m[[0, 0]] = 0.0;
        let k1 = IndexSet::new(vec![0], 3).unwrap();
        let k2 = IndexSet::new(vec![0], 3).unwrap();
        assert!(matches!(
            compute_factors(&m, &k1, &k2, 10, 1e-8),
            Err(CosepError::DegenerateCore(_))
        ));
    }

    #[test]
    fn compute_factors_outputs_nonnegative() {
        let mut rng = crate::rng::stream(5, 0);
        let m = crate::rng::uniform_matrix(&mut rng, 6, 6) + 0.05;
        let k1 = IndexSet::new(vec![0, 3], 6).unwrap();
        let k2 = IndexSet::new(vec![1, 4], 6).unwrap();
        let f = compute_factors(&m, &k1, &k2, 50, 1e-8).unwrap();
        assert!(f.p1.iter().all(|&v| v >= 0.0));
        assert!(f.p2.iter().all(|&v| v >= 0.0));
        assert!((0.0..=1.0).contains(&f.rel_residual));
    }

    #[test]
    fn ahals_recovers_rank_one() {
        let u = array![[1.0], [2.0], [3.0]];
        let v = array![[0.5, 1.5, 2.5, 0.25]];
        let m = u.dot(&v);
        let (w, h) = ahals_nmf(&m, 1, 500, 7).unwrap();
        let rel = frobenius_norm(&(&m - &w.dot(&h))) / frobenius_norm(&m);
        assert!(rel < 1e-6, "rel = {rel}");
    }

    #[test]
    fn ahals_fits_planted_factorization() {
        let mut rng = crate::rng::stream(8, 0);
        let w0 = crate::rng::uniform_matrix(&mut rng, 12, 3);
        let h0 = crate::rng::uniform_matrix(&mut rng, 3, 10);
        let m = w0.dot(&h0);
        let (w, h) = ahals_nmf(&m, 3, 1000, 11).unwrap();
        let rel = frobenius_norm(&(&m - &w.dot(&h))) / frobenius_norm(&m);
        assert!(rel < 1e-3, "rel = {rel}");
    }
}
