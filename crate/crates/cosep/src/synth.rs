//! Planted co-separable instance generator.
//!
//! Assembles the block matrix `[S, SH; WS, WSH]` from uniform [0,1] draws,
//! Sinkhorn-balances it, adds Gaussian noise scaled to a target relative
//! Frobenius norm, truncates at zero, and hides the planted rows/columns
//! behind random permutations.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::{frobenius_norm, sinkhorn_balance, IndexSet};
use crate::rng;

// Sub-stream ids so each randomness source draws independently.
const STREAM_BLOCKS: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_PERMS: u64 = 2;

#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub m: Array2<f64>,
    /// Planted row indices after permutation, sorted.
    pub k1_star: IndexSet,
    /// Planted column indices after permutation, sorted.
    pub k2_star: IndexSet,
    pub epsilon: f64,
    pub seed: u64,
    /// The balanced pre-noise, pre-permutation matrix.
    pub clean: Array2<f64>,
}

/// Ground-truth sidecar serialized next to each exported instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceSidecar {
    pub seed: u64,
    pub epsilon: f64,
    pub r1: usize,
    pub r2: usize,
    pub k1_star: Vec<usize>,
    pub k2_star: Vec<usize>,
}

impl SyntheticInstance {
    pub fn sidecar(&self) -> InstanceSidecar {
        InstanceSidecar {
            seed: self.seed,
            epsilon: self.epsilon,
            r1: self.k1_star.len(),
            r2: self.k2_star.len(),
            k1_star: self.k1_star.indices().to_vec(),
            k2_star: self.k2_star.indices().to_vec(),
        }
    }
}

/// Generates one planted co-(r1, r2)-separable instance.
pub fn gen_cosep(
    m: usize,
    n: usize,
    r1: usize,
    r2: usize,
    epsilon: f64,
    seed: u64,
) -> Result<SyntheticInstance> {
    assert!(r1 > 0 && r1 < m, "need 0 < r1 < m");
    assert!(r2 > 0 && r2 < n, "need 0 < r2 < n");
    assert!(epsilon >= 0.0);

    let mut blocks = rng::stream(seed, STREAM_BLOCKS);
    let s = rng::uniform_matrix(&mut blocks, r1, r2);
    let w = rng::uniform_matrix(&mut blocks, m - r1, r1);
    let h = rng::uniform_matrix(&mut blocks, r2, n - r2);

    let mut block = Array2::zeros((m, n));
    let ws = w.dot(&s);
    let sh = s.dot(&h);
    let wsh = ws.dot(&h);
    block.slice_mut(ndarray::s![..r1, ..r2]).assign(&s);
    block.slice_mut(ndarray::s![..r1, r2..]).assign(&sh);
    block.slice_mut(ndarray::s![r1.., ..r2]).assign(&ws);
    block.slice_mut(ndarray::s![r1.., r2..]).assign(&wsh);

    let scaling = sinkhorn_balance(&block, 1000, 1e-10)?;
    let mut clean = block;
    for i in 0..m {
        for j in 0..n {
            clean[[i, j]] *= scaling.row[i] * scaling.col[j];
        }
    }

    let mut noisy = clean.clone();
    if epsilon > 0.0 {
        let mut noise_rng = rng::stream(seed, STREAM_NOISE);
        let mut noise = rng::normal_matrix(&mut noise_rng, m, n);
        let nn = frobenius_norm(&noise);
        if nn > 0.0 {
            noise *= epsilon * frobenius_norm(&clean) / nn;
        }
        noisy += &noise;
        noisy.mapv_inplace(|v| v.max(0.0));
    }

    let mut perm_rng = rng::stream(seed, STREAM_PERMS);
    let row_perm = rng::permutation(&mut perm_rng, m);
    let col_perm = rng::permutation(&mut perm_rng, n);
    // row_perm[i] = source row placed at position i; planted row p lands at
    // the position whose source is p.
    let permuted = noisy.select(Axis(0), &row_perm).select(Axis(1), &col_perm);
    let k1_star: Vec<usize> = (0..m).filter(|&i| row_perm[i] < r1).collect();
    let k2_star: Vec<usize> = (0..n).filter(|&j| col_perm[j] < r2).collect();

    Ok(SyntheticInstance {
        m: permuted,
        k1_star: IndexSet::new(k1_star, m)?,
        k2_star: IndexSet::new(k2_star, n)?,
        epsilon,
        seed,
        clean,
    })
}

/// The 20 noise levels log-spaced over [1e-7, 1e-1], endpoints inclusive.
pub fn noise_grid() -> Vec<f64> {
    (0..20)
        .map(|k| 10f64.powf(-7.0 + 6.0 * k as f64 / 19.0))
        .collect()
}
