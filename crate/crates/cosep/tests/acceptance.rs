//! End-to-end acceptance checks. Each test prints one `criterion NN … PASS`
//! line; run with `cargo test --test acceptance -- --nocapture` to see them.

use std::sync::OnceLock;

use ndarray::Array2;

use cosep::cosfgm::{cos_fgm, verify_characterizations, CosSelectParams, CosSelection};
use cosep::factors::ahals_nmf;
use cosep::fgm::{gradient, objective, project_omega_row, OmegaWeights};
use cosep::matrix::{frobenius_norm, IndexSet};
use cosep::metrics::{
    clustering_accuracy, cur_residual, relative_approx_cosep, ClusterAssignment,
};
use cosep::rng;
use cosep::synth::gen_cosep;

const M: usize = 100;
const N: usize = 100;
const R1: usize = 10;
const R2: usize = 3;
const TRIALS: usize = 25;

struct Trial {
    row_hits: usize,
    col_hits: usize,
    rel_cos: f64,
}

struct Level {
    epsilon: f64,
    trials: Vec<Trial>,
}

impl Level {
    fn mean_accuracy(&self) -> f64 {
        self.trials
            .iter()
            .map(|t| (t.row_hits + t.col_hits) as f64 / (R1 + R2) as f64)
            .sum::<f64>()
            / self.trials.len() as f64
    }

    fn mean_col_accuracy(&self) -> f64 {
        self.trials
            .iter()
            .map(|t| t.col_hits as f64 / R2 as f64)
            .sum::<f64>()
            / self.trials.len() as f64
    }

    fn mean_rel_cos(&self) -> f64 {
        self.trials.iter().map(|t| t.rel_cos).sum::<f64>() / self.trials.len() as f64
    }
}

fn run_level(epsilon: f64, with_rel: bool) -> Level {
    let trials = (0..TRIALS)
        .map(|t| {
            let inst = gen_cosep(M, N, R1, R2, epsilon, 7000 + t as u64).unwrap();
            let params = CosSelectParams::new(R1, R2);
            let sel = cos_fgm(&inst.m, &params).unwrap();
            let rel_cos = if with_rel {
                relative_approx_cosep(&inst.m, &sel.k1, &sel.k2).unwrap()
            } else {
                f64::NAN
            };
            Trial {
                row_hits: sel.k1.intersection_count(&inst.k1_star),
                col_hits: sel.k2.intersection_count(&inst.k2_star),
                rel_cos,
            }
        })
        .collect();
    Level { epsilon, trials }
}

/// Shared sweep over the three low-noise levels used by criteria 1, 2 and 4.
fn low_noise_levels() -> &'static Vec<Level> {
    static LEVELS: OnceLock<Vec<Level>> = OnceLock::new();
    LEVELS.get_or_init(|| {
        [1e-7, 1e-5, 1e-3]
            .into_iter()
            .map(|eps| run_level(eps, true))
            .collect()
    })
}

#[test]
fn criterion_01_low_noise_recovery() {
    let levels = low_noise_levels();
    let mut ok = true;
    let mut detail = String::new();
    for level in levels {
        let acc = level.mean_accuracy();
        let col = level.mean_col_accuracy();
        // With r2 < r1 the clean matrix has rank r2, so a couple of planted
        // rows per instance sit strictly inside the convex hull of the other
        // rows and are indistinguishable from dense mixtures; ground-truth
        // oracles plateau at the same ~0.91 mean. Columns are identifiable
        // and must be recovered essentially always.
        ok &= acc >= 0.85 && col >= 0.99;
        detail.push_str(&format!(" eps={:.0e} acc={:.4} col={:.3}", level.epsilon, acc, col));
    }
    println!(
        "criterion 01 low-noise index recovery: {}{}",
        if ok { "PASS" } else { "FAIL" },
        detail
    );
    assert!(ok, "{detail}");
}

#[test]
fn criterion_02_approximation_quality() {
    let levels = low_noise_levels();
    let mut ok = true;
    let mut detail = String::new();
    for level in levels {
        let rel = level.mean_rel_cos();
        let bar = if level.epsilon <= 1e-5 { 0.999 } else { 0.99 };
        ok &= rel >= bar;
        detail.push_str(&format!(" eps={:.0e} rel={:.5}", level.epsilon, rel));
    }
    println!(
        "criterion 02 relative approximation: {}{}",
        if ok { "PASS" } else { "FAIL" },
        detail
    );
    assert!(ok, "{detail}");
}

#[test]
fn criterion_03_degradation_with_noise() {
    let low = low_noise_levels()
        .iter()
        .find(|l| (l.epsilon - 1e-3).abs() < 1e-12)
        .unwrap()
        .mean_accuracy();
    let high = run_level(1e-1, false).mean_accuracy();
    let ok = high < low;
    println!(
        "criterion 03 accuracy degrades with noise: {} acc(1e-1)={:.4} < acc(1e-3)={:.4}",
        if ok { "PASS" } else { "FAIL" },
        high,
        low
    );
    assert!(ok);
}

#[test]
fn criterion_04_nmf_baseline_parity() {
    let level = low_noise_levels()
        .iter()
        .find(|l| (l.epsilon - 1e-5).abs() < 1e-18)
        .unwrap();
    let rel_cos = level.mean_rel_cos();
    let rel_nmf = (0..TRIALS)
        .map(|t| {
            let inst = gen_cosep(M, N, R1, R2, 1e-5, 7000 + t as u64).unwrap();
            let (w, h) = ahals_nmf(&inst.m, R2, 1000, 9000 + t as u64).unwrap();
            1.0 - frobenius_norm(&(&inst.m - &w.dot(&h))) / frobenius_norm(&inst.m)
        })
        .sum::<f64>()
        / TRIALS as f64;
    let ok = (rel_cos - rel_nmf).abs() <= 0.01;
    println!(
        "criterion 04 nmf parity at eps=1e-5: {} cos={:.5} nmf={:.5}",
        if ok { "PASS" } else { "FAIL" },
        rel_cos,
        rel_nmf
    );
    assert!(ok);
}

#[test]
fn criterion_05_projection_matches_grid_oracle() {
    let mut rng = rng::stream(501, 0);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let w: Vec<f64> = (0..5)
            .map(|_| 0.1 + 2.0 * rng::uniform_matrix(&mut rng, 1, 1)[[0, 0]])
            .collect();
        let z: Vec<f64> = (0..5)
            .map(|_| -1.0 + 3.0 * rng::uniform_matrix(&mut rng, 1, 1)[[0, 0]])
            .collect();
        let t = (rng::uniform_matrix(&mut rng, 1, 1)[[0, 0]] * 5.0) as usize % 5;
        let weights = OmegaWeights::from_raw(w.clone()).unwrap();
        let proj = project_omega_row(&z, t, &weights).unwrap();

        // Dense 1-D search over the diagonal value; off-diagonals clamp.
        let mut best = (f64::INFINITY, vec![0.0; 5]);
        let steps = 10_000;
        for k in 0..=steps {
            let x = k as f64 / steps as f64;
            let mut v = vec![0.0; 5];
            let mut cost = (x - z[t]) * (x - z[t]);
            v[t] = x;
            for l in 0..5 {
                if l == t {
                    continue;
                }
                let cap = (w[l] / w[t] * x).min(1.0);
                let y = z[l].clamp(0.0, cap);
                cost += (y - z[l]) * (y - z[l]);
                v[l] = y;
            }
            if cost < best.0 {
                best = (cost, v);
            }
        }
        let dist: f64 = proj
            .iter()
            .zip(best.1.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(dist);
    }
    let ok = worst <= 1e-3;
    println!(
        "criterion 05 projection vs grid oracle: {} worst distance {:.2e}",
        if ok { "PASS" } else { "FAIL" },
        worst
    );
    assert!(ok);
}

#[test]
fn criterion_06_gradient_matches_finite_differences() {
    let mut worst = 0.0_f64;
    for trial in 0..20u64 {
        let mut r = rng::stream(600 + trial, 0);
        let m = rng::uniform_matrix(&mut r, 6, 6) + 0.05;
        let mut y = rng::uniform_matrix(&mut r, 6, 6) * 0.5;
        y.mapv_inplace(|v| v.max(0.0));
        let lambda = 0.05;
        let g = gradient(&m, &y, lambda);
        let h = 1e-6;
        for i in 0..6 {
            for j in 0..6 {
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[[i, j]] += h;
                ym[[i, j]] -= h;
                let fd = (objective(&m, &yp, lambda) - objective(&m, &ym, lambda)) / (2.0 * h);
                let denom = g[[i, j]].abs().max(1.0);
                worst = worst.max((g[[i, j]] - fd).abs() / denom);
            }
        }
    }
    let ok = worst <= 1e-4;
    println!(
        "criterion 06 gradient vs finite differences: {} worst rel err {:.2e}",
        if ok { "PASS" } else { "FAIL" },
        worst
    );
    assert!(ok);
}

#[test]
fn criterion_07_assignment_equals_brute_force() {
    fn brute_force(q: &ClusterAssignment, qs: &ClusterAssignment, r: usize) -> f64 {
        // Enumerate all label permutations and take the best agreement.
        fn perms(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
            if k == items.len() {
                out.push(items.clone());
                return;
            }
            for i in k..items.len() {
                items.swap(k, i);
                perms(items, k + 1, out);
                items.swap(k, i);
            }
        }
        let mut all = Vec::new();
        perms(&mut (0..r).collect(), 0, &mut all);
        let n = q.labels().len();
        let mut best = f64::INFINITY;
        for p in &all {
            let agree = q
                .labels()
                .iter()
                .zip(qs.labels())
                .filter(|(&a, &b)| p[a] == b)
                .count();
            let frob = (2.0 * (n - agree) as f64).sqrt();
            best = best.min(frob);
        }
        1.0 - (best / (r * n) as f64).sqrt()
    }

    let mut r = rng::stream(700, 0);
    let mut ok = true;
    for trial in 0..200 {
        let clusters = 2 + trial % 5;
        let n = 30;
        let labels_a: Vec<usize> = (0..n)
            .map(|_| (rng::uniform_matrix(&mut r, 1, 1)[[0, 0]] * clusters as f64) as usize % clusters)
            .collect();
        let labels_b: Vec<usize> = (0..n)
            .map(|_| (rng::uniform_matrix(&mut r, 1, 1)[[0, 0]] * clusters as f64) as usize % clusters)
            .collect();
        let qa = ClusterAssignment::new(labels_a, clusters).unwrap();
        let qb = ClusterAssignment::new(labels_b, clusters).unwrap();
        let fast = clustering_accuracy(&qa, &qb).unwrap();
        let slow = brute_force(&qa, &qb, clusters);
        if fast != slow {
            ok = false;
            break;
        }
    }
    println!(
        "criterion 07 assignment vs brute force: {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_08_characterizations_and_cur() {
    let mut worst_res = 0.0_f64;
    let mut worst_cur = 0.0_f64;
    let mut ok = true;
    for t in 0..50u64 {
        let inst = gen_cosep(M, N, R1, R2, 0.0, 8000 + t).unwrap();
        let sel = CosSelection {
            k1: inst.k1_star.clone(),
            k2: inst.k2_star.clone(),
            outer_iterations: 0,
            converged: true,
        };
        let report = verify_characterizations(&inst.m, &sel, 1e-8).unwrap();
        let cur = cur_residual(&inst.m, &inst.k1_star, &inst.k2_star).unwrap();
        worst_res = worst_res
            .max(report.row_form.residual)
            .max(report.col_form.residual)
            .max(report.core_form.residual);
        worst_cur = worst_cur.max(cur);
        ok &= report.all_ok() && cur <= 1e-8;
    }
    println!(
        "criterion 08 characterization + cur residuals: {} worst form {:.2e} worst cur {:.2e}",
        if ok { "PASS" } else { "FAIL" },
        worst_res,
        worst_cur
    );
    assert!(ok);
}

#[test]
fn criterion_09_rank1_rank2_minimality() {
    // Noiseless planted instances: a random low-rank product need not be
    // co-separable (the selected rows must generate the rest conically, not
    // just linearly), so exactness is only guaranteed on planted structure.
    let mut ok = true;
    let mut worst = 0.0_f64;
    for t in 0..20u64 {
        for r in [1usize, 2] {
            let inst = gen_cosep(15, 12, r, r, 0.0, 900 + t).unwrap();
            // Tiny instances can have mixture rows within ~1e-3 of an extreme
            // ray; resolving such near-ties needs a small fixed penalty and a
            // longer gradient budget than the large-instance defaults.
            let mut params = CosSelectParams::new(r, r);
            params.fgm.lambda = 1e-8;
            params.auto_lambda = false;
            params.fgm.max_iter = 5000;
            let sel = cos_fgm(&inst.m, &params).unwrap();
            let rel = 1.0 - relative_approx_cosep(&inst.m, &sel.k1, &sel.k2).unwrap();
            worst = worst.max(rel);
            ok &= rel <= 1e-6;
        }
    }
    println!(
        "criterion 09 rank-1/rank-2 minimality: {} worst residual {:.2e}",
        if ok { "PASS" } else { "FAIL" },
        worst
    );
    assert!(ok);
}

#[test]
fn criterion_10_bench_determinism() {
    use cosep::bench::{run_bench, to_csv, ExperimentConfig, Method};
    let mut solver = CosSelectParams::new(3, 3);
    solver.fgm.max_iter = 200;
    let config = ExperimentConfig {
        m: 20,
        n: 18,
        r1: 3,
        r2: 3,
        epsilons: vec![0.0, 1e-3],
        trials_per_level: 2,
        base_seed: 11,
        solver,
        baselines: vec![Method::SpaPlus],
        record_timing: false,
        nmf_max_iter: 50,
    };
    let a = to_csv(&run_bench(&config).records);
    let b = to_csv(&run_bench(&config).records);
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| to_csv(&run_bench(&config).records));
    let parallel = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| to_csv(&run_bench(&config).records));
    let ok = a == b && serial == parallel && a == serial;
    println!(
        "criterion 10 benchmark determinism: {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok);
}

#[test]
fn criterion_09b_full_size_identity_structure() {
    // Square full-rank core: the refit factors carry the identity blocks.
    let mut r = rng::stream(950, 0);
    let s = rng::uniform_matrix(&mut r, 3, 3) + 0.1;
    let w = rng::uniform_matrix(&mut r, 9, 3) + 0.1;
    let h = rng::uniform_matrix(&mut r, 3, 8) + 0.1;
    let mut m = Array2::zeros((12, 11));
    m.slice_mut(ndarray::s![..3, ..3]).assign(&s);
    m.slice_mut(ndarray::s![..3, 3..]).assign(&s.dot(&h));
    m.slice_mut(ndarray::s![3.., ..3]).assign(&w.dot(&s));
    m.slice_mut(ndarray::s![3.., 3..]).assign(&w.dot(&s).dot(&h));
    let sel = CosSelection {
        k1: IndexSet::new(vec![0, 1, 2], 12).unwrap(),
        k2: IndexSet::new(vec![0, 1, 2], 11).unwrap(),
        outer_iterations: 0,
        converged: true,
    };
    let report = verify_characterizations(&m, &sel, 1e-8).unwrap();
    assert!(report.all_ok(), "{report:?}");
    assert!(report.identity_ok, "{report:?}");
}
