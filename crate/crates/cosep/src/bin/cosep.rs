//! Command-line front end: instance generation, single solves, and the full
//! noise-sweep benchmark.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cosep::bench::{run_bench, to_csv, ExperimentConfig, Method};
use cosep::cosfgm::{cos_fgm, CosSelectParams, Postprocess};
use cosep::factors::{ahals_nmf, compute_factors};
use cosep::metrics::{index_accuracy, relative_approx_cosep, relative_approx_generic};
use cosep::mmio::{read_matrix_market, write_matrix_market};
use cosep::spa::{spac, spar};
use cosep::synth::{gen_cosep, noise_grid, InstanceSidecar};
use cosep::IndexSet;

#[derive(Parser)]
#[command(name = "cosep", about = "Co-separable NMF: selection, fitting, benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate planted instances as MatrixMarket files with JSON sidecars.
    Synth(SynthArgs),
    /// Run one method on one matrix and print a JSON result.
    Solve(SolveArgs),
    /// Full noise sweep with CSV records and a JSON summary.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct ShapeArgs {
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    r1: usize,
    #[arg(long, default_value_t = 3)]
    r2: usize,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    /// "standard" for the 20-level log grid, or a comma-separated list.
    #[arg(long, default_value = "standard")]
    eps_grid: String,
    #[arg(long, default_value_t = 25)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Copy, Clone, ValueEnum)]
enum PostprocessArg {
    Diag,
    Spa,
}

#[derive(Args)]
struct SolveArgs {
    matrix: PathBuf,
    #[arg(long, default_value = "cos_fgm")]
    method: String,
    #[arg(long, default_value_t = 10)]
    r1: usize,
    #[arg(long, default_value_t = 3)]
    r2: usize,
    /// Trace penalty; omitted means the per-matrix default.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = PostprocessArg::Diag)]
    postprocess: PostprocessArg,
    #[arg(long, default_value_t = 1000)]
    fgm_iters: usize,
    #[arg(long, default_value_t = 1000)]
    nmf_iters: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write factor matrices next to the result.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    /// "standard" for the 20-level log grid, or a comma-separated list.
    #[arg(long, default_value = "standard")]
    eps_grid: String,
    #[arg(long, default_value_t = 25)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = PostprocessArg::Diag)]
    postprocess: PostprocessArg,
    /// Comma-separated subset of spa_plus,spac,spar,ahals.
    #[arg(long, default_value = "")]
    baselines: String,
    #[arg(long)]
    threads: Option<usize>,
    /// Zero out the wall-clock column for reproducible output.
    #[arg(long)]
    no_timing: bool,
    #[arg(long, default_value_t = 1000)]
    fgm_iters: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_eps_grid(spec: &str) -> Result<Vec<f64>, String> {
    if spec == "standard" {
        return Ok(noise_grid());
    }
    let eps: Result<Vec<f64>, _> = spec.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let eps = eps.map_err(|e| format!("bad --eps-grid: {e}"))?;
    if eps.is_empty() || eps.iter().any(|&e| e < 0.0 || !e.is_finite()) {
        return Err("--eps-grid entries must be nonnegative".into());
    }
    Ok(eps)
}

fn configure_threads(requested: Option<usize>) -> Result<(), String> {
    let from_env = std::env::var("COSEP_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(t) = from_env.or(requested) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| format!("thread pool: {e}"))?;
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<ExitCode, String> {
    let eps = parse_eps_grid(&args.eps_grid)?;
    for (e_idx, &epsilon) in eps.iter().enumerate() {
        for trial in 0..args.trials {
            let seed = args.seed + 1000 * e_idx as u64 + trial as u64;
            let inst = gen_cosep(args.shape.m, args.shape.n, args.shape.r1, args.shape.r2, epsilon, seed)
                .map_err(|e| e.to_string())?;
            let dir = args.out_dir.join(format!("epsilon_{e_idx}")).join(format!("trial_{trial}"));
            std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            write_matrix_market(&dir.join("instance.mtx"), &inst.m).map_err(|e| e.to_string())?;
            let sidecar = serde_json::to_string_pretty(&inst.sidecar()).unwrap();
            std::fs::write(dir.join("instance.json"), sidecar)
                .map_err(|e| format!("{}: {e}", dir.display()))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SolveResult {
    method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    k1: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k2: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rel_approx: Option<f64>,
    seconds: f64,
}

fn load_sidecar(matrix_path: &Path) -> Option<InstanceSidecar> {
    let sidecar_path = matrix_path.with_extension("json");
    let text = std::fs::read_to_string(sidecar_path).ok()?;
    serde_json::from_str(&text).ok()
}

fn cmd_solve(args: &SolveArgs) -> Result<ExitCode, String> {
    let m = read_matrix_market(&args.matrix).map_err(|e| e.to_string())?;
    let sidecar = load_sidecar(&args.matrix);
    let truth = sidecar.as_ref().and_then(|s| {
        let k1 = IndexSet::new(s.k1_star.clone(), m.nrows()).ok()?;
        let k2 = IndexSet::new(s.k2_star.clone(), m.ncols()).ok()?;
        Some((k1, k2))
    });

    let start = std::time::Instant::now();
    let mut result = SolveResult {
        method: args.method.clone(),
        k1: None,
        k2: None,
        accuracy: None,
        rel_approx: None,
        seconds: 0.0,
    };

    let selection_metrics =
        |k1: &IndexSet, k2: &IndexSet| -> Result<(Option<f64>, Option<f64>), String> {
            let acc = truth
                .as_ref()
                .map(|(k1s, k2s)| index_accuracy(k1, k2, k1s, k2s));
            let rel = relative_approx_cosep(&m, k1, k2).map_err(|e| e.to_string())?;
            Ok((acc, Some(rel)))
        };

    match args.method.as_str() {
        "cos_fgm" => {
            let mut params = CosSelectParams::new(args.r1, args.r2);
            params.delta = args.delta;
            params.fgm.max_iter = args.fgm_iters;
            params.postprocess = match args.postprocess {
                PostprocessArg::Diag => Postprocess::Diag,
                PostprocessArg::Spa => Postprocess::SpaSort,
            };
            if let Some(l) = args.lambda {
                params.fgm.lambda = l;
                params.auto_lambda = false;
            }
            let sel = cos_fgm(&m, &params).map_err(|e| e.to_string())?;
            let (acc, rel) = selection_metrics(&sel.k1, &sel.k2)?;
            result.k1 = Some(sel.k1.indices().to_vec());
            result.k2 = Some(sel.k2.indices().to_vec());
            result.accuracy = acc;
            result.rel_approx = rel;
            if let Some(dir) = &args.out_dir {
                std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
                let f = compute_factors(&m, &sel.k1, &sel.k2, 200, 1e-8)
                    .map_err(|e| e.to_string())?;
                write_matrix_market(&dir.join("p1.mtx"), &f.p1).map_err(|e| e.to_string())?;
                write_matrix_market(&dir.join("core.mtx"), &f.s).map_err(|e| e.to_string())?;
                write_matrix_market(&dir.join("p2.mtx"), &f.p2).map_err(|e| e.to_string())?;
            }
        }
        "spa_plus" => {
            let k1 = spar(&m, args.r1)
                .and_then(|r| r.index_set(m.nrows()))
                .map_err(|e| e.to_string())?;
            let k2 = spac(&m, args.r2)
                .and_then(|r| r.index_set(m.ncols()))
                .map_err(|e| e.to_string())?;
            let (acc, rel) = selection_metrics(&k1, &k2)?;
            result.k1 = Some(k1.indices().to_vec());
            result.k2 = Some(k2.indices().to_vec());
            result.accuracy = acc;
            result.rel_approx = rel;
        }
        "spac" => {
            let k2 = spac(&m, args.r2)
                .and_then(|r| r.index_set(m.ncols()))
                .map_err(|e| e.to_string())?;
            result.k2 = Some(k2.indices().to_vec());
        }
        "spar" => {
            let k1 = spar(&m, args.r1)
                .and_then(|r| r.index_set(m.nrows()))
                .map_err(|e| e.to_string())?;
            result.k1 = Some(k1.indices().to_vec());
        }
        "ahals" => {
            let (w, h) = ahals_nmf(&m, args.r2, args.nmf_iters, args.seed)
                .map_err(|e| e.to_string())?;
            result.rel_approx = Some(relative_approx_generic(&m, &w.dot(&h)));
            if let Some(dir) = &args.out_dir {
                std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
                write_matrix_market(&dir.join("w.mtx"), &w).map_err(|e| e.to_string())?;
                write_matrix_market(&dir.join("h.mtx"), &h).map_err(|e| e.to_string())?;
            }
        }
        other => return Err(format!("unknown method '{other}'")),
    }

    result.seconds = start.elapsed().as_secs_f64();
    println!("{}", serde_json::to_string_pretty(&result).unwrap());
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: &BenchArgs) -> Result<ExitCode, String> {
    configure_threads(args.threads)?;
    let eps = parse_eps_grid(&args.eps_grid)?;
    if args.trials == 0 {
        return Err("--trials must be at least 1".into());
    }

    let mut solver = CosSelectParams::new(args.shape.r1, args.shape.r2);
    solver.delta = args.delta;
    solver.fgm.max_iter = args.fgm_iters;
    solver.postprocess = match args.postprocess {
        PostprocessArg::Diag => Postprocess::Diag,
        PostprocessArg::Spa => Postprocess::SpaSort,
    };
    if let Some(l) = args.lambda {
        solver.fgm.lambda = l;
        solver.auto_lambda = false;
    }

    let mut baselines = Vec::new();
    for name in args.baselines.split(',').filter(|s| !s.is_empty()) {
        match Method::parse(name) {
            Some(Method::CosFgm) | None => return Err(format!("unknown baseline '{name}'")),
            Some(method) => baselines.push(method),
        }
    }

    let config = ExperimentConfig {
        m: args.shape.m,
        n: args.shape.n,
        r1: args.shape.r1,
        r2: args.shape.r2,
        epsilons: eps,
        trials_per_level: args.trials,
        base_seed: args.seed,
        solver,
        baselines,
        record_timing: !args.no_timing,
        nmf_max_iter: 1000,
    };

    let report = run_bench(&config);
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| format!("{}: {e}", args.out_dir.display()))?;
    let csv_path = args.out_dir.join("results.csv");
    std::fs::write(&csv_path, to_csv(&report.records))
        .map_err(|e| format!("{}: {e}", csv_path.display()))?;
    let summary_path = args.out_dir.join("summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&report.summaries).unwrap(),
    )
    .map_err(|e| format!("{}: {e}", summary_path.display()))?;

    let failures = report.records.iter().filter(|r| r.error.is_some()).count();
    if failures > 0 {
        eprintln!("{failures} of {} trial records failed", report.records.len());
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
