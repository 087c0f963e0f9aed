//! Python bindings: numpy arrays in, numpy arrays and plain dicts out.

use numpy::{IntoPyArray, PyArray2, PyReadonlyArray2};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cosep::cosfgm::{cos_fgm, CosSelectParams, Postprocess};
use cosep::factors::{ahals_nmf, compute_factors};
use cosep::fgm::{fgm_snmf, FgmParams};
use cosep::matrix::IndexSet;
use cosep::metrics;
use cosep::spa;
use cosep::synth;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn index_set(indices: Vec<usize>, bound: usize) -> PyResult<IndexSet> {
    IndexSet::new(indices, bound).map_err(err)
}

/// Alternating fast-gradient co-selection of r1 rows and r2 columns.
#[pyfunction]
#[pyo3(signature = (m, r1, r2, delta=1e-6, max_outer=50, fgm_iters=1000, lambda_=None, postprocess="diag"))]
#[allow(clippy::too_many_arguments)]
fn cos_select(
    py: Python<'_>,
    m: PyReadonlyArray2<f64>,
    r1: usize,
    r2: usize,
    delta: f64,
    max_outer: usize,
    fgm_iters: usize,
    lambda_: Option<f64>,
    postprocess: &str,
) -> PyResult<Py<PyDict>> {
    let m = m.as_array().to_owned();
    let mut params = CosSelectParams::new(r1, r2);
    params.delta = delta;
    params.outer_max_iter = max_outer;
    params.fgm.max_iter = fgm_iters;
    params.postprocess = match postprocess {
        "diag" => Postprocess::Diag,
        "spa" => Postprocess::SpaSort,
        other => return Err(PyValueError::new_err(format!("unknown postprocess '{other}'"))),
    };
    if let Some(l) = lambda_ {
        params.fgm.lambda = l;
        params.auto_lambda = false;
    }
    let sel = py.allow_threads(|| cos_fgm(&m, &params)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("k1", sel.k1.indices().to_vec())?;
    out.set_item("k2", sel.k2.indices().to_vec())?;
    out.set_item("outer_iterations", sel.outer_iterations)?;
    out.set_item("converged", sel.converged)?;
    Ok(out.into())
}

/// Fits nonnegative factors (P1, S, P2) for a given selection.
#[pyfunction]
#[pyo3(signature = (m, k1, k2, max_iter=200, delta=1e-8))]
fn fit_factors(
    py: Python<'_>,
    m: PyReadonlyArray2<f64>,
    k1: Vec<usize>,
    k2: Vec<usize>,
    max_iter: usize,
    delta: f64,
) -> PyResult<Py<PyDict>> {
    let m = m.as_array().to_owned();
    let k1 = index_set(k1, m.nrows())?;
    let k2 = index_set(k2, m.ncols())?;
    let f = py
        .allow_threads(|| compute_factors(&m, &k1, &k2, max_iter, delta))
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("p1", f.p1.into_pyarray(py))?;
    out.set_item("s", f.s.into_pyarray(py))?;
    out.set_item("p2", f.p2.into_pyarray(py))?;
    out.set_item("rel_residual", f.rel_residual)?;
    Ok(out.into())
}

/// Single fast-gradient solve of the self-expression problem.
#[pyfunction]
#[pyo3(signature = (m, lambda_=None, max_iter=1000))]
fn fgm_self_expression<'py>(
    py: Python<'py>,
    m: PyReadonlyArray2<f64>,
    lambda_: Option<f64>,
    max_iter: usize,
) -> PyResult<Bound<'py, PyArray2<f64>>> {
    let m = m.as_array().to_owned();
    let mut params = FgmParams::new(lambda_.unwrap_or_else(|| FgmParams::default_lambda(&m)));
    params.max_iter = max_iter;
    let out = py.allow_threads(|| fgm_snmf(&m, &params)).map_err(err)?;
    Ok(out.y.into_pyarray(py))
}

/// Successive projection algorithm; returns indices in extraction order.
#[pyfunction]
fn spa_select(m: PyReadonlyArray2<f64>, r: usize) -> PyResult<Vec<usize>> {
    let m = m.as_array().to_owned();
    Ok(spa::spa(&m, r).map_err(err)?.selected)
}

/// A-HALS NMF baseline.
#[pyfunction]
#[pyo3(signature = (m, r, max_iter=1000, seed=0))]
fn nmf_ahals<'py>(
    py: Python<'py>,
    m: PyReadonlyArray2<f64>,
    r: usize,
    max_iter: usize,
    seed: u64,
) -> PyResult<(Bound<'py, PyArray2<f64>>, Bound<'py, PyArray2<f64>>)> {
    let m = m.as_array().to_owned();
    let (w, h) = py
        .allow_threads(|| ahals_nmf(&m, r, max_iter, seed))
        .map_err(err)?;
    Ok((w.into_pyarray(py), h.into_pyarray(py)))
}

/// Planted co-(r1, r2)-separable instance generator.
#[pyfunction]
#[pyo3(signature = (m, n, r1, r2, epsilon, seed))]
fn generate_instance(
    py: Python<'_>,
    m: usize,
    n: usize,
    r1: usize,
    r2: usize,
    epsilon: f64,
    seed: u64,
) -> PyResult<Py<PyDict>> {
    let inst = synth::gen_cosep(m, n, r1, r2, epsilon, seed).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("m", inst.m.into_pyarray(py))?;
    out.set_item("k1_star", inst.k1_star.indices().to_vec())?;
    out.set_item("k2_star", inst.k2_star.indices().to_vec())?;
    out.set_item("clean", inst.clean.into_pyarray(py))?;
    out.set_item("epsilon", inst.epsilon)?;
    out.set_item("seed", inst.seed)?;
    Ok(out.into())
}

/// Proportion of correctly identified row and column indices.
#[pyfunction]
fn index_accuracy(
    k1: Vec<usize>,
    k2: Vec<usize>,
    k1_star: Vec<usize>,
    k2_star: Vec<usize>,
    m: usize,
    n: usize,
) -> PyResult<f64> {
    let k1 = index_set(k1, m)?;
    let k2 = index_set(k2, n)?;
    let k1s = index_set(k1_star, m)?;
    let k2s = index_set(k2_star, n)?;
    Ok(metrics::index_accuracy(&k1, &k2, &k1s, &k2s))
}

/// Relative approximation of the selected core factorization.
#[pyfunction]
fn relative_approx(m: PyReadonlyArray2<f64>, k1: Vec<usize>, k2: Vec<usize>) -> PyResult<f64> {
    let m = m.as_array().to_owned();
    let k1 = index_set(k1, m.nrows())?;
    let k2 = index_set(k2, m.ncols())?;
    metrics::relative_approx_cosep(&m, &k1, &k2).map_err(err)
}

/// Assignment-matched clustering accuracy of two label vectors.
#[pyfunction]
fn clustering_accuracy(labels: Vec<usize>, truth: Vec<usize>, r: usize) -> PyResult<f64> {
    let q = metrics::ClusterAssignment::new(labels, r).map_err(err)?;
    let qs = metrics::ClusterAssignment::new(truth, r).map_err(err)?;
    metrics::clustering_accuracy(&q, &qs).map_err(err)
}

/// Skeleton-approximation residual with the pseudoinverse core.
#[pyfunction]
fn cur_residual(m: PyReadonlyArray2<f64>, k1: Vec<usize>, k2: Vec<usize>) -> PyResult<f64> {
    let m = m.as_array().to_owned();
    let k1 = index_set(k1, m.nrows())?;
    let k2 = index_set(k2, m.ncols())?;
    metrics::cur_residual(&m, &k1, &k2).map_err(err)
}

#[pymodule]
fn cosep_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(cos_select, m)?)?;
    m.add_function(wrap_pyfunction!(fit_factors, m)?)?;
    m.add_function(wrap_pyfunction!(fgm_self_expression, m)?)?;
    m.add_function(wrap_pyfunction!(spa_select, m)?)?;
    m.add_function(wrap_pyfunction!(nmf_ahals, m)?)?;
    m.add_function(wrap_pyfunction!(generate_instance, m)?)?;
    m.add_function(wrap_pyfunction!(index_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(relative_approx, m)?)?;
    m.add_function(wrap_pyfunction!(clustering_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(cur_residual, m)?)?;
    Ok(())
}
