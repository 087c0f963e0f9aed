//! Co-separable nonnegative matrix factorization.
//!
//! Selects a row subset K1 and a column subset K2 of a nonnegative matrix M
//! so that `M ~= P1 * M(K1, K2) * P2` with nonnegative factors. The solver
//! alternates a Nesterov-accelerated projected gradient method between the
//! row- and column-restricted matrices; factors are fit afterwards by HALS
//! coordinate descent. Synthetic planted instances, recovery metrics, and a
//! noise-sweep benchmark driver round out the toolkit.
//!
//! Entry points:
//! - [`cosfgm::cos_fgm`] selects `(K1, K2)`.
//! - [`factors::compute_factors`] fits `(P1, S, P2)` for a selection.
//! - [`synth::gen_cosep`] generates planted instances.
//! - [`bench::run_bench`] runs the full noise sweep.

pub mod bench;
pub mod cosfgm;
pub mod docs_prep;
pub mod error;
pub mod factors;
pub mod fgm;
pub mod matrix;
pub mod metrics;
pub mod mmio;
pub mod rng;
pub mod spa;
pub mod synth;

pub use cosfgm::{cos_fgm, CosSelectParams, CosSelection, Postprocess};
pub use error::{CosepError, Result};
pub use factors::{ahals_nmf, compute_factors, CosFactors};
pub use fgm::{fgm_snmf, FgmOutput, FgmParams};
pub use matrix::IndexSet;
pub use synth::{gen_cosep, noise_grid, SyntheticInstance};
