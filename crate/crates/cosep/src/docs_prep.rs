//! Document-corpus preparation: vocabulary trimming, word labeling, and
//! cluster-size scaling for pre-subsampled matrices.

use ndarray::{Array2, Axis};

use crate::error::{CosepError, Result};

/// A trimmed document-word matrix with document and derived word labels.
#[derive(Debug, Clone)]
pub struct LabeledCorpus {
    pub m: Array2<f64>,
    pub doc_labels: Vec<usize>,
    pub word_labels: Vec<usize>,
    pub classes: usize,
}

/// Keeps the `k` words with the largest total weight (lowest column index on
/// ties), drops documents that become all-zero, and labels each kept word
/// with the label of the document in which its appearance probability
/// `M(i,j) / sum_t M(i,t)` is largest.
pub fn select_top_words(m0: &Array2<f64>, doc_labels: &[usize], k: usize) -> Result<LabeledCorpus> {
    let (docs, words) = m0.dim();
    if doc_labels.len() != docs {
        return Err(CosepError::Dimension(format!(
            "{} labels for {docs} documents",
            doc_labels.len()
        )));
    }
    if k == 0 || k > words {
        return Err(CosepError::Dimension(format!(
            "k = {k} out of range for {words} words"
        )));
    }

    let totals: Vec<f64> = m0.axis_iter(Axis(1)).map(|c| c.sum()).collect();
    let mut order: Vec<usize> = (0..words).collect();
    order.sort_by(|&a, &b| totals[b].partial_cmp(&totals[a]).unwrap().then(a.cmp(&b)));
    let mut keep: Vec<usize> = order[..k].to_vec();
    keep.sort_unstable();

    let trimmed = m0.select(Axis(1), &keep);
    let kept_docs: Vec<usize> = (0..docs)
        .filter(|&i| trimmed.row(i).iter().any(|&v| v != 0.0))
        .collect();
    let m = trimmed.select(Axis(0), &kept_docs);
    let doc_labels: Vec<usize> = kept_docs.iter().map(|&i| doc_labels[i]).collect();

    let row_sums: Vec<f64> = m.axis_iter(Axis(0)).map(|r| r.sum()).collect();
    let word_labels: Vec<usize> = (0..m.ncols())
        .map(|j| {
            let mut best_doc = 0usize;
            let mut best_p = f64::NEG_INFINITY;
            for i in 0..m.nrows() {
                let p = if row_sums[i] > 0.0 { m[[i, j]] / row_sums[i] } else { 0.0 };
                if p > best_p {
                    best_p = p;
                    best_doc = i;
                }
            }
            doc_labels[best_doc]
        })
        .collect();

    let classes = doc_labels.iter().copied().max().map_or(0, |c| c + 1);
    Ok(LabeledCorpus {
        m,
        doc_labels,
        word_labels,
        classes,
    })
}

/// Scales each column by the square root of its cluster size.
pub fn scale_columns_by_cluster_size(m: &Array2<f64>, weights: &[u64]) -> Result<Array2<f64>> {
    if weights.len() != m.ncols() {
        return Err(CosepError::Dimension(format!(
            "{} weights for {} columns",
            weights.len(),
            m.ncols()
        )));
    }
    if weights.iter().any(|&w| w == 0) {
        return Err(CosepError::InvalidWeight("cluster size must be positive".into()));
    }
    let mut out = m.clone();
    for (j, &w) in weights.iter().enumerate() {
        let s = (w as f64).sqrt();
        out.column_mut(j).mapv_inplace(|v| v * s);
    }
    Ok(out)
}

/// Scales each row by the square root of its cluster size.
pub fn scale_rows_by_cluster_size(m: &Array2<f64>, weights: &[u64]) -> Result<Array2<f64>> {
    let t = scale_columns_by_cluster_size(&m.t().to_owned(), weights)?;
    Ok(t.t().to_owned())
}

/// Reads one label per line (0-based integers).
pub fn read_labels(path: &std::path::Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| CosepError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<usize>().map_err(|_| CosepError::Parse {
                line: i + 1,
                msg: format!("bad label '{}'", l.trim()),
            })
        })
        .collect()
}
