//! MatrixMarket I/O.
//!
//! Reads `matrix coordinate real general` and `matrix array real general`
//! into a dense matrix; writes array format with 17 significant digits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{CosepError, Result};

fn io_err(path: &Path, source: std::io::Error) -> CosepError {
    CosepError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> CosepError {
    CosepError::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn read_matrix_market(path: &Path) -> Result<Array2<f64>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_matrix_market_from(BufReader::new(file))
}

pub fn read_matrix_market_from<R: BufRead>(reader: R) -> Result<Array2<f64>> {
    let mut lines = reader.lines().enumerate();

    let (lineno, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))
        .and_then(|(i, l)| l.map(|l| (i + 1, l)).map_err(|e| parse_err(i + 1, e.to_string())))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 5 || !fields[0].eq_ignore_ascii_case("%%MatrixMarket") {
        return Err(parse_err(lineno, "missing %%MatrixMarket header"));
    }
    if !fields[1].eq_ignore_ascii_case("matrix") {
        return Err(parse_err(lineno, format!("unsupported object '{}'", fields[1])));
    }
    let coordinate = match fields[2].to_ascii_lowercase().as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(parse_err(lineno, format!("unsupported format '{other}'"))),
    };
    match fields[3].to_ascii_lowercase().as_str() {
        "real" | "integer" => {}
        other => return Err(parse_err(lineno, format!("unsupported field '{other}'"))),
    }
    if !fields[4].eq_ignore_ascii_case("general") {
        return Err(parse_err(lineno, format!("unsupported symmetry '{}'", fields[4])));
    }

    // Skip comments, read the size line.
    let mut size_line = None;
    for (i, l) in lines.by_ref() {
        let l = l.map_err(|e| parse_err(i + 1, e.to_string()))?;
        let t = l.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        size_line = Some((i + 1, t.to_string()));
        break;
    }
    let (lineno, size_line) = size_line.ok_or_else(|| parse_err(0, "missing size line"))?;
    let dims: Vec<&str> = size_line.split_whitespace().collect();

    if coordinate {
        if dims.len() != 3 {
            return Err(parse_err(lineno, "coordinate size line needs 'rows cols nnz'"));
        }
        let rows: usize = dims[0].parse().map_err(|_| parse_err(lineno, "bad row count"))?;
        let cols: usize = dims[1].parse().map_err(|_| parse_err(lineno, "bad col count"))?;
        let nnz: usize = dims[2].parse().map_err(|_| parse_err(lineno, "bad nnz count"))?;
        let mut m = Array2::zeros((rows, cols));
        let mut seen = 0usize;
        for (i, l) in lines {
            let l = l.map_err(|e| parse_err(i + 1, e.to_string()))?;
            let t = l.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            let parts: Vec<&str> = t.split_whitespace().collect();
            if parts.len() < 3 {
                return Err(parse_err(i + 1, "entry needs 'row col value'"));
            }
            let r: usize = parts[0].parse().map_err(|_| parse_err(i + 1, "bad row index"))?;
            let c: usize = parts[1].parse().map_err(|_| parse_err(i + 1, "bad col index"))?;
            let v: f64 = parts[2].parse().map_err(|_| parse_err(i + 1, "bad value"))?;
            if r == 0 || r > rows || c == 0 || c > cols {
                return Err(parse_err(i + 1, format!("index ({r},{c}) out of bounds {rows}x{cols}")));
            }
            // Duplicate entries accumulate.
            m[[r - 1, c - 1]] += v;
            seen += 1;
        }
        if seen != nnz {
            return Err(parse_err(lineno, format!("expected {nnz} entries, found {seen}")));
        }
        Ok(m)
    } else {
        if dims.len() != 2 {
            return Err(parse_err(lineno, "array size line needs 'rows cols'"));
        }
        let rows: usize = dims[0].parse().map_err(|_| parse_err(lineno, "bad row count"))?;
        let cols: usize = dims[1].parse().map_err(|_| parse_err(lineno, "bad col count"))?;
        let mut values = Vec::with_capacity(rows * cols);
        for (i, l) in lines {
            let l = l.map_err(|e| parse_err(i + 1, e.to_string()))?;
            let t = l.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            for tok in t.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| parse_err(i + 1, format!("bad value '{tok}'")))?;
                values.push(v);
            }
        }
        if values.len() != rows * cols {
            return Err(parse_err(
                0,
                format!("expected {} values, found {}", rows * cols, values.len()),
            ));
        }
        // Array format is column-major.
        let mut m = Array2::zeros((rows, cols));
        for (k, v) in values.into_iter().enumerate() {
            m[[k % rows, k / rows]] = v;
        }
        Ok(m)
    }
}

pub fn write_matrix_market(path: &Path, m: &Array2<f64>) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    write_matrix_market_to(&mut w, m).map_err(|e| io_err(path, e))
}

pub fn write_matrix_market_to<W: Write>(w: &mut W, m: &Array2<f64>) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            writeln!(w, "{:.16e}", m[[i, j]])?;
        }
    }
    Ok(())
}
