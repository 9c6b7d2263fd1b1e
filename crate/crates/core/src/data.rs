//! LIBSVM-format sparse datasets with binary `{-1, +1}` labels.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

/// One labelled example. Feature indices are 0-based and strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseExample<T> {
    indices: Vec<usize>,
    values: Vec<T>,
    label: T,
}

impl<T: Scalar> SparseExample<T> {
    /// Builds an example, checking index order and the label domain.
    /// Explicit zero values are dropped.
    pub fn new(indices: Vec<usize>, values: Vec<T>, label: T) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::Contract(format!("{} indices but {} values", indices.len(), values.len())));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Contract("feature indices must be strictly increasing".into()));
        }
        if label != T::one() && label != -T::one() {
            return Err(Error::Contract(format!("label {label} is not -1 or +1")));
        }
        let (indices, values) = if values.iter().any(|v| v.is_zero()) {
            indices.into_iter().zip(values).filter(|(_, v)| !v.is_zero()).unzip()
        } else {
            (indices, values)
        };
        Ok(SparseExample { indices, values, label })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn label(&self) -> T {
        self.label
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn inf_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn norm_sq(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &v| acc + v * v)
    }

    /// `x^T w` against a dense vector.
    #[inline]
    pub fn dot_dense(&self, w: &[T]) -> T {
        self.indices.iter().zip(&self.values).fold(T::zero(), |acc, (&j, &v)| acc + v * w[j])
    }

    /// `out += scale * x`
    #[inline]
    pub fn add_scaled_to(&self, scale: T, out: &mut [T]) {
        for (&j, &v) in self.indices.iter().zip(&self.values) {
            out[j] = out[j] + scale * v;
        }
    }
}

/// Immutable collection of examples sharing a feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset<T> {
    dim: usize,
    rows: Vec<SparseExample<T>>,
}

impl<T: Scalar> SparseDataset<T> {
    pub fn new(dim: usize, rows: Vec<SparseExample<T>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Contract("dataset needs at least one example".into()));
        }
        if dim == 0 {
            return Err(Error::Contract("feature dimension must be at least 1".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if let Some(&last) = r.indices.last() {
                if last >= dim {
                    return Err(Error::Contract(format!("row {i} has feature index {last} >= dimension {dim}")));
                }
            }
        }
        Ok(SparseDataset { dim, rows })
    }

    /// Number of examples `n`.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[SparseExample<T>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> Result<&SparseExample<T>> {
        self.rows.get(i).ok_or(Error::IndexOutOfRange { index: i, len: self.rows.len() })
    }

    /// `max_j |x_ij|` over the stored entries of row `i`.
    pub fn row_inf_norm(&self, i: usize) -> Result<T> {
        Ok(self.row(i)?.inf_norm())
    }

    /// Number of stored entries of row `i`.
    pub fn row_nnz(&self, i: usize) -> Result<usize> {
        Ok(self.row(i)?.nnz())
    }

    pub fn total_nnz(&self) -> usize {
        self.rows.iter().map(|r| r.nnz()).sum()
    }

    /// Serializes back to LIBSVM text with 1-based indices.
    ///
    /// Values use the shortest representation that parses back to the same
    /// number, so `parse_libsvm(to_libsvm(ds))` reproduces `ds` exactly.
    pub fn to_libsvm(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(if r.label > T::zero() { "+1" } else { "-1" });
            for (&j, &v) in r.indices.iter().zip(&r.values) {
                let _ = write!(out, " {}:{}", j + 1, v);
            }
            out.push('\n');
        }
        out
    }
}

/// Maps raw labels onto `{-1, +1}`: the larger raw value becomes `+1`.
///
/// Labels already in `{-1, +1}` are returned unchanged. A single distinct raw
/// value maps to `+1` when positive and `-1` otherwise.
pub fn remap_labels(raw: &[f64]) -> Result<Vec<f64>> {
    let mut distinct: Vec<f64> = Vec::with_capacity(2);
    for &v in raw {
        if !distinct.contains(&v) {
            distinct.push(v);
            if distinct.len() > 2 {
                // count them all for the message
                let mut all: Vec<f64> = raw.to_vec();
                all.sort_by(f64::total_cmp);
                all.dedup();
                return Err(Error::UnsupportedLabels { count: all.len() });
            }
        }
    }
    if distinct.iter().all(|&v| v == 1.0 || v == -1.0) {
        return Ok(raw.to_vec());
    }
    let mapped = match distinct.as_slice() {
        [only] => {
            let l = if *only > 0.0 { 1.0 } else { -1.0 };
            vec![l; raw.len()]
        }
        [a, b] => {
            let hi = a.max(*b);
            raw.iter().map(|&v| if v == hi { 1.0 } else { -1.0 }).collect()
        }
        _ => Vec::new(),
    };
    Ok(mapped)
}

/// Parses LIBSVM text (`label idx:val idx:val ...`, 1-based indices).
///
/// Blank lines and `#` comments are skipped. When `dim_override` is given it
/// must be at least the largest index in the file; otherwise `d` is the
/// largest index seen (at least 1).
pub fn parse_libsvm<T: Scalar, R: BufRead>(reader: R, dim_override: Option<usize>) -> Result<SparseDataset<T>> {
    let mut raw_labels = Vec::new();
    let mut rows: Vec<(Vec<usize>, Vec<T>)> = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| Error::Parse { line: lineno, message: format!("label `{label_tok}` is not numeric") })?;
        if !label.is_finite() {
            return Err(Error::Parse { line: lineno, message: format!("label `{label_tok}` is not finite") });
        }
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut last_seen: Option<usize> = None;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("token `{tok}` is not of the form index:value"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("feature index `{idx}` is not a positive integer"),
            })?;
            if idx == 0 {
                return Err(Error::Parse { line: lineno, message: "feature indices are 1-based; found 0".into() });
            }
            let v: f64 = val
                .parse()
                .map_err(|_| Error::Parse { line: lineno, message: format!("feature value `{val}` is not numeric") })?;
            if !v.is_finite() {
                return Err(Error::Parse { line: lineno, message: format!("feature value `{val}` is not finite") });
            }
            let zero_based = idx - 1;
            if let Some(prev) = last_seen {
                if zero_based <= prev {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("feature index {idx} does not increase (previous {})", prev + 1),
                    });
                }
            }
            last_seen = Some(zero_based);
            max_index = max_index.max(idx);
            if v != 0.0 {
                indices.push(zero_based);
                values.push(T::of(v));
            }
        }
        raw_labels.push(label);
        rows.push((indices, values));
    }

    if rows.is_empty() {
        return Err(Error::Parse { line: 0, message: "no examples found".into() });
    }
    let dim = match dim_override {
        Some(d) if d < max_index => {
            return Err(Error::InvalidConfig(format!(
                "dimension override {d} is smaller than the largest feature index {max_index}"
            )))
        }
        Some(d) => d.max(1),
        None => max_index.max(1),
    };
    let labels = remap_labels(&raw_labels)?;
    let rows = rows
        .into_iter()
        .zip(labels)
        .map(|((idx, vals), l)| SparseExample { indices: idx, values: vals, label: T::of(l) })
        .collect();
    SparseDataset::new(dim, rows)
}

pub fn parse_libsvm_str<T: Scalar>(text: &str, dim_override: Option<usize>) -> Result<SparseDataset<T>> {
    parse_libsvm(text.as_bytes(), dim_override)
}

pub fn load_libsvm<T: Scalar>(path: impl AsRef<Path>, dim_override: Option<usize>) -> Result<SparseDataset<T>> {
    let file =
        std::fs::File::open(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_libsvm(std::io::BufReader::new(file), dim_override)
}
