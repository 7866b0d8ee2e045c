//! Sample matrices and label vectors.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense `n x d` sample matrix for one view. Rows are samples.
///
/// Construction rejects empty matrices and non-finite entries, so every
/// solver can assume clean input.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(Array2<f64>);

impl FeatureMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::invalid(format!(
                "feature matrix must be non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if let Some(((i, j), v)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value {v} at row {i}, column {j}"
            )));
        }
        Ok(FeatureMatrix(data))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("ragged rows"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((rows.len(), d), flat)
            .map_err(|e| Error::invalid(e.to_string()))?;
        Self::new(data)
    }

    pub fn n_samples(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.0.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.0.row(i)
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

/// Cluster or class labels densely numbered `0..num_classes`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector(Vec<usize>);

impl LabelVector {
    /// Wraps labels that are already dense. Gaps in the range are rejected.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("label vector must be non-empty"));
        }
        let c = labels.iter().max().copied().unwrap_or(0) + 1;
        let mut seen = vec![false; c];
        for &l in &labels {
            seen[l] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("labels are not a dense 0..c range"));
        }
        Ok(LabelVector(labels))
    }

    /// Relabels arbitrary values onto `0..c` in sorted value order.
    pub fn dense_from<T: Ord + Clone>(raw: &[T]) -> Result<Self> {
        let mut index = BTreeMap::new();
        for v in raw {
            index.entry(v.clone()).or_insert(0usize);
        }
        for (next, slot) in index.values_mut().enumerate() {
            *slot = next;
        }
        Self::new(raw.iter().map(|v| index[v]).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.0.iter().max().map_or(0, |m| m + 1)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl AsRef<[usize]> for LabelVector {
    fn as_ref(&self) -> &[usize] {
        &self.0
    }
}
