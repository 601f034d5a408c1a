use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bandindex::IndexId;
use crate::linalg::Matrix;
use crate::recording::{Condition, WorkloadClass};
use crate::{Error, Result};

/// Identifies one matrix row: a subject, a condition and the index series
/// the features came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowKey {
    pub subject_id: u32,
    pub condition: Condition,
    pub index_id: IndexId,
}

/// Labelled feature rows with named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    columns: Vec<String>,
    keys: Vec<RowKey>,
    labels: Vec<WorkloadClass>,
    synthetic: Vec<bool>,
    values: Matrix,
}

impl FeatureMatrix {
    pub fn new(
        columns: Vec<String>,
        keys: Vec<RowKey>,
        labels: Vec<WorkloadClass>,
        synthetic: Vec<bool>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n_cols = columns.len();
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n_cols {
                return Err(Error::Shape(alloc::format!("row {i} has {} values, expected {n_cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Self::from_matrix(columns, keys, labels, synthetic, Matrix::from_vec(rows.len(), n_cols, data)?)
    }

    pub fn from_matrix(
        columns: Vec<String>,
        keys: Vec<RowKey>,
        labels: Vec<WorkloadClass>,
        synthetic: Vec<bool>,
        values: Matrix,
    ) -> Result<Self> {
        let n = values.rows();
        if values.cols() != columns.len() {
            return Err(Error::Shape(alloc::format!("{} columns named for {} values", columns.len(), values.cols())));
        }
        if keys.len() != n || labels.len() != n || synthetic.len() != n {
            return Err(Error::Shape(alloc::format!(
                "{n} rows but {} keys, {} labels, {} provenance flags",
                keys.len(),
                labels.len(),
                synthetic.len()
            )));
        }
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].contains(c) {
                return Err(Error::InvalidArgument(alloc::format!("duplicate column `{c}`")));
            }
        }
        let mut sorted_keys = keys.clone();
        sorted_keys.sort_unstable();
        if let Some(w) = sorted_keys.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(alloc::format!(
                "duplicate row key (subject {}, {}, {})",
                w[0].subject_id,
                w[0].condition,
                w[0].index_id
            )));
        }
        if !values.is_finite() {
            return Err(Error::InvalidArgument("feature matrix contains non-finite values".into()));
        }
        Ok(Self { columns, keys, labels, synthetic, values })
    }

    /// A matrix with the given columns and no rows.
    pub fn empty(columns: Vec<String>) -> Result<Self> {
        Self::new(columns, Vec::new(), Vec::new(), Vec::new(), Vec::new())
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_features(&self) -> usize {
        self.values.cols()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn keys(&self) -> &[RowKey] {
        &self.keys
    }

    pub fn labels(&self) -> &[WorkloadClass] {
        &self.labels
    }

    pub fn synthetic(&self) -> &[bool] {
        &self.synthetic
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Distinct subject ids in ascending order.
    pub fn subject_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.keys.iter().map(|k| k.subject_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// The named columns, in the order given.
    pub fn select_columns(&self, names: &[String]) -> Result<Self> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.column_index(n).ok_or_else(|| Error::FieldMismatch(alloc::format!("no column `{n}`"))))
            .collect::<Result<_>>()?;
        let mut data = Vec::with_capacity(self.n_rows() * idx.len());
        for i in 0..self.n_rows() {
            let row = self.row(i);
            data.extend(idx.iter().map(|&j| row[j]));
        }
        Ok(Self {
            columns: names.to_vec(),
            keys: self.keys.clone(),
            labels: self.labels.clone(),
            synthetic: self.synthetic.clone(),
            values: Matrix::from_vec(self.n_rows(), idx.len(), data)?,
        })
    }

    /// Rows for which `keep(i)` holds, in their original order.
    pub fn filter_rows<F: FnMut(usize) -> bool>(&self, mut keep: F) -> Self {
        let idx: Vec<usize> = (0..self.n_rows()).filter(|&i| keep(i)).collect();
        let mut data = Vec::with_capacity(idx.len() * self.n_features());
        for &i in &idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            columns: self.columns.clone(),
            keys: idx.iter().map(|&i| self.keys[i]).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            synthetic: idx.iter().map(|&i| self.synthetic[i]).collect(),
            values: Matrix::from_vec(idx.len(), self.n_features(), data).expect("row selection keeps the shape"),
        }
    }

    pub fn for_index(&self, id: IndexId) -> Self {
        self.filter_rows(|i| self.keys[i].index_id == id)
    }

    /// Index ids present, in [`IndexId::ALL`] order.
    pub fn index_ids(&self) -> Vec<IndexId> {
        IndexId::ALL.into_iter().filter(|id| self.keys.iter().any(|k| k.index_id == *id)).collect()
    }

    /// Rows of `self` followed by rows of `other`; columns must match.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.columns != other.columns {
            return Err(Error::FieldMismatch("cannot stack matrices with different columns".into()));
        }
        let mut data = self.values.as_slice().to_vec();
        data.extend_from_slice(other.values.as_slice());
        Self::from_matrix(
            self.columns.clone(),
            chain(&self.keys, &other.keys),
            chain(&self.labels, &other.labels),
            chain(&self.synthetic, &other.synthetic),
            Matrix::from_vec(self.n_rows() + other.n_rows(), self.n_features(), data)?,
        )
    }
}

fn chain<T: Clone>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().chain(b).cloned().collect()
}
