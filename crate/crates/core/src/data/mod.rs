//! Tabular datasets: ingestion, splitting, client partitioning and scaling.

mod loaders;
mod split;

pub use loaders::{load_heart, load_pima, HEART_QUASI_IDENTIFIERS, PIMA_QUASI_IDENTIFIERS};
pub use split::{normalize, partition, split, NormalizationStats, PartitionPlan};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub quasi_identifier: bool,
}

impl ColumnSchema {
    pub fn new(name: impl Into<String>, quasi_identifier: bool) -> Self {
        Self {
            name: name.into(),
            quasi_identifier,
        }
    }
}

/// Numeric feature matrix with binary class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    schema: Vec<ColumnSchema>,
}

impl TabularDataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, schema: Vec<ColumnSchema>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::shape(features.nrows(), labels.len()));
        }
        if features.ncols() != schema.len() {
            return Err(Error::shape(features.ncols(), schema.len()));
        }
        if let Some(y) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::invalid(format!("label {y} is not binary")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("features contain non-finite values"));
        }
        for (i, col) in schema.iter().enumerate() {
            if schema[..i].iter().any(|c| c.name == col.name) {
                return Err(Error::invalid(format!("duplicate column name {}", col.name)));
            }
        }
        Ok(Self {
            features,
            labels,
            schema,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c.name == name)
    }

    pub fn quasi_identifiers(&self) -> Vec<&str> {
        self.schema
            .iter()
            .filter(|c| c.quasi_identifier)
            .map(|c| c.name.as_str())
            .collect()
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            schema: self.schema.clone(),
        }
    }

    /// Row-wise concatenation of datasets sharing a schema.
    pub fn concat(parts: &[TabularDataset]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::invalid("nothing to concatenate"))?;
        if parts.iter().any(|p| p.schema != first.schema) {
            return Err(Error::invalid("cannot concatenate datasets with different schemas"));
        }
        let views: Vec<_> = parts.iter().map(|p| p.features.view()).collect();
        let features = ndarray::concatenate(Axis(0), &views)
            .map_err(|e| Error::invalid(e.to_string()))?;
        let labels = parts.iter().flat_map(|p| p.labels.iter().copied()).collect();
        Ok(Self {
            features,
            labels,
            schema: first.schema.clone(),
        })
    }

    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self> {
        Self::new(self.features.clone(), labels, self.schema.clone())
    }

    pub fn with_features(&self, features: Array2<f64>) -> Result<Self> {
        Self::new(features, self.labels.clone(), self.schema.clone())
    }

    /// Fraction of rows in the most common class.
    pub fn majority_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let ones = self.labels.iter().filter(|&&y| y == 1).count();
        ones.max(self.len() - ones) as f64 / self.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn schema2() -> Vec<ColumnSchema> {
        vec![ColumnSchema::new("a", true), ColumnSchema::new("b", false)]
    }

    #[test]
    fn construction_checks() {
        assert!(TabularDataset::new(array![[1.0, 2.0]], vec![0, 1], schema2()).is_err());
        assert!(TabularDataset::new(array![[1.0, 2.0]], vec![2], schema2()).is_err());
        assert!(TabularDataset::new(array![[f64::NAN, 2.0]], vec![0], schema2()).is_err());
        let dup = vec![ColumnSchema::new("a", true), ColumnSchema::new("a", false)];
        assert!(TabularDataset::new(array![[1.0, 2.0]], vec![0], dup).is_err());
    }

    #[test]
    fn select_and_concat() {
        let d = TabularDataset::new(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], vec![0, 1, 1], schema2())
            .unwrap();
        let a = d.select_rows(&[2, 0]);
        assert_eq!(a.labels(), &[1, 0]);
        assert_eq!(a.features()[[0, 0]], 5.0);
        let b = d.select_rows(&[1]);
        let c = TabularDataset::concat(&[a, b]).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.quasi_identifiers(), vec!["a"]);
        assert!((d.majority_fraction() - 2.0 / 3.0).abs() < 1e-12);
    }
}
