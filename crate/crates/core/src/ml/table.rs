use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Labelled feature rows. Label 1 is the lymphoblast class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub schema_id: String,
    pub feature_names: Vec<String>,
    pub ids: Vec<String>,
    pub labels: Vec<u8>,
    pub x: Matrix,
}

impl FeatureTable {
    pub fn new(schema_id: String, feature_names: Vec<String>, ids: Vec<String>, labels: Vec<u8>, x: Matrix) -> Result<Self> {
        let t = Self {
            schema_id,
            feature_names,
            ids,
            labels,
            x,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.x.rows();
        if self.labels.len() != n || self.ids.len() != n {
            return Err(Error::Input(format!(
                "{} rows, {} labels, {} ids",
                n,
                self.labels.len(),
                self.ids.len()
            )));
        }
        if self.feature_names.len() != self.x.cols() {
            return Err(Error::Schema {
                expected: format!("{} columns", self.feature_names.len()),
                found: format!("{} columns", self.x.cols()),
            });
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l > 1) {
            return Err(Error::Input(format!("label {l} is not binary")));
        }
        if let Some(pos) = self.x.as_slice().iter().position(|v| !v.is_finite()) {
            let (i, j) = (pos / self.x.cols(), pos % self.x.cols());
            return Err(Error::Input(format!("non-finite value at row {i}, column {}", self.feature_names[j])));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn width(&self) -> usize {
        self.x.cols()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - pos, pos)
    }

    /// SHA-256 over schema id, names, ids, labels and the bit patterns of
    /// every value.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.schema_id.as_bytes());
        for s in self.feature_names.iter().chain(&self.ids) {
            h.update(s.as_bytes());
            h.update([0]);
        }
        h.update(&self.labels);
        for v in self.x.as_slice() {
            h.update(v.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(values: Vec<f64>, labels: Vec<u8>) -> Result<FeatureTable> {
        let n = labels.len();
        FeatureTable::new(
            "s".into(),
            vec!["a".into(), "b".into()],
            (0..n).map(|i| i.to_string()).collect(),
            labels,
            Matrix::from_vec(n, 2, values),
        )
    }

    #[test]
    fn validation() {
        assert!(table(vec![1.0, 2.0, 3.0, 4.0], vec![0, 1]).is_ok());
        assert!(table(vec![1.0, f64::NAN, 3.0, 4.0], vec![0, 1]).is_err());
        assert!(table(vec![1.0, 2.0, 3.0, 4.0], vec![0, 2]).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = table(vec![1.0, 2.0, 3.0, 4.0], vec![0, 1]).unwrap();
        let b = table(vec![1.0, 2.0, 3.0, 4.5], vec![0, 1]).unwrap();
        assert_eq!(a.content_hash(), a.clone().content_hash());
        assert_ne!(a.content_hash(), b.content_hash());
    }
}
