use serde::{Deserialize, Serialize};

use super::{check_batch_shape, Classifier};
use crate::error::{Error, Result};
use crate::series::{squared_distance, LabeledDataset, TimeSeriesInstance};

/// k-nearest-neighbor vote classifier. Probabilities are vote fractions; the
/// neighbor order is by distance with ties broken toward the lower index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnClassifier {
    length: usize,
    channels: usize,
    classes: usize,
    k: usize,
    train: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl KnnClassifier {
    pub const DEFAULT_K: usize = 5;

    pub fn fit(train: &LabeledDataset, k: usize) -> Result<Self> {
        if k == 0 || k > train.len() {
            return Err(Error::InvalidValue(format!(
                "k must be in 1..={} (got {k})",
                train.len()
            )));
        }
        Ok(Self {
            length: train.length(),
            channels: train.channels(),
            classes: train.class_count(),
            k,
            train: train.instances().iter().map(|i| i.values().to_vec()).collect(),
            labels: train.labels().collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let dim = self.length * self.channels;
        if self.train.len() != self.labels.len()
            || self.train.iter().any(|v| v.len() != dim)
            || self.labels.iter().any(|l| *l >= self.classes)
            || self.k == 0
            || self.k > self.train.len()
        {
            return Err(Error::CorruptFile("inconsistent knn payload".into()));
        }
        Ok(())
    }

    fn proba_one(&self, x: &[f64]) -> Vec<f64> {
        let mut order: Vec<(f64, usize)> = self
            .train
            .iter()
            .enumerate()
            .map(|(i, t)| (squared_distance(x, t), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = vec![0.0; self.classes];
        for (_, i) in order.iter().take(self.k) {
            votes[self.labels[*i]] += 1.0;
        }
        votes.iter_mut().for_each(|v| *v /= self.k as f64);
        votes
    }
}

impl Classifier for KnnClassifier {
    fn class_count(&self) -> usize {
        self.classes
    }

    fn input_shape(&self) -> Option<(usize, usize)> {
        Some((self.length, self.channels))
    }

    fn predict_proba(&self, batch: &[TimeSeriesInstance]) -> Result<Vec<Vec<f64>>> {
        check_batch_shape(batch, (self.length, self.channels))?;
        Ok(batch.iter().map(|x| self.proba_one(x.values())).collect())
    }
}
