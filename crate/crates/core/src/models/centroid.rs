use serde::{Deserialize, Serialize};

use super::{check_batch_shape, softmax, Classifier};
use crate::error::{Error, Result};
use crate::series::{squared_distance, LabeledDataset, TimeSeriesInstance};

/// Per-class mean classifier with probabilities `softmax(-distance / temperature)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestCentroidClassifier {
    length: usize,
    channels: usize,
    temperature: f64,
    /// One flat channel-major centroid per class.
    centroids: Vec<Vec<f64>>,
}

impl NearestCentroidClassifier {
    pub const DEFAULT_TEMPERATURE: f64 = 1.0;

    pub fn fit(train: &LabeledDataset, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::InvalidValue(format!("temperature must be > 0, got {temperature}")));
        }
        let dim = train.length() * train.channels();
        let k = train.class_count();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for inst in train.instances() {
            let label = inst.label().expect("labeled dataset");
            counts[label] += 1;
            for (acc, v) in sums[label].iter_mut().zip(inst.values()) {
                *acc += v;
            }
        }
        if let Some(empty) = counts.iter().position(|c| *c == 0) {
            return Err(Error::EmptyClass(empty));
        }
        let centroids = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, n)| s.into_iter().map(|v| v / *n as f64).collect())
            .collect();
        Ok(Self {
            length: train.length(),
            channels: train.channels(),
            temperature,
            centroids,
        })
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let dim = self.length * self.channels;
        if self.centroids.len() < 2 || self.centroids.iter().any(|c| c.len() != dim) {
            return Err(Error::CorruptFile("centroid dimensions do not match the model shape".into()));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::CorruptFile("temperature must be > 0".into()));
        }
        Ok(())
    }
}

impl Classifier for NearestCentroidClassifier {
    fn class_count(&self) -> usize {
        self.centroids.len()
    }

    fn input_shape(&self) -> Option<(usize, usize)> {
        Some((self.length, self.channels))
    }

    fn predict_proba(&self, batch: &[TimeSeriesInstance]) -> Result<Vec<Vec<f64>>> {
        check_batch_shape(batch, (self.length, self.channels))?;
        Ok(batch
            .iter()
            .map(|x| {
                let logits: Vec<f64> = self
                    .centroids
                    .iter()
                    .map(|c| -squared_distance(x.values(), c).sqrt() / self.temperature)
                    .collect();
                softmax(&logits)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(v: &[f64], label: usize) -> TimeSeriesInstance {
        TimeSeriesInstance::univariate(v.to_vec()).unwrap().with_label(label)
    }

    #[test]
    fn one_instance_per_class() {
        let ds = LabeledDataset::new(vec![inst(&[1.0, 2.0], 0), inst(&[3.0, 4.0], 1)], 2).unwrap();
        let m = NearestCentroidClassifier::fit(&ds, 1.0).unwrap();
        assert_eq!(m.centroids(), &[vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    #[test]
    fn centroid_is_mean() {
        let ds = LabeledDataset::new(vec![inst(&[0.0], 0), inst(&[2.0], 0), inst(&[5.0], 1)], 2).unwrap();
        let m = NearestCentroidClassifier::fit(&ds, 1.0).unwrap();
        assert_eq!(m.centroids()[0], vec![1.0]);
    }

    #[test]
    fn empty_class_rejected() {
        let ds = LabeledDataset::new(vec![inst(&[0.0], 0), inst(&[2.0], 2)], 3).unwrap();
        assert!(matches!(NearestCentroidClassifier::fit(&ds, 1.0), Err(Error::EmptyClass(1))));
    }

    #[test]
    fn sharp_at_centroid() {
        let ds = LabeledDataset::new(vec![inst(&[0.0, 0.0], 0), inst(&[10.0, 10.0], 1)], 2).unwrap();
        let m = NearestCentroidClassifier::fit(&ds, 0.1).unwrap();
        let p = m.predict_proba(&[inst(&[0.0, 0.0], 0)]).unwrap();
        assert!(p[0][0] > 0.99);
    }

    #[test]
    fn shape_checked() {
        let ds = LabeledDataset::new(vec![inst(&[0.0, 0.0], 0), inst(&[1.0, 1.0], 1)], 2).unwrap();
        let m = NearestCentroidClassifier::fit(&ds, 1.0).unwrap();
        assert!(matches!(m.predict_proba(&[inst(&[0.0], 0)]), Err(Error::DimensionMismatch { .. })));
    }
}
