#![allow(dead_code)]

use tscf_core::models::{LinearReconstructionScorer, NearestCentroidClassifier};
use tscf_core::synth::{generate_split, SynthKind};
use tscf_core::{Classifier, LabeledDataset, OutlierScorer, Result, TimeSeriesInstance};

/// Class 1 when at least `threshold` of the cells are above `level`.
pub struct CountAbove {
    pub level: f64,
    pub threshold: usize,
}

impl Classifier for CountAbove {
    fn class_count(&self) -> usize {
        2
    }

    fn input_shape(&self) -> Option<(usize, usize)> {
        None
    }

    fn predict_proba(&self, batch: &[TimeSeriesInstance]) -> Result<Vec<Vec<f64>>> {
        Ok(batch
            .iter()
            .map(|x| {
                let n = x.values().iter().filter(|v| **v > self.level).count();
                if n >= self.threshold {
                    vec![0.2, 0.8]
                } else {
                    vec![0.8, 0.2]
                }
            })
            .collect())
    }
}

/// Squared norm as the reconstruction error.
pub struct NormScorer;

impl OutlierScorer for NormScorer {
    fn reconstruction_error(&self, x: &TimeSeriesInstance) -> Result<f64> {
        Ok(x.values().iter().map(|v| v * v).sum())
    }

    fn e_max(&self) -> f64 {
        1.0
    }
}

pub struct Fixture {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub classifier: NearestCentroidClassifier,
    pub scorer: LinearReconstructionScorer,
}

pub fn fixture(kind: SynthKind, length: usize, channels: usize, seed: u64) -> Fixture {
    let (train, test) = generate_split(kind, length, channels, 60, 30, seed).unwrap();
    let classifier = NearestCentroidClassifier::fit(&train, 1.0).unwrap();
    let d = LinearReconstructionScorer::default_components(length, channels);
    let scorer = LinearReconstructionScorer::fit(&train, d).unwrap();
    Fixture {
        train,
        test,
        classifier,
        scorer,
    }
}

pub fn dataset(rows: Vec<(Vec<f64>, usize)>, classes: usize) -> LabeledDataset {
    let instances = rows
        .into_iter()
        .map(|(v, l)| TimeSeriesInstance::univariate(v).unwrap().with_label(l))
        .collect();
    LabeledDataset::new(instances, classes).unwrap()
}
