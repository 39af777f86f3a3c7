//! Black-box model interfaces and the reference implementations.

mod bridge;
mod centroid;
mod knn;
mod linear;
mod persist;

pub use bridge::{BridgeInfo, ExternalModelBridge, DEFAULT_BRIDGE_TIMEOUT};
pub use centroid::NearestCentroidClassifier;
pub use knn::KnnClassifier;
pub use linear::LinearReconstructionScorer;
pub use persist::{load_model, save_model, SavedModel, MODEL_FORMAT_VERSION};

use crate::error::{Error, Result};
use crate::series::TimeSeriesInstance;

/// Tolerance on the sum of a probability vector.
pub const PROBA_SUM_TOLERANCE: f64 = 1e-6;

/// A probabilistic classifier over `K` classes.
///
/// Batch prediction is the primitive because the optimizer evaluates whole
/// populations at once. Implementations must be deterministic.
pub trait Classifier: Send + Sync {
    fn class_count(&self) -> usize;

    /// Expected `(length, channels)` of inputs, when the model knows it.
    fn input_shape(&self) -> Option<(usize, usize)>;

    fn predict_proba(&self, batch: &[TimeSeriesInstance]) -> Result<Vec<Vec<f64>>>;

    /// Argmax class per instance, ties toward the lowest class id.
    fn predict(&self, batch: &[TimeSeriesInstance]) -> Result<Vec<usize>> {
        Ok(self.predict_proba(batch)?.iter().map(|p| argmax(p)).collect())
    }

    fn predict_one(&self, x: &TimeSeriesInstance) -> Result<usize> {
        Ok(self.predict(std::slice::from_ref(x))?[0])
    }

    /// Whether concurrent callers are served in parallel. The process bridge is
    /// single-consumer and reports `false`.
    fn supports_parallel(&self) -> bool {
        true
    }
}

/// Reconstruction-error outlier scorer.
pub trait OutlierScorer: Send + Sync {
    fn reconstruction_error(&self, x: &TimeSeriesInstance) -> Result<f64>;

    /// Maximum reconstruction error on the training split (always > 0).
    fn e_max(&self) -> f64;
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_batch_shape(batch: &[TimeSeriesInstance], shape: (usize, usize)) -> Result<()> {
    batch.iter().try_for_each(|x| x.check_shape(shape.0, shape.1))
}

/// Numerically stable softmax.
pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub(crate) fn validate_probabilities(p: &[f64], k: usize) -> Result<()> {
    if p.len() != k {
        return Err(Error::BridgeProtocol(format!("expected {k} probabilities, got {}", p.len())));
    }
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::BridgeProtocol("probabilities must be finite and non-negative".into()));
    }
    Ok(())
}
