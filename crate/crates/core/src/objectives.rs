//! The four penalized objectives, all maximized:
//!
//! * `o1 = p_b(x', y_nun)`: classifier confidence in the target class,
//! * `o2 = -‖M‖₀ / (C·L)`: sparsity,
//! * `o3 = -(NoS / (C·L/2))^γ`: contiguity,
//! * `o4 = -max(0, err(x') - err(x)) / e_max`: plausibility,
//!
//! each minus `ν` when `x'` is not classified as `y_nun`. Masks are evaluated
//! in their broadcast `L×C` form so common and independent masks score alike.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::ChangeMask;
use crate::models::{argmax, Classifier, OutlierScorer};
use crate::series::TimeSeriesInstance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    /// Convexity exponent of the contiguity term.
    pub gamma: f64,
    /// Penalty subtracted from every objective of an invalid candidate.
    pub nu: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self { gamma: 0.25, nu: 100.0 }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!("gamma must be in (0, 1], got {}", self.gamma)));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidConfig(format!("nu must be > 0, got {}", self.nu)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub o1: f64,
    pub o2: f64,
    pub o3: f64,
    pub o4: f64,
    pub valid: bool,
}

impl ObjectiveVector {
    pub fn values(&self) -> [f64; 4] {
        [self.o1, self.o2, self.o3, self.o4]
    }

    /// `self ≥ other` everywhere and `>` somewhere.
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        crate::genetic::dominates(&self.values(), &other.values())
    }
}

/// `−popcount / (C·L)` of the broadcast mask.
pub fn sparsity_objective(mask: &ChangeMask, channels: usize) -> Result<f64> {
    let m = mask.broadcast(channels)?;
    Ok(-(m.popcount() as f64) / m.positions() as f64)
}

/// `−(NoS / (C·L/2))^γ` of the broadcast mask.
pub fn contiguity_objective(mask: &ChangeMask, channels: usize, gamma: f64) -> Result<f64> {
    let m = mask.broadcast(channels)?;
    let nos = m.count_subsequences() as f64;
    Ok(-(nos / (m.positions() as f64 / 2.0)).powf(gamma))
}

/// Increase in reconstruction error from `x` to `x_prime`, clamped at zero.
pub fn increase_in_outlier_score(
    x: &TimeSeriesInstance,
    x_prime: &TimeSeriesInstance,
    scorer: &dyn OutlierScorer,
) -> Result<f64> {
    let before = scorer.reconstruction_error(x)?;
    let after = scorer.reconstruction_error(x_prime)?;
    Ok((after - before).max(0.0))
}

/// Everything needed to score masks for one query instance.
pub struct ObjectiveContext<'a> {
    pub x: &'a TimeSeriesInstance,
    pub nun: &'a TimeSeriesInstance,
    pub target_class: usize,
    pub classifier: &'a dyn Classifier,
    pub scorer: &'a dyn OutlierScorer,
    pub config: ObjectiveConfig,
    x_error: f64,
}

impl<'a> ObjectiveContext<'a> {
    pub fn new(
        x: &'a TimeSeriesInstance,
        nun: &'a TimeSeriesInstance,
        target_class: usize,
        classifier: &'a dyn Classifier,
        scorer: &'a dyn OutlierScorer,
        config: ObjectiveConfig,
    ) -> Result<Self> {
        config.validate()?;
        nun.check_shape(x.length(), x.channels())?;
        if !(scorer.e_max() > 0.0) {
            return Err(Error::InvalidValue("scorer e_max must be > 0".into()));
        }
        if target_class >= classifier.class_count() {
            return Err(Error::InvalidValue(format!("target class {target_class} out of range")));
        }
        let x_error = scorer.reconstruction_error(x)?;
        Ok(Self {
            x,
            nun,
            target_class,
            classifier,
            scorer,
            config,
            x_error,
        })
    }

    pub fn counterfactual(&self, mask: &ChangeMask) -> Result<TimeSeriesInstance> {
        mask.apply(self.x, self.nun)
    }

    pub fn evaluate(&self, mask: &ChangeMask) -> Result<ObjectiveVector> {
        Ok(self.evaluate_batch(std::slice::from_ref(mask))?.remove(0))
    }

    /// Scores `masks` in order. Classifier calls are batched; local models are
    /// evaluated in parallel chunks when the `parallel` feature is on.
    pub fn evaluate_batch(&self, masks: &[ChangeMask]) -> Result<Vec<ObjectiveVector>> {
        let cfs: Vec<TimeSeriesInstance> = masks.iter().map(|m| self.counterfactual(m)).collect::<Result<_>>()?;
        let probas = self.predict(&cfs)?;
        let errors = self.errors(&cfs)?;
        let channels = self.x.channels();
        masks
            .iter()
            .zip(probas)
            .zip(errors)
            .map(|((mask, p), err)| {
                let valid = argmax(&p) == self.target_class;
                let penalty = if valid { 0.0 } else { self.config.nu };
                let ios = (err - self.x_error).max(0.0);
                Ok(ObjectiveVector {
                    o1: p[self.target_class] - penalty,
                    o2: sparsity_objective(mask, channels)? - penalty,
                    o3: contiguity_objective(mask, channels, self.config.gamma)? - penalty,
                    o4: -ios / self.scorer.e_max() - penalty,
                    valid,
                })
            })
            .collect()
    }

    fn predict(&self, cfs: &[TimeSeriesInstance]) -> Result<Vec<Vec<f64>>> {
        #[cfg(feature = "parallel")]
        if self.classifier.supports_parallel() && cfs.len() > PAR_CHUNK {
            use rayon::prelude::*;
            let parts: Vec<Vec<Vec<f64>>> = cfs
                .par_chunks(PAR_CHUNK)
                .map(|chunk| self.classifier.predict_proba(chunk))
                .collect::<Result<_>>()?;
            return Ok(parts.into_iter().flatten().collect());
        }
        let out = self.classifier.predict_proba(cfs)?;
        if out.len() != cfs.len() {
            return Err(Error::dims(cfs.len(), out.len()));
        }
        Ok(out)
    }

    fn errors(&self, cfs: &[TimeSeriesInstance]) -> Result<Vec<f64>> {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            cfs.par_iter().map(|c| self.scorer.reconstruction_error(c)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            cfs.iter().map(|c| self.scorer.reconstruction_error(c)).collect()
        }
    }
}

#[cfg(feature = "parallel")]
const PAR_CHUNK: usize = 16;

/// Scores a single mask.
pub fn evaluate_objectives(
    x: &TimeSeriesInstance,
    mask: &ChangeMask,
    nun: &TimeSeriesInstance,
    target_class: usize,
    classifier: &dyn Classifier,
    scorer: &dyn OutlierScorer,
    config: ObjectiveConfig,
) -> Result<ObjectiveVector> {
    ObjectiveContext::new(x, nun, target_class, classifier, scorer, config)?.evaluate(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::MaskKind;

    /// Predicts class 1 iff the mean of the series is at least `threshold`.
    struct MeanThreshold {
        threshold: f64,
    }

    impl Classifier for MeanThreshold {
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
                    let mean = x.values().iter().sum::<f64>() / x.values().len() as f64;
                    if mean >= self.threshold {
                        vec![0.2, 0.8]
                    } else {
                        vec![0.7, 0.3]
                    }
                })
                .collect())
        }
    }

    /// Error = |sum of values|, e_max = 10.
    struct SumScorer;

    impl OutlierScorer for SumScorer {
        fn reconstruction_error(&self, x: &TimeSeriesInstance) -> Result<f64> {
            Ok(x.values().iter().sum::<f64>().abs())
        }
        fn e_max(&self) -> f64 {
            10.0
        }
    }

    fn setup(len: usize) -> (TimeSeriesInstance, TimeSeriesInstance) {
        (
            TimeSeriesInstance::univariate(vec![0.0; len]).unwrap(),
            TimeSeriesInstance::univariate(vec![1.0; len]).unwrap(),
        )
    }

    #[test]
    fn all_zero_mask_is_penalized() {
        let (x, nun) = setup(8);
        let clf = MeanThreshold { threshold: 0.5 };
        let m = ChangeMask::zeros(MaskKind::Common, 8, 1);
        let o = evaluate_objectives(&x, &m, &nun, 1, &clf, &SumScorer, ObjectiveConfig::default()).unwrap();
        assert!(!o.valid);
        assert_eq!(o.o2, -100.0);
        assert_eq!(o.o1, 0.3 - 100.0);
    }

    #[test]
    fn all_ones_mask_values() {
        let (x, nun) = setup(8);
        let clf = MeanThreshold { threshold: 0.5 };
        let m = ChangeMask::ones(MaskKind::Common, 8, 1);
        let o = evaluate_objectives(&x, &m, &nun, 1, &clf, &SumScorer, ObjectiveConfig::default()).unwrap();
        assert!(o.valid);
        assert_eq!(o.o1, 0.8);
        assert_eq!(o.o2, -1.0);
        assert!((o.o3 + (2.0f64 / 8.0).powf(0.25)).abs() < 1e-15);
        // err(x') = 8, err(x) = 0, e_max = 10.
        assert!((o.o4 + 0.8).abs() < 1e-15);
    }

    #[test]
    fn common_mask_broadcast_before_counting() {
        let x = TimeSeriesInstance::from_channels(&[vec![0.0; 4], vec![0.0; 4]]).unwrap();
        let nun = TimeSeriesInstance::from_channels(&[vec![1.0; 4], vec![1.0; 4]]).unwrap();
        let clf = MeanThreshold { threshold: 0.25 };
        let common = ChangeMask::common_from_str("0110").unwrap();
        let indep = common.broadcast(2).unwrap();
        let cfg = ObjectiveConfig::default();
        let a = evaluate_objectives(&x, &common, &nun, 1, &clf, &SumScorer, cfg).unwrap();
        let b = evaluate_objectives(&x, &indep, &nun, 1, &clf, &SumScorer, cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.o2, -0.5);
    }

    #[test]
    fn ios_examples() {
        let (x, _) = setup(3);
        assert_eq!(increase_in_outlier_score(&x, &x, &SumScorer).unwrap(), 0.0);
        let five = TimeSeriesInstance::univariate(vec![5.0, 0.0, 0.0]).unwrap();
        let three = TimeSeriesInstance::univariate(vec![3.0, 0.0, 0.0]).unwrap();
        assert_eq!(increase_in_outlier_score(&five, &three, &SumScorer).unwrap(), 0.0);
        assert_eq!(increase_in_outlier_score(&three, &five, &SumScorer).unwrap(), 2.0);
    }

    #[test]
    fn contiguity_strictly_monotone_in_nos() {
        let mut prev = f64::INFINITY;
        for runs in 0..=8 {
            let bits: String = (0..16).map(|i| if i % 2 == 0 && i / 2 < runs { '1' } else { '0' }).collect();
            let m = ChangeMask::common_from_str(&bits).unwrap();
            assert_eq!(m.count_subsequences(), runs);
            let o3 = contiguity_objective(&m, 1, 0.25).unwrap();
            assert!(o3 < prev);
            prev = o3;
        }
    }

    #[test]
    fn config_validation() {
        assert!(ObjectiveConfig { gamma: 0.0, nu: 100.0 }.validate().is_err());
        assert!(ObjectiveConfig { gamma: 1.5, nu: 100.0 }.validate().is_err());
        assert!(ObjectiveConfig { gamma: 1.0, nu: 0.0 }.validate().is_err());
        assert!(ObjectiveConfig::default().validate().is_ok());
    }
}
