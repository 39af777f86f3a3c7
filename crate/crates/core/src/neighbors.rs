//! Nearest Unlike Neighbor (NUN) search.
//!
//! By default training instances are filtered on the classifier's prediction
//! rather than their label, so the NUN is always classified as the target
//! class and the full substitution is a valid counterfactual.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Classifier;
use crate::series::{squared_distance, LabeledDataset, TimeSeriesInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NunMode {
    /// Any class other than the query's prediction.
    #[default]
    AnyUnlike,
    /// Only instances of the given class.
    TargetClass(usize),
}

/// Which class an instance is considered to belong to during the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NunFilter {
    #[default]
    Predicted,
    Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NunResult {
    pub neighbor: TimeSeriesInstance,
    pub target_class: usize,
    pub distance: f64,
    /// Position of the neighbor in the training split.
    pub index: usize,
}

/// Training split with the per-instance classes used for filtering.
#[derive(Debug, Clone)]
pub struct NunIndex<'a> {
    train: &'a LabeledDataset,
    classes: Vec<usize>,
    class_count: usize,
}

impl<'a> NunIndex<'a> {
    pub fn new(train: &'a LabeledDataset, classifier: &dyn Classifier, filter: NunFilter) -> Result<Self> {
        let classes = match filter {
            NunFilter::Predicted => classifier.predict(train.instances())?,
            NunFilter::Label => train.labels().collect(),
        };
        Ok(Self {
            train,
            classes,
            class_count: train.class_count().max(classifier.class_count()),
        })
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn find(&self, x: &TimeSeriesInstance, predicted_class: usize, mode: NunMode) -> Result<NunResult> {
        x.check_shape(self.train.length(), self.train.channels())?;
        if let NunMode::TargetClass(t) = mode {
            if t == predicted_class {
                return Err(Error::InvalidValue(format!(
                    "target class {t} equals the query's predicted class"
                )));
            }
            if t >= self.class_count {
                return Err(Error::InvalidValue(format!(
                    "target class {t} out of range (K={})",
                    self.class_count
                )));
            }
        }
        let accept = |class: usize| match mode {
            NunMode::AnyUnlike => class != predicted_class,
            NunMode::TargetClass(t) => class == t,
        };
        let mut best: Option<(f64, usize)> = None;
        for (i, (inst, class)) in self.train.instances().iter().zip(&self.classes).enumerate() {
            if !accept(*class) {
                continue;
            }
            let d = squared_distance(x.values(), inst.values());
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        let (d2, index) = best.ok_or(Error::NoUnlikeNeighbor)?;
        Ok(NunResult {
            neighbor: self.train.instances()[index].clone(),
            target_class: self.classes[index],
            distance: d2.sqrt(),
            index,
        })
    }
}

/// One-shot NUN search; see [`NunIndex`] to reuse training predictions.
pub fn find_nun(
    train: &LabeledDataset,
    x: &TimeSeriesInstance,
    predicted_class: usize,
    classifier: &dyn Classifier,
    mode: NunMode,
    filter: NunFilter,
) -> Result<NunResult> {
    NunIndex::new(train, classifier, filter)?.find(x, predicted_class, mode)
}
