use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense `length × channels` series.
///
/// Values are stored channel-major: channel 0's `length` values come first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct TimeSeriesInstance {
    length: usize,
    channels: usize,
    values: Vec<f64>,
    label: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<usize>,
    values: Vec<Vec<f64>>,
}

impl TryFrom<InstanceRepr> for TimeSeriesInstance {
    type Error = Error;

    fn try_from(repr: InstanceRepr) -> Result<Self> {
        let mut inst = TimeSeriesInstance::from_channels(&repr.values)?;
        inst.label = repr.label;
        Ok(inst)
    }
}

impl From<TimeSeriesInstance> for InstanceRepr {
    fn from(inst: TimeSeriesInstance) -> Self {
        InstanceRepr {
            label: inst.label,
            values: inst.channel_vectors(),
        }
    }
}

impl TimeSeriesInstance {
    /// Builds an instance from a channel-major flat buffer.
    pub fn new(length: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if length == 0 || channels == 0 {
            return Err(Error::InvalidValue(format!(
                "series must have L >= 1 and C >= 1 (got L={length}, C={channels})"
            )));
        }
        if values.len() != length * channels {
            return Err(Error::dims(length * channels, values.len()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!("non-finite value at flat index {pos}")));
        }
        Ok(Self {
            length,
            channels,
            values,
            label: None,
        })
    }

    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        Self::new(len, 1, values)
    }

    /// Builds an instance from one vector per channel.
    pub fn from_channels(channels: &[Vec<f64>]) -> Result<Self> {
        let length = channels.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = channels.iter().find(|c| c.len() != length) {
            return Err(Error::dims(format!("channel length {length}"), bad.len()));
        }
        Self::new(length, channels.len(), channels.concat())
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn without_label(mut self) -> Self {
        self.label = None;
        self
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.length, self.channels)
    }

    pub fn label(&self) -> Option<usize> {
        self.label
    }

    /// Flat channel-major view.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, time: usize, channel: usize) -> f64 {
        self.values[channel * self.length + time]
    }

    pub fn channel(&self, channel: usize) -> &[f64] {
        &self.values[channel * self.length..(channel + 1) * self.length]
    }

    pub fn channel_vectors(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.length).map(<[f64]>::to_vec).collect()
    }

    pub fn check_shape(&self, length: usize, channels: usize) -> Result<()> {
        if self.shape() != (length, channels) {
            return Err(Error::dims(
                format!("{length}x{channels}"),
                format!("{}x{}", self.length, self.channels),
            ));
        }
        Ok(())
    }

    /// Flattened Euclidean distance.
    pub fn distance(&self, other: &TimeSeriesInstance) -> Result<f64> {
        other.check_shape(self.length, self.channels)?;
        Ok(squared_distance(&self.values, &other.values).sqrt())
    }

    pub(crate) fn from_parts_unchecked(length: usize, channels: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), length * channels);
        Self {
            length,
            channels,
            values,
            label: None,
        }
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A labeled training or test split where every instance shares one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    instances: Vec<TimeSeriesInstance>,
    length: usize,
    channels: usize,
    class_count: usize,
}

impl LabeledDataset {
    pub fn new(instances: Vec<TimeSeriesInstance>, class_count: usize) -> Result<Self> {
        let first = instances
            .first()
            .ok_or_else(|| Error::InvalidValue("dataset has no instances".into()))?;
        let (length, channels) = first.shape();
        let mut seen = vec![false; class_count];
        for (i, inst) in instances.iter().enumerate() {
            inst.check_shape(length, channels)?;
            let label = inst
                .label()
                .ok_or_else(|| Error::InvalidValue(format!("instance {i} has no label")))?;
            if label >= class_count {
                return Err(Error::InvalidValue(format!(
                    "instance {i} has label {label} but the dataset declares {class_count} classes"
                )));
            }
            seen[label] = true;
        }
        if seen.iter().filter(|s| **s).count() < 2 {
            return Err(Error::InvalidValue(
                "dataset needs at least two distinct labels".into(),
            ));
        }
        Ok(Self {
            instances,
            length,
            channels,
            class_count,
        })
    }

    pub fn instances(&self) -> &[TimeSeriesInstance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.instances.iter().map(|i| i.label().unwrap_or_default())
    }
}

/// On-disk dataset document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetFile {
    pub format_version: u32,
    pub length: usize,
    pub channels: usize,
    pub classes: usize,
    pub instances: Vec<TimeSeriesInstance>,
}

pub const DATASET_FORMAT_VERSION: u32 = 1;

impl DatasetFile {
    pub fn from_dataset(ds: &LabeledDataset) -> Self {
        Self {
            format_version: DATASET_FORMAT_VERSION,
            length: ds.length(),
            channels: ds.channels(),
            classes: ds.class_count(),
            instances: ds.instances().to_vec(),
        }
    }

    pub fn into_dataset(self) -> Result<LabeledDataset> {
        if self.format_version != DATASET_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                expected: DATASET_FORMAT_VERSION,
                found: self.format_version as u64,
            });
        }
        for inst in &self.instances {
            inst.check_shape(self.length, self.channels)?;
        }
        LabeledDataset::new(self.instances, self.classes)
    }

    pub fn from_json(text: &str) -> Result<LabeledDataset> {
        let file: DatasetFile =
            serde_json::from_str(text).map_err(|e| Error::CorruptFile(e.to_string()))?;
        file.into_dataset()
    }

    pub fn to_json(ds: &LabeledDataset) -> String {
        serde_json::to_string_pretty(&Self::from_dataset(ds)).expect("dataset serializes")
    }
}
