//! Counterfactual quality metrics, the full-swap baseline and batch reports.
//!
//! Value metrics are only filled for valid counterfactuals.

use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::driver::{select_by_utility, Explainer, RunConfig, UtilityWeights};
use crate::error::{Error, Result};
use crate::mask::{ChangeMask, MaskKind};
use crate::models::{Classifier, OutlierScorer};
use crate::series::{LabeledDataset, TimeSeriesInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub instance_id: usize,
    pub valid: bool,
    pub proximity: Option<f64>,
    pub sparsity: Option<f64>,
    pub nos: Option<usize>,
    pub os_scaled: Option<f64>,
    pub sparsity_nos_mean: Option<f64>,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl MetricsRecord {
    /// Scores one counterfactual produced by `mask`.
    #[allow(clippy::too_many_arguments)]
    pub fn for_counterfactual(
        instance_id: usize,
        x: &TimeSeriesInstance,
        mask: &ChangeMask,
        counterfactual: &TimeSeriesInstance,
        valid: bool,
        scorer: &dyn OutlierScorer,
        train_errors: &[f64],
        wall_time_s: f64,
    ) -> Result<Self> {
        let channels = x.channels();
        let mut rec = MetricsRecord {
            instance_id,
            valid,
            proximity: None,
            sparsity: None,
            nos: None,
            os_scaled: None,
            sparsity_nos_mean: None,
            wall_time_s,
            error: None,
        };
        if valid {
            rec.proximity = Some(metric_proximity(x, counterfactual)?);
            rec.sparsity = Some(metric_sparsity(mask, channels)?);
            rec.nos = Some(metric_nos(mask, channels)?);
            rec.os_scaled = Some(metric_os_scaled(counterfactual, scorer, train_errors)?);
            rec.sparsity_nos_mean = Some(metric_sparsity_nos_mean(mask, channels)?);
        }
        Ok(rec)
    }

    pub fn failed(instance_id: usize, error: &Error, wall_time_s: f64) -> Self {
        MetricsRecord {
            instance_id,
            valid: false,
            proximity: None,
            sparsity: None,
            nos: None,
            os_scaled: None,
            sparsity_nos_mean: None,
            wall_time_s,
            error: Some(error.to_string()),
        }
    }
}

/// Fraction of records that are valid.
pub fn metric_validity(records: &[MetricsRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::InvalidValue("validity of an empty record set".into()));
    }
    Ok(records.iter().filter(|r| r.valid).count() as f64 / records.len() as f64)
}

/// Flattened Euclidean distance between the query and its counterfactual.
pub fn metric_proximity(x: &TimeSeriesInstance, counterfactual: &TimeSeriesInstance) -> Result<f64> {
    x.distance(counterfactual)
}

/// Fraction of `L·C` cells changed by the (broadcast) mask.
pub fn metric_sparsity(mask: &ChangeMask, channels: usize) -> Result<f64> {
    let m = mask.broadcast(channels)?;
    Ok(m.popcount() as f64 / m.positions() as f64)
}

/// Number of maximal runs of the broadcast mask.
pub fn metric_nos(mask: &ChangeMask, channels: usize) -> Result<usize> {
    Ok(mask.broadcast(channels)?.count_subsequences())
}

/// Reconstruction error min-max scaled by the training range. Not clipped;
/// a zero-width range maps to 0.
pub fn metric_os_scaled(counterfactual: &TimeSeriesInstance, scorer: &dyn OutlierScorer, train_errors: &[f64]) -> Result<f64> {
    let err = scorer.reconstruction_error(counterfactual)?;
    Ok(scale_to_range(err, train_errors))
}

pub fn scale_to_range(value: f64, reference: &[f64]) -> f64 {
    let lo = reference.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = reference.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return 0.0;
    }
    (value - lo) / (hi - lo)
}

/// Mean of sparsity and `NoS / (L·C/2)`.
pub fn metric_sparsity_nos_mean(mask: &ChangeMask, channels: usize) -> Result<f64> {
    let m = mask.broadcast(channels)?;
    let cells = m.positions() as f64;
    let sparsity = m.popcount() as f64 / cells;
    let nos = m.count_subsequences() as f64 / (cells / 2.0);
    Ok(0.5 * sparsity + 0.5 * nos)
}

/// Comparison anchor: substitute every cell.
pub fn baseline_full_swap(x: &TimeSeriesInstance, nun: &TimeSeriesInstance) -> Result<(ChangeMask, TimeSeriesInstance)> {
    let mask = ChangeMask::ones(MaskKind::Independent, x.length(), x.channels());
    let cf = mask.apply(x, nun)?;
    Ok((mask, cf))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    MultiSpace { config: RunConfig, weights: UtilityWeights },
    FullSwap { config: RunConfig },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::MultiSpace { .. } => "multi_space",
            Method::FullSwap { .. } => "full_swap",
        }
    }

    fn config(&self) -> &RunConfig {
        match self {
            Method::MultiSpace { config, .. } | Method::FullSwap { config } => config,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub instances: usize,
    pub errors: usize,
    pub validity: Option<f64>,
    pub proximity: Option<f64>,
    pub sparsity: Option<f64>,
    pub nos: Option<f64>,
    pub os_scaled: Option<f64>,
    pub sparsity_nos_mean: Option<f64>,
    pub wall_time_s: Option<f64>,
}

impl Aggregates {
    pub fn from_records(records: &[MetricsRecord]) -> Self {
        let valid: Vec<&MetricsRecord> = records.iter().filter(|r| r.valid).collect();
        let mean = |f: &dyn Fn(&MetricsRecord) -> Option<f64>| {
            let vals: Vec<f64> = valid.iter().filter_map(|r| f(r)).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        Aggregates {
            instances: records.len(),
            errors: records.iter().filter(|r| r.error.is_some()).count(),
            validity: metric_validity(records).ok(),
            proximity: mean(&|r| r.proximity),
            sparsity: mean(&|r| r.sparsity),
            nos: mean(&|r| r.nos.map(|n| n as f64)),
            os_scaled: mean(&|r| r.os_scaled),
            sparsity_nos_mean: mean(&|r| r.sparsity_nos_mean),
            wall_time_s: (!records.is_empty())
                .then(|| records.iter().map(|r| r.wall_time_s).sum::<f64>() / records.len() as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub format_version: u32,
    pub method: String,
    pub records: Vec<MetricsRecord>,
    pub aggregates: Aggregates,
}

pub const REPORT_FORMAT_VERSION: u32 = 1;

impl BatchReport {
    pub fn new(method: impl Into<String>, mut records: Vec<MetricsRecord>) -> Self {
        records.sort_by_key(|r| r.instance_id);
        let aggregates = Aggregates::from_records(&records);
        Self {
            format_version: REPORT_FORMAT_VERSION,
            method: method.into(),
            records,
            aggregates,
        }
    }

    /// One row per record.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record([
            "method",
            "instance_id",
            "valid",
            "proximity",
            "sparsity",
            "nos",
            "os_scaled",
            "sparsity_nos_mean",
            "wall_time_s",
            "error",
        ])
        .map_err(io)?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                self.method.clone(),
                r.instance_id.to_string(),
                r.valid.to_string(),
                opt(r.proximity),
                opt(r.sparsity),
                r.nos.map(|n| n.to_string()).unwrap_or_default(),
                opt(r.os_scaled),
                opt(r.sparsity_nos_mean),
                r.wall_time_s.to_string(),
                r.error.clone().unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

/// Sorted indices of `min(n_eval, n)` instances drawn without replacement.
pub fn sample_instances(n: usize, n_eval: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, n, n_eval.min(n)).into_vec();
    picked.sort_unstable();
    picked
}

/// Runs `method` on a seeded sample of `split`, recording per-instance
/// failures instead of aborting. Per-instance runs use seed `config.seed + id`.
pub fn evaluate_batch(
    split: &LabeledDataset,
    explainer: &Explainer<'_>,
    train_errors: &[f64],
    method: &Method,
    n_eval: usize,
    sample_seed: u64,
) -> BatchReport {
    let classifier = explainer.classifier();
    let scorer = explainer.scorer();
    let ids = sample_instances(split.len(), n_eval, sample_seed);
    let run_one = |id: usize| -> MetricsRecord {
        let start = Instant::now();
        let x = split.instances()[id].clone().without_label();
        let result = explain_one(&x, id, explainer, classifier, scorer, train_errors, method, start);
        result.unwrap_or_else(|e| MetricsRecord::failed(id, &e, start.elapsed().as_secs_f64()))
    };
    #[cfg(feature = "parallel")]
    let records: Vec<MetricsRecord> = if classifier.supports_parallel() {
        use rayon::prelude::*;
        ids.par_iter().map(|&id| run_one(id)).collect()
    } else {
        ids.iter().map(|&id| run_one(id)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let records: Vec<MetricsRecord> = ids.iter().map(|&id| run_one(id)).collect();
    BatchReport::new(method.name(), records)
}

#[allow(clippy::too_many_arguments)]
fn explain_one(
    x: &TimeSeriesInstance,
    id: usize,
    explainer: &Explainer<'_>,
    classifier: &dyn Classifier,
    scorer: &dyn OutlierScorer,
    train_errors: &[f64],
    method: &Method,
    start: Instant,
) -> Result<MetricsRecord> {
    let mut cfg = method.config().clone();
    cfg.seed = cfg.seed.wrapping_add(id as u64);
    let (mask, cf) = match method {
        Method::MultiSpace { weights, .. } => {
            let front = explainer.explain(x, Some(id), &cfg)?;
            let (_, best) = select_by_utility(&front.members, weights)?;
            (best.mask.clone(), best.counterfactual.clone())
        }
        Method::FullSwap { .. } => {
            let (_, nun) = explainer.nun(x, cfg.nun_mode)?;
            baseline_full_swap(x, &nun.neighbor)?
        }
    };
    let original = classifier.predict_one(x)?;
    let valid = classifier.predict_one(&cf)? != original;
    MetricsRecord::for_counterfactual(id, x, &mask, &cf, valid, scorer, train_errors, start.elapsed().as_secs_f64())
}

/// One row per (metric, method) with the method's rank on that metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub metric: String,
    pub method: String,
    pub value: Option<f64>,
    /// 1 is best; methods without a value share the last rank.
    pub rank: usize,
}

/// Ranks methods per metric on their aggregates. Validity is ranked
/// descending, every other metric ascending.
pub fn rank_methods(reports: &[BatchReport]) -> Vec<RankingRow> {
    type Getter = fn(&Aggregates) -> Option<f64>;
    let metrics: [(&str, Getter, bool); 5] = [
        ("validity", |a| a.validity, true),
        ("proximity", |a| a.proximity, false),
        ("sparsity", |a| a.sparsity, false),
        ("nos", |a| a.nos, false),
        ("os_scaled", |a| a.os_scaled, false),
    ];
    let mut rows = Vec::new();
    for (name, get, higher_better) in metrics {
        let values: Vec<Option<f64>> = reports.iter().map(|r| get(&r.aggregates)).collect();
        for (report, value) in reports.iter().zip(&values) {
            let rank = match value {
                Some(v) => {
                    1 + values
                        .iter()
                        .flatten()
                        .filter(|o| if higher_better { **o > *v } else { **o < *v })
                        .count()
                }
                None => values.iter().flatten().count() + 1,
            };
            rows.push(RankingRow {
                metric: name.to_string(),
                method: report.method.clone(),
                value: *value,
                rank,
            });
        }
    }
    rows
}
