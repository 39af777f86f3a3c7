//! On-disk documents written and read by the CLI. Every document carries a
//! `format_version`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tscf_core::driver::{Provenance, RunEvent};
use tscf_core::eval::{BatchReport, RankingRow};
use tscf_core::models::{load_model, LinearReconstructionScorer, SavedModel};
use tscf_core::series::DatasetFile;
use tscf_core::{FrontMember, LabeledDataset, ParetoFront, UtilityWeights};

use crate::exit::{CliError, CliResult};

pub const FRONT_FORMAT_VERSION: u32 = 1;
pub const SELECTION_FORMAT_VERSION: u32 = 1;
pub const EVALUATION_FORMAT_VERSION: u32 = 1;
pub const TIMINGS_FORMAT_VERSION: u32 = 1;
pub const TIMINGS_FILE: &str = "timings.json";

/// Pareto front of one query instance, or the error that prevented it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontFile {
    pub format_version: u32,
    pub instance_id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    #[serde(default)]
    pub events: Vec<RunEvent>,
    #[serde(default)]
    pub members: Vec<FrontMember>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl FrontFile {
    pub fn from_front(instance_id: usize, config_hash: String, front: ParetoFront) -> Self {
        Self {
            format_version: FRONT_FORMAT_VERSION,
            instance_id,
            config_hash: Some(config_hash),
            provenance: Some(front.provenance),
            events: front.events,
            members: front.members,
            error: None,
        }
    }

    pub fn failed(instance_id: usize, error: String) -> Self {
        Self {
            format_version: FRONT_FORMAT_VERSION,
            instance_id,
            config_hash: None,
            provenance: None,
            events: Vec::new(),
            members: Vec::new(),
            error: Some(error),
        }
    }

    pub fn file_name(instance_id: usize) -> String {
        format!("front_{instance_id:04}.json")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFile {
    pub format_version: u32,
    pub instance_id: usize,
    /// Position of the chosen member in the front.
    pub index: usize,
    pub utility: f64,
    pub weights: UtilityWeights,
    pub member: FrontMember,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationFile {
    pub format_version: u32,
    pub reports: Vec<BatchReport>,
    pub ranking: Vec<RankingRow>,
}

/// Wall-clock seconds per explained instance. Kept apart from the front files
/// so that those stay byte-identical between runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingsFile {
    pub format_version: u32,
    pub wall_time_s: BTreeMap<usize, f64>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::input)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(CliError::input)
}

/// Indented JSON where arrays of scalars stay on one line, with a trailing
/// newline.
pub fn to_json_text<T: Serialize>(value: &T) -> CliResult<String> {
    let value = serde_json::to_value(value).map_err(CliError::runtime)?;
    let mut out = String::new();
    write_value(&mut out, &value, 0);
    out.push('\n');
    Ok(out)
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Array(items) if items.iter().all(|i| !i.is_array() && !i.is_object()) => {
            out.push_str(&serde_json::to_string(v).expect("scalars serialize").replace(',', ", "));
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&serde_json::to_string(k).expect("keys serialize"));
                out.push_str(": ");
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
        scalar => out.push_str(&serde_json::to_string(scalar).expect("scalars serialize")),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = to_json_text(value)?;
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::input)
}

pub fn read_dataset(path: &Path) -> CliResult<LabeledDataset> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::input)?;
    DatasetFile::from_json(&text).map_err(|e| CliError::from(e).context(format!("loading {}", path.display())))
}

pub fn write_dataset(path: &Path, ds: &LabeledDataset) -> CliResult<()> {
    let mut text = DatasetFile::to_json(ds);
    text.push('\n');
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::input)
}

pub fn read_scorer(path: &Path) -> CliResult<LinearReconstructionScorer> {
    match load_model(path).map_err(|e| CliError::from(e).context(format!("loading {}", path.display())))? {
        SavedModel::LinearScorer(s) => Ok(s),
        other => Err(CliError::input(anyhow!(
            "{} holds a `{}` model, not an outlier scorer",
            path.display(),
            other.model_type()
        ))),
    }
}

/// Front files of a directory in instance order.
pub fn front_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))
        .map_err(CliError::input)?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("front_") && n.ends_with(".json"))
        })
        .collect();
    paths.sort();
    Ok(paths)
}
