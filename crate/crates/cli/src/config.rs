//! Run configuration from presets, config files, `TSCF_SEED` and flags, in
//! increasing order of precedence.

use std::path::{Path, PathBuf};

use anyhow::anyhow;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use tscf_core::{NunFilter, NunMode, RunConfig, UtilityWeights};

use crate::exit::{CliError, CliResult};
use crate::files::read_json;

pub const CONFIG_FORMAT_VERSION: u32 = 1;
pub const SEED_ENV: &str = "TSCF_SEED";

/// User-facing configuration document. `run` holds any subset of the
/// [`RunConfig`] fields, applied on top of `preset`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub format_version: Option<u32>,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub run: Map<String, Value>,
    #[serde(default)]
    pub weights: Option<UtilityWeights>,
    #[serde(default)]
    pub classifier: Option<PathBuf>,
    #[serde(default)]
    pub scorer: Option<PathBuf>,
    #[serde(default)]
    pub bridge: Option<String>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub nun_target_class: Option<usize>,
    pub nun_by_label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub run: RunConfig,
    pub weights: UtilityWeights,
    pub classifier: Option<PathBuf>,
    pub scorer: Option<PathBuf>,
    pub bridge: Option<String>,
}

pub fn load_config(path: Option<&Path>) -> CliResult<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let file: ConfigFile = read_json(path)?;
    if let Some(v) = file.format_version {
        if v != CONFIG_FORMAT_VERSION {
            return Err(CliError::input(anyhow!(
                "{}: format_version {v} is not supported (expected {CONFIG_FORMAT_VERSION})",
                path.display()
            )));
        }
    }
    Ok(file)
}

pub fn resolve(file: &ConfigFile, flags: &Overrides, env_seed: Option<&str>) -> CliResult<Resolved> {
    let preset = flags.preset.as_deref().or(file.preset.as_deref()).unwrap_or("multispace");
    let base = RunConfig::preset(preset).ok_or_else(|| {
        CliError::input(anyhow!(
            "unknown preset `{preset}`; known: {}",
            RunConfig::preset_names().join(", ")
        ))
    })?;
    let mut merged = match serde_json::to_value(&base).map_err(CliError::runtime)? {
        Value::Object(m) => m,
        _ => unreachable!("RunConfig serializes to an object"),
    };
    for (k, v) in &file.run {
        merged.insert(k.clone(), v.clone());
    }
    let mut run: RunConfig = serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::input(anyhow!("invalid `run` section: {e}")))?;

    if let Some(s) = env_seed {
        run.seed = s
            .trim()
            .parse()
            .map_err(|_| CliError::input(anyhow!("{SEED_ENV}=`{s}` is not an unsigned integer")))?;
    }
    if let Some(seed) = flags.seed {
        run.seed = seed;
    }
    if let Some(t) = flags.nun_target_class {
        run.nun_mode = NunMode::TargetClass(t);
    }
    if flags.nun_by_label {
        run.nun_filter = NunFilter::Label;
    }
    run.validate()?;
    let weights = file.weights.unwrap_or_default();
    weights.validate()?;
    Ok(Resolved {
        run,
        weights,
        classifier: file.classifier.clone(),
        scorer: file.scorer.clone(),
        bridge: file.bridge.clone(),
    })
}

/// SHA-256 of the compact JSON form of `cfg`.
pub fn config_hash(cfg: &RunConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// Parses `a,b,c,d` utility weights.
pub fn parse_weights(s: &str) -> CliResult<UtilityWeights> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::input(anyhow!("weights `{s}`: {e}")))?;
    let [a, b, c, d] = parts[..] else {
        return Err(CliError::input(anyhow!("expected four comma-separated weights, got `{s}`")));
    };
    Ok(UtilityWeights::new(a, b, c, d)?)
}

/// Instance selector: `a..b` (inclusive), `a,b,c` or a single index.
pub fn parse_instances(s: &str, n: usize) -> CliResult<Vec<usize>> {
    let bad = |msg: String| CliError::input(anyhow!("--instances `{s}`: {msg}"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| bad(e.to_string()));
    let ids: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(bad("empty range".into()));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<CliResult<_>>()?
    };
    if let Some(&bad_id) = ids.iter().find(|&&i| i >= n) {
        return Err(bad(format!("index {bad_id} out of range for {n} instances")));
    }
    let mut ids = ids;
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}
