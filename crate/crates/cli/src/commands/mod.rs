pub mod evaluate;
pub mod explain;
pub mod fit;
pub mod select;
pub mod synth;

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::anyhow;
use clap::Args;
use tscf_core::models::{load_model, ExternalModelBridge, SavedModel};
use tscf_core::{Classifier, LabeledDataset};

use crate::exit::{CliError, CliResult};

/// Where predictions come from: a saved model or an external process.
#[derive(Debug, Clone, Args)]
pub struct ClassifierArgs {
    /// Saved classifier model file.
    #[arg(long, conflicts_with = "bridge")]
    pub classifier: Option<PathBuf>,
    /// Command line of a JSON-lines model process.
    #[arg(long)]
    pub bridge: Option<String>,
    /// Seconds to wait for each bridge reply.
    #[arg(long, default_value_t = 30.0)]
    pub bridge_timeout: f64,
    /// Record every bridge request/response pair to this file.
    #[arg(long)]
    pub bridge_transcript: Option<PathBuf>,
}

pub struct LoadedClassifier {
    pub model: Box<dyn Classifier>,
    pub is_bridge: bool,
}

impl ClassifierArgs {
    /// Flags win over the config file's `classifier` / `bridge` entries.
    pub fn load(&self, cfg_classifier: Option<&Path>, cfg_bridge: Option<&str>) -> CliResult<LoadedClassifier> {
        let (path, bridge) = match (&self.classifier, &self.bridge) {
            (None, None) => (cfg_classifier.map(Path::to_path_buf), cfg_bridge.map(str::to_owned)),
            (p, b) => (p.clone(), b.clone()),
        };
        if let Some(cmd) = bridge {
            if self.bridge_timeout.is_nan() || self.bridge_timeout <= 0.0 {
                return Err(CliError::input(anyhow!("--bridge-timeout must be positive")));
            }
            let timeout = Duration::from_secs_f64(self.bridge_timeout);
            let model = match &self.bridge_transcript {
                Some(t) => ExternalModelBridge::spawn_with_transcript(&cmd, timeout, t),
                None => ExternalModelBridge::spawn_command_line(&cmd, timeout),
            }
            .map_err(|e| CliError::from(e).context(format!("starting bridge `{cmd}`")))?;
            return Ok(LoadedClassifier {
                model: Box::new(model),
                is_bridge: true,
            });
        }
        let path = path.ok_or_else(|| CliError::input(anyhow!("no classifier given (--classifier or --bridge)")))?;
        let model: Box<dyn Classifier> =
            match load_model(&path).map_err(|e| CliError::from(e).context(format!("loading {}", path.display())))? {
                SavedModel::NearestCentroid(m) => Box::new(m),
                SavedModel::Knn(m) => Box::new(m),
                SavedModel::LinearScorer(_) => {
                    return Err(CliError::input(anyhow!("{} holds an outlier scorer, not a classifier", path.display())))
                }
            };
        Ok(LoadedClassifier {
            model,
            is_bridge: false,
        })
    }
}

pub fn check_compatible(name: &str, ds: &LabeledDataset, clf: &dyn Classifier) -> CliResult<()> {
    if let Some((l, c)) = clf.input_shape() {
        if (l, c) != (ds.length(), ds.channels()) {
            return Err(CliError::input(anyhow!(
                "{name} has shape {}x{} but the classifier expects {l}x{c}",
                ds.length(),
                ds.channels()
            )));
        }
    }
    if ds.class_count() > clf.class_count() {
        return Err(CliError::input(anyhow!(
            "{name} has {} classes but the classifier knows {}",
            ds.class_count(),
            clf.class_count()
        )));
    }
    Ok(())
}

pub fn require_scorer(flag: &Option<PathBuf>, cfg: Option<&Path>) -> CliResult<PathBuf> {
    flag.clone()
        .or_else(|| cfg.map(Path::to_path_buf))
        .ok_or_else(|| CliError::input(anyhow!("no outlier scorer given (--scorer)")))
}
