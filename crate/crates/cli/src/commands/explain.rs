use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::anyhow;
use clap::Args;
use log::{info, warn};
use rayon::prelude::*;
use tscf_core::driver::Explainer;
use tscf_core::{NunMode, ParetoFront};

use super::{check_compatible, require_scorer, ClassifierArgs};
use crate::config::{config_hash, load_config, parse_instances, resolve, Overrides, SEED_ENV};
use crate::exit::{exit_code, CliError, CliResult};
use crate::files::{read_dataset, read_scorer, write_json, FrontFile, TimingsFile, TIMINGS_FILE, TIMINGS_FORMAT_VERSION};

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// Dataset holding the instances to explain.
    #[arg(long)]
    pub test: PathBuf,
    /// Training split searched for nearest unlike neighbors.
    #[arg(long)]
    pub train: PathBuf,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    /// Saved linear reconstruction scorer.
    #[arg(long)]
    pub scorer: Option<PathBuf>,
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named configuration used as the base of the config file.
    #[arg(long)]
    pub preset: Option<String>,
    /// `a..b` (inclusive), `a,b,c` or one index; all instances by default.
    #[arg(long)]
    pub instances: Option<String>,
    /// Output directory for the front files.
    #[arg(long)]
    pub out: PathBuf,
    /// Base seed; instance `i` runs with `seed + i`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Instances explained concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Record per-instance failures in the front files and carry on.
    #[arg(long)]
    pub keep_going: bool,
    /// Only accept neighbors of this class.
    #[arg(long)]
    pub nun_target_class: Option<usize>,
    /// Filter neighbor candidates on their labels instead of predictions.
    #[arg(long)]
    pub nun_by_label: bool,
}

pub fn run(args: &ExplainArgs) -> CliResult<()> {
    let file = load_config(args.config.as_deref())?;
    let flags = Overrides {
        preset: args.preset.clone(),
        seed: args.seed,
        nun_target_class: args.nun_target_class,
        nun_by_label: args.nun_by_label,
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let resolved = resolve(&file, &flags, env_seed.as_deref())?;
    let cfg = resolved.run;

    let train = read_dataset(&args.train)?;
    let test = read_dataset(&args.test)?;
    let loaded = args.classifier.load(resolved.classifier.as_deref(), resolved.bridge.as_deref())?;
    let classifier = loaded.model.as_ref();
    let scorer = read_scorer(&require_scorer(&args.scorer, resolved.scorer.as_deref())?)?;
    check_compatible("train split", &train, classifier)?;
    check_compatible("test split", &test, classifier)?;
    if test.length() != train.length() || test.channels() != train.channels() {
        return Err(CliError::input(anyhow!("train and test splits differ in shape")));
    }
    if let NunMode::TargetClass(t) = cfg.nun_mode {
        if t >= classifier.class_count() {
            return Err(CliError::input(anyhow!(
                "--nun-target-class {t} out of range for {} classes",
                classifier.class_count()
            )));
        }
    }
    if args.jobs == 0 {
        return Err(CliError::input(anyhow!("--jobs must be at least 1")));
    }
    let jobs = if loaded.is_bridge && args.jobs > 1 {
        warn!("bridge classifiers serve one request at a time; running with --jobs 1");
        1
    } else {
        args.jobs
    };
    let ids = match &args.instances {
        Some(s) => parse_instances(s, test.len())?,
        None => (0..test.len()).collect(),
    };
    fs::create_dir_all(&args.out).map_err(CliError::input)?;

    let explainer = Explainer::new(&train, classifier, &scorer, cfg.nun_filter)?;
    let hash = config_hash(&cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(CliError::runtime)?;
    info!("explaining {} instances with {jobs} job(s), config {hash}", ids.len());

    let results: Vec<(usize, tscf_core::Result<ParetoFront>, f64)> = pool.install(|| {
        ids.par_iter()
            .map(|&id| {
                let start = Instant::now();
                let mut run_cfg = cfg.clone();
                run_cfg.seed = cfg.seed.wrapping_add(id as u64);
                let x = test.instances()[id].clone().without_label();
                let out = explainer.explain(&x, Some(id), &run_cfg);
                (id, out, start.elapsed().as_secs_f64())
            })
            .collect()
    });

    let mut timings = TimingsFile {
        format_version: TIMINGS_FORMAT_VERSION,
        ..TimingsFile::default()
    };
    let mut first_error = None;
    for (id, result, secs) in results {
        timings.wall_time_s.insert(id, secs);
        let path = args.out.join(FrontFile::file_name(id));
        match result {
            Ok(front) => {
                info!("instance {id}: {} member(s) in {secs:.2}s", front.len());
                write_json(&path, &FrontFile::from_front(id, hash.clone(), front))?;
            }
            Err(e) if args.keep_going => {
                warn!("instance {id}: {e}");
                write_json(&path, &FrontFile::failed(id, e.to_string()))?;
            }
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(CliError {
                        code: exit_code(&e),
                        error: anyhow::Error::new(e).context(format!("instance {id}")),
                    });
                }
            }
        }
    }
    write_json(&args.out.join(TIMINGS_FILE), &timings)?;
    first_error.map_or(Ok(()), Err)
}
