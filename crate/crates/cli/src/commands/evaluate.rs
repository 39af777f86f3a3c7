use std::path::PathBuf;
use std::time::Instant;

use anyhow::anyhow;
use clap::Args;
use tscf_core::driver::Explainer;
use tscf_core::eval::{baseline_full_swap, rank_methods, BatchReport, MetricsRecord};
use tscf_core::models::LinearReconstructionScorer;
use tscf_core::{select_by_utility, Classifier, LabeledDataset, RunConfig, UtilityWeights};

use super::{check_compatible, require_scorer, ClassifierArgs};
use crate::config::{load_config, parse_weights, resolve, Overrides};
use crate::exit::{CliError, CliResult};
use crate::files::{
    front_files, read_dataset, read_json, read_scorer, write_json, EvaluationFile, FrontFile, TimingsFile,
    EVALUATION_FORMAT_VERSION, TIMINGS_FILE,
};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of front files written by `explain`.
    #[arg(long)]
    pub explained: PathBuf,
    /// Dataset the fronts were computed for.
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub train: PathBuf,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    #[arg(long)]
    pub scorer: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Utility weights overriding the config file.
    #[arg(long)]
    pub weights: Option<String>,
    /// Report JSON output.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write one CSV row per instance and method.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Add the full-swap baseline on the same instances.
    #[arg(long)]
    pub baseline: bool,
    #[arg(long)]
    pub nun_target_class: Option<usize>,
    #[arg(long)]
    pub nun_by_label: bool,
}

struct Context<'a> {
    test: &'a LabeledDataset,
    classifier: &'a dyn Classifier,
    scorer: &'a LinearReconstructionScorer,
    train_errors: Vec<f64>,
}

pub fn run(args: &EvaluateArgs) -> CliResult<()> {
    let paths = front_files(&args.explained)?;
    if paths.is_empty() {
        return Err(CliError::input(anyhow!("no front files in {}", args.explained.display())));
    }
    let file = load_config(args.config.as_deref())?;
    let flags = Overrides {
        nun_target_class: args.nun_target_class,
        nun_by_label: args.nun_by_label,
        ..Overrides::default()
    };
    let resolved = resolve(&file, &flags, None)?;
    let weights = match &args.weights {
        Some(w) => parse_weights(w)?,
        None => resolved.weights,
    };
    let train = read_dataset(&args.train)?;
    let test = read_dataset(&args.test)?;
    let loaded = args.classifier.load(resolved.classifier.as_deref(), resolved.bridge.as_deref())?;
    let classifier = loaded.model.as_ref();
    check_compatible("test split", &test, classifier)?;
    let scorer = read_scorer(&require_scorer(&args.scorer, resolved.scorer.as_deref())?)?;
    let ctx = Context {
        test: &test,
        classifier,
        scorer: &scorer,
        train_errors: scorer.training_errors(&train)?,
    };
    let timings: TimingsFile = {
        let path = args.explained.join(TIMINGS_FILE);
        if path.exists() {
            read_json(&path)?
        } else {
            TimingsFile::default()
        }
    };

    let fronts: Vec<FrontFile> = paths.iter().map(|p| read_json(p)).collect::<CliResult<_>>()?;
    let mut records = Vec::with_capacity(fronts.len());
    for front in &fronts {
        let secs = timings.wall_time_s.get(&front.instance_id).copied().unwrap_or(0.0);
        records.push(score_front(&ctx, front, &weights, secs)?);
    }
    let mut reports = vec![BatchReport::new("multi_space", records)];
    if args.baseline {
        reports.push(baseline_report(&ctx, &train, &fronts, &resolved.run)?);
    }
    let ranking = rank_methods(&reports);

    if let Some(csv_path) = &args.csv {
        let mut text = String::new();
        for (i, r) in reports.iter().enumerate() {
            let csv = r.to_csv()?;
            let body = if i == 0 { csv.as_str() } else { csv.split_once('\n').map_or("", |(_, b)| b) };
            text.push_str(body);
        }
        std::fs::write(csv_path, text).map_err(CliError::input)?;
    }
    write_json(
        &args.out,
        &EvaluationFile {
            format_version: EVALUATION_FORMAT_VERSION,
            reports,
            ranking,
        },
    )
}

fn query(ctx: &Context<'_>, id: usize) -> CliResult<tscf_core::TimeSeriesInstance> {
    ctx.test
        .instances()
        .get(id)
        .map(|x| x.clone().without_label())
        .ok_or_else(|| CliError::input(anyhow!("front for instance {id} but the test split has {}", ctx.test.len())))
}

fn failed(id: usize, error: String, secs: f64) -> MetricsRecord {
    MetricsRecord {
        instance_id: id,
        valid: false,
        proximity: None,
        sparsity: None,
        nos: None,
        os_scaled: None,
        sparsity_nos_mean: None,
        wall_time_s: secs,
        error: Some(error),
    }
}

fn score_front(ctx: &Context<'_>, front: &FrontFile, weights: &UtilityWeights, secs: f64) -> CliResult<MetricsRecord> {
    let id = front.instance_id;
    if let Some(e) = &front.error {
        return Ok(failed(id, e.clone(), secs));
    }
    let x = query(ctx, id)?;
    let Ok((_, member)) = select_by_utility(&front.members, weights) else {
        return Ok(failed(id, "empty front".into(), secs));
    };
    let original = ctx.classifier.predict_one(&x)?;
    let valid = ctx.classifier.predict_one(&member.counterfactual)? != original;
    Ok(MetricsRecord::for_counterfactual(
        id,
        &x,
        &member.mask,
        &member.counterfactual,
        valid,
        ctx.scorer,
        &ctx.train_errors,
        secs,
    )?)
}

fn baseline_report(
    ctx: &Context<'_>,
    train: &LabeledDataset,
    fronts: &[FrontFile],
    cfg: &RunConfig,
) -> CliResult<BatchReport> {
    let explainer = Explainer::new(train, ctx.classifier, ctx.scorer, cfg.nun_filter)?;
    let mut records = Vec::with_capacity(fronts.len());
    for front in fronts {
        let id = front.instance_id;
        let start = Instant::now();
        let x = query(ctx, id)?;
        let record = explainer
            .nun(&x, cfg.nun_mode)
            .and_then(|(original, nun)| {
                let (mask, cf) = baseline_full_swap(&x, &nun.neighbor)?;
                let valid = ctx.classifier.predict_one(&cf)? != original;
                let secs = start.elapsed().as_secs_f64();
                MetricsRecord::for_counterfactual(id, &x, &mask, &cf, valid, ctx.scorer, &ctx.train_errors, secs)
            })
            .unwrap_or_else(|e| failed(id, e.to_string(), start.elapsed().as_secs_f64()));
        records.push(record);
    }
    Ok(BatchReport::new("full_swap", records))
}
