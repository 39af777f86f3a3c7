use std::path::PathBuf;

use clap::{Args, ValueEnum};
use tscf_core::models::{save_model, KnnClassifier, LinearReconstructionScorer, NearestCentroidClassifier, SavedModel};
use tscf_core::{Classifier, OutlierScorer};

use crate::exit::{CliError, CliResult};
use crate::files::read_dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Centroid,
    Knn,
    Linear,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Training dataset file.
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long, value_enum)]
    pub kind: ModelKind,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Softmax temperature of the nearest-centroid classifier.
    #[arg(long, default_value_t = NearestCentroidClassifier::DEFAULT_TEMPERATURE)]
    pub tau: f64,
    /// Neighbors of the k-NN classifier.
    #[arg(long, default_value_t = KnnClassifier::DEFAULT_K)]
    pub k: usize,
    /// Principal components of the linear scorer (default min(8, L·C − 1)).
    #[arg(long)]
    pub components: Option<usize>,
}

pub fn run(args: &FitArgs) -> CliResult<()> {
    let train = read_dataset(&args.train)?;
    let model = match args.kind {
        ModelKind::Centroid => SavedModel::NearestCentroid(NearestCentroidClassifier::fit(&train, args.tau)?),
        ModelKind::Knn => SavedModel::Knn(KnnClassifier::fit(&train, args.k)?),
        ModelKind::Linear => {
            let d = args
                .components
                .unwrap_or_else(|| LinearReconstructionScorer::default_components(train.length(), train.channels()));
            SavedModel::LinearScorer(LinearReconstructionScorer::fit(&train, d)?)
        }
    };
    match &model {
        SavedModel::NearestCentroid(m) => print_accuracy(m, &train)?,
        SavedModel::Knn(m) => print_accuracy(m, &train)?,
        SavedModel::LinearScorer(s) => println!("e_max: {}", s.e_max()),
    }
    save_model(&model, &args.out).map_err(|e| CliError::from(e).context(format!("writing {}", args.out.display())))?;
    Ok(())
}

fn print_accuracy(clf: &dyn Classifier, train: &tscf_core::LabeledDataset) -> CliResult<()> {
    let pred = clf.predict(train.instances())?;
    let hits = pred.iter().zip(train.labels()).filter(|(p, l)| **p == *l).count();
    println!("train accuracy: {:.4}", hits as f64 / train.len() as f64);
    Ok(())
}
