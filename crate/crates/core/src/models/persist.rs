//! Self-describing model files:
//! `{"format_version":1,"model_type":"...","payload":{...}}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{KnnClassifier, LinearReconstructionScorer, NearestCentroidClassifier};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    NearestCentroid(NearestCentroidClassifier),
    Knn(KnnClassifier),
    LinearScorer(LinearReconstructionScorer),
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format_version: u64,
    model_type: String,
    payload: Value,
}

impl SavedModel {
    pub fn model_type(&self) -> &'static str {
        match self {
            SavedModel::NearestCentroid(_) => "nearest_centroid",
            SavedModel::Knn(_) => "knn",
            SavedModel::LinearScorer(_) => "linear_scorer",
        }
    }

    pub fn to_json(&self) -> String {
        let payload = match self {
            SavedModel::NearestCentroid(m) => serde_json::to_value(m),
            SavedModel::Knn(m) => serde_json::to_value(m),
            SavedModel::LinearScorer(m) => serde_json::to_value(m),
        }
        .expect("model serializes");
        let env = Envelope {
            format_version: MODEL_FORMAT_VERSION as u64,
            model_type: self.model_type().to_string(),
            payload,
        };
        serde_json::to_string(&env).expect("envelope serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: Envelope = serde_json::from_str(text).map_err(|e| Error::CorruptFile(e.to_string()))?;
        if env.format_version != MODEL_FORMAT_VERSION as u64 {
            return Err(Error::VersionMismatch {
                expected: MODEL_FORMAT_VERSION,
                found: env.format_version,
            });
        }
        let corrupt = |e: serde_json::Error| Error::CorruptFile(e.to_string());
        let model = match env.model_type.as_str() {
            "nearest_centroid" => {
                let m: NearestCentroidClassifier = serde_json::from_value(env.payload).map_err(corrupt)?;
                m.validate()?;
                SavedModel::NearestCentroid(m)
            }
            "knn" => {
                let m: KnnClassifier = serde_json::from_value(env.payload).map_err(corrupt)?;
                m.validate()?;
                SavedModel::Knn(m)
            }
            "linear_scorer" => {
                let m: LinearReconstructionScorer = serde_json::from_value(env.payload).map_err(corrupt)?;
                m.validate()?;
                SavedModel::LinearScorer(m)
            }
            other => return Err(Error::UnknownModelType(other.to_string())),
        };
        Ok(model)
    }
}

pub fn save_model(model: &SavedModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model.to_json())?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    SavedModel::from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Classifier, OutlierScorer};
    use crate::series::{LabeledDataset, TimeSeriesInstance};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dataset(rng: &mut ChaCha8Rng, n: usize) -> LabeledDataset {
        let insts = (0..n)
            .map(|i| {
                let v = (0..6).map(|_| rng.gen_range(-2.0..2.0) + (i % 2) as f64).collect();
                TimeSeriesInstance::new(3, 2, v).unwrap().with_label(i % 2)
            })
            .collect();
        LabeledDataset::new(insts, 2).unwrap()
    }

    fn probes(rng: &mut ChaCha8Rng) -> Vec<TimeSeriesInstance> {
        (0..100)
            .map(|_| TimeSeriesInstance::new(3, 2, (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap())
            .collect()
    }

    #[test]
    fn round_trips_preserve_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ds = random_dataset(&mut rng, 20);
        let probes = probes(&mut rng);

        let centroid = NearestCentroidClassifier::fit(&ds, 0.7).unwrap();
        let knn = KnnClassifier::fit(&ds, 3).unwrap();
        let scorer = LinearReconstructionScorer::fit(&ds, 2).unwrap();

        for model in [
            SavedModel::NearestCentroid(centroid),
            SavedModel::Knn(knn),
            SavedModel::LinearScorer(scorer),
        ] {
            let back = SavedModel::from_json(&model.to_json()).unwrap();
            match (&model, &back) {
                (SavedModel::NearestCentroid(a), SavedModel::NearestCentroid(b)) => {
                    assert_eq!(a.predict_proba(&probes).unwrap(), b.predict_proba(&probes).unwrap());
                }
                (SavedModel::Knn(a), SavedModel::Knn(b)) => {
                    assert_eq!(a.predict_proba(&probes).unwrap(), b.predict_proba(&probes).unwrap());
                }
                (SavedModel::LinearScorer(a), SavedModel::LinearScorer(b)) => {
                    for p in &probes {
                        let (ea, eb) = (a.reconstruction_error(p).unwrap(), b.reconstruction_error(p).unwrap());
                        assert!((ea - eb).abs() <= 1e-12);
                    }
                    assert_eq!(a.e_max(), b.e_max());
                }
                _ => panic!("model type changed"),
            }
        }
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ds = random_dataset(&mut rng, 6);
        let text = SavedModel::NearestCentroid(NearestCentroidClassifier::fit(&ds, 1.0).unwrap()).to_json();
        let cut = &text[..text.len() / 2];
        assert!(matches!(SavedModel::from_json(cut), Err(Error::CorruptFile(_))));
    }

    #[test]
    fn unknown_type_and_version() {
        let svm = r#"{"format_version":1,"model_type":"svm","payload":{}}"#;
        assert!(matches!(SavedModel::from_json(svm), Err(Error::UnknownModelType(t)) if t == "svm"));
        let v2 = r#"{"format_version":2,"model_type":"knn","payload":{}}"#;
        assert!(matches!(SavedModel::from_json(v2), Err(Error::VersionMismatch { found: 2, .. })));
    }

    #[test]
    fn file_io() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ds = random_dataset(&mut rng, 8);
        let m = SavedModel::Knn(KnnClassifier::fit(&ds, 1).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&m, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
    }
}
