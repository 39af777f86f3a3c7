mod common;

use nalgebra::DMatrix;
use tscf_core::genetic::RngStream;
use tscf_core::models::{
    load_model, save_model, KnnClassifier, LinearReconstructionScorer, NearestCentroidClassifier, SavedModel,
};
use tscf_core::neighbors::NunIndex;
use tscf_core::synth::{generate, SynthKind};
use tscf_core::{find_nun, Classifier, Error, LabeledDataset, NunFilter, NunMode, OutlierScorer, TimeSeriesInstance};

fn random_dataset(n: usize, length: usize, channels: usize, classes: usize, seed: u64) -> LabeledDataset {
    let mut rng = RngStream::new(seed);
    let instances = (0..n)
        .map(|i| {
            let values = (0..length * channels).map(|_| rng.uniform() * 2.0 - 1.0 + (i % classes) as f64).collect();
            TimeSeriesInstance::new(length, channels, values).unwrap().with_label(i % classes)
        })
        .collect();
    LabeledDataset::new(instances, classes).unwrap()
}

fn shuffled(ds: &LabeledDataset, seed: u64) -> (LabeledDataset, Vec<usize>) {
    let mut rng = RngStream::new(seed);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.below(i + 1));
    }
    let instances = order.iter().map(|&i| ds.instances()[i].clone()).collect();
    (LabeledDataset::new(instances, ds.class_count()).unwrap(), order)
}

#[test]
fn probabilities_sum_to_one() {
    let train = random_dataset(40, 12, 2, 3, 1);
    let centroid = NearestCentroidClassifier::fit(&train, 0.7).unwrap();
    let knn = KnnClassifier::fit(&train, 5).unwrap();
    let mut rng = RngStream::new(2);
    let probes: Vec<TimeSeriesInstance> = (0..1000)
        .map(|_| TimeSeriesInstance::new(12, 2, (0..24).map(|_| rng.uniform() * 8.0 - 4.0).collect()).unwrap())
        .collect();
    for clf in [&centroid as &dyn Classifier, &knn] {
        for p in clf.predict_proba(&probes).unwrap() {
            assert_eq!(p.len(), 3);
            assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn nun_matches_brute_force() {
    let train = random_dataset(60, 10, 2, 3, 3);
    let clf = NearestCentroidClassifier::fit(&train, 1.0).unwrap();
    let classes = clf.predict(train.instances()).unwrap();
    let mut rng = RngStream::new(4);
    for _ in 0..50 {
        let x = TimeSeriesInstance::new(10, 2, (0..20).map(|_| rng.uniform() * 4.0 - 1.0).collect()).unwrap();
        let predicted = clf.predict_one(&x).unwrap();
        let got = find_nun(&train, &x, predicted, &clf, NunMode::AnyUnlike, NunFilter::Predicted).unwrap();

        let mut best = (f64::INFINITY, usize::MAX);
        for (i, inst) in train.instances().iter().enumerate() {
            if classes[i] == predicted {
                continue;
            }
            let d: f64 = x.values().iter().zip(inst.values()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if d < best.0 {
                best = (d, i);
            }
        }
        assert_eq!(got.index, best.1);
        assert!((got.distance - best.0).abs() < 1e-12);
        assert_ne!(got.target_class, predicted);

        let (perm, order) = shuffled(&train, 9);
        let again = find_nun(&perm, &x, predicted, &clf, NunMode::AnyUnlike, NunFilter::Predicted).unwrap();
        assert_eq!(order[again.index], got.index);
        assert_eq!(again.neighbor, got.neighbor);
    }
}

#[test]
fn nun_ties_go_to_the_lowest_index() {
    let train = common::dataset(vec![(vec![0.0, 0.0], 0), (vec![1.0, 0.0], 1), (vec![-1.0, 0.0], 1)], 2);
    let x = TimeSeriesInstance::univariate(vec![0.0, 0.0]).unwrap();
    let knn = KnnClassifier::fit(&train, 1).unwrap();
    let got = find_nun(&train, &x, 0, &knn, NunMode::AnyUnlike, NunFilter::Label).unwrap();
    assert_eq!(got.index, 1);
}

#[test]
fn nun_errors() {
    let train = common::dataset(vec![(vec![0.0, 0.0], 0), (vec![1.0, 0.0], 1)], 2);
    let x = TimeSeriesInstance::univariate(vec![0.0, 0.0]).unwrap();
    let knn = KnnClassifier::fit(&train, 1).unwrap();
    let index = NunIndex::new(&train, &knn, NunFilter::Label).unwrap();
    assert!(index.find(&x, 0, NunMode::TargetClass(0)).is_err());
    assert!(index.find(&x, 0, NunMode::TargetClass(5)).is_err());
    let bad = TimeSeriesInstance::univariate(vec![0.0; 3]).unwrap();
    assert!(matches!(index.find(&bad, 0, NunMode::AnyUnlike), Err(Error::DimensionMismatch { .. })));
    // Every training instance predicted as class 0 leaves nothing unlike.
    let knn3 = KnnClassifier::fit(&train, 2).unwrap();
    let r = find_nun(&train, &x, 0, &knn3, NunMode::AnyUnlike, NunFilter::Predicted);
    assert!(matches!(r, Err(Error::NoUnlikeNeighbor)), "{r:?}");
}

/// Residual of `x` after projecting onto the top-`d` right singular vectors
/// of the centered training matrix.
fn svd_oracle(train: &LabeledDataset, d: usize) -> impl Fn(&[f64]) -> f64 {
    let dim = train.length() * train.channels();
    let n = train.len();
    let mean: Vec<f64> = (0..dim)
        .map(|j| train.instances().iter().map(|x| x.values()[j]).sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, dim, |i, j| train.instances()[i].values()[j] - mean[j]);
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let basis: Vec<Vec<f64>> = order[..d].iter().map(|&k| v_t.row(k).iter().copied().collect()).collect();
    move |x: &[f64]| {
        let mut r: Vec<f64> = x.iter().zip(&mean).map(|(a, m)| a - m).collect();
        for w in &basis {
            let c: f64 = w.iter().zip(&r).map(|(a, b)| a * b).sum();
            r.iter_mut().zip(w).for_each(|(ri, wi)| *ri -= c * wi);
        }
        r.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[test]
fn linear_scorer_matches_svd_projection() {
    let train = random_dataset(30, 3, 2, 2, 10);
    let dim = 6;
    let mut rng = RngStream::new(11);
    let probes: Vec<TimeSeriesInstance> = (0..50)
        .map(|_| TimeSeriesInstance::new(3, 2, (0..dim).map(|_| rng.uniform() * 3.0).collect()).unwrap())
        .collect();
    for d in [1, 3, dim - 1] {
        let scorer = LinearReconstructionScorer::fit(&train, d).unwrap();
        let oracle = svd_oracle(&train, d);
        for x in &probes {
            let got = scorer.reconstruction_error(x).unwrap();
            assert!((got - oracle(x.values())).abs() < 1e-9, "d={d}");
        }
        let e_max = train.instances().iter().map(|x| oracle(x.values())).fold(0.0, f64::max);
        assert!((scorer.e_max() - e_max).abs() < 1e-9);
    }
}

#[test]
fn linear_scorer_ignores_training_order() {
    let train = random_dataset(25, 4, 2, 2, 12);
    let (perm, _) = shuffled(&train, 13);
    let a = LinearReconstructionScorer::fit(&train, 3).unwrap();
    let b = LinearReconstructionScorer::fit(&perm, 3).unwrap();
    for x in train.instances() {
        let (ea, eb) = (a.reconstruction_error(x).unwrap(), b.reconstruction_error(x).unwrap());
        assert!((ea - eb).abs() < 1e-9);
    }
}

#[test]
fn saved_models_round_trip_exactly() {
    let train = generate(SynthKind::Cbf, 16, 2, 30, 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let models = [
        SavedModel::NearestCentroid(NearestCentroidClassifier::fit(&train, 0.5).unwrap()),
        SavedModel::Knn(KnnClassifier::fit(&train, 3).unwrap()),
        SavedModel::LinearScorer(LinearReconstructionScorer::fit(&train, 4).unwrap()),
    ];
    let probes = generate(SynthKind::Cbf, 16, 2, 100, 5).unwrap();
    for (i, m) in models.iter().enumerate() {
        let path = dir.path().join(format!("m{i}.json"));
        save_model(m, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(&back, m);
        for x in probes.instances() {
            match (m, &back) {
                (SavedModel::LinearScorer(a), SavedModel::LinearScorer(b)) => {
                    assert_eq!(a.reconstruction_error(x).unwrap(), b.reconstruction_error(x).unwrap())
                }
                (SavedModel::NearestCentroid(a), SavedModel::NearestCentroid(b)) => {
                    assert_eq!(a.predict_proba(std::slice::from_ref(x)).unwrap(), b.predict_proba(std::slice::from_ref(x)).unwrap())
                }
                (SavedModel::Knn(a), SavedModel::Knn(b)) => {
                    assert_eq!(a.predict_proba(std::slice::from_ref(x)).unwrap(), b.predict_proba(std::slice::from_ref(x)).unwrap())
                }
                _ => unreachable!(),
            }
        }
    }
}

#[test]
fn centroid_classifier_separates_synthetic_data() {
    for (kind, channels) in [(SynthKind::SineSquare, 1), (SynthKind::Cbf, 3)] {
        let train = generate(kind, 64, channels, 60, 1).unwrap();
        let test = generate(kind, 64, channels, 60, 2).unwrap();
        let clf = NearestCentroidClassifier::fit(&train, 1.0).unwrap();
        let pred = clf.predict(test.instances()).unwrap();
        let acc = pred.iter().zip(test.labels()).filter(|(p, l)| **p == *l).count() as f64 / test.len() as f64;
        assert!(acc >= 0.8, "{kind:?}: accuracy {acc}");
    }
}
