//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rayon::prelude::*;
use tscf_core::driver::{Explainer, RunEvent};
use tscf_core::eval::{baseline_full_swap, metric_nos, metric_sparsity};
use tscf_core::genetic::{
    dominates, fast_nondominated_sort, mutate_compress, mutate_extend, mutate_prune, RngStream,
};
use tscf_core::models::{LinearReconstructionScorer, NearestCentroidClassifier};
use tscf_core::objectives::contiguity_objective;
use tscf_core::synth::{generate_split, SynthKind};
use tscf_core::{
    run_multispace, select_by_utility, ChangeMask, Classifier, FrontMember, LabeledDataset, MaskKind, NunFilter,
    NunMode, ObjectiveVector, OutlierScorer, Result, RunConfig, TimeSeriesInstance, UtilityWeights,
};

type Outcome = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !($cond) {
            return Err(format!($($msg)+));
        }
    };
}

struct Setting {
    kind: SynthKind,
    channels: usize,
    selected_sparsity: Vec<f64>,
    baseline_sparsity: Vec<f64>,
}

/// Explains all 30 test instances of each dataset with the default schedule.
fn run_synthetic() -> (Vec<Setting>, Outcome) {
    let start = Instant::now();
    let mut settings = Vec::new();
    let mut checked = 0usize;
    for kind in [SynthKind::SineSquare, SynthKind::Cbf] {
        for channels in [1, 3] {
            let (train, test) = generate_split(kind, 64, channels, 60, 30, 7).unwrap();
            let clf = NearestCentroidClassifier::fit(&train, 1.0).unwrap();
            let scorer =
                LinearReconstructionScorer::fit(&train, LinearReconstructionScorer::default_components(64, channels))
                    .unwrap();
            let explainer = Explainer::new(&train, &clf, &scorer, NunFilter::Predicted).unwrap();
            let runs: Vec<_> = test
                .instances()
                .par_iter()
                .enumerate()
                .map(|(i, x)| {
                    let x = x.clone().without_label();
                    let cfg = RunConfig {
                        seed: i as u64,
                        ..RunConfig::default()
                    };
                    let front = explainer.explain(&x, Some(i), &cfg)?;
                    let (_, nun) = explainer.nun(&x, cfg.nun_mode)?;
                    Ok((x, front, nun.neighbor))
                })
                .collect::<Result<Vec<_>>>()
                .unwrap();
            let mut setting = Setting {
                kind,
                channels,
                selected_sparsity: Vec::new(),
                baseline_sparsity: Vec::new(),
            };
            for (x, front, nun) in runs {
                let original = clf.predict_one(&x).unwrap();
                if front.is_empty() {
                    return (settings, Err(format!("{kind:?} C={channels}: empty front")));
                }
                for m in &front.members {
                    checked += 1;
                    let pred = clf.predict_one(&m.counterfactual).unwrap();
                    if !m.objectives.valid || pred == original {
                        return (settings, Err(format!("{kind:?} C={channels}: invalid member")));
                    }
                }
                let (_, best) = select_by_utility(&front.members, &UtilityWeights::default()).unwrap();
                if clf.predict_one(&best.counterfactual).unwrap() == original {
                    return (settings, Err(format!("{kind:?} C={channels}: invalid selection")));
                }
                setting.selected_sparsity.push(metric_sparsity(&best.mask, channels).unwrap());
                let (mask, _) = baseline_full_swap(&x, &nun).unwrap();
                setting.baseline_sparsity.push(metric_sparsity(&mask, channels).unwrap());
            }
            settings.push(setting);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let outcome = if secs < 300.0 {
        Ok(format!("{checked} members over 120 instances valid, {secs:.1}s"))
    } else {
        Err(format!("all valid but took {secs:.1}s"))
    };
    (settings, outcome)
}

fn median(v: &[f64]) -> f64 {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn sparsity_dominance(settings: &[Setting]) -> Outcome {
    ensure!(settings.len() == 4, "synthetic runs incomplete");
    let mut parts = Vec::new();
    let mut ok = true;
    for s in settings {
        let ms = median(&s.selected_sparsity);
        let fs = median(&s.baseline_sparsity);
        ok &= ms < 0.5 && ms < fs && fs == 1.0;
        parts.push(format!("{:?}/C{} {ms:.3} vs {fs}", s.kind, s.channels));
    }
    let detail = format!("medians {}", parts.join(", "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn layered_oracle(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !remaining.is_empty() {
        let front: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| {
                !remaining.iter().any(|&j| {
                    let (a, b) = (&points[j], &points[i]);
                    a.iter().zip(b).all(|(x, y)| x >= y) && a.iter().zip(b).any(|(x, y)| x > y)
                })
            })
            .collect();
        remaining.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

fn sort_oracle() -> Outcome {
    let mut rng = RngStream::new(500);
    for case in 0..500 {
        let n = 1 + rng.below(32);
        let levels = if case % 2 == 0 { 3 } else { 1000 };
        let points: Vec<Vec<f64>> =
            (0..n).map(|_| (0..4).map(|_| rng.below(levels) as f64).collect()).collect();
        ensure!(fast_nondominated_sort(&points) == layered_oracle(&points), "population {case} differs");
    }
    Ok("500 populations match".into())
}

fn random_mask(rng: &mut RngStream) -> ChangeMask {
    let kind = if rng.bernoulli(0.5) { MaskKind::Common } else { MaskKind::Independent };
    let (length, channels) = (1 + rng.below(64), 1 + rng.below(8));
    let stored = if kind == MaskKind::Common { 1 } else { channels };
    let density = rng.uniform();
    let bits: Vec<bool> = (0..length * stored).map(|_| rng.bernoulli(density)).collect();
    ChangeMask::from_bits(kind, length, channels, &bits).unwrap()
}

fn rows(m: &ChangeMask) -> Vec<Vec<bool>> {
    m.to_strings().iter().map(|s| s.chars().map(|c| c == '1').collect()).collect()
}

fn runs(m: &ChangeMask) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (c, row) in rows(m).iter().enumerate() {
        let mut t = 0;
        while t < row.len() {
            if row[t] {
                let s = t;
                while t < row.len() && row[t] {
                    t += 1;
                }
                out.push((s, c, t - s));
            } else {
                t += 1;
            }
        }
    }
    out
}

/// Cells that differ between two masks of the same layout.
fn xor(a: &ChangeMask, b: &ChangeMask) -> Vec<(usize, usize, bool)> {
    let (ra, rb) = (rows(a), rows(b));
    let mut out = Vec::new();
    for c in 0..ra.len() {
        for t in 0..ra[c].len() {
            if ra[c][t] != rb[c][t] {
                out.push((t, c, rb[c][t]));
            }
        }
    }
    out
}

fn mask_algebra() -> Outcome {
    let mut rng = RngStream::new(10_000);
    for i in 0..10_000 {
        let m = random_mask(&mut rng);
        let subs = m.decompose();
        let got: Vec<_> = subs.iter().map(|s| (s.start, s.channel, s.length)).collect();
        ensure!(got == runs(&m), "mask {i}: decomposition differs from run scan");
        let back = ChangeMask::reconstruct(&subs, m.kind(), m.length(), m.channels()).unwrap();
        ensure!(back == m, "mask {i}: round trip differs");
    }
    for i in 0..10_000 {
        let m = random_mask(&mut rng);
        let before = rows(&m);
        let p = rng.uniform();
        let ends: Vec<(usize, usize)> =
            m.decompose().iter().flat_map(|s| [(s.start, s.channel), (s.last(), s.channel)]).collect();

        let ext = xor(&m, &mutate_extend(&m, p, &mut rng));
        for &(t, c, set) in &ext {
            let next_to_run = (t > 0 && before[c][t - 1]) || (t + 1 < m.length() && before[c][t + 1]);
            ensure!(set && next_to_run, "mask {i}: extension touched ({t}, {c})");
        }
        ensure!(ext.len() <= ends.len(), "mask {i}: extension grew too much");

        for (t, c, set) in xor(&m, &mutate_compress(&m, p, &mut rng)) {
            ensure!(!set && ends.contains(&(t, c)), "mask {i}: compression touched ({t}, {c})");
        }

        let pruned = xor(&m, &mutate_prune(&m, p, &mut rng));
        ensure!(pruned.iter().all(|d| !d.2), "mask {i}: pruning set a cell");
        for s in m.decompose() {
            let gone = pruned.iter().filter(|d| d.1 == s.channel && (s.start..s.end()).contains(&d.0)).count();
            ensure!(gone == 0 || gone == s.length, "mask {i}: run {s:?} partially pruned");
        }
    }
    Ok("10000 round trips, 10000 mutated masks local".into())
}

fn penalty_dominance() -> Outcome {
    let mut rng = RngStream::new(1000);
    let nu = 100.0;
    let draw = |rng: &mut RngStream| {
        [rng.uniform(), -rng.uniform(), -rng.uniform() * 2f64.powf(0.25), -rng.uniform()]
    };
    for i in 0..1000 {
        let v = draw(&mut rng);
        let raw = draw(&mut rng);
        let inv = raw.map(|o| o - nu);
        ensure!(dominates(&v, &inv) && !dominates(&inv, &v), "pair {i} not dominated");
    }
    Ok("1000 pairs".into())
}

fn spot_values() -> Outcome {
    let mut m = ChangeMask::zeros(MaskKind::Independent, 128, 1);
    for t in [10, 11, 12, 90, 91, 92, 93] {
        m.set(t, 0, true);
    }
    let o3 = contiguity_objective(&m, 1, 0.25).unwrap();
    let oracle = (2.0f64 / 64.0).ln().mul_add(0.25, 0.0).exp();
    ensure!((o3.abs() - oracle).abs() < 1e-12, "o3 {o3} vs {oracle}");

    let dummy = TimeSeriesInstance::univariate(vec![0.0; 4]).unwrap();
    let member = |o: [f64; 4]| FrontMember {
        mask: ChangeMask::zeros(MaskKind::Independent, 4, 1),
        counterfactual: dummy.clone(),
        objectives: ObjectiveVector {
            o1: o[0],
            o2: o[1],
            o3: o[2],
            o4: o[3],
            valid: true,
        },
    };
    let front = vec![
        member([0.9, -0.5, -0.6, -0.1]),
        member([0.6, -0.1, -0.4, -0.3]),
        member([0.7, -0.2, -0.5, -0.2]),
    ];
    let hand = [
        0.1 * 0.9 + 0.3 * -0.5 + 0.4 * -0.6 + 0.2 * -0.1,
        0.1 * 0.6 + 0.3 * -0.1 + 0.4 * -0.4 + 0.2 * -0.3,
        0.1 * 0.7 + 0.3 * -0.2 + 0.4 * -0.5 + 0.2 * -0.2,
    ];
    let w = UtilityWeights::new(0.1, 0.3, 0.4, 0.2).unwrap();
    for (m, h) in front.iter().zip(hand) {
        ensure!((w.utility(&m.objectives) - h).abs() < 1e-12, "utility {} vs {h}", w.utility(&m.objectives));
    }
    let (idx, _) = select_by_utility(&front, &w).unwrap();
    ensure!(idx == 1, "selected {idx}");
    Ok(format!("o3 = -{oracle:.12}, utility argmax 1"))
}

fn cli_determinism() -> Outcome {
    let ws = common::Workspace::with_sizes("cbf", 64, 3, 60, 30, 3);
    let run = |name: &str, jobs: &str| -> Vec<Vec<u8>> {
        let out = ws.path(name);
        let mut args = ws.explain_args(&out);
        args.extend(["--instances", "0..7", "--seed", "13", "--jobs", jobs].map(String::from));
        common::ok_owned(&args);
        let mut names: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with("front_"))
            .collect();
        names.sort();
        names.iter().map(|p| fs::read(p).unwrap()).collect()
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "4");
    ensure!(a.len() == 8, "expected 8 front files, got {}", a.len());
    ensure!(a == b, "two runs differ");
    ensure!(a == c, "--jobs 1 and --jobs 4 differ");
    Ok("8 front files byte-identical across runs and job counts".into())
}

/// Class 1 when at least `threshold` cells exceed 5.
struct CountAbove(usize);

impl Classifier for CountAbove {
    fn class_count(&self) -> usize {
        2
    }

    fn input_shape(&self) -> Option<(usize, usize)> {
        None
    }

    fn predict_proba(&self, batch: &[TimeSeriesInstance]) -> Result<Vec<Vec<f64>>> {
        Ok(batch
            .iter()
            .map(|x| {
                let n = x.values().iter().filter(|v| **v > 5.0).count();
                if n >= self.0 {
                    vec![0.2, 0.8]
                } else {
                    vec![0.8, 0.2]
                }
            })
            .collect())
    }
}

struct SquaredNorm;

impl OutlierScorer for SquaredNorm {
    fn reconstruction_error(&self, x: &TimeSeriesInstance) -> Result<f64> {
        Ok(x.values().iter().map(|v| v * v).sum())
    }

    fn e_max(&self) -> f64 {
        1.0
    }
}

fn reinit_escalation() -> Outcome {
    let length = 100;
    let mut rows: Vec<TimeSeriesInstance> = (0..4)
        .map(|i| TimeSeriesInstance::univariate(vec![0.01 * i as f64; length]).unwrap().with_label(0))
        .collect();
    rows.push(TimeSeriesInstance::univariate(vec![10.0; length]).unwrap().with_label(1));
    let train = LabeledDataset::new(rows, 2).unwrap();
    let clf = CountAbove(40);
    let x = TimeSeriesInstance::univariate(vec![0.0; length]).unwrap();
    let cfg = RunConfig {
        population_size: 40,
        reinit_generations: 50,
        init_percent: 20.0,
        init_increment: 20.0,
        seed: 3,
        ..RunConfig::default()
    };
    let front = run_multispace(&x, &train, &clf, &SquaredNorm, &cfg).unwrap();
    let schedule = front.activation_schedule();
    ensure!(schedule == vec![20.0, 40.0], "schedule {schedule:?}");
    let reinit = front.events.iter().find_map(|e| match e {
        RunEvent::Reinitialized {
            after_generations, ..
        } => Some(*after_generations),
        _ => None,
    });
    ensure!(reinit == Some(50), "reinit event {reinit:?}");
    ensure!(!front.is_empty(), "empty front");
    for m in &front.members {
        ensure!(m.objectives.valid && clf.predict_one(&m.counterfactual).unwrap() == 1, "invalid member");
    }
    Ok(format!("h 20 -> 40 after 50 generations, {} valid members", front.len()))
}

fn degenerate_schedule() -> Outcome {
    for (kind, channels) in [(SynthKind::SineSquare, 1), (SynthKind::Cbf, 3)] {
        let (train, test) = generate_split(kind, 64, channels, 60, 30, 9).unwrap();
        let clf = NearestCentroidClassifier::fit(&train, 1.0).unwrap();
        let scorer = LinearReconstructionScorer::fit(&train, 4).unwrap();
        let explainer = Explainer::new(&train, &clf, &scorer, NunFilter::Predicted).unwrap();
        let cfg = RunConfig {
            phase1_generations: 0,
            phase2_generations: 0,
            reinit_generations: 0,
            init_percent: 100.0,
            ..RunConfig::default()
        };
        for (i, x) in test.instances().iter().take(5).enumerate() {
            let x = x.clone().without_label();
            let (_, nun) = explainer.nun(&x, NunMode::AnyUnlike).unwrap();
            let front = explainer.explain(&x, Some(i), &cfg).unwrap();
            ensure!(front.len() == 1, "{kind:?} instance {i}: {} members", front.len());
            let m = &front.members[0];
            ensure!(m.counterfactual == nun.neighbor.clone().without_label(), "{kind:?} instance {i}: not the NUN");
            ensure!(metric_sparsity(&m.mask, channels).unwrap() == 1.0, "sparsity below 1");
            ensure!(metric_nos(&m.mask, channels).unwrap() == channels, "NoS != C");
        }
    }
    Ok("NUN returned with sparsity 1.0 and NoS = C".into())
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    })
}

fn main() {
    let (settings, validity) = match catch_unwind(run_synthetic) {
        Ok(r) => r,
        Err(_) => (Vec::new(), Err("panicked".into())),
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("perfect validity", validity),
        ("sparsity dominance over full swap", guarded(|| sparsity_dominance(&settings))),
        ("dominance sort oracle", guarded(sort_oracle)),
        ("mask algebra", guarded(mask_algebra)),
        ("penalty dominance", guarded(penalty_dominance)),
        ("objective spot values", guarded(spot_values)),
        ("cli determinism", guarded(cli_determinism)),
        ("reinitialization escalation", guarded(reinit_escalation)),
        ("degenerate schedule", guarded(degenerate_schedule)),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("[PASS] {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
