//! WebAssembly bindings for the browser demo.
//!
//! Every export takes and returns JSON strings so the page needs no glue
//! beyond `wasm-bindgen`'s generated module.

use serde::{Deserialize, Serialize};
use tscf_core::driver::Explainer;
use tscf_core::genetic::{mutate_compress, mutate_extend, mutate_prune, RngStream};
use tscf_core::models::{LinearReconstructionScorer, NearestCentroidClassifier};
use tscf_core::synth::{generate_split, SynthKind};
use tscf_core::{select_by_utility, ChangeMask, Classifier, FrontMember, NunFilter, RunConfig, UtilityWeights};
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainRequest {
    pub kind: SynthKind,
    pub length: usize,
    pub channels: usize,
    pub seed: u64,
    pub instance: usize,
    #[serde(default = "default_population")]
    pub population_size: usize,
    #[serde(default = "default_phase1")]
    pub phase1_generations: usize,
    #[serde(default = "default_phase2")]
    pub phase2_generations: usize,
}

fn default_population() -> usize {
    40
}

fn default_phase1() -> usize {
    30
}

fn default_phase2() -> usize {
    10
}

#[derive(Debug, Clone, Serialize)]
pub struct ExplainResponse {
    pub original: Vec<Vec<f64>>,
    pub nun: Vec<Vec<f64>>,
    pub predicted_class: usize,
    pub target_class: usize,
    pub members: Vec<MemberView>,
    pub selected: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemberView {
    pub mask: Vec<String>,
    pub counterfactual: Vec<Vec<f64>>,
    pub objectives: [f64; 4],
    pub predicted_class: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Selection {
    pub index: usize,
    pub utilities: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    Extend,
    Compress,
    Prune,
}

fn channels_of(x: &tscf_core::TimeSeriesInstance) -> Vec<Vec<f64>> {
    (0..x.channels()).map(|c| (0..x.length()).map(|t| x.get(t, c)).collect()).collect()
}

/// Generates a synthetic split, fits the models and explains one test instance.
pub fn explain(request: &ExplainRequest) -> Result<ExplainResponse, String> {
    let err = |e: tscf_core::Error| e.to_string();
    let (train, test) =
        generate_split(request.kind, request.length, request.channels, 40, 10, request.seed).map_err(err)?;
    let x = test
        .instances()
        .get(request.instance)
        .ok_or_else(|| format!("instance must be below {}", test.len()))?
        .clone()
        .without_label();
    let classifier = NearestCentroidClassifier::fit(&train, 1.0).map_err(err)?;
    let components = LinearReconstructionScorer::default_components(request.length, request.channels);
    let scorer = LinearReconstructionScorer::fit(&train, components).map_err(err)?;
    let explainer = Explainer::new(&train, &classifier, &scorer, NunFilter::Predicted).map_err(err)?;
    let cfg = RunConfig {
        population_size: request.population_size,
        phase1_generations: request.phase1_generations,
        phase2_generations: request.phase2_generations,
        reinit_generations: request.phase1_generations.min(20),
        seed: request.seed,
        ..RunConfig::default()
    };
    let (_, nun) = explainer.nun(&x, cfg.nun_mode).map_err(err)?;
    let front = explainer.explain(&x, Some(request.instance), &cfg).map_err(err)?;
    let (selected, _) = select_by_utility(&front.members, &UtilityWeights::default()).map_err(err)?;
    let members = front
        .members
        .iter()
        .map(|m| {
            Ok(MemberView {
                mask: m.mask.to_strings(),
                counterfactual: channels_of(&m.counterfactual),
                objectives: m.objectives.values(),
                predicted_class: classifier.predict_one(&m.counterfactual)?,
            })
        })
        .collect::<tscf_core::Result<Vec<_>>>()
        .map_err(err)?;
    Ok(ExplainResponse {
        original: channels_of(&x),
        nun: channels_of(&nun.neighbor),
        predicted_class: front.provenance.predicted_class,
        target_class: front.provenance.target_class,
        members,
        selected,
    })
}

/// Utility of every member and the index of the best one.
pub fn select(members: &[MemberView], weights: [f64; 4]) -> Result<Selection, String> {
    let w = UtilityWeights::new(weights[0], weights[1], weights[2], weights[3]).map_err(|e| e.to_string())?;
    let front: Vec<FrontMember> = members
        .iter()
        .map(|m| {
            let rows: Vec<&str> = m.mask.iter().map(String::as_str).collect();
            let mask = ChangeMask::independent_from_strs(&rows)?;
            let counterfactual = tscf_core::TimeSeriesInstance::from_channels(&m.counterfactual)?;
            let [o1, o2, o3, o4] = m.objectives;
            Ok(FrontMember {
                mask,
                counterfactual,
                objectives: tscf_core::ObjectiveVector {
                    o1,
                    o2,
                    o3,
                    o4,
                    valid: true,
                },
            })
        })
        .collect::<tscf_core::Result<_>>()
        .map_err(|e| e.to_string())?;
    let (index, _) = select_by_utility(&front, &w).map_err(|e| e.to_string())?;
    Ok(Selection {
        index,
        utilities: front.iter().map(|m| w.utility(&m.objectives)).collect(),
    })
}

/// Applies one mutation operator to a mask given as rows of `0`/`1`.
pub fn mutate(rows: &[String], op: Mutation, p: f64, seed: u64) -> Result<Vec<String>, String> {
    let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
    let mask = ChangeMask::independent_from_strs(&rows).map_err(|e| e.to_string())?;
    if !(0.0..=1.0).contains(&p) {
        return Err(format!("probability must be in [0, 1], got {p}"));
    }
    let mut rng = RngStream::new(seed);
    let out = match op {
        Mutation::Extend => mutate_extend(&mask, p, &mut rng),
        Mutation::Compress => mutate_compress(&mask, p, &mut rng),
        Mutation::Prune => mutate_prune(&mask, p, &mut rng),
    };
    Ok(out.to_strings())
}

fn js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

fn parse<T: for<'de> Deserialize<'de>>(json: &str) -> Result<T, JsValue> {
    serde_json::from_str(json).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = explain)]
pub fn explain_js(request: &str) -> Result<String, JsValue> {
    let request: ExplainRequest = parse(request)?;
    js(explain(&request))
}

#[wasm_bindgen(js_name = select)]
pub fn select_js(members: &str, weights: &str) -> Result<String, JsValue> {
    let members: Vec<MemberView> = parse(members)?;
    let weights: [f64; 4] = parse(weights)?;
    js(select(&members, weights))
}

#[wasm_bindgen(js_name = mutate)]
pub fn mutate_js(rows: &str, op: &str, p: f64, seed: u32) -> Result<String, JsValue> {
    let rows: Vec<String> = parse(rows)?;
    let op: Mutation = parse(&format!("\"{op}\""))?;
    js(mutate(&rows, op, p, seed as u64))
}
