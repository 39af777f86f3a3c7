//! Two-phase search: a common mask evolved with extension/compression (with
//! reinitialization at a higher activation percentage while nothing valid has
//! been found), then per-channel pruning of the broadcast masks, and finally
//! extraction of the valid non-dominated front.

use std::collections::HashSet;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genetic::{
    evaluate_population, fast_nondominated_sort, init_population, optimize_generation, MutationRates, Population,
    RngStream,
};
use crate::mask::{ChangeMask, MaskKind};
use crate::models::{Classifier, OutlierScorer};
use crate::neighbors::{NunFilter, NunIndex, NunMode, NunResult};
use crate::objectives::{ObjectiveConfig, ObjectiveContext, ObjectiveVector};
use crate::series::{LabeledDataset, TimeSeriesInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub population_size: usize,
    /// Generations of the first (common mask) phase.
    pub phase1_generations: usize,
    /// Generations of the pruning phase on independent masks.
    pub phase2_generations: usize,
    pub phase1_mask: MaskKind,
    pub phase1_rates: MutationRates,
    pub phase2_rates: MutationRates,
    /// Initial activation percentage.
    pub init_percent: f64,
    /// Added to the activation percentage on every reinitialization.
    pub init_increment: f64,
    /// Generations without any valid individual before reinitializing.
    pub reinit_generations: usize,
    pub gamma: f64,
    pub nu: f64,
    pub seed: u64,
    pub nun_mode: NunMode,
    pub nun_filter: NunFilter,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            phase1_generations: 75,
            phase2_generations: 25,
            phase1_mask: MaskKind::Common,
            phase1_rates: MutationRates::new(0.75, 0.75, 0.0),
            phase2_rates: MutationRates::new(0.0, 0.0, 0.75),
            init_percent: 20.0,
            init_increment: 20.0,
            reinit_generations: 50,
            gamma: 0.25,
            nu: 100.0,
            seed: 0,
            nun_mode: NunMode::AnyUnlike,
            nun_filter: NunFilter::Predicted,
        }
    }
}

const EC_PROBABILITIES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];
const PRUNE_PROBABILITIES: [f64; 5] = [0.05, 0.1, 0.2, 0.35, 0.5];
const FINAL_PRUNE_PROBABILITIES: [f64; 3] = [0.25, 0.5, 0.75];

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "population_size must be even and >= 2, got {}",
                self.population_size
            )));
        }
        if !(self.init_percent > 0.0 && self.init_percent <= 100.0) {
            return Err(Error::InvalidConfig(format!("init_percent must be in (0, 100], got {}", self.init_percent)));
        }
        if !(self.init_increment >= 0.0) {
            return Err(Error::InvalidConfig("init_increment must be >= 0".into()));
        }
        if self.reinit_generations > self.phase1_generations {
            return Err(Error::InvalidConfig(format!(
                "reinit_generations ({}) must not exceed phase1_generations ({})",
                self.reinit_generations, self.phase1_generations
            )));
        }
        self.phase1_rates.validate()?;
        self.phase2_rates.validate()?;
        self.objective_config().validate()
    }

    pub fn objective_config(&self) -> ObjectiveConfig {
        ObjectiveConfig {
            gamma: self.gamma,
            nu: self.nu,
        }
    }

    /// Named configurations of the mask/mutation ablation.
    ///
    /// * `multispace`: the default two-phase schedule.
    /// * `common-ec-P`, `independent-ec-P`: 100 generations, `p_ext = p_comp = P`,
    ///   no pruning; `P ∈ {0.1, 0.25, 0.5, 0.75, 0.9}`.
    /// * `common-prune-P`, `independent-prune-P`: 100 generations with
    ///   extension/compression at 0.75 (common) or 0.5 (independent) and
    ///   pruning `P ∈ {0.05, 0.1, 0.2, 0.35, 0.5}` in the same phase.
    /// * `common-final-P`, `independent-final-P`: 75 generations of
    ///   extension/compression then 25 pruning-only generations on independent
    ///   masks with `P ∈ {0.25, 0.5, 0.75}`.
    pub fn preset(name: &str) -> Option<RunConfig> {
        if name == "multispace" {
            return Some(RunConfig::default());
        }
        let (family, p) = name.rsplit_once('-')?;
        let p: f64 = p.parse().ok()?;
        let (kind, rest) = if let Some(rest) = family.strip_prefix("common-") {
            (MaskKind::Common, rest)
        } else {
            let rest = family.strip_prefix("independent-")?;
            (MaskKind::Independent, rest)
        };
        let ec = match kind {
            MaskKind::Common => 0.75,
            MaskKind::Independent => 0.5,
        };
        let base = RunConfig {
            phase1_mask: kind,
            ..RunConfig::default()
        };
        match rest {
            "ec" if EC_PROBABILITIES.contains(&p) => Some(RunConfig {
                phase1_generations: 100,
                phase2_generations: 0,
                phase1_rates: MutationRates::new(p, p, 0.0),
                ..base
            }),
            "prune" if PRUNE_PROBABILITIES.contains(&p) => Some(RunConfig {
                phase1_generations: 100,
                phase2_generations: 0,
                phase1_rates: MutationRates::new(ec, ec, p),
                ..base
            }),
            "final" if FINAL_PRUNE_PROBABILITIES.contains(&p) => Some(RunConfig {
                phase1_rates: MutationRates::new(ec, ec, 0.0),
                phase2_rates: MutationRates::new(0.0, 0.0, p),
                ..base
            }),
            _ => None,
        }
    }

    pub fn preset_names() -> Vec<String> {
        let mut names = vec!["multispace".to_string()];
        for kind in ["common", "independent"] {
            names.extend(EC_PROBABILITIES.iter().map(|p| format!("{kind}-ec-{p}")));
            names.extend(PRUNE_PROBABILITIES.iter().map(|p| format!("{kind}-prune-{p}")));
            names.extend(FINAL_PRUNE_PROBABILITIES.iter().map(|p| format!("{kind}-final-{p}")));
        }
        names
    }
}

/// Weights of the scalar utility used to pick one member of a front.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityWeights {
    pub adversarial: f64,
    pub sparsity: f64,
    pub subsequences: f64,
    pub plausibility: f64,
}

impl Default for UtilityWeights {
    fn default() -> Self {
        Self {
            adversarial: 0.1,
            sparsity: 0.3,
            subsequences: 0.4,
            plausibility: 0.2,
        }
    }
}

impl UtilityWeights {
    pub fn new(adversarial: f64, sparsity: f64, subsequences: f64, plausibility: f64) -> Result<Self> {
        let w = Self {
            adversarial,
            sparsity,
            subsequences,
            plausibility,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.as_array();
        if w.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidConfig(format!("utility weights must be >= 0, got {w:?}")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("utility weights must sum to 1, got {sum}")));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.adversarial, self.sparsity, self.subsequences, self.plausibility]
    }

    pub fn utility(&self, o: &ObjectiveVector) -> f64 {
        self.as_array().iter().zip(o.values()).map(|(w, v)| w * v).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontMember {
    /// Always in independent `L×C` form.
    pub mask: ChangeMask,
    pub counterfactual: TimeSeriesInstance,
    pub objectives: ObjectiveVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub instance_id: Option<usize>,
    pub seed: u64,
    pub predicted_class: usize,
    pub target_class: usize,
    pub nun_index: usize,
    pub nun_distance: f64,
    pub config: RunConfig,
}

/// Milestones of a run, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum RunEvent {
    Initialized { h_percent: f64 },
    Reinitialized { h_percent: f64, after_generations: usize },
    PhaseTransition { phase1_generations_run: usize, any_valid: bool },
    Finished { front_size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub members: Vec<FrontMember>,
    pub provenance: Provenance,
    pub events: Vec<RunEvent>,
}

impl ParetoFront {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Activation percentages used by the initial population and every
    /// reinitialization.
    pub fn activation_schedule(&self) -> Vec<f64> {
        self.events
            .iter()
            .filter_map(|e| match e {
                RunEvent::Initialized { h_percent } | RunEvent::Reinitialized { h_percent, .. } => Some(*h_percent),
                _ => None,
            })
            .collect()
    }
}

/// Everything a run produced, including the state at the phase boundary.
#[derive(Debug, Clone)]
pub struct RunDetail {
    pub front: ParetoFront,
    /// Valid non-dominated members at the end of phase 1 (broadcast masks).
    pub phase1_front: Vec<FrontMember>,
}

/// Reusable explanation context for one training split and pair of models.
pub struct Explainer<'a> {
    classifier: &'a dyn Classifier,
    scorer: &'a dyn OutlierScorer,
    index: NunIndex<'a>,
    filter: NunFilter,
}

impl<'a> Explainer<'a> {
    pub fn new(
        train: &'a LabeledDataset,
        classifier: &'a dyn Classifier,
        scorer: &'a dyn OutlierScorer,
        filter: NunFilter,
    ) -> Result<Self> {
        Ok(Self {
            classifier,
            scorer,
            index: NunIndex::new(train, classifier, filter)?,
            filter,
        })
    }

    pub fn classifier(&self) -> &'a dyn Classifier {
        self.classifier
    }

    pub fn scorer(&self) -> &'a dyn OutlierScorer {
        self.scorer
    }

    pub fn nun(&self, x: &TimeSeriesInstance, mode: NunMode) -> Result<(usize, NunResult)> {
        let predicted = self.classifier.predict_one(x)?;
        Ok((predicted, self.index.find(x, predicted, mode)?))
    }

    pub fn explain(&self, x: &TimeSeriesInstance, instance_id: Option<usize>, cfg: &RunConfig) -> Result<ParetoFront> {
        Ok(self.explain_detailed(x, instance_id, cfg)?.front)
    }

    pub fn explain_detailed(
        &self,
        x: &TimeSeriesInstance,
        instance_id: Option<usize>,
        cfg: &RunConfig,
    ) -> Result<RunDetail> {
        cfg.validate()?;
        if cfg.nun_filter != self.filter {
            return Err(Error::InvalidConfig(format!(
                "explainer was built with {:?} NUN filtering but the config asks for {:?}",
                self.filter, cfg.nun_filter
            )));
        }
        let (predicted, nun) = self.nun(x, cfg.nun_mode)?;
        let ctx = ObjectiveContext::new(
            x,
            &nun.neighbor,
            nun.target_class,
            self.classifier,
            self.scorer,
            cfg.objective_config(),
        )?;
        let (length, channels) = x.shape();
        let mut rng = RngStream::new(cfg.seed);
        let mut events = Vec::new();

        let mut h = cfg.init_percent;
        let mut pop = self.initial_population(&ctx, cfg, h, &mut rng)?;
        events.push(RunEvent::Initialized { h_percent: h });
        info!("instance {instance_id:?}: predicted {predicted}, target {}, h={h}%", nun.target_class);

        let mut g = 0;
        let mut total = 0;
        while g < cfg.phase1_generations {
            let (next, valid) = optimize_generation(&pop, &ctx, &cfg.phase1_rates, &mut rng)?;
            pop = next;
            g += 1;
            total += 1;
            if !valid && g >= cfg.reinit_generations && h < 100.0 {
                h = (h + cfg.init_increment).min(100.0);
                info!("no valid counterfactual after {g} generations; reinitializing at h={h}%");
                events.push(RunEvent::Reinitialized {
                    h_percent: h,
                    after_generations: g,
                });
                pop = self.initial_population(&ctx, cfg, h, &mut rng)?;
                g = 0;
            }
        }
        events.push(RunEvent::PhaseTransition {
            phase1_generations_run: total,
            any_valid: pop.any_valid(),
        });
        for ind in pop.individuals.iter_mut() {
            ind.mask = ind.mask.broadcast(channels)?;
        }
        let phase1_front = extract_front(&pop, &ctx)?;

        for gen in 0..cfg.phase2_generations {
            let (next, valid) = optimize_generation(&pop, &ctx, &cfg.phase2_rates, &mut rng)?;
            debug!("phase 2 generation {gen}: any_valid={valid}");
            pop = next;
        }

        let members = extract_front(&pop, &ctx)?;
        events.push(RunEvent::Finished {
            front_size: members.len(),
        });
        if members.is_empty() {
            return Err(Error::NoValidSolution);
        }
        debug_assert!(members.iter().all(|m| m.mask.length() == length));
        Ok(RunDetail {
            front: ParetoFront {
                members,
                provenance: Provenance {
                    instance_id,
                    seed: cfg.seed,
                    predicted_class: predicted,
                    target_class: nun.target_class,
                    nun_index: nun.index,
                    nun_distance: nun.distance,
                    config: cfg.clone(),
                },
                events,
            },
            phase1_front,
        })
    }

    fn initial_population(
        &self,
        ctx: &ObjectiveContext<'_>,
        cfg: &RunConfig,
        h: f64,
        rng: &mut RngStream,
    ) -> Result<Population> {
        let (length, channels) = ctx.x.shape();
        let mut pop = init_population(cfg.population_size, length, channels, cfg.phase1_mask, h, rng)?;
        evaluate_population(&mut pop, ctx)?;
        Ok(pop)
    }
}

/// Valid members of the first non-dominated front, de-duplicated by mask.
fn extract_front(pop: &Population, ctx: &ObjectiveContext<'_>) -> Result<Vec<FrontMember>> {
    let values: Vec<[f64; 4]> = pop
        .individuals
        .iter()
        .map(|i| i.objectives.map(|o| o.values()).ok_or(Error::MissingRanks))
        .collect::<Result<_>>()?;
    let fronts = fast_nondominated_sort(&values);
    let channels = ctx.x.channels();
    let mut seen = HashSet::new();
    let mut members = Vec::new();
    for &i in fronts.first().map(Vec::as_slice).unwrap_or(&[]) {
        let ind = &pop.individuals[i];
        let objectives = ind.objectives.expect("evaluated");
        if !objectives.valid {
            continue;
        }
        let mask = ind.mask.broadcast(channels)?;
        if !seen.insert(mask.clone()) {
            continue;
        }
        members.push(FrontMember {
            counterfactual: ctx.counterfactual(&mask)?,
            mask,
            objectives,
        });
    }
    Ok(members)
}

/// Runs the full search for `x` against `train`.
pub fn run_multispace(
    x: &TimeSeriesInstance,
    train: &LabeledDataset,
    classifier: &dyn Classifier,
    scorer: &dyn OutlierScorer,
    cfg: &RunConfig,
) -> Result<ParetoFront> {
    Explainer::new(train, classifier, scorer, cfg.nun_filter)?.explain(x, None, cfg)
}

/// Member maximizing the weighted sum of objectives; ties go to the lower index.
pub fn select_by_utility<'f>(front: &'f [FrontMember], weights: &UtilityWeights) -> Result<(usize, &'f FrontMember)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, m) in front.iter().enumerate() {
        let u = weights.utility(&m.objectives);
        if best.is_none_or(|(_, bu)| u > bu) {
            best = Some((i, u));
        }
    }
    let (i, _) = best.ok_or(Error::EmptyFront)?;
    Ok((i, &front[i]))
}
