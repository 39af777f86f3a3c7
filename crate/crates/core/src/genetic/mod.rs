//! NSGA-II over change masks.

mod operators;
mod rng;
mod sorting;

pub use operators::{
    crowded_winner, init_population, mutate_compress, mutate_extend, mutate_prune, single_point_crossover,
    tournament_select,
};
pub use rng::RngStream;
pub use sorting::{crowding_distance, dominates, fast_nondominated_sort};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::ChangeMask;
use crate::objectives::{ObjectiveContext, ObjectiveVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub mask: ChangeMask,
    pub objectives: Option<ObjectiveVector>,
    pub rank: Option<usize>,
    pub crowding: Option<f64>,
}

impl Individual {
    pub fn new(mask: ChangeMask) -> Self {
        Self {
            mask,
            objectives: None,
            rank: None,
            crowding: None,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.objectives.is_some_and(|o| o.valid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub individuals: Vec<Individual>,
    pub generation: usize,
}

impl Population {
    pub fn new(individuals: Vec<Individual>) -> Self {
        Self {
            individuals,
            generation: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn any_valid(&self) -> bool {
        self.individuals.iter().any(Individual::is_valid)
    }

    fn objective_values(&self) -> Result<Vec<[f64; 4]>> {
        self.individuals
            .iter()
            .map(|i| i.objectives.map(|o| o.values()).ok_or(Error::MissingRanks))
            .collect()
    }
}

/// Extension, compression and pruning probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationRates {
    pub p_ext: f64,
    pub p_comp: f64,
    pub p_prune: f64,
}

impl MutationRates {
    pub fn new(p_ext: f64, p_comp: f64, p_prune: f64) -> Self {
        Self { p_ext, p_comp, p_prune }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_ext", self.p_ext), ("p_comp", self.p_comp), ("p_prune", self.p_prune)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

/// Scores unevaluated individuals, then assigns ranks and crowding.
pub fn evaluate_population(pop: &mut Population, ctx: &ObjectiveContext<'_>) -> Result<()> {
    let pending: Vec<usize> = (0..pop.len()).filter(|&i| pop.individuals[i].objectives.is_none()).collect();
    let masks: Vec<ChangeMask> = pending.iter().map(|&i| pop.individuals[i].mask.clone()).collect();
    let scores = ctx.evaluate_batch(&masks)?;
    for (i, o) in pending.into_iter().zip(scores) {
        pop.individuals[i].objectives = Some(o);
    }
    rank_population(pop)?;
    Ok(())
}

/// Fills `rank` and `crowding` from the current objectives; returns the fronts.
pub fn rank_population(pop: &mut Population) -> Result<Vec<Vec<usize>>> {
    let values = pop.objective_values()?;
    let fronts = fast_nondominated_sort(&values);
    for (rank, front) in fronts.iter().enumerate() {
        let members: Vec<[f64; 4]> = front.iter().map(|&i| values[i]).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&members)) {
            pop.individuals[i].rank = Some(rank);
            pop.individuals[i].crowding = Some(d);
        }
    }
    Ok(fronts)
}

/// Selection, crossover and the three mutations, without evaluation.
pub fn make_offspring(pop: &Population, rates: &MutationRates, rng: &mut RngStream) -> Result<Vec<ChangeMask>> {
    let parents = tournament_select(pop, rng)?;
    let mut offspring = Vec::with_capacity(parents.len());
    for pair in parents.chunks(2) {
        let a = &pop.individuals[pair[0]].mask;
        let b = &pop.individuals[pair[pair.len() - 1]].mask;
        let (c1, c2) = single_point_crossover(a, b, rng)?;
        for child in [c1, c2] {
            let child = mutate_extend(&child, rates.p_ext, rng);
            let child = mutate_compress(&child, rates.p_comp, rng);
            let child = mutate_prune(&child, rates.p_prune, rng);
            offspring.push(child);
        }
    }
    offspring.truncate(pop.len());
    Ok(offspring)
}

/// Picks `n` survivors from ranked fronts: whole fronts first, then the last
/// admitted front by descending crowding (ties to the lower index).
pub fn crowded_truncation(fronts: &[Vec<usize>], crowding: &[f64], n: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(n);
    for front in fronts {
        if chosen.len() + front.len() <= n {
            chosen.extend_from_slice(front);
            continue;
        }
        let mut rest = front.clone();
        rest.sort_by(|&a, &b| crowding[b].total_cmp(&crowding[a]).then(a.cmp(&b)));
        chosen.extend_from_slice(&rest[..n - chosen.len()]);
        break;
    }
    chosen
}

/// One NSGA-II generation: variation, evaluation of the offspring, elitist
/// merge of parents and offspring and crowded truncation back to `N`.
///
/// Returns the new population and whether it holds any valid individual.
pub fn optimize_generation(
    pop: &Population,
    ctx: &ObjectiveContext<'_>,
    rates: &MutationRates,
    rng: &mut RngStream,
) -> Result<(Population, bool)> {
    let n = pop.len();
    let offspring = make_offspring(pop, rates, rng)?;
    let scores = ctx.evaluate_batch(&offspring)?;

    let mut merged: Vec<Individual> = pop.individuals.clone();
    merged.extend(offspring.into_iter().zip(scores).map(|(mask, o)| {
        let mut ind = Individual::new(mask);
        ind.objectives = Some(o);
        ind
    }));
    let mut merged = Population {
        individuals: merged,
        generation: pop.generation,
    };
    let fronts = rank_population(&mut merged)?;
    let crowding: Vec<f64> = merged.individuals.iter().map(|i| i.crowding.unwrap_or(0.0)).collect();
    let survivors = crowded_truncation(&fronts, &crowding, n);

    let mut slots: Vec<Option<Individual>> = merged.individuals.into_iter().map(Some).collect();
    let individuals: Vec<Individual> = survivors
        .into_iter()
        .map(|i| slots[i].take().expect("survivor chosen once"))
        .collect();
    let next = Population {
        individuals,
        generation: pop.generation + 1,
    };
    let any_valid = next.any_valid();
    Ok((next, any_valid))
}
