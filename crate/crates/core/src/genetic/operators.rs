//! Initialization, subsequence mutations, crossover and selection.

use super::{Individual, Population, RngStream};
use crate::error::{Error, Result};
use crate::mask::{ChangeMask, MaskKind};

/// Random masks with exactly `round(h_percent/100 · positions)` active cells.
///
/// Each individual draws one uniform score per position (in flat
/// channel-major order) and activates the top-scoring positions.
pub fn init_population(
    size: usize,
    length: usize,
    channels: usize,
    kind: MaskKind,
    h_percent: f64,
    rng: &mut RngStream,
) -> Result<Population> {
    if !(h_percent > 0.0 && h_percent <= 100.0) {
        return Err(Error::InvalidConfig(format!("h must be in (0, 100], got {h_percent}")));
    }
    if size < 2 || !size.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!("population size must be even and >= 2, got {size}")));
    }
    let template = ChangeMask::zeros(kind, length, channels);
    let positions = template.positions();
    let active = ((h_percent / 100.0) * positions as f64).round() as usize;
    let individuals = (0..size)
        .map(|_| {
            let scores: Vec<f64> = (0..positions).map(|_| rng.uniform()).collect();
            let mut order: Vec<usize> = (0..positions).collect();
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
            let mut mask = template.clone();
            for &p in &order[..active] {
                mask.bits_mut().set(p, true);
            }
            Individual::new(mask)
        })
        .collect();
    Ok(Population::new(individuals))
}

/// Grows each run by one cell on either side with probability `p_ext`.
pub fn mutate_extend(mask: &ChangeMask, p_ext: f64, rng: &mut RngStream) -> ChangeMask {
    let mut out = mask.clone();
    for s in mask.decompose() {
        if s.start > 0 && rng.bernoulli(p_ext) && !mask.get(s.start - 1, s.channel) {
            out.set(s.start - 1, s.channel, true);
        }
        if s.end() < mask.length() && rng.bernoulli(p_ext) && !mask.get(s.end(), s.channel) {
            out.set(s.end(), s.channel, true);
        }
    }
    out
}

/// Clears each run's first and last cell independently with probability
/// `p_comp`; a single-cell run gets one draw.
pub fn mutate_compress(mask: &ChangeMask, p_comp: f64, rng: &mut RngStream) -> ChangeMask {
    let mut out = mask.clone();
    for s in mask.decompose() {
        if s.length == 1 {
            if rng.bernoulli(p_comp) {
                out.set(s.start, s.channel, false);
            }
            continue;
        }
        if rng.bernoulli(p_comp) {
            out.set(s.start, s.channel, false);
        }
        if rng.bernoulli(p_comp) {
            out.set(s.last(), s.channel, false);
        }
    }
    out
}

/// Removes each whole run with probability `p_prune`.
pub fn mutate_prune(mask: &ChangeMask, p_prune: f64, rng: &mut RngStream) -> ChangeMask {
    let mut out = mask.clone();
    for s in mask.decompose() {
        if rng.bernoulli(p_prune) {
            for t in s.start..s.end() {
                out.set(t, s.channel, false);
            }
        }
    }
    out
}

/// Swaps suffixes at a cut drawn uniformly from `1..positions`.
pub fn single_point_crossover(
    a: &ChangeMask,
    b: &ChangeMask,
    rng: &mut RngStream,
) -> Result<(ChangeMask, ChangeMask)> {
    if !a.same_layout(b) {
        return Err(Error::dims(format!("{a:?}"), format!("{b:?}")));
    }
    let positions = a.positions();
    if positions < 2 {
        return Ok((a.clone(), b.clone()));
    }
    let cut = 1 + rng.below(positions - 1);
    Ok(crossover_at(a, b, cut))
}

pub(crate) fn crossover_at(a: &ChangeMask, b: &ChangeMask, cut: usize) -> (ChangeMask, ChangeMask) {
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    c1.bits_mut()[cut..].copy_from_bitslice(&b.bits()[cut..]);
    c2.bits_mut()[cut..].copy_from_bitslice(&a.bits()[cut..]);
    (c1, c2)
}

/// Crowded comparison: lower rank wins, then larger crowding; on a full tie
/// the first contestant wins.
pub fn crowded_winner(pop: &Population, first: usize, second: usize) -> Result<usize> {
    let key = |i: usize| {
        let ind = &pop.individuals[i];
        match (ind.rank, ind.crowding) {
            (Some(r), Some(c)) => Ok((r, c)),
            _ => Err(Error::MissingRanks),
        }
    };
    let (r1, c1) = key(first)?;
    let (r2, c2) = key(second)?;
    let second_wins = r2 < r1 || (r2 == r1 && c2 > c1);
    Ok(if second_wins { second } else { first })
}

/// `N` binary tournaments between two distinct, uniformly drawn individuals.
pub fn tournament_select(pop: &Population, rng: &mut RngStream) -> Result<Vec<usize>> {
    let n = pop.len();
    if n < 2 {
        return Err(Error::InvalidConfig("tournament needs at least two individuals".into()));
    }
    (0..n)
        .map(|_| {
            let first = rng.below(n);
            let mut second = rng.below(n - 1);
            if second >= first {
                second += 1;
            }
            crowded_winner(pop, first, second)
        })
        .collect()
}
