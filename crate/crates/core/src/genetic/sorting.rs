//! Fast non-dominated sorting and crowding distance (Deb et al., 2002).
//! All objectives are maximized.

/// `a` dominates `b`: `a ≥ b` in every objective and `>` in at least one.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

/// Partitions indices into successive non-dominated fronts. Each front lists
/// its indices in ascending order.
pub fn fast_nondominated_sort<V: AsRef<[f64]>>(objectives: &[V]) -> Vec<Vec<usize>> {
    let n = objectives.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for p in 0..n {
        for q in (p + 1)..n {
            let (a, b) = (objectives[p].as_ref(), objectives[q].as_ref());
            if dominates(a, b) {
                dominated_by_me[p].push(q);
                domination_count[q] += 1;
            } else if dominates(b, a) {
                dominated_by_me[q].push(p);
                domination_count[p] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &p in &current {
            for &q in &dominated_by_me[p] {
                domination_count[q] -= 1;
                if domination_count[q] == 0 {
                    next.push(q);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Crowding distance of each member of one front.
///
/// Per objective the members are sorted (stably, so equal values keep their
/// input order); the two extremes get `∞` and interior members accumulate
/// `(next − prev) / (max − min)`. Objectives with zero range add nothing.
pub fn crowding_distance<V: AsRef<[f64]>>(front: &[V]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = front[0].as_ref().len();
    let mut distance = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..m {
        let value = |i: usize| front[i].as_ref()[k];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
        let (lo, hi) = (value(order[0]), value(order[n - 1]));
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let i = order[w];
            if distance[i].is_finite() {
                distance[i] += (value(order[w + 1]) - value(order[w - 1])) / range;
            }
        }
    }
    distance
}
