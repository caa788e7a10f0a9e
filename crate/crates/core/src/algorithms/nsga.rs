//! NSGA-II building blocks and the morphological diversity objectives.

use std::cmp::Ordering;

use super::Individual;
use crate::morphology::{Descriptor, MAX_MODULES};

/// `p` dominates `q` when it is no worse on every axis and better on one.
pub fn dominates(p: &[f64], q: &[f64], maximize: &[bool]) -> bool {
    let mut better = false;
    for ((&a, &b), &max) in p.iter().zip(q).zip(maximize) {
        let (a, b) = if max { (a, b) } else { (b, a) };
        if a < b {
            return false;
        }
        if a > b {
            better = true;
        }
    }
    better
}

/// Pareto rank of every point (0 = non-dominated), by fast non-dominated
/// sorting.
pub fn nondominated_sort(points: &[Vec<f64>], maximize: &[bool]) -> Vec<usize> {
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&points[i], &points[j], maximize) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(&points[j], &points[i], maximize) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut rank = vec![usize::MAX; n];
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    let mut level = 0;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            rank[i] = level;
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        current = next;
        level += 1;
    }
    rank
}

/// Group indices by rank, fronts in rank order and members in index order.
pub fn fronts(ranks: &[usize]) -> Vec<Vec<usize>> {
    let depth = ranks.iter().max().map_or(0, |&r| r + 1);
    let mut out = vec![Vec::new(); depth];
    for (i, &r) in ranks.iter().enumerate() {
        out[r].push(i);
    }
    out
}

/// Crowding distance within one front. Extremes on any objective get
/// infinity; fronts of one or two points are all infinite.
pub fn crowding_distance(front: &[Vec<f64>]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let dims = front[0].len();
    let mut dist = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    #[allow(clippy::needless_range_loop)]
    for k in 0..dims {
        order.sort_by(|&a, &b| front[a][k].total_cmp(&front[b][k]));
        let lo = front[order[0]][k];
        let hi = front[order[n - 1]][k];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let gap = front[order[w + 1]][k] - front[order[w - 1]][k];
            dist[order[w]] += gap / range;
        }
    }
    dist
}

/// `1 - e^{-k}` for integer `k` in `0..=MAX_MODULES`.
fn saturating_gap(k: usize) -> f64 {
    thread_local! {
        static TABLE: [f64; MAX_MODULES + 1] =
            std::array::from_fn(|k| 1.0 - (-(k as f64)).exp());
    }
    TABLE.with(|t| t[k])
}

/// Componentwise morphological distance `(1 - e^{-|dm|}, 1 - e^{-|dj|})`.
pub fn morph_distance(x: Descriptor, y: Descriptor) -> [f64; 2] {
    [saturating_gap(x.m.abs_diff(y.m)), saturating_gap(x.j.abs_diff(y.j))]
}

/// Mean distance from each descriptor to every member of the set (itself
/// included).
pub fn diversity(descriptors: &[Descriptor]) -> Vec<[f64; 2]> {
    let n = descriptors.len() as f64;
    descriptors
        .iter()
        .map(|&x| {
            let sum = descriptors.iter().fold([0.0, 0.0], |acc, &y| {
                let d = morph_distance(x, y);
                [acc[0] + d[0], acc[1] + d[1]]
            });
            [sum[0] / n, sum[1] / n]
        })
        .collect()
}

/// `(fitness, diversity_m, diversity_j)` for every individual, all maximized.
pub fn mofd_objectives(pop: &[Individual]) -> Vec<Vec<f64>> {
    let descs: Vec<Descriptor> = pop.iter().map(|i| i.descriptor).collect();
    pop.iter()
        .zip(diversity(&descs))
        .map(|(ind, [dm, dj])| vec![ind.fitness, dm, dj])
        .collect()
}

pub const MAXIMIZE_ALL: [bool; 3] = [true, true, true];

/// Pareto rank and crowding distance of every member.
pub fn rank_and_crowding(pop: &[Individual]) -> (Vec<usize>, Vec<f64>) {
    let objs = mofd_objectives(pop);
    let ranks = nondominated_sort(&objs, &MAXIMIZE_ALL);
    let mut crowd = vec![0.0; pop.len()];
    for front in fronts(&ranks) {
        let pts: Vec<Vec<f64>> = front.iter().map(|&i| objs[i].clone()).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&pts)) {
            crowd[i] = d;
        }
    }
    (ranks, crowd)
}

/// Crowded comparison: lower rank first, then larger crowding distance.
pub fn crowded_cmp(rank_a: usize, crowd_a: f64, rank_b: usize, crowd_b: f64) -> Ordering {
    rank_a
        .cmp(&rank_b)
        .then_with(|| crowd_b.total_cmp(&crowd_a))
}

/// NSGA-II environmental selection on the union of parents and children.
/// Objectives are recomputed on the union; whole fronts are kept in rank
/// order and the overflowing front is cut by descending crowding distance.
pub fn mofd_survivors(union: Vec<Individual>, size: usize) -> Vec<Individual> {
    let (ranks, crowd) = rank_and_crowding(&union);
    let mut keep: Vec<usize> = Vec::with_capacity(size);
    for mut front in fronts(&ranks) {
        if keep.len() + front.len() <= size {
            keep.extend(front);
        } else {
            front.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]));
            keep.extend(front.into_iter().take(size - keep.len()));
        }
        if keep.len() == size {
            break;
        }
    }
    let mut slots: Vec<Option<Individual>> = union.into_iter().map(Some).collect();
    keep.into_iter()
        .map(|i| slots[i].take().expect("each index kept once"))
        .collect()
}
