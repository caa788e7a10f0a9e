//! Rank tests, multiple-comparison correction and small summary helpers.

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

/// Exact null distribution is used when the smaller sample has at most this
/// many values and there are no ties.
pub const EXACT_MAX_SAMPLE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

/// Mid-ranks (1-based) of the pooled sample plus the tie-group sizes.
fn pooled_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = mid;
        }
        if j > i {
            ties.push(j - i + 1);
        }
        i = j + 1;
    }
    (ranks, ties)
}

/// Counts of every U value `0..=na*nb` under the null: the coefficients of
/// the Gaussian binomial `[na+nb choose na]_q`. `None` on overflow.
fn u_null_counts(na: usize, nb: usize) -> Option<Vec<i128>> {
    let (k, rest) = if na <= nb { (na, nb) } else { (nb, na) };
    let mut poly = vec![1i128];
    for i in 1..=k {
        // times (1 - q^(rest+i))
        let shift = rest + i;
        let mut next = vec![0i128; poly.len() + shift];
        for (d, &c) in poly.iter().enumerate() {
            next[d] = next[d].checked_add(c)?;
            next[d + shift] = next[d + shift].checked_sub(c)?;
        }
        // divided by (1 - q^i)
        for d in i..next.len() {
            next[d] = next[d].checked_add(next[d - i])?;
        }
        next.truncate(i * rest + 1);
        poly = next;
    }
    Some(poly)
}

/// Two-sided Mann-Whitney U test of `a` against `b`.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> MannWhitney {
    assert!(!a.is_empty() && !b.is_empty(), "both samples need values");
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = pooled_ranks(&pooled);
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let u = rank_sum_a - (na * (na + 1)) as f64 / 2.0;

    if ties.is_empty() && na.min(nb) <= EXACT_MAX_SAMPLE {
        if let Some(counts) = u_null_counts(na, nb) {
            let u_int = u.round() as usize;
            let total: i128 = counts.iter().sum();
            let lower: i128 = counts[..=u_int].iter().sum();
            let upper: i128 = counts[u_int..].iter().sum();
            let p = (2.0 * lower.min(upper) as f64 / total as f64).min(1.0);
            return MannWhitney { u, p, exact: true };
        }
    }

    let n = (na + nb) as f64;
    let mean = (na * nb) as f64 / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - tie_term);
    let p = if var <= 0.0 {
        1.0
    } else {
        // continuity-corrected
        let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let std = Normal::standard();
        (2.0 * std.sf(z)).min(1.0)
    };
    MannWhitney { u, p, exact: false }
}

/// Holm step-down adjustment, returned in input order.
pub fn holm_correct(ps: &[f64]) -> Vec<f64> {
    let n = ps.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ps[a].total_cmp(&ps[b]));
    let mut out = vec![0.0; n];
    let mut running = 0.0f64;
    for (i, &k) in order.iter().enumerate() {
        running = running.max(ps[k] * (n - i) as f64);
        out[k] = running.min(1.0);
    }
    out
}

pub fn median(values: &[f64]) -> f64 {
    percentile(values, 50.0)
}

/// Linear-interpolated percentile (`q` in `[0, 100]`).
pub fn percentile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Median with a percentile-bootstrap 95% band.
pub fn bootstrap_median_band<R: Rng + ?Sized>(values: &[f64], resamples: usize, rng: &mut R) -> (f64, f64, f64) {
    let med = median(values);
    if values.len() < 2 {
        return (med, med, med);
    }
    let stats: Vec<f64> = (0..resamples)
        .map(|_| {
            let s: Vec<f64> = (0..values.len())
                .map(|_| values[rng.random_range(0..values.len())])
                .collect();
            median(&s)
        })
        .collect();
    (med, percentile(&stats, 2.5), percentile(&stats, 97.5))
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}
