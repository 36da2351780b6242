//! Slow, direct reference implementations for the test suites.
//!
//! Nothing here shares code paths with `rankstab-core` beyond the data
//! types: overlaps are recounted by linear search, series are summed term
//! by term, and thresholds are compared in plain floating point.

use std::hash::Hash;

use rankstab_core::{Ranking, RequestBatch};

/// How agreement is continued past the observed depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// Agreement is zero beyond the longer list.
    Zero,
    /// The shorter list's unseen items agree at its final observed rate,
    /// and agreement beyond the longer list stays at its last estimate.
    Constant,
}

/// Series terms are summed until `p^d` drops below this.
pub const SERIES_CUTOFF: f64 = 1e-12;

fn overlap<I: PartialEq>(a: &[I], b: &[I], d: usize) -> usize {
    let a = &a[..d.min(a.len())];
    let b = &b[..d.min(b.len())];
    a.iter().filter(|x| b.contains(x)).count()
}

/// `(1 - p) * sum_d p^(d-1) * A_d`, evaluated one depth at a time.
pub fn rbo_series_oracle<I: Eq + Hash>(a: &Ranking<I>, b: &Ranking<I>, p: f64, tail: Tail) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    let (short, long) = if a.len() <= b.len() {
        (a.items(), b.items())
    } else {
        (b.items(), a.items())
    };
    let (s, l) = (short.len(), long.len());
    if l == 0 {
        return match tail {
            Tail::Zero => 0.0,
            Tail::Constant => 1.0,
        };
    }
    if s == 0 && tail == Tail::Constant {
        return 0.0;
    }

    // Agreement at each observed depth under the chosen tail assumption.
    let x_s = if s > 0 {
        overlap(short, long, s) as f64
    } else {
        0.0
    };
    let observed: Vec<f64> = (1..=l)
        .map(|d| {
            let x_d = overlap(short, long, d) as f64;
            match tail {
                Tail::Zero => x_d / d as f64,
                Tail::Constant if d <= s => x_d / d as f64,
                Tail::Constant => (x_d + (d - s) as f64 * x_s / s as f64) / d as f64,
            }
        })
        .collect();
    let agreement = |d: usize| -> f64 {
        match tail {
            _ if d <= l => observed[d - 1],
            Tail::Zero => 0.0,
            Tail::Constant => observed[l - 1],
        }
    };

    let mut total = 0.0;
    let mut d = 1usize;
    loop {
        let p_pow = p.powi(d as i32 - 1);
        if p_pow < SERIES_CUTOFF {
            break;
        }
        total += (1.0 - p) * p_pow * agreement(d);
        d += 1;
    }
    total
}

/// Largest similarity of any completion of the two prefixes, found by
/// enumerating every way to fill the unseen ranks.
///
/// Only practical for lists of length three or less.
pub fn rbo_upper_oracle(a: &Ranking<String>, b: &Ranking<String>, p: f64) -> f64 {
    let depth = a.len() + b.len();
    if depth == 0 {
        return 1.0;
    }
    let fresh: Vec<String> = (0..depth).map(|i| format!("#fresh{i}")).collect();
    let mut pool: Vec<String> = a.iter().chain(b.iter()).cloned().collect();
    pool.sort();
    pool.dedup();
    pool.extend(fresh);

    let mut best = f64::NEG_INFINITY;
    for ext_a in completions(a.items(), &pool, depth) {
        for ext_b in completions(b.items(), &pool, depth) {
            let mut partial = 0.0;
            for d in 1..=depth {
                partial +=
                    (1.0 - p) * p.powi(d as i32 - 1) * overlap(&ext_a, &ext_b, d) as f64 / d as f64;
            }
            best = best.max(partial + p.powi(depth as i32));
        }
    }
    best
}

fn completions(prefix: &[String], pool: &[String], depth: usize) -> Vec<Vec<String>> {
    let mut out = vec![prefix.to_vec()];
    for _ in prefix.len()..depth {
        let mut next = Vec::new();
        for partial in &out {
            for item in pool {
                if !partial.contains(item) {
                    let mut grown = partial.clone();
                    grown.push(item.clone());
                    next.push(grown);
                }
            }
        }
        out = next;
    }
    out
}

/// Share of the total weight on ranks `1..=d`, summing each rank's weight
/// `sum_{k >= i} (1 - p) p^(k-1) / k` directly.
pub fn prefix_weight_oracle(p: f64, d: usize) -> f64 {
    let mut total = 0.0;
    for i in 1..=d {
        let mut k = i;
        loop {
            let term = (1.0 - p) * p.powi(k as i32 - 1) / k as f64;
            if term < 1e-18 {
                break;
            }
            total += term;
            k += 1;
        }
    }
    total
}

/// Aggregated ranking by plain recounting: every URL is looked up in every
/// list by linear search.
pub fn aggregate_oracle(batch: &RequestBatch, threshold: f64) -> Ranking {
    let lists = batch.lists();
    let total = lists.len() as f64;

    let mut urls: Vec<&String> = Vec::new();
    for list in lists {
        for url in list.ranked_urls.iter() {
            if !urls.contains(&url) {
                urls.push(url);
            }
        }
    }

    let mut kept: Vec<(f64, &String)> = Vec::new();
    for url in urls {
        let mut present = 0usize;
        let mut rank_sum = 0usize;
        for list in lists {
            if let Some(pos) = list.ranked_urls.iter().position(|u| u == url) {
                present += 1;
                rank_sum += pos + 1;
            }
        }
        if present as f64 / total > threshold {
            kept.push((rank_sum as f64 / present as f64, url));
        }
    }

    // Selection sort on (mean rank, url).
    let mut ordered = Vec::with_capacity(kept.len());
    while !kept.is_empty() {
        let mut best = 0;
        for i in 1..kept.len() {
            let (m, u) = kept[i];
            let (bm, bu) = kept[best];
            if m < bm || (m == bm && u < bu) {
                best = i;
            }
        }
        ordered.push(kept.remove(best).1.clone());
    }
    Ranking::new(ordered).expect("distinct urls")
}

/// Trailing mean over up to `window` values ending at each index.
pub fn moving_average_oracle(values: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1);
    (0..values.len())
        .map(|i| {
            let start = (i + 1).saturating_sub(window);
            let slice = &values[start..=i];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}
