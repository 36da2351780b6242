//! Rank-biased overlap for indefinite, possibly non-conjoint rankings.
//!
//! Agreement at depth `d` is `A_d = X_d / d`, where `X_d` is the size of the
//! intersection of the two depth-`d` prefixes. The statistic weights each
//! depth by `(1 - p) * p^(d - 1)`, so the weights sum to one over an
//! unbounded ranking. Only a finite prefix is ever observed, which gives
//! three numbers:
//!
//! * `min`: the weighted sum over the observed depths, counting nothing for
//!   the unseen tail.
//! * `res`: the largest amount the unseen tail (and the unseen items of the
//!   shorter list) could still add on top of `min`.
//! * `ext`: a point estimate that carries the observed agreement forward.
//!   For lists of unequal length the shorter list's unseen items are assumed
//!   to agree at the rate observed at its final depth.

use std::collections::HashSet;
use std::fmt;
use std::hash::Hash;

use thiserror::Error;

use crate::scalar::Scalar;

/// Default persistence: about 93% of the weight on the first ten ranks.
pub const DEFAULT_PERSISTENCE: f64 = 0.85;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RboError {
    #[error("persistence p must lie strictly between 0 and 1, got {0}")]
    InvalidPersistence(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RankingError {
    #[error("duplicate item at rank {rank} (first seen at rank {first})")]
    DuplicateItem { rank: usize, first: usize },
}

/// An ordered sequence of pairwise distinct items. Ranks are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ranking<I = String> {
    items: Vec<I>,
}

impl<I> Default for Ranking<I> {
    fn default() -> Self {
        Self { items: Vec::new() }
    }
}

impl<I: Eq + Hash> Ranking<I> {
    /// Builds a ranking, rejecting duplicate items.
    pub fn new(items: Vec<I>) -> Result<Self, RankingError> {
        let mut seen = std::collections::HashMap::with_capacity(items.len());
        for (idx, item) in items.iter().enumerate() {
            if let Some(first) = seen.insert(item, idx) {
                return Err(RankingError::DuplicateItem {
                    rank: idx + 1,
                    first: first + 1,
                });
            }
        }
        Ok(Self { items })
    }
}

impl<I> Ranking<I> {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[I] {
        &self.items
    }

    pub fn iter(&self) -> std::slice::Iter<'_, I> {
        self.items.iter()
    }

    /// The first `d` items, or the whole ranking if it is shorter.
    pub fn prefix(&self, d: usize) -> &[I] {
        &self.items[..d.min(self.items.len())]
    }

    pub fn into_items(self) -> Vec<I> {
        self.items
    }
}

impl<I: Eq + Hash> TryFrom<Vec<I>> for Ranking<I> {
    type Error = RankingError;

    fn try_from(items: Vec<I>) -> Result<Self, Self::Error> {
        Self::new(items)
    }
}

impl<'a, I> IntoIterator for &'a Ranking<I> {
    type Item = &'a I;
    type IntoIter = std::slice::Iter<'a, I>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

/// Persistence parameter `p`, validated to lie in the open unit interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RboParams<T> {
    p: T,
}

impl<T: Scalar> RboParams<T> {
    pub fn new(p: T) -> Result<Self, RboError> {
        if p > T::zero() && p < T::one() {
            Ok(Self { p })
        } else {
            Err(RboError::InvalidPersistence(p.to_f64().unwrap_or(f64::NAN)))
        }
    }

    pub fn p(&self) -> T {
        self.p
    }
}

impl<T: Scalar> Default for RboParams<T> {
    fn default() -> Self {
        Self {
            p: T::lit(DEFAULT_PERSISTENCE),
        }
    }
}

/// The min / residual / extrapolated decomposition of one comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RboResult<T> {
    pub min: T,
    pub res: T,
    pub ext: T,
    /// Depth of the longer ranking; every sum is evaluated to this depth.
    pub depth_evaluated: usize,
}

impl<T: Scalar> RboResult<T> {
    /// Upper bound on the similarity of any pair of full rankings consistent with the observed prefixes.
    pub fn max(&self) -> T {
        self.min + self.res
    }
}

impl<T: fmt::Display> fmt::Display for RboResult<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "RBO(min={:.6}, res={:.6}, ext={:.6}, depth={})",
            self.min, self.res, self.ext, self.depth_evaluated
        )
    }
}

/// `|prefix(a, d) ∩ prefix(b, d)|`. Prefixes saturate at the list length.
pub fn overlap_at_depth<I: Eq + Hash>(a: &Ranking<I>, b: &Ranking<I>, d: usize) -> usize {
    let left: HashSet<&I> = a.prefix(d).iter().collect();
    b.prefix(d)
        .iter()
        .filter(|item| left.contains(item))
        .count()
}

/// `X_d` for every depth `d = 1..=long.len()`, with `short.len() <= long.len()`.
fn cumulative_overlaps<I: Eq + Hash>(short: &[I], long: &[I]) -> Vec<usize> {
    let mut seen_short: HashSet<&I> = HashSet::with_capacity(short.len());
    let mut seen_long: HashSet<&I> = HashSet::with_capacity(long.len());
    let mut overlap = 0usize;
    let mut out = Vec::with_capacity(long.len());
    for (idx, l_item) in long.iter().enumerate() {
        match short.get(idx) {
            Some(s_item) if s_item == l_item => overlap += 1,
            Some(s_item) => {
                overlap += usize::from(seen_long.contains(s_item));
                overlap += usize::from(seen_short.contains(l_item));
            }
            None => overlap += usize::from(seen_short.contains(l_item)),
        }
        if let Some(s_item) = short.get(idx) {
            seen_short.insert(s_item);
        }
        seen_long.insert(l_item);
        out.push(overlap);
    }
    out
}

/// Rank-biased overlap of two rankings at persistence `params.p()`.
///
/// Two empty rankings are treated as identical (`ext = 1`), an empty ranking
/// against a non-empty one as total disagreement (`ext = 0`). The result is
/// symmetric in its arguments.
pub fn rbo<I, T>(a: &Ranking<I>, b: &Ranking<I>, params: &RboParams<T>) -> RboResult<T>
where
    I: Eq + Hash,
    T: Scalar,
{
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let s = short.len();
    let l = long.len();
    if l == 0 {
        return RboResult {
            min: T::zero(),
            res: T::one(),
            ext: T::one(),
            depth_evaluated: 0,
        };
    }

    let p = params.p();
    let one = T::one();
    let overlaps = cumulative_overlaps(short.items(), long.items());
    let x = |d: usize| overlaps[d - 1];

    // min: observed agreement only.
    let mut min = T::zero();
    let mut weight = one - p;
    for d in 1..=l {
        min = min + weight * T::from_count(x(d)) / T::from_count(d);
        weight = weight * p;
    }
    let p_pow_l = p.powi(depth_exponent(l));

    let ext = if s == 0 {
        T::zero()
    } else {
        extrapolate(&overlaps, s, p, p_pow_l)
    };

    // res: the most the unseen items could add. The bound at each depth is
    // attained simultaneously by one completion of the two lists, and from
    // depth `l + s - X_l` onwards the completion agrees perfectly.
    let o = x(l);
    let full_from = (l + s - o).max(l + 1);
    let mut res = T::zero();
    let mut weight = one - p;
    for d in 1..full_from {
        let (best, seen) = if d <= l {
            (x(d) + d.saturating_sub(s), x(d))
        } else {
            (o + (s - o).min(d - l) + (l - o).min(d - s), 0)
        };
        if best > seen {
            res = res + weight * T::from_count(best - seen) / T::from_count(d);
        }
        weight = weight * p;
    }
    res = res + p.powi(depth_exponent(full_from - 1));

    // Rounding guards for the ordering min <= ext <= min + res <= 1.
    let ext = ext.max(min).min(one);
    let mut res = res.min(one - min).max(ext - min).max(T::zero());
    for _ in 0..4 {
        if min + res >= ext {
            break;
        }
        res = res + T::epsilon() * T::lit(0.5);
    }

    RboResult {
        min,
        res,
        ext,
        depth_evaluated: l,
    }
}

fn depth_exponent(d: usize) -> i32 {
    i32::try_from(d).expect("ranking depth fits in i32")
}

/// Extrapolated agreement. `overlaps[d - 1]` is `X_d`; `s >= 1` is the
/// shorter length and `overlaps.len()` the longer.
fn extrapolate<T: Scalar>(overlaps: &[usize], s: usize, p: T, p_pow_l: T) -> T {
    let l = overlaps.len();
    let one = T::one();
    let x_s = overlaps[s - 1];
    // Estimated agreement at depth d as an exact fraction num / den.
    let estimate = |d: usize| -> (usize, usize) {
        let x_d = overlaps[d - 1];
        if d <= s {
            (x_d, d)
        } else {
            (x_d * s + (d - s) * x_s, s * d)
        }
    };

    let mut agree = T::zero();
    let mut disagree = T::zero();
    let mut weight = one - p;
    for d in 1..=l {
        let (num, den) = estimate(d);
        let den_t = T::from_count(den);
        agree = agree + weight * T::from_count(num) / den_t;
        disagree = disagree + weight * T::from_count(den - num) / den_t;
        weight = weight * p;
    }
    let (num, den) = estimate(l);
    let den_t = T::from_count(den);
    agree = agree + p_pow_l * T::from_count(num) / den_t;
    disagree = disagree + p_pow_l * T::from_count(den - num) / den_t;

    // The complement form keeps full agreement at exactly 1.
    if agree > T::lit(0.5) {
        one - disagree
    } else {
        agree
    }
    .max(T::zero())
    .min(one)
}

/// Share of the total weight that falls on ranks `1..=d`.
///
/// Rank `i` carries `sum_{k >= i} (1 - p) p^(k-1) / k`; summing over the
/// first `d` ranks gives the closed form used here.
pub fn prefix_weight<T: Scalar>(params: &RboParams<T>, d: usize) -> T {
    assert!(d >= 1, "prefix depth must be at least 1");
    let p = params.p();
    let one = T::one();
    let mut partial = T::zero();
    let mut p_pow = one;
    for i in 1..d {
        p_pow = p_pow * p;
        partial = partial + p_pow / T::from_count(i);
    }
    // p_pow is now p^(d-1).
    let log_term = (one / (one - p)).ln();
    let w = one - p_pow + (one - p) / p * T::from_count(d) * (log_term - partial);
    w.max(T::zero()).min(one)
}

/// Mean of the geometric stopping depth, `1 / (1 - p)`.
pub fn expected_depth<T: Scalar>(params: &RboParams<T>) -> T {
    T::one() / (T::one() - params.p())
}
