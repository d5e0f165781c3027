//! The quantile sketch: insertion, deletion, collapsing and quantile queries.

use crate::config::{CollapsePolicy, SketchConfig};
use crate::error::{Result, SketchError};
use crate::mapping::{alpha_from_gamma, bucket_index_ln, value_estimate};
use crate::store::BucketStore;

/// Which end of the key range a DDSketch-style collapse folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollapseEnd {
    /// Fold the two lowest-keyed buckets together.
    First,
    /// Fold the two highest-keyed buckets together.
    Last,
}

/// A log-bucketed quantile sketch over strictly positive values.
///
/// The store never exceeds `config.max_buckets()` after a public operation
/// returns. Under the uniform policy the log base gamma is squared on each
/// collapse; `epoch` counts those squarings and is the authoritative lineage
/// coordinate (`gamma == gamma0` squared `epoch` times, bit-for-bit, because
/// every path squares the same starting value).
#[derive(Debug, Clone)]
pub struct QuantileSketch {
    config: SketchConfig,
    store: BucketStore,
    gamma: f64,
    ln_gamma: f64,
    epoch: u32,
    n: u64,
    collapses: u64,
    min_seen: Option<f64>,
    max_seen: Option<f64>,
}

impl QuantileSketch {
    /// Fresh empty sketch.
    pub fn new(config: SketchConfig) -> Self {
        let gamma = config.gamma0();
        QuantileSketch {
            config,
            store: BucketStore::new(),
            gamma,
            ln_gamma: gamma.ln(),
            epoch: 0,
            n: 0,
            collapses: 0,
            min_seen: None,
            max_seen: None,
        }
    }

    /// Rebuild a sketch from decoded parts. The caller must have validated
    /// the bucket list (positive counts, counts summing to `n`).
    pub(crate) fn from_parts(
        config: SketchConfig,
        epoch: u32,
        n: u64,
        buckets: impl IntoIterator<Item = (i64, u64)>,
        min_seen: Option<f64>,
        max_seen: Option<f64>,
    ) -> Result<Self> {
        let mut sketch = QuantileSketch::new(config);
        // Replay the squarings instead of using powi so the gamma bits match
        // a sketch that collapsed its way to the same epoch.
        for _ in 0..epoch {
            sketch.gamma *= sketch.gamma;
        }
        sketch.ln_gamma = sketch.gamma.ln();
        sketch.epoch = epoch;
        for (key, count) in buckets {
            sketch.store.add(key, count)?;
        }
        sketch.n = n;
        sketch.min_seen = min_seen;
        sketch.max_seen = max_seen;
        Ok(sketch)
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    /// Current log base.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Relative accuracy guaranteed at the current gamma.
    pub fn alpha(&self) -> f64 {
        alpha_from_gamma(self.gamma).expect("gamma > 1 by construction")
    }

    /// Number of uniform collapses applied (gamma squarings).
    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    /// Net item count (insertions minus deletions).
    pub fn count(&self) -> u64 {
        self.n
    }

    /// Total collapse operations of any kind performed so far.
    pub fn collapses(&self) -> u64 {
        self.collapses
    }

    /// Number of occupied buckets.
    pub fn size(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Smallest value ever inserted (deletions do not shrink it).
    pub fn min_seen(&self) -> Option<f64> {
        self.min_seen
    }

    /// Largest value ever inserted.
    pub fn max_seen(&self) -> Option<f64> {
        self.max_seen
    }

    /// (key, count) pairs sorted by key ascending.
    pub fn sorted_buckets(&self) -> Vec<(i64, u64)> {
        self.store.sorted_entries()
    }

    /// Count stored for one bucket key, zero if absent.
    pub fn bucket_count(&self, key: i64) -> u64 {
        self.store.count(key)
    }

    /// Insert one item. Runs the configured collapse until the store is back
    /// within its bucket limit.
    pub fn insert(&mut self, x: f64) -> Result<()> {
        let key = self.key_for(x)?;
        self.store.increment(key)?;
        self.n = self.n.checked_add(1).ok_or(SketchError::CountOverflow)?;
        self.min_seen = Some(self.min_seen.map_or(x, |m| m.min(x)));
        self.max_seen = Some(self.max_seen.map_or(x, |m| m.max(x)));
        self.shrink_to_limit()?;
        Ok(())
    }

    /// Delete one previously inserted item.
    ///
    /// The value is located under the *current* gamma; gamma and epoch never
    /// change on deletion. Deleting a value whose bucket holds no count is an
    /// underflow error.
    pub fn delete(&mut self, x: f64) -> Result<()> {
        let key = self.key_for(x)?;
        if self.store.count(key) == 0 {
            return Err(SketchError::DeleteUnderflow(x));
        }
        self.store.decrement(key)?;
        self.n -= 1;
        Ok(())
    }

    /// Pairwise-collapse the whole store and square gamma.
    ///
    /// Legal on any sketch; an empty store still advances the epoch, which is
    /// what lets merge alignment raise an empty sketch to a partner's epoch.
    pub fn uniform_collapse(&mut self) {
        self.store.collapse_uniform();
        self.gamma *= self.gamma;
        self.ln_gamma = self.gamma.ln();
        self.epoch += 1;
        self.collapses += 1;
    }

    /// DDSketch-style collapse of the two extreme buckets at `end`.
    /// Gamma and epoch are unchanged.
    pub fn dd_collapse(&mut self, end: CollapseEnd) -> Result<()> {
        match end {
            CollapseEnd::First => self.store.collapse_first()?,
            CollapseEnd::Last => self.store.collapse_last()?,
        }
        self.collapses += 1;
        Ok(())
    }

    /// Estimate the lower q-quantile: the item of rank `floor(1 + q(n-1))`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if self.n == 0 {
            return Err(SketchError::EmptySketch);
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(SketchError::InvalidQuantile(q));
        }
        Ok(self.estimate_at_rank(target_rank(q, self.n)))
    }

    /// Estimate for the item of 1-based `rank` in ascending order.
    /// Requires 1 <= rank <= n.
    pub(crate) fn estimate_at_rank(&self, rank: u64) -> f64 {
        debug_assert!(rank >= 1 && rank <= self.n);
        let mut cumulative = 0u64;
        for (key, count) in self.store.sorted_entries() {
            cumulative += count;
            if cumulative >= rank {
                return value_estimate(key, self.gamma);
            }
        }
        unreachable!("rank {rank} exceeds stored count {cumulative}");
    }

    /// Estimate for the item of 1-based `rank` in *descending* order.
    pub(crate) fn estimate_at_rank_desc(&self, rank: u64) -> f64 {
        debug_assert!(rank >= 1 && rank <= self.n);
        let mut cumulative = 0u64;
        for (key, count) in self.store.sorted_entries().into_iter().rev() {
            cumulative += count;
            if cumulative >= rank {
                return value_estimate(key, self.gamma);
            }
        }
        unreachable!("rank {rank} exceeds stored count {cumulative}");
    }

    /// Equality in the summary sense: same epoch, same bucket keys and
    /// counts, same item count. Collapse statistics and observed extremes are
    /// bookkeeping, not summary content, and are ignored.
    pub fn same_summary(&self, other: &QuantileSketch) -> bool {
        self.epoch == other.epoch && self.n == other.n && self.store == other.store
    }

    /// Bucket key for `x` under the current gamma.
    fn key_for(&self, x: f64) -> Result<i64> {
        if !x.is_finite() {
            return Err(SketchError::NonPositiveValue(x));
        }
        if !(x > 0.0) {
            return Err(SketchError::NonPositiveValue(x));
        }
        Ok(bucket_index_ln(x, self.ln_gamma))
    }

    /// Run the configured collapse until the store size is back within the
    /// limit. Returns (rounds, bucket operations) for cost accounting; each
    /// round is charged the store size it scanned.
    pub(crate) fn shrink_to_limit(&mut self) -> Result<(u64, u64)> {
        let limit = self.config.max_buckets() as usize;
        let mut rounds = 0u64;
        let mut ops = 0u64;
        while self.store.len() > limit {
            ops += self.store.len() as u64;
            match self.config.policy() {
                CollapsePolicy::Uniform => self.uniform_collapse(),
                CollapsePolicy::CollapseFirst => self.dd_collapse(CollapseEnd::First)?,
                CollapsePolicy::CollapseLast => self.dd_collapse(CollapseEnd::Last)?,
            }
            rounds += 1;
        }
        Ok((rounds, ops))
    }

    /// Add every bucket of an epoch-aligned sketch plus its counters.
    /// Returns the number of bucket operations performed.
    pub(crate) fn absorb_aligned(&mut self, other: &QuantileSketch) -> Result<u64> {
        debug_assert_eq!(self.epoch, other.epoch);
        let mut ops = 0u64;
        for (key, count) in other.store.iter() {
            self.store.add(key, count)?;
            ops += 1;
        }
        self.n = self
            .n
            .checked_add(other.n)
            .ok_or(SketchError::CountOverflow)?;
        self.collapses += other.collapses;
        self.min_seen = merge_extreme(self.min_seen, other.min_seen, f64::min);
        self.max_seen = merge_extreme(self.max_seen, other.max_seen, f64::max);
        Ok(ops)
    }
}

fn merge_extreme(a: Option<f64>, b: Option<f64>, pick: fn(f64, f64) -> f64) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(pick(x, y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// 1-based rank of the lower q-quantile in a multiset of n items:
/// `floor(1 + q(n-1))`, clamped into [1, n] against float round-off.
pub(crate) fn target_rank(q: f64, n: u64) -> u64 {
    let raw = (1.0 + q * ((n - 1) as f64)).floor();
    (raw as u64).clamp(1, n)
}
