//! Sketch fusion: epoch alignment, the merge operator, stream partitioning
//! and an in-process tree reduction.
//!
//! Merging is pure: inputs are never modified, so one set of leaf sketches
//! can feed any number of reduction plans. Compatibility requires bitwise
//! equal accuracy parameters, the same bucket limit and the same policy; the
//! epoch gap between two uniform-policy sketches is closed by collapsing the
//! lower-epoch side, which is exactly a remap onto the coarser key space.

use std::ops::Range;

use crate::config::CollapsePolicy;
use crate::datagen::SplitMix64;
use crate::error::{Result, SketchError};
use crate::sketch::QuantileSketch;

/// Cost accounting for a merge (or a whole reduction).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MergeStats {
    /// Single-bucket reads/writes performed: cloning input stores, the
    /// additive pass, and every bucket scanned by a collapse round.
    pub bucket_ops: u64,
    /// Collapse rounds run, alignment included.
    pub collapse_rounds: u64,
    /// Collapse rounds spent purely on epoch alignment.
    pub alignment_collapses: u64,
}

impl MergeStats {
    fn absorb(&mut self, other: MergeStats) {
        self.bucket_ops += other.bucket_ops;
        self.collapse_rounds += other.collapse_rounds;
        self.alignment_collapses += other.alignment_collapses;
    }
}

fn incompatible(field: &'static str, left: impl ToString, right: impl ToString) -> SketchError {
    SketchError::Incompatible {
        field,
        left: left.to_string(),
        right: right.to_string(),
    }
}

/// Check that two sketches can be merged, naming the first mismatched field.
pub fn ensure_compatible(a: &QuantileSketch, b: &QuantileSketch) -> Result<()> {
    let (ca, cb) = (a.config(), b.config());
    if ca.alpha0().to_bits() != cb.alpha0().to_bits() {
        return Err(incompatible("alpha0", ca.alpha0(), cb.alpha0()));
    }
    if ca.gamma0().to_bits() != cb.gamma0().to_bits() {
        return Err(incompatible("gamma0", ca.gamma0(), cb.gamma0()));
    }
    if ca.max_buckets() != cb.max_buckets() {
        return Err(incompatible("max_buckets", ca.max_buckets(), cb.max_buckets()));
    }
    if ca.policy() != cb.policy() {
        return Err(incompatible("policy", ca.policy().name(), cb.policy().name()));
    }
    // Non-uniform collapses never move gamma, so unequal epochs cannot be
    // reconciled under those policies.
    if ca.policy() != CollapsePolicy::Uniform && a.epoch() != b.epoch() {
        return Err(incompatible("epoch", a.epoch(), b.epoch()));
    }
    Ok(())
}

/// Bring two sketches to a common epoch by uniform-collapsing the lower one.
/// Returns fresh values; the inputs are untouched.
pub fn align_epochs(
    s1: &QuantileSketch,
    s2: &QuantileSketch,
) -> Result<(QuantileSketch, QuantileSketch)> {
    ensure_compatible(s1, s2)?;
    let mut a = s1.clone();
    let mut b = s2.clone();
    while a.epoch() < b.epoch() {
        a.uniform_collapse();
    }
    while b.epoch() < a.epoch() {
        b.uniform_collapse();
    }
    Ok((a, b))
}

/// Merge two sketches into a new one summarizing the multiset sum of their
/// inputs. Inputs are unmodified.
pub fn merge(s1: &QuantileSketch, s2: &QuantileSketch) -> Result<QuantileSketch> {
    merge_with_stats(s1, s2).map(|(sketch, _)| sketch)
}

/// [`merge`] plus bucket-operation accounting.
pub fn merge_with_stats(
    s1: &QuantileSketch,
    s2: &QuantileSketch,
) -> Result<(QuantileSketch, MergeStats)> {
    ensure_compatible(s1, s2)?;
    let mut stats = MergeStats::default();

    let mut out = s1.clone();
    let mut rhs = s2.clone();
    stats.bucket_ops += (out.size() + rhs.size()) as u64;

    while out.epoch() < rhs.epoch() {
        stats.bucket_ops += out.size() as u64;
        out.uniform_collapse();
        stats.collapse_rounds += 1;
        stats.alignment_collapses += 1;
    }
    while rhs.epoch() < out.epoch() {
        stats.bucket_ops += rhs.size() as u64;
        rhs.uniform_collapse();
        stats.collapse_rounds += 1;
        stats.alignment_collapses += 1;
    }

    stats.bucket_ops += out.absorb_aligned(&rhs)?;

    let (rounds, ops) = out.shrink_to_limit()?;
    stats.collapse_rounds += rounds;
    stats.bucket_ops += ops;

    Ok((out, stats))
}

/// How many items each of `p` contiguous partitions receives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionLayout {
    pub n: u64,
    pub p: usize,
    pub sizes: Vec<u64>,
}

impl PartitionLayout {
    /// Index ranges into the underlying stream, one per partition.
    pub fn ranges(&self) -> Vec<Range<usize>> {
        let mut ranges = Vec::with_capacity(self.p);
        let mut start = 0usize;
        for &size in &self.sizes {
            let end = start + size as usize;
            ranges.push(start..end);
            start = end;
        }
        ranges
    }
}

/// Contiguous split of `n` items over `p` partitions: the first `n mod p`
/// partitions take the ceiling share, the rest the floor share.
pub fn partition_stream(n: u64, p: usize) -> Result<PartitionLayout> {
    if p == 0 {
        return Err(SketchError::ZeroPartitions);
    }
    let base = n / p as u64;
    let remainder = (n % p as u64) as usize;
    let sizes = (0..p)
        .map(|i| base + u64::from(i < remainder))
        .collect();
    Ok(PartitionLayout { n, p, sizes })
}

/// Shape of the binary merge tree a reduction folds over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeShape {
    /// Recursively halve the leaf range and merge the halves.
    BalancedBinary,
    /// Left fold: ((s0 + s1) + s2) + ...
    LinearLeftFold,
    /// Random pairing order drawn from the given seed.
    Random { seed: u64 },
}

/// A reduction over `p` leaf sketches along a binary tree with `p - 1`
/// internal merge nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReductionPlan {
    pub p: usize,
    pub tree: TreeShape,
}

impl ReductionPlan {
    pub fn new(p: usize, tree: TreeShape) -> Self {
        ReductionPlan { p, tree }
    }
}

/// Fold [`merge`] over the plan's tree. The result is independent of tree
/// shape and leaf order; only the collapse statistics may differ.
pub fn reduce(sketches: &[QuantileSketch], plan: &ReductionPlan) -> Result<QuantileSketch> {
    reduce_with_stats(sketches, plan).map(|(sketch, _)| sketch)
}

/// [`reduce`] plus accumulated merge statistics.
pub fn reduce_with_stats(
    sketches: &[QuantileSketch],
    plan: &ReductionPlan,
) -> Result<(QuantileSketch, MergeStats)> {
    if sketches.is_empty() {
        return Err(SketchError::EmptyReduction);
    }
    if sketches.len() != plan.p {
        return Err(SketchError::PlanMismatch {
            expected: plan.p,
            got: sketches.len(),
        });
    }
    let mut stats = MergeStats::default();
    let sketch = match plan.tree {
        TreeShape::BalancedBinary => reduce_balanced(sketches, &mut stats)?,
        TreeShape::LinearLeftFold => {
            let mut acc = sketches[0].clone();
            for leaf in &sketches[1..] {
                let (next, step) = merge_with_stats(&acc, leaf)?;
                stats.absorb(step);
                acc = next;
            }
            acc
        }
        TreeShape::Random { seed } => {
            let mut rng = SplitMix64::new(seed);
            let mut nodes: Vec<QuantileSketch> = sketches.to_vec();
            while nodes.len() > 1 {
                let i = rng.below(nodes.len() as u64) as usize;
                let left = nodes.swap_remove(i);
                let j = rng.below(nodes.len() as u64) as usize;
                let right = nodes.swap_remove(j);
                let (merged, step) = merge_with_stats(&left, &right)?;
                stats.absorb(step);
                nodes.push(merged);
            }
            nodes.pop().expect("one node remains")
        }
    };
    Ok((sketch, stats))
}

fn reduce_balanced(leaves: &[QuantileSketch], stats: &mut MergeStats) -> Result<QuantileSketch> {
    if leaves.len() == 1 {
        return Ok(leaves[0].clone());
    }
    let mid = leaves.len() / 2;
    let left = reduce_balanced(&leaves[..mid], stats)?;
    let right = reduce_balanced(&leaves[mid..], stats)?;
    let (merged, step) = merge_with_stats(&left, &right)?;
    stats.absorb(step);
    Ok(merged)
}
