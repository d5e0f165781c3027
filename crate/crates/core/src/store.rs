//! Sparse bucket storage: integer key -> positive count.
//!
//! Backed by a hash map so lookup, insert and remove stay expected O(1).
//! Counts are never stored at zero; a bucket that reaches zero is removed.

use std::collections::HashMap;

use crate::error::{Result, SketchError};
use crate::mapping::collapse_key;

/// Sparse map from bucket key to a strictly positive count.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BucketStore {
    entries: HashMap<i64, u64>,
}

impl BucketStore {
    pub fn new() -> Self {
        BucketStore::default()
    }

    /// Number of occupied buckets.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Count held by `key`, zero if the bucket is absent.
    pub fn count(&self, key: i64) -> u64 {
        self.entries.get(&key).copied().unwrap_or(0)
    }

    /// Add `count` to a bucket, creating it if needed. Zero is a no-op.
    pub fn add(&mut self, key: i64, count: u64) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        let slot = self.entries.entry(key).or_insert(0);
        *slot = slot.checked_add(count).ok_or(SketchError::CountOverflow)?;
        Ok(())
    }

    /// Add one to a bucket.
    pub fn increment(&mut self, key: i64) -> Result<()> {
        self.add(key, 1)
    }

    /// Remove one from a bucket, discarding it when the counter reaches zero.
    ///
    /// Returns an error if the bucket is absent.
    pub fn decrement(&mut self, key: i64) -> Result<()> {
        match self.entries.get_mut(&key) {
            None => Err(SketchError::DeleteUnderflow(key as f64)),
            Some(slot) => {
                *slot -= 1;
                if *slot == 0 {
                    self.entries.remove(&key);
                }
                Ok(())
            }
        }
    }

    /// Iterate over (key, count) pairs in arbitrary order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.entries.iter().map(|(&k, &c)| (k, c))
    }

    /// All (key, count) pairs sorted by key ascending.
    pub fn sorted_entries(&self) -> Vec<(i64, u64)> {
        let mut entries: Vec<(i64, u64)> = self.iter().collect();
        entries.sort_unstable_by_key(|&(k, _)| k);
        entries
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        // The sum always fits: every mutation path checks against u64.
        self.entries.values().sum()
    }

    /// Remap every key pairwise (`i -> ceil(i/2)`), summing colliding counts.
    ///
    /// Partial sums of existing counts cannot overflow, so this never fails.
    pub fn collapse_uniform(&mut self) {
        if self.entries.is_empty() {
            return;
        }
        let old: Vec<(i64, u64)> = self.entries.drain().collect();
        for (key, count) in old {
            *self.entries.entry(collapse_key(key)).or_insert(0) += count;
        }
    }

    /// Fold the lowest-keyed bucket into the next lowest and remove it.
    pub fn collapse_first(&mut self) -> Result<()> {
        let (y, z) = self.two_lowest()?;
        self.fold_bucket(y, z);
        Ok(())
    }

    /// Fold the second-highest-keyed bucket into the highest and remove it.
    pub fn collapse_last(&mut self) -> Result<()> {
        let (y, z) = self.two_highest()?;
        self.fold_bucket(y, z);
        Ok(())
    }

    fn fold_bucket(&mut self, from: i64, into: i64) {
        let count = self.entries.remove(&from).expect("bucket present");
        *self.entries.entry(into).or_insert(0) += count;
    }

    fn two_lowest(&self) -> Result<(i64, i64)> {
        self.extreme_pair(|a, b| a < b)
    }

    fn two_highest(&self) -> Result<(i64, i64)> {
        let (z, y) = self.extreme_pair(|a, b| a > b)?;
        Ok((y, z))
    }

    /// Two most extreme keys under `better`, returned (most, second-most).
    fn extreme_pair(&self, better: impl Fn(i64, i64) -> bool) -> Result<(i64, i64)> {
        if self.entries.len() < 2 {
            return Err(SketchError::TooFewBuckets(self.entries.len()));
        }
        let mut first: Option<i64> = None;
        let mut second: Option<i64> = None;
        for &key in self.entries.keys() {
            match first {
                Some(f) if better(key, f) => {
                    second = first;
                    first = Some(key);
                }
                None => first = Some(key),
                _ => match second {
                    Some(s) if !better(key, s) => {}
                    _ => second = Some(key),
                },
            }
        }
        Ok((first.unwrap(), second.unwrap()))
    }
}
