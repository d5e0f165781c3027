//! Signed-value support: one sketch for positives, one for negated
//! negatives, plus a zero counter.

use crate::config::SketchConfig;
use crate::error::{Result, SketchError};
use crate::sketch::{target_rank, QuantileSketch};

/// Sketch over all of R: negative items x are stored as -x in a second
/// sketch, zeros are counted exactly.
#[derive(Debug, Clone)]
pub struct TwoSidedSketch {
    positive: QuantileSketch,
    negative: QuantileSketch,
    zero_count: u64,
}

impl TwoSidedSketch {
    pub fn new(config: SketchConfig) -> Self {
        TwoSidedSketch {
            positive: QuantileSketch::new(config),
            negative: QuantileSketch::new(config),
            zero_count: 0,
        }
    }

    /// Total item count across both signs and zero.
    pub fn count(&self) -> u64 {
        self.positive.count() + self.negative.count() + self.zero_count
    }

    pub fn positive(&self) -> &QuantileSketch {
        &self.positive
    }

    pub fn negative(&self) -> &QuantileSketch {
        &self.negative
    }

    pub fn zero_count(&self) -> u64 {
        self.zero_count
    }

    /// Insert any finite value.
    pub fn insert(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(SketchError::NonPositiveValue(x));
        }
        if x > 0.0 {
            self.positive.insert(x)
        } else if x < 0.0 {
            self.negative.insert(-x)
        } else {
            self.zero_count = self
                .zero_count
                .checked_add(1)
                .ok_or(SketchError::CountOverflow)?;
            Ok(())
        }
    }

    /// Lower q-quantile over the conceptual sorted order: negatives (most
    /// negative first), then zeros, then positives.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        let total = self.count();
        if total == 0 {
            return Err(SketchError::EmptySketch);
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(SketchError::InvalidQuantile(q));
        }
        let rank = target_rank(q, total);
        let negatives = self.negative.count();
        if rank <= negatives {
            // Ascending over originals means descending over the negated
            // store; estimates come back negated.
            return Ok(-self.negative.estimate_at_rank_desc(rank));
        }
        let rank = rank - negatives;
        if rank <= self.zero_count {
            return Ok(0.0);
        }
        Ok(self.positive.estimate_at_rank(rank - self.zero_count))
    }
}
