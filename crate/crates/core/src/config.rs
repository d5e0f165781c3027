//! Sketch parameters: accuracy target, bucket limit and collapse policy.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SketchError};
use crate::mapping::{alpha_from_gamma, gamma_from_alpha};

/// How a sketch sheds buckets once it exceeds its limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollapsePolicy {
    /// Pairwise remap of all keys (`i -> ceil(i/2)`), squaring gamma. The
    /// UDDSketch procedure: accuracy degrades uniformly over the whole range.
    Uniform,
    /// Merge the two lowest-keyed buckets, keeping gamma fixed. The classic
    /// DDSketch procedure; sacrifices the low quantiles.
    CollapseFirst,
    /// Merge the two highest-keyed buckets, keeping gamma fixed; sacrifices
    /// the high quantiles.
    CollapseLast,
}

impl CollapsePolicy {
    /// Stable single-byte code used by the binary envelope and the CLI.
    pub fn code(self) -> u8 {
        match self {
            CollapsePolicy::Uniform => 0,
            CollapsePolicy::CollapseFirst => 1,
            CollapsePolicy::CollapseLast => 2,
        }
    }

    /// Inverse of [`CollapsePolicy::code`].
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(CollapsePolicy::Uniform),
            1 => Some(CollapsePolicy::CollapseFirst),
            2 => Some(CollapsePolicy::CollapseLast),
            _ => None,
        }
    }

    /// Name accepted by the CLI and printed in reports.
    pub fn name(self) -> &'static str {
        match self {
            CollapsePolicy::Uniform => "uniform",
            CollapsePolicy::CollapseFirst => "dd-first",
            CollapsePolicy::CollapseLast => "dd-last",
        }
    }

    /// Parse a CLI policy name.
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "uniform" => Some(CollapsePolicy::Uniform),
            "dd-first" => Some(CollapsePolicy::CollapseFirst),
            "dd-last" => Some(CollapsePolicy::CollapseLast),
            _ => None,
        }
    }
}

/// Immutable sketch parameters.
///
/// `gamma0` is derived from `alpha0` at construction and never recomputed, so
/// every sketch sharing a config starts from the same gamma bit pattern. That
/// bit-level agreement is what makes merged and sequentially-built sketches
/// comparable for exact equality.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SketchConfig {
    alpha0: f64,
    gamma0: f64,
    m: u32,
    policy: CollapsePolicy,
}

impl SketchConfig {
    /// Build a config from the user-facing accuracy target.
    pub fn new(alpha0: f64, m: u32, policy: CollapsePolicy) -> Result<Self> {
        let gamma0 = gamma_from_alpha(alpha0)?;
        if m < 2 {
            return Err(SketchError::InvalidBucketLimit(m));
        }
        Ok(SketchConfig {
            alpha0,
            gamma0,
            m,
            policy,
        })
    }

    /// Build a config from an exact log base instead of an accuracy target.
    ///
    /// Useful when a test or caller wants bucket boundaries at exact powers
    /// (for example gamma = 2); `alpha0` is derived. Configs built this way
    /// are only merge-compatible with configs holding the same gamma bits.
    pub fn with_gamma0(gamma0: f64, m: u32, policy: CollapsePolicy) -> Result<Self> {
        let alpha0 = alpha_from_gamma(gamma0)?;
        if m < 2 {
            return Err(SketchError::InvalidBucketLimit(m));
        }
        Ok(SketchConfig {
            alpha0,
            gamma0,
            m,
            policy,
        })
    }

    /// Initial relative-accuracy target.
    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    /// Initial log base (1 + alpha0) / (1 - alpha0).
    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    /// Maximum number of buckets the store may hold.
    pub fn max_buckets(&self) -> u32 {
        self.m
    }

    /// Collapse policy applied when the store outgrows the limit.
    pub fn policy(&self) -> CollapsePolicy {
        self.policy
    }
}

// Merge compatibility demands bitwise-equal parameters, so config equality
// compares float bits rather than float values.
impl PartialEq for SketchConfig {
    fn eq(&self, other: &Self) -> bool {
        self.alpha0.to_bits() == other.alpha0.to_bits()
            && self.gamma0.to_bits() == other.gamma0.to_bits()
            && self.m == other.m
            && self.policy == other.policy
    }
}

impl Eq for SketchConfig {}
