//! Error type shared by the sketch, merge and evaluation layers.

use thiserror::Error;

/// Errors produced by sketch construction, mutation, merging and evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SketchError {
    /// Relative-accuracy parameter outside the open interval (0, 1).
    #[error("accuracy alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    /// Log base must be strictly greater than one.
    #[error("gamma must be greater than 1, got {0}")]
    InvalidGamma(f64),

    /// Bucket limit below the minimum the collapse procedures can work with.
    #[error("bucket limit must be at least 2, got {0}")]
    InvalidBucketLimit(u32),

    /// Item outside the sketch domain (only strictly positive values map to buckets).
    #[error("value must be strictly positive, got {0}")]
    NonPositiveValue(f64),

    /// Quantile argument outside [0, 1].
    #[error("quantile must lie in [0, 1], got {0}")]
    InvalidQuantile(f64),

    /// Query or collapse on a sketch with no items.
    #[error("sketch is empty")]
    EmptySketch,

    /// Oracle evaluation over an empty dataset.
    #[error("dataset is empty")]
    EmptyData,

    /// Deleting a value whose bucket holds no count under the current gamma.
    #[error("delete underflow: no count for value {0} under the current gamma")]
    DeleteUnderflow(f64),

    /// A collapse needs at least two occupied buckets.
    #[error("collapse needs at least 2 buckets, store holds {0}")]
    TooFewBuckets(usize),

    /// Bucket counter or item counter would exceed u64.
    #[error("bucket count overflow")]
    CountOverflow,

    /// Two sketches cannot be merged; `field` names the first mismatched parameter.
    #[error("incompatible sketches: {field} differs ({left} vs {right})")]
    Incompatible {
        field: &'static str,
        left: String,
        right: String,
    },

    /// Reduction over an empty list of sketches.
    #[error("reduction requires at least one sketch")]
    EmptyReduction,

    /// A reduction plan whose leaf count does not match the input list.
    #[error("reduction plan expects {expected} sketches, got {got}")]
    PlanMismatch { expected: usize, got: usize },

    /// Stream partitioning with zero partitions.
    #[error("partition count must be positive")]
    ZeroPartitions,

    /// Invalid distribution parameters for the stream generator.
    #[error("invalid distribution parameters: {0}")]
    InvalidDistribution(String),

    /// The generator could not draw a positive value from the configured support.
    #[error("distribution support produced {0} consecutive non-positive draws")]
    ExhaustedRejections(u64),

    /// Accuracy evaluation over data that does not match the sketch contents.
    #[error("sketch holds {sketch} items but the dataset holds {data}")]
    CountMismatch { sketch: u64, data: u64 },

    /// Evaluation grid too small to span [0, 1].
    #[error("evaluation grid needs at least 2 points, got {0}")]
    InvalidGrid(usize),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, SketchError>;
