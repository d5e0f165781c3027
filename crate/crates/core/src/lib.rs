//! Mergeable log-bucketed quantile sketches.
//!
//! The sketch maps each positive value to the bucket `ceil(log_gamma(x))`
//! and answers lower q-quantiles with a relative-error guarantee of
//! `alpha = (gamma - 1) / (gamma + 1)`. Two collapse families keep the store
//! within its bucket budget:
//!
//! * **uniform** (UDDSketch): remap every key pairwise and square gamma, so
//!   accuracy degrades uniformly and the guarantee keeps covering the whole
//!   quantile range;
//! * **dd-first / dd-last** (DDSketch): fold the extreme buckets together at
//!   fixed gamma, sacrificing one tail.
//!
//! Uniform-policy sketches are fully mergeable: [`merge::merge`] aligns two
//! sketches onto a common gamma epoch, adds matching bucket counters and
//! re-applies the size constraint. For insertion-only streams the merged
//! sketch equals the sketch of the concatenated stream exactly, which makes
//! the operator safe to fold over any reduction tree ([`merge::reduce`]).
//!
//! The remaining modules supply the rest of the toolkit: a canonical binary
//! codec ([`codec`]), seeded synthetic streams ([`datagen`]), a raw value
//! file format ([`datafile`]) and an exact-oracle evaluation harness
//! ([`eval`]). The `sketchfuse` binary wires them into a CLI.

pub mod codec;
pub mod config;
pub mod datafile;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod mapping;
pub mod merge;
pub mod sketch;
pub mod store;
pub mod two_sided;

pub use config::{CollapsePolicy, SketchConfig};
pub use error::{Result, SketchError};
pub use sketch::{CollapseEnd, QuantileSketch};
pub use two_sided::TwoSidedSketch;
