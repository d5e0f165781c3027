//! Exact oracle, accuracy metrics and the experiment runner.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CollapsePolicy, SketchConfig};
use crate::datagen::{generate_stream, StreamSpec};
use crate::error::{Result, SketchError};
use crate::merge::{partition_stream, reduce_with_stats, MergeStats, ReductionPlan};
use crate::sketch::QuantileSketch;

/// Sorted copy of a dataset answering exact lower q-quantiles.
#[derive(Debug, Clone)]
pub struct ExactOracle {
    sorted: Vec<f64>,
}

impl ExactOracle {
    pub fn new(data: &[f64]) -> Result<Self> {
        if data.is_empty() {
            return Err(SketchError::EmptyData);
        }
        let mut sorted = data.to_vec();
        sorted.par_sort_unstable_by(f64::total_cmp);
        Ok(ExactOracle { sorted })
    }

    /// The element of 1-based rank `floor(1 + q(n-1))`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(SketchError::InvalidQuantile(q));
        }
        let rank = crate::sketch::target_rank(q, self.sorted.len() as u64);
        Ok(self.sorted[(rank - 1) as usize])
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        *self.sorted.last().unwrap()
    }
}

/// Exact lower q-quantile of an unsorted dataset.
pub fn exact_quantile(data: &[f64], q: f64) -> Result<f64> {
    ExactOracle::new(data)?.quantile(q)
}

/// Operation counts carried alongside an accuracy report.
#[derive(Debug, Clone, Copy, Default, Serialize, PartialEq, Eq)]
pub struct OpCounters {
    pub inserts: u64,
    pub collapses: u64,
    pub merge_bucket_ops: u64,
}

/// Per-quantile error profile of one sketch against the exact oracle.
#[derive(Debug, Clone, Serialize)]
pub struct AccuracyReport {
    pub grid: Vec<f64>,
    pub estimates: Vec<f64>,
    pub exact: Vec<f64>,
    pub rel_err: Vec<f64>,
    /// Accuracy guaranteed by the sketch's final gamma.
    pub alpha_final: f64,
    /// Threshold the q0 scan compares against: the initial alpha for the
    /// fixed-gamma policies (their gamma never moves), the final alpha for
    /// the uniform policy.
    pub alpha_target: f64,
    pub q0_accuracy: f64,
    pub collapses: u64,
    pub epoch: u32,
    pub build_ops: OpCounters,
}

impl AccuracyReport {
    /// Largest relative error over the grid.
    pub fn max_rel_err(&self) -> f64 {
        self.rel_err.iter().copied().fold(0.0, f64::max)
    }

    /// Grid spacing.
    pub fn grid_step(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// CSV rendering: one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,estimate,exact,rel_err\n");
        for i in 0..self.grid.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.grid[i], self.estimates[i], self.exact[i], self.rel_err[i]
            ));
        }
        out
    }
}

/// Evaluate a sketch against the dataset it was built from, over an evenly
/// spaced quantile grid `{0, 1/(grid_size-1), ..., 1}`.
pub fn error_profile(
    sketch: &QuantileSketch,
    data: &[f64],
    grid_size: usize,
) -> Result<AccuracyReport> {
    if grid_size < 2 {
        return Err(SketchError::InvalidGrid(grid_size));
    }
    if sketch.count() != data.len() as u64 {
        return Err(SketchError::CountMismatch {
            sketch: sketch.count(),
            data: data.len() as u64,
        });
    }
    let oracle = ExactOracle::new(data)?;
    profile_against_oracle(sketch, &oracle, grid_size)
}

/// As [`error_profile`] but reusing an already-sorted oracle.
pub fn profile_against_oracle(
    sketch: &QuantileSketch,
    oracle: &ExactOracle,
    grid_size: usize,
) -> Result<AccuracyReport> {
    if grid_size < 2 {
        return Err(SketchError::InvalidGrid(grid_size));
    }
    if sketch.count() != oracle.len() as u64 {
        return Err(SketchError::CountMismatch {
            sketch: sketch.count(),
            data: oracle.len() as u64,
        });
    }
    let steps = (grid_size - 1) as f64;
    let mut grid = Vec::with_capacity(grid_size);
    let mut estimates = Vec::with_capacity(grid_size);
    let mut exact = Vec::with_capacity(grid_size);
    let mut rel_err = Vec::with_capacity(grid_size);
    for k in 0..grid_size {
        let q = k as f64 / steps;
        let estimate = sketch.quantile(q)?;
        let truth = oracle.quantile(q)?;
        grid.push(q);
        estimates.push(estimate);
        exact.push(truth);
        rel_err.push((estimate - truth).abs() / truth);
    }
    let alpha_final = sketch.alpha();
    let alpha_target = match sketch.config().policy() {
        CollapsePolicy::Uniform => alpha_final,
        CollapsePolicy::CollapseFirst | CollapsePolicy::CollapseLast => sketch.config().alpha0(),
    };
    let mut report = AccuracyReport {
        grid,
        estimates,
        exact,
        rel_err,
        alpha_final,
        alpha_target,
        q0_accuracy: 0.0,
        collapses: sketch.collapses(),
        epoch: sketch.epoch(),
        build_ops: OpCounters {
            inserts: sketch.count(),
            collapses: sketch.collapses(),
            merge_bucket_ops: 0,
        },
    };
    report.q0_accuracy = q0_accuracy(&report);
    Ok(report)
}

/// Smallest grid quantile q0 such that every grid point at or above it meets
/// the report's alpha target. Returns 0 when the whole grid passes and the
/// sentinel `1 + grid step` when even q = 1 fails.
pub fn q0_accuracy(report: &AccuracyReport) -> f64 {
    let step = report.grid_step();
    let mut q0 = 1.0 + step;
    for i in (0..report.grid.len()).rev() {
        if report.rel_err[i] <= report.alpha_target {
            q0 = report.grid[i];
        } else {
            break;
        }
    }
    q0
}

/// Wall-clock seconds spent in each experiment phase.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct PhaseTimings {
    pub generate_s: f64,
    pub build_s: f64,
    pub reduce_s: f64,
    pub evaluate_s: f64,
}

/// Everything a simulated parallel run produces.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: AccuracyReport,
    pub timings: PhaseTimings,
    pub data_min: f64,
    pub data_max: f64,
    pub rejections: u64,
    pub leaf_sizes: Vec<u64>,
    pub merge_stats: MergeStats,
    /// The reduced sketch, kept so callers can compare it against a
    /// sequential build or serialize it.
    pub sketch: QuantileSketch,
}

/// Generate a stream, build one sketch per partition (in parallel), reduce
/// them along the plan's tree and evaluate the result against the full
/// dataset.
pub fn run_experiment(
    spec: &StreamSpec,
    config: &SketchConfig,
    plan: &ReductionPlan,
    grid_size: usize,
) -> Result<ExperimentOutput> {
    let started = Instant::now();
    let stream = generate_stream(spec)?;
    let generate_s = started.elapsed().as_secs_f64();

    let layout = partition_stream(stream.values.len() as u64, plan.p)?;
    let started = Instant::now();
    let leaves: Result<Vec<QuantileSketch>> = layout
        .ranges()
        .into_par_iter()
        .map(|range| {
            let mut sketch = QuantileSketch::new(*config);
            for &x in &stream.values[range] {
                sketch.insert(x)?;
            }
            Ok(sketch)
        })
        .collect();
    let leaves = leaves?;
    let build_s = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let (sketch, merge_stats) = reduce_with_stats(&leaves, plan)?;
    let reduce_s = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let oracle = ExactOracle::new(&stream.values)?;
    let mut report = profile_against_oracle(&sketch, &oracle, grid_size)?;
    report.build_ops.merge_bucket_ops = merge_stats.bucket_ops;
    let evaluate_s = started.elapsed().as_secs_f64();

    Ok(ExperimentOutput {
        data_min: oracle.min(),
        data_max: oracle.max(),
        rejections: stream.rejections,
        leaf_sizes: layout.sizes,
        merge_stats,
        timings: PhaseTimings {
            generate_s,
            build_s,
            reduce_s,
            evaluate_s,
        },
        report,
        sketch,
    })
}
