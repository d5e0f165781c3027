//! Command-line front end: generate data, build/merge/query sketches,
//! evaluate accuracy and simulate the parallel reduction.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or compatibility error.
//! Output files are written to a temporary sibling and renamed into place,
//! so a failing command never leaves a partial file behind.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sketchfuse::codec;
use sketchfuse::datafile;
use sketchfuse::datagen::{generate_stream, Distribution, StreamSpec};
use sketchfuse::eval::{error_profile, run_experiment, AccuracyReport};
use sketchfuse::merge::{merge, ReductionPlan, TreeShape};
use sketchfuse::{CollapsePolicy, QuantileSketch, SketchConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

#[derive(Parser)]
#[command(
    name = "sketchfuse",
    version,
    about = "Mergeable quantile sketches: build, fuse and evaluate",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic data file (.uddv).
    Generate(GenerateArgs),
    /// Stream a data file into a sketch file (.udds).
    Build(BuildArgs),
    /// Merge sketch files into one.
    Merge(MergeArgs),
    /// Query quantiles from a sketch file.
    Query(QueryArgs),
    /// Compare a sketch against its source data on a quantile grid.
    Evaluate(EvaluateArgs),
    /// Generate, partition, build and reduce in one go, then evaluate.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct DistArgs {
    /// Distribution family: beta, exponential, lognormal, normal, uniform.
    #[arg(long)]
    dist: String,
    /// Comma-separated parameters, e.g. 5,1.5 for beta or 3.5 for exponential.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    params: Vec<f64>,
    /// Number of items.
    #[arg(long)]
    n: u64,
    /// PRNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl DistArgs {
    fn stream_spec(&self) -> Result<StreamSpec, CliError> {
        let dist =
            Distribution::from_name_params(&self.dist, &self.params).map_err(CliError::usage)?;
        Ok(StreamSpec {
            dist,
            n: self.n,
            seed: self.seed,
        })
    }
}

#[derive(Args)]
struct SketchParams {
    /// Initial relative-accuracy target.
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    /// Maximum number of buckets.
    #[arg(long, default_value_t = 512)]
    buckets: u32,
    /// Collapse policy: uniform, dd-first or dd-last.
    #[arg(long, default_value = "uniform")]
    policy: String,
}

impl SketchParams {
    fn config(&self) -> Result<SketchConfig, CliError> {
        let policy = CollapsePolicy::parse(&self.policy).ok_or_else(|| {
            CliError::usage(format!(
                "unknown policy {:?} (expected uniform, dd-first or dd-last)",
                self.policy
            ))
        })?;
        SketchConfig::new(self.alpha, self.buckets, policy).map_err(CliError::usage)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    dist: DistArgs,
    /// Output data file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    params: SketchParams,
    /// Input data file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output sketch file.
    #[arg(long)]
    out: PathBuf,
    /// Print a human-readable summary instead of JSON.
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct MergeArgs {
    /// Output sketch file.
    #[arg(long)]
    out: PathBuf,
    /// Input sketch files (at least one).
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    /// Quantiles to query, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    q: Vec<f64>,
    /// Sketch file.
    sketch: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Data file the sketch was built from.
    #[arg(long)]
    data: PathBuf,
    /// Sketch file to evaluate.
    #[arg(long)]
    sketch: PathBuf,
    /// Grid size (number of evenly spaced quantiles including 0 and 1).
    #[arg(long, default_value_t = 1001)]
    grid: usize,
    /// Output format: csv (per-quantile rows) or json (summary).
    #[arg(long, default_value = "csv")]
    format: String,
    /// Print a human-readable table instead.
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[command(flatten)]
    params: SketchParams,
    /// Number of simulated processes (partitions).
    #[arg(long, default_value_t = 8)]
    procs: usize,
    /// Reduction tree: balanced, linear or random:SEED.
    #[arg(long, default_value = "balanced")]
    tree: String,
    /// Grid size for the accuracy evaluation.
    #[arg(long, default_value_t = 1001)]
    grid: usize,
    /// Also build the p=1 sketch and report whether the reduction matches it.
    #[arg(long)]
    compare_sequential: bool,
    /// Print a human-readable summary instead of JSON.
    #[arg(long)]
    pretty: bool,
}

/// Error message plus the exit code it maps to.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Display) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn data(message: impl Display) -> Self {
        CliError {
            code: EXIT_DATA,
            message: message.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not errors.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Build(args) => cmd_build(args),
        Command::Merge(args) => cmd_merge(args),
        Command::Query(args) => cmd_query(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("sketchfuse: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let spec = args.dist.stream_spec()?;
    let stream = generate_stream(&spec).map_err(CliError::usage)?;
    write_atomic(&args.out, &datafile::encode_values(&stream.values))?;
    eprintln!(
        "wrote {} values to {} ({} rejected draws)",
        stream.values.len(),
        args.out.display(),
        stream.rejections
    );
    Ok(())
}

fn cmd_build(args: BuildArgs) -> Result<(), CliError> {
    let config = args.params.config()?;
    let values = read_values(&args.input)?;
    let mut sketch = QuantileSketch::new(config);
    for &x in &values {
        sketch
            .insert(x)
            .map_err(|e| CliError::data(format!("{}: {e}", args.input.display())))?;
    }
    write_atomic(&args.out, &codec::encode(&sketch))?;
    if args.pretty {
        println!(
            "n {}  epoch {}  alpha_final {:.6}  collapses {}",
            sketch.count(),
            sketch.epoch(),
            sketch.alpha(),
            sketch.collapses()
        );
    } else {
        println!(
            "{}",
            json!({
                "n": sketch.count(),
                "epoch": sketch.epoch(),
                "alpha_final": sketch.alpha(),
                "collapses": sketch.collapses(),
            })
        );
    }
    Ok(())
}

fn cmd_merge(args: MergeArgs) -> Result<(), CliError> {
    let mut merged = read_sketch(&args.inputs[0])?;
    for path in &args.inputs[1..] {
        let next = read_sketch(path)?;
        merged =
            merge(&merged, &next).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    }
    write_atomic(&args.out, &codec::encode(&merged))
}

fn cmd_query(args: QueryArgs) -> Result<(), CliError> {
    let sketch = read_sketch(&args.sketch)?;
    let mut out = String::new();
    for &q in &args.q {
        let estimate = sketch.quantile(q).map_err(|e| {
            if matches!(e, sketchfuse::SketchError::InvalidQuantile(_)) {
                CliError::usage(e)
            } else {
                CliError::data(e)
            }
        })?;
        out.push_str(&format!("{q},{estimate}\n"));
    }
    print!("{out}");
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let values = read_values(&args.data)?;
    let sketch = read_sketch(&args.sketch)?;
    if args.grid < 2 {
        return Err(CliError::usage(format!(
            "grid must have at least 2 points, got {}",
            args.grid
        )));
    }
    let report = error_profile(&sketch, &values, args.grid).map_err(CliError::data)?;
    if args.pretty {
        print_report_table(&report);
        return Ok(());
    }
    match args.format.as_str() {
        "csv" => print!("{}", report.to_csv()),
        "json" => println!("{}", report_summary_json(&report, &sketch)),
        other => {
            return Err(CliError::usage(format!(
                "unknown format {other:?} (expected csv or json)"
            )))
        }
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let spec = args.dist.stream_spec()?;
    let config = args.params.config()?;
    let tree = parse_tree(&args.tree)?;
    if args.procs == 0 {
        return Err(CliError::usage("--procs must be at least 1"));
    }
    if args.grid < 2 {
        return Err(CliError::usage(format!(
            "grid must have at least 2 points, got {}",
            args.grid
        )));
    }
    let plan = ReductionPlan::new(args.procs, tree);
    let output = run_experiment(&spec, &config, &plan, args.grid).map_err(CliError::data)?;

    let sequential_identical = if args.compare_sequential {
        let stream = generate_stream(&spec).map_err(CliError::data)?;
        let mut sequential = QuantileSketch::new(config);
        for &x in &stream.values {
            sequential.insert(x).map_err(CliError::data)?;
        }
        Some(output.sketch.same_summary(&sequential))
    } else {
        None
    };

    let mut summary = json!({
        "dist": spec.dist.name(),
        "params": spec.dist.params(),
        "n": spec.n,
        "seed": spec.seed,
        "alpha0": config.alpha0(),
        "buckets": config.max_buckets(),
        "policy": config.policy().name(),
        "procs": args.procs,
        "tree": tree_name(tree),
        "q0_accuracy": output.report.q0_accuracy,
        "alpha_final": output.report.alpha_final,
        "max_rel_err": output.report.max_rel_err(),
        "epoch": output.report.epoch,
        "collapses": output.report.collapses,
        "merge_bucket_ops": output.merge_stats.bucket_ops,
        "timings": output.timings,
        "data_min": output.data_min,
        "data_max": output.data_max,
        "rejections": output.rejections,
    });
    if let Some(identical) = sequential_identical {
        summary["identical"] = json!(identical);
    }
    if args.pretty {
        print_simulate_table(&summary);
    } else {
        println!("{summary}");
    }
    Ok(())
}

fn parse_tree(text: &str) -> Result<TreeShape, CliError> {
    match text {
        "balanced" => Ok(TreeShape::BalancedBinary),
        "linear" => Ok(TreeShape::LinearLeftFold),
        other => match other.strip_prefix("random:") {
            Some(seed) => seed
                .parse::<u64>()
                .map(|seed| TreeShape::Random { seed })
                .map_err(|_| CliError::usage(format!("bad random tree seed {seed:?}"))),
            None => Err(CliError::usage(format!(
                "unknown tree {other:?} (expected balanced, linear or random:SEED)"
            ))),
        },
    }
}

fn tree_name(tree: TreeShape) -> String {
    match tree {
        TreeShape::BalancedBinary => "balanced".to_string(),
        TreeShape::LinearLeftFold => "linear".to_string(),
        TreeShape::Random { seed } => format!("random:{seed}"),
    }
}

fn report_summary_json(report: &AccuracyReport, sketch: &QuantileSketch) -> String {
    json!({
        "q0_accuracy": report.q0_accuracy,
        "alpha_final": report.alpha_final,
        "alpha_target": report.alpha_target,
        "max_rel_err": report.max_rel_err(),
        "epoch": report.epoch,
        "collapses": report.collapses,
        "grid_size": report.grid.len(),
        "n": sketch.count(),
        "data_min": sketch.min_seen(),
        "data_max": sketch.max_seen(),
    })
    .to_string()
}

fn print_report_table(report: &AccuracyReport) {
    println!(
        "{:>8} {:>16} {:>16} {:>12}",
        "q", "estimate", "exact", "rel_err"
    );
    for i in 0..report.grid.len() {
        println!(
            "{:>8.4} {:>16.8} {:>16.8} {:>12.6}",
            report.grid[i], report.estimates[i], report.exact[i], report.rel_err[i]
        );
    }
    println!(
        "q0_accuracy {}  alpha_final {:.6}  epoch {}  collapses {}",
        report.q0_accuracy, report.alpha_final, report.epoch, report.collapses
    );
}

fn print_simulate_table(summary: &serde_json::Value) {
    let obj = summary.as_object().expect("summary is an object");
    let width = obj.keys().map(|k| k.len()).max().unwrap_or(0);
    for (key, value) in obj {
        println!("{key:>width$}  {value}");
    }
}

fn read_values(path: &Path) -> Result<Vec<f64>, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    datafile::decode_values(&bytes).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn read_sketch(path: &Path) -> Result<QuantileSketch, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    codec::decode(&bytes).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// Write to a temporary sibling and rename into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let to_err = |e: std::io::Error| CliError::data(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(to_err)?;
    tmp.write_all(bytes).map_err(to_err)?;
    tmp.persist(path)
        .map_err(|e| CliError::data(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}
