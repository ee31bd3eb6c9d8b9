//! Command-line entry point.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use reservoir_gates::error::{Error, Result};
use reservoir_gates::gates::{embed_target, EmbedMode, GateSpec, TargetEmbedding};
use reservoir_gates::io::{
    load_gate, load_reservoir, load_weights, save_json, RunManifest,
};
use reservoir_gates::linalg::ComplexMatrix;
use reservoir_gates::random::{haar_unitary, streams, RandomSource};
use reservoir_gates::rnn::{solve, OdeConfig, RnnProblem, WInit};
use reservoir_gates::scan::{aggregate, preset, run_scan, write_csv, MAggregate, ScanConfig};
use reservoir_gates::slm::{plane_wave_dataset, ConstraintKind, ModulatorConstraint};
use reservoir_gates::trainer::{
    generate_dataset, train, verify_gate, CostSpan, Optimizer, TrainConfig, VerifyReport,
};

/// Environment variable overriding the scan worker count.
const WORKERS_ENV: &str = "RESERVOIR_GATES_WORKERS";

#[derive(Parser)]
#[command(
    name = "reservoir-gates",
    version,
    about = "Design multi-level gates realized through a fixed random unitary reservoir"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a catalog gate matrix
    Gate(GateArgs),
    /// Solve for the input operator with a known reservoir (recurrent flow)
    SolveRnn(SolveArgs),
    /// Train the input operator from labeled random states
    Train(TrainArgs),
    /// Compare trained weights against an embedded target
    Verify(VerifyArgs),
    /// Run a named scaling study and emit CSV plus a JSON summary
    Scan(ScanArgs),
}

#[derive(Args)]
struct GateSelect {
    /// Catalog gate name: x, x2 or z
    #[arg(long, conflicts_with = "gate_file")]
    gate: Option<String>,
    /// Load a custom gate matrix from a JSON file instead
    #[arg(long)]
    gate_file: Option<PathBuf>,
    /// Gate dimension (number of logical levels)
    #[arg(long, default_value_t = 3)]
    dim: usize,
}

impl GateSelect {
    fn resolve(&self) -> Result<GateSpec> {
        match (&self.gate, &self.gate_file) {
            (_, Some(path)) => load_gate(path),
            (Some(name), None) => reservoir_gates::gates::gate_by_name(name, self.dim),
            (None, None) => Err(Error::InvalidConfig(
                "either --gate or --gate-file is required".to_string(),
            )),
        }
    }
}

#[derive(Args)]
struct GateArgs {
    /// Catalog gate name: x, x2 or z
    #[arg(long, default_value = "x")]
    name: String,
    /// Gate dimension
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Emit the matrix as JSON instead of a plain table
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    gate: GateSelect,
    /// Embedding dimension M
    #[arg(long)]
    embed: usize,
    /// Target construction: unitary (full block target) or projected
    #[arg(long, default_value = "unitary")]
    mode: String,
    /// Flow rate of the recurrent update
    #[arg(long, default_value_t = 100.0)]
    mu: f64,
    /// Steady-state threshold on the error functional
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Base seed for the reservoir and the target complement
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Load the reservoir from a JSON matrix file instead of sampling it
    #[arg(long)]
    reservoir: Option<PathBuf>,
    /// Integration horizon
    #[arg(long, default_value_t = 10.0)]
    max_time: f64,
    /// Start the flow from seeded random weights instead of zero
    #[arg(long)]
    random_init: bool,
    /// Output JSON path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 1 if the flow does not reach the threshold
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    gate: GateSelect,
    /// Embedding dimension M
    #[arg(long)]
    embed: usize,
    /// Training pairs per epoch
    #[arg(long, default_value_t = 100)]
    ntrain: usize,
    /// Validation pairs
    #[arg(long, default_value_t = 50)]
    nvalid: usize,
    /// Validation-cost stopping threshold
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Gradient-descent step size
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    #[arg(long, default_value_t = 5000)]
    max_epochs: usize,
    /// Device constraint: none, phase or amp
    #[arg(long, default_value = "none")]
    constraint: String,
    /// Quantized modulation depth (bits)
    #[arg(long)]
    bits: Option<u32>,
    /// Base seed for reservoir, complement, dataset and weights
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cost span: all output components ("all") or the logical ones ("first")
    #[arg(long, default_value = "all")]
    span: String,
    /// Update rule: gd (fixed step) or adam (per-parameter adaptive)
    #[arg(long, default_value = "gd")]
    optimizer: String,
    /// Ancilla block of the target: haar (unitary) or zero (non-unitary)
    #[arg(long, default_value = "haar")]
    complement: String,
    /// Train against the single plane-wave pair instead of random states
    #[arg(long)]
    plane_wave: bool,
    /// Load the reservoir from a JSON matrix file instead of sampling it
    #[arg(long)]
    reservoir: Option<PathBuf>,
    /// Output JSON path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 1 if training does not converge
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Trained weights: a matrix file or a run document
    #[arg(long)]
    weights: PathBuf,
    /// Reservoir matrix file
    #[arg(long)]
    reservoir: PathBuf,
    #[command(flatten)]
    gate: GateSelect,
    /// Embedding dimension M
    #[arg(long)]
    embed: usize,
    /// Target construction: unitary or projected
    #[arg(long, default_value = "unitary")]
    mode: String,
    /// Seed that generated the target complement
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ancilla block of the target: haar or zero
    #[arg(long, default_value = "haar")]
    complement: String,
}

#[derive(Args)]
struct ScanArgs {
    /// Preset name: fig3c, fig4a or fig4b
    #[arg(long)]
    preset: String,
    /// Quantized modulation depth for the modulator presets
    #[arg(long)]
    bits: Option<u32>,
    /// CSV output path
    #[arg(long, default_value = "scan.csv")]
    out: PathBuf,
    /// JSON summary path (defaults to the CSV path with .summary.json)
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Worker threads (defaults to RESERVOIR_GATES_WORKERS or all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Override the preset seed list
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Override the preset embedding dimensions
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    m_values: Option<Vec<usize>>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gate(args) => cmd_gate(args),
        Command::SolveRnn(args) => cmd_solve(args),
        Command::Train(args) => cmd_train(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Scan(args) => cmd_scan(args),
    }
}

fn argv() -> Vec<String> {
    std::env::args().collect()
}

fn parse_mode(s: &str) -> Result<EmbedMode> {
    s.parse()
}

fn parse_constraint(kind: &str, bits: Option<u32>) -> Result<ModulatorConstraint> {
    let kind = match kind {
        "none" => ConstraintKind::Unconstrained,
        "phase" => ConstraintKind::PhaseOnly,
        "amp" => ConstraintKind::AmplitudeSigned,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown constraint {other:?}; expected none, phase or amp"
            )))
        }
    };
    ModulatorConstraint::new(kind, bits)
}

fn parse_span(s: &str, n: usize) -> Result<CostSpan> {
    match s {
        "all" | "all_m" => Ok(CostSpan::AllM),
        "first" | "first_n" => Ok(CostSpan::FirstN(n)),
        other => Err(Error::InvalidConfig(format!(
            "unknown span {other:?}; expected all or first"
        ))),
    }
}

fn parse_optimizer(s: &str) -> Result<Optimizer> {
    match s {
        "gd" => Ok(Optimizer::Gd),
        "adam" => Ok(Optimizer::adam()),
        other => Err(Error::InvalidConfig(format!(
            "unknown optimizer {other:?}; expected gd or adam"
        ))),
    }
}

/// Reservoir from a file (validated) or Haar-sampled from the seed.
fn reservoir_for(
    path: Option<&Path>,
    m: usize,
    src: RandomSource,
    manifest: &mut RunManifest,
) -> Result<ComplexMatrix> {
    match path {
        Some(p) => {
            manifest.inputs.push(p.display().to_string());
            let u = load_reservoir(p)?;
            if u.rows() != m {
                return Err(Error::InvalidDimension(format!(
                    "reservoir is {}x{} but the embedding dimension is {m}",
                    u.rows(),
                    u.cols()
                )));
            }
            Ok(u)
        }
        None => haar_unitary(m, src.with_stream(streams::RESERVOIR)),
    }
}

fn embedding_for(
    gate: &GateSpec,
    m: usize,
    mode: EmbedMode,
    complement: &str,
    src: RandomSource,
) -> Result<TargetEmbedding> {
    match (mode, complement) {
        (EmbedMode::Unitary, "zero") => TargetEmbedding::zero_complement(gate, m),
        (_, "haar") => embed_target(gate, m, mode, src.with_stream(streams::COMPLEMENT)),
        (EmbedMode::Projected, "zero") => Err(Error::InvalidConfig(
            "a zero complement only applies to the unitary target".to_string(),
        )),
        (_, other) => Err(Error::InvalidConfig(format!(
            "unknown complement {other:?}; expected haar or zero"
        ))),
    }
}

fn cmd_gate(args: GateArgs) -> Result<ExitCode> {
    let gate = reservoir_gates::gates::gate_by_name(&args.name, args.dim)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(gate.matrix()).map_err(to_parse_error)?);
    } else {
        print!("{}", gate.matrix());
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SolveDocument<'a> {
    manifest: &'a RunManifest,
    gate_dim: usize,
    embed: usize,
    mode: EmbedMode,
    mu: f64,
    residual_tol: f64,
    seed: u64,
    reservoir: &'a ComplexMatrix,
    target: &'a ComplexMatrix,
    solution: &'a ComplexMatrix,
    error_history: &'a [(f64, f64)],
    converged: bool,
    final_error: f64,
    unitarity_defect: f64,
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode> {
    let mut manifest = RunManifest::begin("solve-rnn", argv(), Some(args.seed));
    let gate = args.gate.resolve()?;
    let mode = parse_mode(&args.mode)?;
    let src = RandomSource::new(args.seed);
    let reservoir = reservoir_for(args.reservoir.as_deref(), args.embed, src, &mut manifest)?;
    let embedding = embed_target(&gate, args.embed, mode, src.with_stream(streams::COMPLEMENT))?;

    let problem = RnnProblem::new(reservoir, embedding, args.mu)?;
    let config = OdeConfig {
        max_time: args.max_time,
        residual_tol: args.tol,
        init: if args.random_init { WInit::Random { seed: args.seed } } else { WInit::Zero },
        ..Default::default()
    };
    let result = solve(&problem, &config)?;

    manifest.finish();
    if let Some(out) = &args.out {
        manifest.outputs.push(out.display().to_string());
        let doc = SolveDocument {
            manifest: &manifest,
            gate_dim: gate.dim(),
            embed: args.embed,
            mode,
            mu: args.mu,
            residual_tol: args.tol,
            seed: args.seed,
            reservoir: problem.reservoir(),
            target: problem.embedding().target(),
            solution: &result.solution,
            error_history: &result.error_history,
            converged: result.converged,
            final_error: result.final_error,
            unitarity_defect: result.unitarity_defect,
        };
        save_json(out, &doc)?;
    }
    println!(
        "solve-rnn: converged={} final_error={:e} unitarity_defect={:e} steps={}",
        result.converged,
        result.final_error,
        result.unitarity_defect,
        result.error_history.len().saturating_sub(1),
    );
    Ok(exit_for(result.converged, args.strict))
}

#[derive(Serialize)]
struct TrainDocument<'a> {
    manifest: &'a RunManifest,
    constraint: ModulatorConstraint,
    gate_dim: usize,
    embed: usize,
    n_train: usize,
    n_valid: usize,
    learning_rate: f64,
    valid_threshold: f64,
    max_epochs: usize,
    seed: u64,
    plane_wave: bool,
    weights: &'a ComplexMatrix,
    train_history: &'a [f64],
    valid_history: &'a [f64],
    epochs_used: usize,
    converged: bool,
    verify: &'a VerifyReport,
}

fn cmd_train(args: TrainArgs) -> Result<ExitCode> {
    let mut manifest = RunManifest::begin("train", argv(), Some(args.seed));
    let gate = args.gate.resolve()?;
    let src = RandomSource::new(args.seed);
    let reservoir = reservoir_for(args.reservoir.as_deref(), args.embed, src, &mut manifest)?;
    let embedding = embedding_for(&gate, args.embed, EmbedMode::Unitary, &args.complement, src)?;

    let dataset = if args.plane_wave {
        plane_wave_dataset(embedding.target(), gate.dim())?
    } else {
        generate_dataset(
            embedding.target(),
            args.embed,
            args.ntrain,
            args.nvalid,
            src.with_stream(streams::DATASET),
        )?
    };

    let config = TrainConfig {
        learning_rate: args.lr,
        max_epochs: args.max_epochs,
        valid_threshold: args.eps,
        seed: args.seed,
        constraint: parse_constraint(&args.constraint, args.bits)?,
        cost_span: parse_span(&args.span, gate.dim())?,
        optimizer: parse_optimizer(&args.optimizer)?,
    };
    let run = train(&reservoir, &dataset, &config)?;
    let report = verify_gate(&reservoir, &run.weights, &embedding)?;

    manifest.finish();
    if let Some(out) = &args.out {
        manifest.outputs.push(out.display().to_string());
        let doc = TrainDocument {
            manifest: &manifest,
            constraint: config.constraint,
            gate_dim: gate.dim(),
            embed: args.embed,
            n_train: dataset.n_train(),
            n_valid: dataset.n_valid(),
            learning_rate: args.lr,
            valid_threshold: args.eps,
            max_epochs: args.max_epochs,
            seed: args.seed,
            plane_wave: args.plane_wave,
            weights: &run.weights,
            train_history: &run.train_history,
            valid_history: &run.valid_history,
            epochs_used: run.epochs_used,
            converged: run.converged,
            verify: &report,
        };
        save_json(out, &doc)?;
    }
    println!(
        "train: converged={} epochs={} final_valid={:e} gate_distance={:e}",
        run.converged,
        run.epochs_used,
        run.valid_history.last().copied().unwrap_or(f64::NAN),
        report.gate_distance,
    );
    Ok(exit_for(run.converged, args.strict))
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let gate = args.gate.resolve()?;
    let mode = parse_mode(&args.mode)?;
    let src = RandomSource::new(args.seed);
    let weights = load_weights(&args.weights)?;
    let reservoir = load_reservoir(&args.reservoir)?;
    let embedding = embedding_for(&gate, args.embed, mode, &args.complement, src)?;
    let report = verify_gate(&reservoir, &weights, &embedding)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(to_parse_error)?);
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ScanSummary<'a> {
    manifest: &'a RunManifest,
    config: &'a ScanConfig,
    per_m: &'a [MAggregate],
}

fn cmd_scan(args: ScanArgs) -> Result<ExitCode> {
    let mut manifest = RunManifest::begin("scan", argv(), None);
    let mut config = preset(&args.preset, args.bits)?;
    if let Some(seeds) = args.seeds {
        config.seeds = seeds;
    }
    if let Some(m_values) = args.m_values {
        config.m_values = m_values;
    }

    let workers = args.workers.or_else(|| {
        std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok())
    });
    let records = match workers {
        Some(k) if k > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| run_scan(&config)),
        _ => run_scan(&config),
    }?;
    let summary = aggregate(&records)?;

    let file = std::fs::File::create(&args.out)?;
    write_csv(&records, std::io::BufWriter::new(file))?;
    manifest.outputs.push(args.out.display().to_string());

    let summary_path = args
        .summary
        .unwrap_or_else(|| args.out.with_extension("summary.json"));
    manifest.outputs.push(summary_path.display().to_string());
    manifest.finish();
    save_json(&summary_path, &ScanSummary { manifest: &manifest, config: &config, per_m: &summary })?;

    for agg in &summary {
        println!(
            "m={:<3} mean={:<12.6e} std={:<12.6e} min={:<12.6e} max={:<12.6e} converged={:.0}%",
            agg.m,
            agg.mean,
            agg.std_dev,
            agg.min,
            agg.max,
            100.0 * agg.converged_fraction,
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_for(converged: bool, strict: bool) -> ExitCode {
    if converged || !strict {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn to_parse_error(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}
