//! Command-line front end: resolves a configuration from defaults, an
//! optional config file, and flag overrides, runs the experiment, and
//! routes records and summaries.
//!
//! Records go to `--output` when given, otherwise to standard output;
//! the human-readable summary then goes to standard output or standard
//! error respectively, so piped CSV stays clean.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ptebd::harness::config::{parse_config_file, parse_list, RunConfig};
use ptebd::harness::report::{report_summary, write_records, Record};
use ptebd::harness::runner::{
    convergence_step_means, qft_bench, run_experiment, scaling_probe, QftBenchConfig,
    ScalingConfig,
};
use ptebd::Result;

#[derive(Parser)]
#[command(
    name = "ptebd",
    version,
    about = "Matrix-product-state circuit evolution with parallel compression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a circuit family and emit per-layer records.
    Run(RunArgs),
    /// Compare engine cost across system sizes.
    Scale(ScaleArgs),
    /// Aggregate a record file into per-engine statistics.
    Report(ReportArgs),
    /// Truncate random states and track canonical-form restoration.
    PtsuConvergence(ConvergenceArgs),
    /// Benchmark the nearest-neighbor Fourier transform.
    QftBench(QftArgs),
}

/// Overrides shared by `run` and `ptsu-convergence`. Every flag maps to
/// the config-file key of the same name.
#[derive(Args)]
struct CommonArgs {
    /// Config file of key=value lines; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Qubit count for path families.
    #[arg(long)]
    n: Option<usize>,
    /// Bond-rank cap.
    #[arg(long)]
    chi: Option<usize>,
    /// Restoration steps per truncating layer.
    #[arg(long)]
    g: Option<usize>,
    /// Rescale kept weights after truncation (true/false).
    #[arg(long)]
    stabilize: Option<bool>,
    /// Seeds: comma-separated numbers or inclusive a..b ranges.
    #[arg(long)]
    seeds: Option<String>,
    /// Worker threads; 0 keeps the library default.
    #[arg(long)]
    threads: Option<usize>,
    /// Record CSV destination; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Circuit family: rqc1d, pqc1d, rqc2d, pqc2d, qft, or
    /// ptsu-convergence.
    #[arg(long)]
    family: Option<String>,
    /// Grid width for 2D families.
    #[arg(long)]
    lx: Option<usize>,
    /// Grid height for 2D families.
    #[arg(long)]
    ly: Option<usize>,
    /// Physical circuit depth.
    #[arg(long)]
    depth: Option<usize>,
    /// Engine: ptebd, sequential, or both.
    #[arg(long)]
    engine: Option<String>,
    /// Dense-oracle qubit cap; systems above it skip fidelity tracking.
    #[arg(long)]
    cap: Option<usize>,
    /// Instances of the convergence experiment.
    #[arg(long)]
    instances: Option<usize>,
    /// Restoration steps measured by the convergence experiment.
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Independent random instances.
    #[arg(long)]
    instances: Option<usize>,
    /// Restoration steps measured per instance.
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Args)]
struct ScaleArgs {
    /// Path family to scale.
    #[arg(long)]
    family: Option<String>,
    /// Comma-separated qubit counts.
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    chi: Option<usize>,
    #[arg(long)]
    g: Option<usize>,
    /// Independent seeds per size.
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    stabilize: Option<bool>,
    /// First seed; repeats use consecutive values.
    #[arg(long)]
    seed0: Option<u64>,
    /// Record CSV destination; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Record CSV to aggregate; `-` reads standard input.
    path: PathBuf,
}

#[derive(Args)]
struct QftArgs {
    /// Comma-separated transform sizes.
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    chi: Option<usize>,
    #[arg(long)]
    g: Option<usize>,
    #[arg(long)]
    stabilize: Option<bool>,
    /// Random dense inputs checked against the transform oracle per size.
    #[arg(long)]
    inputs: Option<usize>,
    /// Dense-oracle qubit cap.
    #[arg(long)]
    cap: Option<usize>,
    /// First seed; sizes use consecutive values.
    #[arg(long)]
    seed0: Option<u64>,
    /// Record CSV destination; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Applies a flag override through the config-file code path so parsing
/// and validation stay in one place.
fn set<T: ToString>(cfg: &mut RunConfig, key: &str, value: &Option<T>) -> Result<()> {
    if let Some(v) = value {
        cfg.apply_kv(key, &v.to_string())?;
    }
    Ok(())
}

fn resolve_common(cfg: &mut RunConfig, common: &CommonArgs) -> Result<()> {
    set(cfg, "n", &common.n)?;
    set(cfg, "chi", &common.chi)?;
    set(cfg, "g", &common.g)?;
    set(cfg, "stabilize", &common.stabilize)?;
    set(cfg, "seeds", &common.seeds)?;
    set(cfg, "threads", &common.threads)?;
    if let Some(path) = &common.output {
        cfg.output = Some(path.clone());
    }
    Ok(())
}

fn base_config(common: &CommonArgs) -> Result<RunConfig> {
    match &common.config {
        Some(path) => parse_config_file(path),
        None => Ok(RunConfig::default()),
    }
}

/// Writes records to the configured destination and the trailer to the
/// other standard stream.
fn emit(
    output: &Option<PathBuf>,
    preamble: &[String],
    records: &[Record],
    trailer: &str,
) -> Result<()> {
    match output {
        Some(path) => {
            let file = File::create(path)?;
            write_records(BufWriter::new(file), preamble, records)?;
            println!("{trailer}");
        }
        None => {
            write_records(io::stdout().lock(), preamble, records)?;
            eprintln!("{trailer}");
        }
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut cfg = base_config(&args.common)?;
    set(&mut cfg, "family", &args.family)?;
    set(&mut cfg, "lx", &args.lx)?;
    set(&mut cfg, "ly", &args.ly)?;
    set(&mut cfg, "depth", &args.depth)?;
    set(&mut cfg, "engine", &args.engine)?;
    set(&mut cfg, "cap", &args.cap)?;
    set(&mut cfg, "instances", &args.instances)?;
    set(&mut cfg, "steps", &args.steps)?;
    resolve_common(&mut cfg, &args.common)?;
    let out = run_experiment(&cfg)?;
    emit(&cfg.output, &out.preamble, &out.records, &out.summary.to_string())
}

fn cmd_ptsu_convergence(args: &ConvergenceArgs) -> Result<()> {
    let mut cfg = base_config(&args.common)?;
    cfg.apply_kv("family", "ptsu-convergence")?;
    set(&mut cfg, "instances", &args.instances)?;
    set(&mut cfg, "steps", &args.steps)?;
    resolve_common(&mut cfg, &args.common)?;
    let out = run_experiment(&cfg)?;
    let mut trailer = String::new();
    for (step, mean) in convergence_step_means(&out.records) {
        writeln!(trailer, "step={step} mean_canonical_distance={mean}")
            .expect("write to string");
    }
    trailer.push_str(&out.summary.to_string());
    emit(&cfg.output, &out.preamble, &out.records, &trailer)
}

fn cmd_scale(args: &ScaleArgs) -> Result<()> {
    let mut cfg = ScalingConfig::default();
    if let Some(family) = &args.family {
        cfg.family = family.parse()?;
    }
    if let Some(sizes) = &args.sizes {
        cfg.sizes = parse_list("sizes", sizes)?;
    }
    cfg.depth = args.depth.unwrap_or(cfg.depth);
    cfg.chi = args.chi.unwrap_or(cfg.chi);
    cfg.g = args.g.unwrap_or(cfg.g);
    cfg.repeats = args.repeats.unwrap_or(cfg.repeats);
    cfg.stabilize = args.stabilize.unwrap_or(cfg.stabilize);
    cfg.seed0 = args.seed0.unwrap_or(cfg.seed0);
    let out = scaling_probe(&cfg)?;
    let mut trailer = String::new();
    for t in &out.timings {
        let rounds: Vec<String> = t.truncating_rounds.iter().map(|r| r.to_string()).collect();
        writeln!(
            trailer,
            "n={} threads={} ptebd_ns_per_layer={} sequential_ns_per_layer={} \
             sequential_updates_per_layer={} truncating_rounds={}",
            t.n,
            t.threads,
            t.ptebd_ns_per_layer.map_or("-".into(), |v| format!("{v:.0}")),
            t.sequential_ns_per_layer.map_or("-".into(), |v| format!("{v:.0}")),
            t.sequential_updates_per_layer,
            rounds.join("|"),
        )
        .expect("write to string");
    }
    if let (Some(first), Some(last)) = (out.timings.first(), out.timings.last()) {
        if out.timings.len() > 1 {
            if let (Some(pa), Some(pb), Some(sa), Some(sb)) = (
                first.ptebd_ns_per_layer,
                last.ptebd_ns_per_layer,
                first.sequential_ns_per_layer,
                last.sequential_ns_per_layer,
            ) {
                writeln!(
                    trailer,
                    "time_ratio n={}..{} ptebd={:.2} sequential={:.2}",
                    first.n,
                    last.n,
                    pb / pa,
                    sb / sa
                )
                .expect("write to string");
            }
        }
    }
    emit(&args.output, &out.preamble, &out.records, trailer.trim_end())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let summary = if args.path.as_os_str() == "-" {
        report_summary(io::stdin().lock())?
    } else {
        report_summary(File::open(&args.path)?)?
    };
    println!("{summary}");
    Ok(())
}

fn cmd_qft_bench(args: &QftArgs) -> Result<()> {
    let mut cfg = QftBenchConfig::default();
    if let Some(sizes) = &args.sizes {
        cfg.sizes = parse_list("sizes", sizes)?;
    }
    cfg.chi = args.chi.unwrap_or(cfg.chi);
    cfg.g = args.g.unwrap_or(cfg.g);
    cfg.stabilize = args.stabilize.unwrap_or(cfg.stabilize);
    cfg.inputs = args.inputs.unwrap_or(cfg.inputs);
    cfg.statevector_cap = args.cap.unwrap_or(cfg.statevector_cap);
    cfg.seed0 = args.seed0.unwrap_or(cfg.seed0);
    let out = qft_bench(&cfg)?;
    let mut trailer = String::new();
    for s in &out.sizes {
        writeln!(
            trailer,
            "n={} physical_depth={} compiled_layers={} compiled_depth={} \
             oracle_max_error={} mps_fidelity={}",
            s.n,
            s.physical_depth,
            s.compiled_layers,
            s.compiled_depth,
            s.oracle_max_error.map_or("-".into(), |v| format!("{v:e}")),
            s.mps_fidelity.map_or("-".into(), |v| v.to_string()),
        )
        .expect("write to string");
    }
    emit(&args.output, &out.preamble, &out.records, trailer.trim_end())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Scale(args) => cmd_scale(args),
        Command::Report(args) => cmd_report(args),
        Command::PtsuConvergence(args) => cmd_ptsu_convergence(args),
        Command::QftBench(args) => cmd_qft_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
