//! Experiment runners: seeded circuit evolution with per-layer records,
//! the canonical-form convergence experiment, the size-scaling probe, and
//! the Fourier-transform benchmark.
//!
//! Runners return records plus derived summaries and leave all output
//! formatting to the caller. Record emission order is seed, then engine,
//! then layer, so every (seed, engine) series is contiguous with strictly
//! ascending layers.

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use rand::Rng;

use crate::circuits::qft::qft_circuit;
use crate::circuits::{CompiledCircuit, Layer};
use crate::error::{Error, Result};
use crate::evolution::{
    parallel_truncate, ptebd_apply_layer, ptsu_step, sequential_apply_layer, stabilize_norm,
    StepTrace,
};
use crate::harness::config::{Engine, EngineChoice, Family, RunConfig, QFT_INPUT_BOND};
use crate::harness::report::{summarize, Record, Summary};
use crate::mps::VidalMps;
use crate::oracle::{dft_reference, fidelity, run_compiled, Statevector, DFT_QUBIT_CAP};
use crate::rng::{substream, DOMAIN_INPUT};

/// Engine label used by convergence-experiment rows, which drive no
/// circuit.
pub const CONVERGENCE_ENGINE: &str = "ptsu";

/// Records plus aggregates of one experiment.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    /// Resolved config lines for the CSV preamble.
    pub preamble: Vec<String>,
    pub records: Vec<Record>,
    pub summary: Summary,
}

fn as_ns(d: Duration) -> u64 {
    d.as_nanos().min(u64::MAX as u128) as u64
}

/// Runs `f` on a dedicated pool of `threads` workers; 0 keeps the current
/// pool.
fn with_thread_budget<T: Send>(
    threads: usize,
    f: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    if threads == 0 {
        f()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot build a {threads}-thread pool: {e}")))?;
        pool.install(f)
    }
}

fn apply_with(
    engine: Engine,
    state: &mut VidalMps,
    layer: &Layer,
    cfg: &RunConfig,
) -> Result<StepTrace> {
    match engine {
        Engine::Ptebd => ptebd_apply_layer(state, layer, cfg.chi, cfg.g, cfg.stabilize),
        Engine::Sequential => sequential_apply_layer(state, layer, cfg.chi),
    }
}

fn make_record(
    seed: u64,
    engine: &str,
    layer: usize,
    compiled_layer: usize,
    trace: &StepTrace,
    fidelity_vs_oracle: Option<f64>,
) -> Record {
    Record {
        seed,
        engine: engine.to_string(),
        layer,
        compiled_layer,
        norm_n: trace.norm_n,
        norm_nstar: trace.norm_nstar,
        eps_global: trace.report.eps_total,
        fidelity_lb_tight: trace.report.fidelity_lb_tight,
        fidelity_lb_loose: trace.report.fidelity_lb_loose,
        canonical_distance: trace.canonical_distance,
        fidelity_vs_oracle,
        elapsed_ns: as_ns(trace.elapsed),
        parallel_rounds: trace.parallel_rounds,
    }
}

/// Evolves the configured circuit for every seed and engine, tracking the
/// dense oracle through the same compiled layers while the qubit count is
/// within the cap.
fn circuit_records(cfg: &RunConfig) -> Result<Vec<Record>> {
    let qubits = cfg.qubits();
    let mut records = Vec::new();
    for &seed in &cfg.seeds {
        let circuit = cfg.build_circuit(seed)?;
        let compiled = circuit.compile()?;
        for engine in cfg.engine.engines() {
            let mut state = cfg.initial_state(seed)?;
            let mut reference = if qubits <= cfg.statevector_cap {
                Some(state.to_statevector(cfg.statevector_cap)?)
            } else {
                None
            };
            for (ci, layer) in compiled.layers.iter().enumerate() {
                let trace = apply_with(engine, &mut state, layer, cfg)?;
                let fid = match &mut reference {
                    Some(oracle) => {
                        *oracle = oracle.apply_layer(layer)?;
                        Some(fidelity(&state.to_statevector(cfg.statevector_cap)?, oracle)?)
                    }
                    None => None,
                };
                records.push(make_record(
                    seed,
                    engine.name(),
                    compiled.provenance[ci],
                    ci,
                    &trace,
                    fid,
                ));
            }
        }
    }
    Ok(records)
}

/// Convergence experiment: independent random states are truncated to
/// half the bond rank, normalized, and followed through restoration
/// steps. Row `layer` is the step index; step 0 is the truncation itself.
fn convergence_records(cfg: &RunConfig) -> Result<Vec<Record>> {
    let chi_half = (cfg.chi / 2).max(1);
    let mut records = Vec::new();
    for inst in 0..cfg.instances {
        let seed = cfg.seeds[0] + inst as u64;
        let started = Instant::now();
        let mut state = VidalMps::random_mps(cfg.n, cfg.chi, seed)?;
        let report = parallel_truncate(&mut state, chi_half)?;
        if cfg.stabilize {
            stabilize_norm(&mut state, &report)?;
        }
        state = state.normalized_by_bond_scaling()?;
        let mut elapsed = started.elapsed();
        for step in 0..=cfg.steps {
            if step > 0 {
                let started = Instant::now();
                ptsu_step(&mut state)?;
                elapsed = started.elapsed();
            }
            let norm = state.norm();
            let distance = state.canonical_distance_with_norm(norm)?.distance;
            records.push(Record {
                seed,
                engine: CONVERGENCE_ENGINE.into(),
                layer: step,
                compiled_layer: step,
                norm_n: norm,
                norm_nstar: norm,
                eps_global: if step == 0 { report.eps_total } else { 0.0 },
                fidelity_lb_tight: if step == 0 { report.fidelity_lb_tight } else { 1.0 },
                fidelity_lb_loose: if step == 0 { report.fidelity_lb_loose } else { 1.0 },
                canonical_distance: distance,
                fidelity_vs_oracle: None,
                elapsed_ns: as_ns(elapsed),
                parallel_rounds: 1,
            });
        }
    }
    Ok(records)
}

/// Mean canonical distance per restoration step across the instances of a
/// convergence run, ascending by step.
pub fn convergence_step_means(records: &[Record]) -> Vec<(usize, f64)> {
    let mut sums: HashMap<usize, (f64, usize)> = HashMap::new();
    for r in records.iter().filter(|r| r.engine == CONVERGENCE_ENGINE) {
        let e = sums.entry(r.layer).or_insert((0.0, 0));
        e.0 += r.canonical_distance;
        e.1 += 1;
    }
    let mut out: Vec<(usize, f64)> =
        sums.into_iter().map(|(step, (sum, n))| (step, sum / n as f64)).collect();
    out.sort_by_key(|&(step, _)| step);
    out
}

/// Runs the configured experiment and aggregates its records.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let records = with_thread_budget(cfg.threads, || match cfg.family {
        Family::PtsuConvergence => convergence_records(cfg),
        _ => circuit_records(cfg),
    })?;
    let summary = summarize(&records);
    Ok(ExperimentOutput { preamble: cfg.preamble(), records, summary })
}

/// Parameters of the size-scaling probe.
#[derive(Clone, Debug)]
pub struct ScalingConfig {
    /// Path family to scale; grid families have no single size axis.
    pub family: Family,
    /// Qubit counts to probe.
    pub sizes: Vec<usize>,
    pub depth: usize,
    pub chi: usize,
    pub g: usize,
    /// Independent seeds per size.
    pub repeats: usize,
    pub stabilize: bool,
    pub seed0: u64,
}

impl Default for ScalingConfig {
    fn default() -> ScalingConfig {
        ScalingConfig {
            family: Family::Rqc1d,
            sizes: vec![33, 65, 129],
            depth: 8,
            chi: 8,
            g: 1,
            repeats: 1,
            stabilize: true,
            seed0: 1,
        }
    }
}

/// Per-size findings of the scaling probe.
#[derive(Clone, Debug)]
pub struct SizeTiming {
    pub n: usize,
    /// Worker threads used: one per four sites, capped by the machine.
    pub threads: usize,
    /// Mean wall time per compiled layer, warm-up layer excluded.
    pub ptebd_ns_per_layer: Option<f64>,
    pub sequential_ns_per_layer: Option<f64>,
    /// Mean serialized two-site updates per layer of the sequential
    /// engine; grows with the qubit count.
    pub sequential_updates_per_layer: f64,
    /// Distinct round counts of truncating parallel-engine layers; stays
    /// `{2 + g}` at every size.
    pub truncating_rounds: BTreeSet<usize>,
}

/// Records plus per-size findings of the scaling probe.
#[derive(Clone, Debug)]
pub struct ScalingOutput {
    pub preamble: Vec<String>,
    pub records: Vec<Record>,
    pub timings: Vec<SizeTiming>,
}

/// Number of worker threads available on this machine.
pub fn available_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Runs both engines across the configured sizes and verifies the
/// structural scaling contract: the parallel engine spends `2 + g` rounds
/// on every truncating layer at every size, while the sequential engine
/// serializes exactly one update per two-qubit gate. Violations are
/// errors, not data. Wall-time ratios are returned for the caller to
/// judge, since they depend on the thread budget.
pub fn scaling_probe(cfg: &ScalingConfig) -> Result<ScalingOutput> {
    if cfg.family.is_grid() || cfg.family == Family::PtsuConvergence {
        return Err(Error::Config(format!(
            "size scaling needs a path family, got {}",
            cfg.family
        )));
    }
    if cfg.sizes.is_empty() || cfg.repeats == 0 {
        return Err(Error::Config("sizes and repeats must be non-empty".into()));
    }
    let seeds: Vec<u64> = (0..cfg.repeats).map(|r| cfg.seed0 + r as u64).collect();
    let mut records = Vec::new();
    let mut timings = Vec::new();
    for &n in &cfg.sizes {
        let threads = n.div_ceil(4).clamp(1, available_threads());
        let run_cfg = RunConfig {
            family: cfg.family,
            n,
            depth: cfg.depth,
            chi: cfg.chi,
            g: cfg.g,
            engine: EngineChoice::Both,
            stabilize: cfg.stabilize,
            seeds: seeds.clone(),
            threads,
            statevector_cap: 0,
            ..RunConfig::default()
        };
        let size_records = with_thread_budget(threads, || circuit_records(&run_cfg))?;

        let mut compiled: HashMap<u64, CompiledCircuit> = HashMap::new();
        for &seed in &seeds {
            compiled.insert(seed, run_cfg.build_circuit(seed)?.compile()?);
        }
        let mut truncating_rounds = BTreeSet::new();
        let mut ptebd_ns = Vec::new();
        let mut seq_ns = Vec::new();
        let mut seq_updates = Vec::new();
        for r in &size_records {
            match r.engine.as_str() {
                "ptebd" => {
                    if r.eps_global > 0.0 {
                        truncating_rounds.insert(r.parallel_rounds);
                        if r.parallel_rounds != cfg.g + 2 {
                            return Err(Error::PreconditionViolated(format!(
                                "truncating layer {} at N={} took {} rounds, expected {}",
                                r.compiled_layer,
                                n,
                                r.parallel_rounds,
                                cfg.g + 2
                            )));
                        }
                    }
                    if r.compiled_layer > 0 {
                        ptebd_ns.push(r.elapsed_ns as f64);
                    }
                }
                "sequential" => {
                    let expected =
                        compiled[&r.seed].layers[r.compiled_layer].two_qubit_count();
                    if r.parallel_rounds != expected {
                        return Err(Error::PreconditionViolated(format!(
                            "sequential layer {} at N={} took {} updates for {} gates",
                            r.compiled_layer, n, r.parallel_rounds, expected
                        )));
                    }
                    seq_updates.push(expected as f64);
                    if r.compiled_layer > 0 {
                        seq_ns.push(r.elapsed_ns as f64);
                    }
                }
                _ => {}
            }
        }
        let mean = |v: &[f64]| {
            if v.is_empty() {
                None
            } else {
                Some(v.iter().sum::<f64>() / v.len() as f64)
            }
        };
        timings.push(SizeTiming {
            n,
            threads,
            ptebd_ns_per_layer: mean(&ptebd_ns),
            sequential_ns_per_layer: mean(&seq_ns),
            sequential_updates_per_layer: mean(&seq_updates).unwrap_or(0.0),
            truncating_rounds,
        });
        records.extend(size_records);
    }
    let sizes: Vec<String> = cfg.sizes.iter().map(|s| s.to_string()).collect();
    let preamble = vec![
        "command=scale".to_string(),
        format!("family={}", cfg.family),
        format!("sizes={}", sizes.join(",")),
        format!("depth={}", cfg.depth),
        format!("chi={}", cfg.chi),
        format!("g={}", cfg.g),
        format!("repeats={}", cfg.repeats),
        format!("stabilize={}", cfg.stabilize),
        format!("seed0={}", cfg.seed0),
    ];
    Ok(ScalingOutput { preamble, records, timings })
}

/// Parameters of the Fourier-transform benchmark.
#[derive(Clone, Debug)]
pub struct QftBenchConfig {
    /// Transform sizes to benchmark.
    pub sizes: Vec<usize>,
    pub chi: usize,
    pub g: usize,
    pub stabilize: bool,
    /// Random dense inputs checked against the transform oracle per size.
    pub inputs: usize,
    pub statevector_cap: usize,
    pub seed0: u64,
}

impl Default for QftBenchConfig {
    fn default() -> QftBenchConfig {
        QftBenchConfig {
            sizes: vec![4, 6, 8, 10],
            chi: 16,
            g: 1,
            stabilize: true,
            inputs: 10,
            statevector_cap: 14,
            seed0: 1,
        }
    }
}

/// Depth and accuracy findings for one transform size.
#[derive(Clone, Debug)]
pub struct QftSizeReport {
    pub n: usize,
    /// Layer count of the unconstrained circuit.
    pub physical_depth: usize,
    /// Layer count of the nearest-neighbor compilation.
    pub compiled_layers: usize,
    /// Compiled layers that carry two-qubit gates.
    pub compiled_depth: usize,
    /// Worst `|1 - F|` of the compiled circuit against the transform
    /// oracle over the random dense inputs; absent beyond the dense caps.
    pub oracle_max_error: Option<f64>,
    /// Fidelity of the engine's final state against the transform of its
    /// random input; absent beyond the cap.
    pub mps_fidelity: Option<f64>,
}

/// Records plus per-size findings of the Fourier-transform benchmark.
#[derive(Clone, Debug)]
pub struct QftBenchOutput {
    pub preamble: Vec<String>,
    pub records: Vec<Record>,
    pub sizes: Vec<QftSizeReport>,
}

/// Random dense state with amplitudes uniform on the complex square,
/// normalized.
fn random_statevector(n: usize, seed: u64, index: u64) -> Result<Statevector> {
    let mut rng = substream(seed, DOMAIN_INPUT, index);
    let amps: Vec<crate::Complex64> = (0..1usize << n)
        .map(|_| crate::Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    Statevector::from_amplitudes(amps)?.normalized()
}

/// Benchmarks the nearest-neighbor Fourier transform: per size, reports
/// physical and compiled depths, checks the compiled circuit against the
/// dense transform oracle on random inputs, and evolves a random state
/// with the parallel engine. Size `i` uses seed `seed0 + i`.
pub fn qft_bench(cfg: &QftBenchConfig) -> Result<QftBenchOutput> {
    if cfg.sizes.is_empty() {
        return Err(Error::Config("no transform sizes given".into()));
    }
    let mut records = Vec::new();
    let mut sizes = Vec::new();
    for (idx, &n) in cfg.sizes.iter().enumerate() {
        let seed = cfg.seed0 + idx as u64;
        let circuit = qft_circuit(n)?;
        let compiled = circuit.compile()?;

        let dense_ok = n <= cfg.statevector_cap.min(DFT_QUBIT_CAP);
        let oracle_max_error = if dense_ok {
            let mut worst = 0.0f64;
            for i in 0..cfg.inputs {
                let input = random_statevector(n, seed, i as u64)?;
                let out = run_compiled(&compiled, &input)?;
                let want = dft_reference(&input)?;
                worst = worst.max((1.0 - fidelity(&out, &want)?).abs());
            }
            Some(worst)
        } else {
            None
        };

        let mut state = VidalMps::random_mps(n, QFT_INPUT_BOND, seed)?;
        let input_dense = if n <= cfg.statevector_cap {
            Some(state.to_statevector(cfg.statevector_cap)?)
        } else {
            None
        };
        for (ci, layer) in compiled.layers.iter().enumerate() {
            let trace = ptebd_apply_layer(&mut state, layer, cfg.chi, cfg.g, cfg.stabilize)?;
            records.push(make_record(seed, "ptebd", compiled.provenance[ci], ci, &trace, None));
        }
        let mps_fidelity = match &input_dense {
            Some(d) => Some(fidelity(
                &state.to_statevector(cfg.statevector_cap)?,
                &dft_reference(d)?,
            )?),
            None => None,
        };

        sizes.push(QftSizeReport {
            n,
            physical_depth: circuit.physical_depth(),
            compiled_layers: compiled.layers.len(),
            compiled_depth: compiled.compiled_depth(),
            oracle_max_error,
            mps_fidelity,
        });
    }
    let size_list: Vec<String> = cfg.sizes.iter().map(|s| s.to_string()).collect();
    let preamble = vec![
        "command=qft-bench".to_string(),
        format!("sizes={}", size_list.join(",")),
        format!("chi={}", cfg.chi),
        format!("g={}", cfg.g),
        format!("stabilize={}", cfg.stabilize),
        format!("inputs={}", cfg.inputs),
        format!("cap={}", cfg.statevector_cap),
        format!("seed0={}", cfg.seed0),
    ];
    Ok(QftBenchOutput { preamble, records, sizes })
}
