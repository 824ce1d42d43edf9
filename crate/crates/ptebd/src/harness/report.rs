//! Per-layer experiment records, their CSV form, and deterministic
//! aggregation into summaries.
//!
//! A record file is a `#`-prefixed preamble of resolved config lines, a
//! header row, and one comma-separated row per record. Floats print via
//! the shortest round-trip representation, so replaying a config
//! reproduces the file byte for byte apart from the `elapsed_ns` column.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};

/// Column order of the CSV schema; field order of [`Record`].
pub const RECORD_HEADER: &str = "seed,engine,layer,compiled_layer,norm_n,norm_nstar,eps_global,\
     fidelity_lb_tight,fidelity_lb_loose,canonical_distance,fidelity_vs_oracle,elapsed_ns,\
     parallel_rounds";

/// Pre-step canonical distance below which the norm bounds of a
/// truncating step are checked; above it the discarded weights are not
/// Schmidt weights and the step is only counted.
pub const BOUND_CHECK_DISTANCE: f64 = 1e-6;

/// Slack applied to every norm-bound comparison.
pub const BOUND_SLACK: f64 = 1e-9;

/// One per-layer measurement row.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub seed: u64,
    pub engine: String,
    /// Source layer in the physical circuit.
    pub layer: usize,
    /// Layer index in the compiled circuit actually executed.
    pub compiled_layer: usize,
    /// State norm after truncation, before stabilization.
    pub norm_n: f64,
    /// State norm after stabilization.
    pub norm_nstar: f64,
    /// Total relative discarded weight of the step.
    pub eps_global: f64,
    pub fidelity_lb_tight: f64,
    pub fidelity_lb_loose: f64,
    pub canonical_distance: f64,
    /// Squared overlap with the dense oracle, present while the qubit
    /// count stays within the configured cap.
    pub fidelity_vs_oracle: Option<f64>,
    pub elapsed_ns: u64,
    pub parallel_rounds: usize,
}

impl Record {
    fn to_csv_line(&self) -> String {
        let fidelity = match self.fidelity_vs_oracle {
            Some(f) => f.to_string(),
            None => String::new(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.seed,
            self.engine,
            self.layer,
            self.compiled_layer,
            self.norm_n,
            self.norm_nstar,
            self.eps_global,
            self.fidelity_lb_tight,
            self.fidelity_lb_loose,
            self.canonical_distance,
            fidelity,
            self.elapsed_ns,
            self.parallel_rounds
        )
    }

    fn parse_csv_line(line: &str, lineno: usize) -> Result<Record> {
        let bad = |message: String| Error::Parse { line: lineno, message };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(bad(format!("expected 13 fields, got {}", fields.len())));
        }
        fn num<T: std::str::FromStr>(tok: &str, name: &str, lineno: usize) -> Result<T> {
            tok.parse::<T>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("{name}: cannot parse {tok:?}"),
            })
        }
        let engine = fields[1].to_string();
        if engine.is_empty() {
            return Err(bad("engine field is empty".into()));
        }
        let fidelity_vs_oracle = if fields[10].is_empty() {
            None
        } else {
            Some(num(fields[10], "fidelity_vs_oracle", lineno)?)
        };
        Ok(Record {
            seed: num(fields[0], "seed", lineno)?,
            engine,
            layer: num(fields[2], "layer", lineno)?,
            compiled_layer: num(fields[3], "compiled_layer", lineno)?,
            norm_n: num(fields[4], "norm_n", lineno)?,
            norm_nstar: num(fields[5], "norm_nstar", lineno)?,
            eps_global: num(fields[6], "eps_global", lineno)?,
            fidelity_lb_tight: num(fields[7], "fidelity_lb_tight", lineno)?,
            fidelity_lb_loose: num(fields[8], "fidelity_lb_loose", lineno)?,
            canonical_distance: num(fields[9], "canonical_distance", lineno)?,
            fidelity_vs_oracle,
            elapsed_ns: num(fields[11], "elapsed_ns", lineno)?,
            parallel_rounds: num(fields[12], "parallel_rounds", lineno)?,
        })
    }
}

/// Writes a record file: `# `-prefixed preamble lines, the header row,
/// then one row per record.
pub fn write_records<W: Write>(
    mut w: W,
    preamble: &[String],
    records: &[Record],
) -> Result<()> {
    for line in preamble {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "{RECORD_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.to_csv_line())?;
    }
    Ok(())
}

/// Reads a record file back: returns the preamble lines (with the `#`
/// marker stripped, so they reparse as config text) and the records.
/// Parse failures carry 1-based line numbers.
pub fn read_records<R: Read>(r: R) -> Result<(Vec<String>, Vec<Record>)> {
    let reader = BufReader::new(r);
    let mut preamble = Vec::new();
    let mut records = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if saw_header {
                return Err(Error::Parse {
                    line: lineno,
                    message: "comment after the header row".into(),
                });
            }
            preamble.push(rest.trim().to_string());
            continue;
        }
        if !saw_header {
            if trimmed != RECORD_HEADER {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("unexpected header {trimmed:?}"),
                });
            }
            saw_header = true;
            continue;
        }
        records.push(Record::parse_csv_line(trimmed, lineno)?);
    }
    if !saw_header && !records.is_empty() {
        unreachable!("records require a header");
    }
    Ok((preamble, records))
}

/// Mean, minimum, and maximum over a non-empty set of values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanMinMax {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl MeanMinMax {
    pub fn from_values(values: &[f64]) -> Option<MeanMinMax> {
        if values.is_empty() {
            return None;
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        Some(MeanMinMax { mean: sum / values.len() as f64, min, max, count: values.len() })
    }
}

/// Aggregates for one engine across all its seed series.
#[derive(Clone, Debug)]
pub struct EngineSummary {
    pub engine: String,
    pub seeds: usize,
    pub rows: usize,
    /// Final-row oracle fidelity per seed, when the oracle column is
    /// present.
    pub final_fidelity: Option<MeanMinMax>,
    /// Final-row stabilized norm per seed.
    pub final_norm_nstar: Option<MeanMinMax>,
    /// Running product of per-step truncation bounds `max(lb_tight, 0)`,
    /// final value per seed: the cheap whole-run fidelity estimate.
    pub fidelity_bound_product: Option<MeanMinMax>,
    /// Mean wall time per layer, first compiled layer of each series
    /// excluded as warm-up. Absent when every series has a single row.
    pub mean_layer_elapsed_ns: Option<f64>,
    /// Distinct round counts observed on truncating steps.
    pub truncating_rounds: BTreeSet<usize>,
    pub truncating_steps: usize,
    /// Truncating steps whose pre-step canonical distance was small
    /// enough for the norm bounds to apply.
    pub checked_steps: usize,
    /// Checked steps where the truncated norm left
    /// `[(1-√(2ε)) n_prev, n_prev]`.
    pub truncated_norm_violations: usize,
    /// Checked steps where the stabilized norm left
    /// `[(1-√(2ε)) n_prev, (1-ε)^{-1/2} n_prev]`. These are the exact
    /// per-bond bounds relaxed to what the total discarded weight column
    /// can support; the in-process reports carry the sharp version.
    pub stabilized_norm_violations: usize,
}

/// Whole-file aggregation: one [`EngineSummary`] per engine, in first
/// appearance order.
#[derive(Clone, Debug, Default)]
pub struct Summary {
    pub engines: Vec<EngineSummary>,
}

impl Summary {
    /// Total norm-bound violations across engines.
    pub fn violations(&self) -> usize {
        self.engines
            .iter()
            .map(|e| e.truncated_norm_violations + e.stabilized_norm_violations)
            .sum()
    }
}

fn fmt_stat(name: &str, engine: &str, m: &Option<MeanMinMax>, out: &mut String) {
    use std::fmt::Write as _;
    match m {
        Some(v) => {
            let _ = writeln!(
                out,
                "{engine}.{name}.mean={}\n{engine}.{name}.min={}\n{engine}.{name}.max={}",
                v.mean, v.min, v.max
            );
        }
        None => {
            let _ = writeln!(out, "{engine}.{name}=absent");
        }
    }
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.engines.is_empty() {
            return writeln!(f, "empty summary: no records");
        }
        let mut out = String::new();
        for e in &self.engines {
            use std::fmt::Write as _;
            let name = &e.engine;
            let _ = writeln!(out, "{name}.seeds={}", e.seeds);
            let _ = writeln!(out, "{name}.rows={}", e.rows);
            fmt_stat("final_fidelity", name, &e.final_fidelity, &mut out);
            fmt_stat("final_norm_nstar", name, &e.final_norm_nstar, &mut out);
            fmt_stat("fidelity_bound_product", name, &e.fidelity_bound_product, &mut out);
            match e.mean_layer_elapsed_ns {
                Some(v) => {
                    let _ = writeln!(out, "{name}.mean_layer_elapsed_ns={v}");
                }
                None => {
                    let _ = writeln!(out, "{name}.mean_layer_elapsed_ns=absent");
                }
            }
            let rounds: Vec<String> =
                e.truncating_rounds.iter().map(|r| r.to_string()).collect();
            let _ = writeln!(out, "{name}.truncating_rounds={}", rounds.join(","));
            let _ = writeln!(out, "{name}.truncating_steps={}", e.truncating_steps);
            let _ = writeln!(out, "{name}.checked_steps={}", e.checked_steps);
            let _ = writeln!(
                out,
                "{name}.truncated_norm_violations={}",
                e.truncated_norm_violations
            );
            let _ = writeln!(
                out,
                "{name}.stabilized_norm_violations={}",
                e.stabilized_norm_violations
            );
        }
        f.write_str(&out)
    }
}

/// Deterministic aggregation of records grouped by engine and seed.
///
/// Each (engine, seed) series is read in file order. Truncating steps
/// (positive discarded weight) whose previous row left the state close to
/// canonical form are checked against the norm bounds relative to the
/// previous stabilized norm; steps outside that regime are counted but
/// not checked. The initial state of every series is taken as canonical
/// with norm 1.
pub fn summarize(records: &[Record]) -> Summary {
    let mut engines: Vec<String> = Vec::new();
    for r in records {
        if !engines.contains(&r.engine) {
            engines.push(r.engine.clone());
        }
    }
    let mut out = Summary::default();
    for engine in engines {
        let rows: Vec<&Record> = records.iter().filter(|r| r.engine == engine).collect();
        let mut seeds: Vec<u64> = Vec::new();
        for r in &rows {
            if !seeds.contains(&r.seed) {
                seeds.push(r.seed);
            }
        }
        let mut final_fidelity = Vec::new();
        let mut final_norm = Vec::new();
        let mut bound_products = Vec::new();
        let mut elapsed = Vec::new();
        let mut truncating_rounds = BTreeSet::new();
        let mut truncating_steps = 0usize;
        let mut checked_steps = 0usize;
        let mut truncated_norm_violations = 0usize;
        let mut stabilized_norm_violations = 0usize;
        for &seed in &seeds {
            let series: Vec<&&Record> = rows.iter().filter(|r| r.seed == seed).collect();
            let mut prev_nstar = 1.0f64;
            let mut prev_distance = 0.0f64;
            let mut product = 1.0f64;
            for (i, r) in series.iter().enumerate() {
                product *= r.fidelity_lb_tight.max(0.0);
                if i > 0 {
                    elapsed.push(r.elapsed_ns as f64);
                }
                if r.eps_global > 0.0 {
                    truncating_steps += 1;
                    truncating_rounds.insert(r.parallel_rounds);
                    if prev_distance < BOUND_CHECK_DISTANCE {
                        checked_steps += 1;
                        let root = (2.0 * r.eps_global).sqrt();
                        let n_rel = r.norm_n / prev_nstar;
                        if n_rel < 1.0 - root - BOUND_SLACK || n_rel > 1.0 + BOUND_SLACK {
                            truncated_norm_violations += 1;
                        }
                        let nstar_rel = r.norm_nstar / prev_nstar;
                        let nstar_ub = (1.0 - r.eps_global).powf(-0.5);
                        if nstar_rel < 1.0 - root - BOUND_SLACK
                            || nstar_rel > nstar_ub + BOUND_SLACK
                        {
                            stabilized_norm_violations += 1;
                        }
                    }
                }
                prev_nstar = r.norm_nstar;
                prev_distance = r.canonical_distance;
            }
            if let Some(last) = series.last() {
                if let Some(f) = last.fidelity_vs_oracle {
                    final_fidelity.push(f);
                }
                final_norm.push(last.norm_nstar);
                bound_products.push(product);
            }
        }
        out.engines.push(EngineSummary {
            engine,
            seeds: seeds.len(),
            rows: rows.len(),
            final_fidelity: MeanMinMax::from_values(&final_fidelity),
            final_norm_nstar: MeanMinMax::from_values(&final_norm),
            fidelity_bound_product: MeanMinMax::from_values(&bound_products),
            mean_layer_elapsed_ns: MeanMinMax::from_values(&elapsed).map(|m| m.mean),
            truncating_rounds,
            truncating_steps,
            checked_steps,
            truncated_norm_violations,
            stabilized_norm_violations,
        });
    }
    out
}

/// Reads a record file and aggregates it.
pub fn report_summary<R: Read>(r: R) -> Result<Summary> {
    let (_preamble, records) = read_records(r)?;
    Ok(summarize(&records))
}
