//! Experiment configuration: a flat key=value format shared by config
//! files and command-line overrides, resolved into [`RunConfig`].

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::circuits::families::{
    pqc_1d, pqc_2d, rqc_1d, rqc_2d, FAMILY_PQC_1D, FAMILY_PQC_2D, FAMILY_RQC_1D, FAMILY_RQC_2D,
};
use crate::circuits::qft::{qft_circuit, FAMILY_QFT};
use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::mps::VidalMps;

/// Configuration key for the canonical-form convergence experiment, which
/// has no circuit family behind it.
pub const FAMILY_PTSU_CONVERGENCE: &str = "ptsu-convergence";

/// Bond dimension of the random input state used for Fourier-transform
/// runs; the all-zeros input would make the transform a trivial product
/// state.
pub const QFT_INPUT_BOND: usize = 10;

/// Experiment family selected by a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Rqc1d,
    Pqc1d,
    Rqc2d,
    Pqc2d,
    Qft,
    PtsuConvergence,
}

impl Family {
    pub fn is_grid(self) -> bool {
        matches!(self, Family::Rqc2d | Family::Pqc2d)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Family> {
        match s {
            FAMILY_RQC_1D => Ok(Family::Rqc1d),
            FAMILY_PQC_1D => Ok(Family::Pqc1d),
            FAMILY_RQC_2D => Ok(Family::Rqc2d),
            FAMILY_PQC_2D => Ok(Family::Pqc2d),
            FAMILY_QFT => Ok(Family::Qft),
            FAMILY_PTSU_CONVERGENCE => Ok(Family::PtsuConvergence),
            other => Err(Error::Config(format!(
                "unknown family {:?}; expected one of {}, {}, {}, {}, {}, {}",
                other,
                FAMILY_RQC_1D,
                FAMILY_PQC_1D,
                FAMILY_RQC_2D,
                FAMILY_PQC_2D,
                FAMILY_QFT,
                FAMILY_PTSU_CONVERGENCE
            ))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Rqc1d => FAMILY_RQC_1D,
            Family::Pqc1d => FAMILY_PQC_1D,
            Family::Rqc2d => FAMILY_RQC_2D,
            Family::Pqc2d => FAMILY_PQC_2D,
            Family::Qft => FAMILY_QFT,
            Family::PtsuConvergence => FAMILY_PTSU_CONVERGENCE,
        })
    }
}

/// Which evolution engine(s) a run drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineChoice {
    Ptebd,
    Sequential,
    Both,
}

/// A single engine; `Both` expands to the two in this order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Ptebd,
    Sequential,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Ptebd => "ptebd",
            Engine::Sequential => "sequential",
        }
    }
}

impl EngineChoice {
    pub fn engines(self) -> Vec<Engine> {
        match self {
            EngineChoice::Ptebd => vec![Engine::Ptebd],
            EngineChoice::Sequential => vec![Engine::Sequential],
            EngineChoice::Both => vec![Engine::Ptebd, Engine::Sequential],
        }
    }
}

impl FromStr for EngineChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<EngineChoice> {
        match s {
            "ptebd" => Ok(EngineChoice::Ptebd),
            "sequential" => Ok(EngineChoice::Sequential),
            "both" => Ok(EngineChoice::Both),
            other => Err(Error::Config(format!(
                "unknown engine {:?}; expected ptebd, sequential, or both",
                other
            ))),
        }
    }
}

impl fmt::Display for EngineChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineChoice::Ptebd => "ptebd",
            EngineChoice::Sequential => "sequential",
            EngineChoice::Both => "both",
        })
    }
}

/// Fully resolved experiment parameters.
///
/// Every field maps to one key of the flat key=value config format; the
/// same keys double as command-line override flags. Family-specific
/// constraints (parities, depth multiples) are enforced by the circuit
/// constructors when the run starts.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub family: Family,
    /// Qubit count for path families and the Fourier transform.
    pub n: usize,
    /// Grid extents, used by the 2D families only.
    pub lx: usize,
    pub ly: usize,
    /// Physical circuit depth.
    pub depth: usize,
    /// Bond-rank cap.
    pub chi: usize,
    /// Restoration steps per truncating layer of the parallel engine.
    pub g: usize,
    pub engine: EngineChoice,
    /// Rescale bond weights after truncation to compensate lost norm.
    pub stabilize: bool,
    /// One independent run per seed; also the instance base seed for the
    /// convergence experiment.
    pub seeds: Vec<u64>,
    /// Worker threads; 0 keeps the library default.
    pub threads: usize,
    /// Dense-oracle comparisons run only while the qubit count stays at or
    /// below this cap.
    pub statevector_cap: usize,
    /// CSV destination; standard output when unset. Not part of the
    /// experiment identity, so it is excluded from the embedded config.
    pub output: Option<PathBuf>,
    /// Independent instances of the convergence experiment.
    pub instances: usize,
    /// Restoration steps measured by the convergence experiment.
    pub steps: usize,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            family: Family::Rqc1d,
            n: 13,
            lx: 4,
            ly: 4,
            depth: 20,
            chi: 16,
            g: 1,
            engine: EngineChoice::Both,
            stabilize: true,
            seeds: vec![1, 2, 3],
            threads: 0,
            statevector_cap: 14,
            output: None,
            instances: 20,
            steps: 6,
        }
    }
}

fn parse_number<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(Error::Config(format!("{key}: cannot parse {other:?} as a flag"))),
    }
}

/// Comma-separated non-empty list of unsigned integers.
pub fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .map(|tok| parse_number(key, tok.trim()))
        .collect::<Result<Vec<_>>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("{key}: the list is empty")));
    }
    Ok(items)
}

/// Seed list: comma-separated tokens, each a number or an inclusive
/// `a..b` range.
fn parse_seed_list(value: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for tok in value.split(',') {
        let tok = tok.trim();
        if let Some((a, b)) = tok.split_once("..") {
            let a: u64 = parse_number("seeds", a.trim())?;
            let b: u64 = parse_number("seeds", b.trim())?;
            if b < a {
                return Err(Error::Config(format!("seeds: empty range {tok:?}")));
            }
            seeds.extend(a..=b);
        } else {
            seeds.push(parse_number("seeds", tok)?);
        }
    }
    if seeds.is_empty() {
        return Err(Error::Config("seeds: the list is empty".into()));
    }
    Ok(seeds)
}

impl RunConfig {
    /// Applies one key=value pair; shared by the config-file parser and
    /// the command-line override flags.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "family" => self.family = value.parse()?,
            "n" => self.n = parse_number("n", value)?,
            "lx" => self.lx = parse_number("lx", value)?,
            "ly" => self.ly = parse_number("ly", value)?,
            "depth" => self.depth = parse_number("depth", value)?,
            "chi" => self.chi = parse_number("chi", value)?,
            "g" => self.g = parse_number("g", value)?,
            "engine" => self.engine = value.parse()?,
            "stabilize" => self.stabilize = parse_bool("stabilize", value)?,
            "seeds" => self.seeds = parse_seed_list(value)?,
            "threads" => self.threads = parse_number("threads", value)?,
            "cap" => self.statevector_cap = parse_number("cap", value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            "instances" => self.instances = parse_number("instances", value)?,
            "steps" => self.steps = parse_number("steps", value)?,
            other => {
                return Err(Error::Config(format!("unknown config key {other:?}")));
            }
        }
        Ok(())
    }

    /// Qubit count of the configured system.
    pub fn qubits(&self) -> usize {
        if self.family.is_grid() {
            self.lx * self.ly
        } else {
            self.n
        }
    }

    /// Cheap cross-field checks; family parity rules stay with the
    /// circuit constructors.
    pub fn validate(&self) -> Result<()> {
        if self.chi == 0 {
            return Err(Error::Config("chi must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.qubits() == 0 {
            return Err(Error::Config("the system has no qubits".into()));
        }
        if self.statevector_cap > crate::oracle::STATEVECTOR_QUBIT_CAP {
            return Err(Error::Config(format!(
                "cap {} exceeds the dense-state limit of {} qubits",
                self.statevector_cap,
                crate::oracle::STATEVECTOR_QUBIT_CAP
            )));
        }
        if self.family == Family::PtsuConvergence && self.instances == 0 {
            return Err(Error::Config("instances must be positive".into()));
        }
        Ok(())
    }

    /// The resolved config as key=value lines, one per field, in a fixed
    /// order. Reparsing these lines reproduces the config (minus the
    /// output path, which is not part of the experiment identity).
    pub fn preamble(&self) -> Vec<String> {
        let seeds: Vec<String> = self.seeds.iter().map(|s| s.to_string()).collect();
        vec![
            format!("family={}", self.family),
            format!("n={}", self.n),
            format!("lx={}", self.lx),
            format!("ly={}", self.ly),
            format!("depth={}", self.depth),
            format!("chi={}", self.chi),
            format!("g={}", self.g),
            format!("engine={}", self.engine),
            format!("stabilize={}", self.stabilize),
            format!("seeds={}", seeds.join(",")),
            format!("threads={}", self.threads),
            format!("cap={}", self.statevector_cap),
            format!("instances={}", self.instances),
            format!("steps={}", self.steps),
        ]
    }

    /// Builds the configured circuit for one seed.
    pub fn build_circuit(&self, seed: u64) -> Result<Circuit> {
        match self.family {
            Family::Rqc1d => rqc_1d(self.n, self.depth, seed),
            Family::Pqc1d => pqc_1d(self.n, self.depth, seed),
            Family::Rqc2d => rqc_2d(self.lx, self.ly, self.depth, seed),
            Family::Pqc2d => pqc_2d(self.lx, self.ly, self.depth, seed),
            Family::Qft => qft_circuit(self.n),
            Family::PtsuConvergence => Err(Error::Config(
                "the convergence experiment has no circuit; run it directly".into(),
            )),
        }
    }

    /// Initial state for one seed: the all-zeros product state, except for
    /// Fourier-transform runs, which start from a seeded random state of
    /// bond dimension [`QFT_INPUT_BOND`].
    pub fn initial_state(&self, seed: u64) -> Result<VidalMps> {
        match self.family {
            Family::Qft => VidalMps::random_mps(self.n, QFT_INPUT_BOND, seed),
            _ => VidalMps::zero_state(self.qubits()),
        }
    }
}

/// Parses the flat key=value config format. Blank lines and lines
/// starting with `#` are ignored; later keys override earlier ones.
/// Unknown keys and malformed values report their line number.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: format!("expected key=value, got {line:?}"),
        })?;
        cfg.apply_kv(key, value).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
    }
    Ok(cfg)
}

/// Reads and parses a config file.
pub fn parse_config_file(path: &std::path::Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}
