//! Circuit representation, benchmark families, and path compilation.
//!
//! A [`Circuit`] is a list of [`Layer`]s over `n` qubits with a geometry
//! tag. Within a layer, single-qubit gates apply first, then two-qubit
//! gates; no qubit may appear twice *within the same arity class*, so a
//! layer may rotate a qubit and then couple it. Both evolution engines and
//! the dense oracle honor exactly this ordering, which is what makes them
//! comparable layer by layer.
//!
//! Circuits built by the generators in [`families`] and [`qft`] address
//! qubits by their position on the one-dimensional simulation path. For
//! grid geometries that position comes from the snake ordering of
//! [`recompile::SnakePath`], and [`Circuit::compile`] turns the mirror-pair
//! couplings that the snake cannot keep adjacent into an explicit
//! SWAP schedule (see [`recompile`]).

pub mod families;
pub mod gates;
pub mod qft;
pub mod recompile;

use std::collections::HashSet;
use std::fmt::Write as _;

pub use gates::{standard_gate, unitarity_defect, Gate, GateKind, GateTargets};
pub use recompile::SnakePath;

use crate::error::{Error, Result};

/// Qubit connectivity the circuit is expressed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geometry {
    /// Nearest-neighbor chain; qubit ids are path positions.
    Line,
    /// `lx × ly` grid; qubit ids are snake-path positions.
    Grid { lx: usize, ly: usize },
}

/// One parallel slice of a circuit. Single-qubit gates act before
/// two-qubit gates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Layer {
    pub gates: Vec<Gate>,
}

impl Layer {
    pub fn new(gates: Vec<Gate>) -> Layer {
        Layer { gates }
    }

    pub fn single_qubit_gates(&self) -> impl Iterator<Item = &Gate> {
        self.gates.iter().filter(|g| !g.is_two_qubit())
    }

    pub fn two_qubit_gates(&self) -> impl Iterator<Item = &Gate> {
        self.gates.iter().filter(|g| g.is_two_qubit())
    }

    pub fn two_qubit_count(&self) -> usize {
        self.two_qubit_gates().count()
    }

    /// Checks target ranges and per-arity-class qubit disjointness.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let mut used_single = HashSet::new();
        let mut used_double = HashSet::new();
        for g in &self.gates {
            let used = if g.is_two_qubit() {
                &mut used_double
            } else {
                &mut used_single
            };
            for q in g.qubits() {
                if q >= n_qubits {
                    return Err(Error::InvalidArgument(format!(
                        "gate {} targets qubit {} of {}",
                        g.label(),
                        q,
                        n_qubits
                    )));
                }
                if !used.insert(q) {
                    return Err(Error::OverlappingGates(format!(
                        "qubit {} appears twice among {}-qubit gates",
                        q,
                        g.arity()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A circuit as generated: layers over `n_qubits` with geometry metadata
/// and the seed it was generated from (`None` for deterministic families).
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub family: String,
    pub n_qubits: usize,
    pub geometry: Geometry,
    pub seed: Option<u64>,
    pub layers: Vec<Layer>,
}

/// A circuit mapped onto the nearest-neighbor path: every two-qubit gate
/// couples adjacent positions.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledCircuit {
    pub source_family: String,
    pub n_qubits: usize,
    pub layers: Vec<Layer>,
    /// Source layer each compiled layer is attributed to, for reporting.
    /// Exact for layer-preserving compilations; for schedules that
    /// interleave two source layers the layer is attributed to the later
    /// one, and the Fourier-transform recompilation (which reorders gates
    /// globally) attributes each compiled layer to itself.
    pub provenance: Vec<usize>,
}

impl Circuit {
    pub fn physical_depth(&self) -> usize {
        self.layers.len()
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(|l| l.gates.len()).sum()
    }

    pub fn two_qubit_gate_count(&self) -> usize {
        self.layers.iter().map(|l| l.two_qubit_count()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::InvalidArgument("circuit needs at least one qubit".into()));
        }
        if self.family.is_empty() || self.family.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!(
                "family name {:?} must be a single token",
                self.family
            )));
        }
        if let Geometry::Grid { lx, ly } = self.geometry {
            if lx * ly != self.n_qubits {
                return Err(Error::InvalidArgument(format!(
                    "grid {}x{} does not hold {} qubits",
                    lx, ly, self.n_qubits
                )));
            }
        }
        for layer in &self.layers {
            layer.validate(self.n_qubits)?;
        }
        Ok(())
    }

    /// Maps the circuit onto the nearest-neighbor path.
    ///
    /// Line circuits must already be nearest-neighbor, except the Fourier
    /// transform, which is rebuilt as its linear-nearest-neighbor cascade.
    /// Grid circuits pass vertical couplings through (the snake keeps them
    /// adjacent) and expand each horizontal pair of layers into the SWAP
    /// schedule of [`recompile`].
    pub fn compile(&self) -> Result<CompiledCircuit> {
        self.validate()?;
        match self.geometry {
            Geometry::Line if self.family == qft::FAMILY_QFT => qft::compile_lnn(self),
            Geometry::Line => passthrough_compile(self),
            Geometry::Grid { .. } => recompile::recompile_grid(self),
        }
    }
}

impl CompiledCircuit {
    /// Number of layers containing at least one two-qubit gate. Layers of
    /// only single-qubit gates are free on hardware-style depth counts and
    /// are excluded.
    pub fn compiled_depth(&self) -> usize {
        self.layers.iter().filter(|l| l.two_qubit_count() > 0).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.provenance.len() != self.layers.len() {
            return Err(Error::InvalidArgument(format!(
                "{} provenance entries for {} layers",
                self.provenance.len(),
                self.layers.len()
            )));
        }
        for layer in &self.layers {
            layer.validate(self.n_qubits)?;
            for g in layer.two_qubit_gates() {
                let q = g.qubits();
                if q[0].abs_diff(q[1]) != 1 {
                    return Err(Error::UnsupportedLayout(format!(
                        "compiled gate {} couples non-adjacent positions {} and {}",
                        g.label(),
                        q[0],
                        q[1]
                    )));
                }
            }
        }
        Ok(())
    }
}

fn passthrough_compile(c: &Circuit) -> Result<CompiledCircuit> {
    for (l, layer) in c.layers.iter().enumerate() {
        for g in layer.two_qubit_gates() {
            let q = g.qubits();
            if q[0].abs_diff(q[1]) != 1 {
                return Err(Error::UnsupportedLayout(format!(
                    "layer {} couples non-adjacent path positions {} and {}",
                    l, q[0], q[1]
                )));
            }
        }
    }
    Ok(CompiledCircuit {
        source_family: c.family.clone(),
        n_qubits: c.n_qubits,
        layers: c.layers.clone(),
        provenance: (0..c.layers.len()).collect(),
    })
}

/// Greedy as-soon-as-possible layering of a gate sequence.
///
/// Respects the sequential order on each qubit and the layer execution
/// rule (single-qubit gates before two-qubit gates): a two-qubit gate may
/// share a layer with an *earlier* single-qubit gate on the same qubit,
/// but a single-qubit gate following a two-qubit gate must start a later
/// layer.
pub(crate) fn layered(n_qubits: usize, gates: Vec<Gate>) -> Vec<Layer> {
    // Earliest layer allowed for the next single-/two-qubit gate per qubit.
    let mut next_single = vec![0usize; n_qubits];
    let mut next_double = vec![0usize; n_qubits];
    let mut layers: Vec<Layer> = Vec::new();
    for g in gates {
        let two = g.is_two_qubit();
        let t = g
            .qubits()
            .iter()
            .map(|&q| if two { next_double[q] } else { next_single[q] })
            .max()
            .expect("gates have targets");
        for q in g.qubits() {
            if two {
                next_double[q] = t + 1;
                next_single[q] = t + 1;
            } else {
                next_single[q] = t + 1;
                next_double[q] = next_double[q].max(t);
            }
        }
        if t == layers.len() {
            layers.push(Layer::default());
        }
        layers[t].gates.push(g);
    }
    layers
}

/// Renders a circuit in the line-oriented text format:
///
/// ```text
/// family rqc1d
/// qubits 5
/// geometry line
/// seed 3
/// depth 2
/// gate 0 su2 0 1.5 2.25 0.125
/// gate 0 cz 0 1
/// gate 1 h 4
/// end
/// ```
///
/// One `gate` line per gate: layer index, label, targets, then
/// parameters. Floats use the shortest decimal that round-trips, so
/// writing and re-parsing reproduces the circuit exactly.
pub fn write_circuit_text(c: &Circuit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "family {}", c.family);
    let _ = writeln!(out, "qubits {}", c.n_qubits);
    match c.geometry {
        Geometry::Line => {
            let _ = writeln!(out, "geometry line");
        }
        Geometry::Grid { lx, ly } => {
            let _ = writeln!(out, "geometry grid {} {}", lx, ly);
        }
    }
    match c.seed {
        Some(s) => {
            let _ = writeln!(out, "seed {}", s);
        }
        None => {
            let _ = writeln!(out, "seed none");
        }
    }
    let _ = writeln!(out, "depth {}", c.layers.len());
    for (l, layer) in c.layers.iter().enumerate() {
        for g in &layer.gates {
            let _ = write!(out, "gate {} {}", l, g.label());
            for q in g.qubits() {
                let _ = write!(out, " {}", q);
            }
            for p in g.params() {
                let _ = write!(out, " {}", p);
            }
            out.push('\n');
        }
    }
    out.push_str("end\n");
    out
}

/// Parses the format written by [`write_circuit_text`]. Blank lines and
/// `#` comments are allowed; errors carry the 1-based line number.
pub fn parse_circuit_text(text: &str) -> Result<Circuit> {
    let err = |line: usize, message: String| Error::Parse { line, message };
    let mut family: Option<String> = None;
    let mut qubits: Option<usize> = None;
    let mut geometry: Option<Geometry> = None;
    let mut seed: Option<Option<u64>> = None;
    let mut depth: Option<usize> = None;
    let mut layers: Vec<Layer> = Vec::new();
    let mut ended = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if ended {
            return Err(err(line_no, "content after 'end'".into()));
        }
        let mut tok = line.split_whitespace();
        let key = tok.next().expect("non-empty line");
        let rest: Vec<&str> = tok.collect();
        match key {
            "family" => {
                let [name] = rest[..] else {
                    return Err(err(line_no, "family takes one token".into()));
                };
                family = Some(name.to_string());
            }
            "qubits" => {
                let [n] = rest[..] else {
                    return Err(err(line_no, "qubits takes one integer".into()));
                };
                qubits = Some(
                    n.parse()
                        .map_err(|_| err(line_no, format!("bad qubit count {n:?}")))?,
                );
            }
            "geometry" => {
                geometry = Some(match rest[..] {
                    ["line"] => Geometry::Line,
                    ["grid", lx, ly] => Geometry::Grid {
                        lx: lx
                            .parse()
                            .map_err(|_| err(line_no, format!("bad grid extent {lx:?}")))?,
                        ly: ly
                            .parse()
                            .map_err(|_| err(line_no, format!("bad grid extent {ly:?}")))?,
                    },
                    _ => return Err(err(line_no, "geometry is 'line' or 'grid LX LY'".into())),
                });
            }
            "seed" => {
                let [s] = rest[..] else {
                    return Err(err(line_no, "seed takes one token".into()));
                };
                seed = Some(if s == "none" {
                    None
                } else {
                    Some(
                        s.parse()
                            .map_err(|_| err(line_no, format!("bad seed {s:?}")))?,
                    )
                });
            }
            "depth" => {
                let [d] = rest[..] else {
                    return Err(err(line_no, "depth takes one integer".into()));
                };
                let d: usize = d
                    .parse()
                    .map_err(|_| err(line_no, format!("bad depth {d:?}")))?;
                depth = Some(d);
                layers = vec![Layer::default(); d];
            }
            "gate" => {
                let d = depth.ok_or_else(|| err(line_no, "gate before depth".into()))?;
                if rest.len() < 2 {
                    return Err(err(line_no, "gate takes: layer label targets...".into()));
                }
                let layer: usize = rest[0]
                    .parse()
                    .map_err(|_| err(line_no, format!("bad layer index {:?}", rest[0])))?;
                if layer >= d {
                    return Err(err(line_no, format!("layer {layer} outside depth {d}")));
                }
                let label = rest[1];
                // Targets are the leading integer tokens; the rest are
                // float parameters.
                let mut targets = Vec::new();
                let mut params = Vec::new();
                for t in &rest[2..] {
                    if params.is_empty() {
                        if let Ok(q) = t.parse::<usize>() {
                            targets.push(q);
                            continue;
                        }
                    }
                    params.push(
                        t.parse::<f64>()
                            .map_err(|_| err(line_no, format!("bad parameter {t:?}")))?,
                    );
                }
                let gate = standard_gate(label, &targets, &params)
                    .map_err(|e| err(line_no, e.to_string()))?;
                layers[layer].gates.push(gate);
            }
            "end" => {
                if !rest.is_empty() {
                    return Err(err(line_no, "end takes no tokens".into()));
                }
                ended = true;
            }
            other => return Err(err(line_no, format!("unknown directive {other:?}"))),
        }
    }
    if !ended {
        return Err(err(text.lines().count(), "missing 'end'".into()));
    }
    let circuit = Circuit {
        family: family.ok_or_else(|| err(0, "missing 'family'".into()))?,
        n_qubits: qubits.ok_or_else(|| err(0, "missing 'qubits'".into()))?,
        geometry: geometry.ok_or_else(|| err(0, "missing 'geometry'".into()))?,
        seed: seed.ok_or_else(|| err(0, "missing 'seed'".into()))?,
        layers,
    };
    circuit.validate()?;
    Ok(circuit)
}
