//! Benchmark circuit generators.
//!
//! Four families over two geometries:
//!
//! * [`rqc_1d`]: random single-qubit rotations on every qubit followed by a
//!   brick-wall of CZ gates, alternating offset per layer.
//! * [`pqc_1d`]: a dimer-preparation layer, then alternating brick-walls of
//!   eSWAP gates with random angles (a Heisenberg variational ansatz with
//!   randomized parameters).
//! * [`rqc_2d`] / [`pqc_2d`]: the grid extensions. Two-qubit couplings
//!   cycle through four patterns: vertical pairs starting at even rows
//!   (A), vertical starting at odd rows (B), horizontal starting at even
//!   columns (C), horizontal starting at odd columns (D). Odd grid extents
//!   leave the far edge uncovered in the corresponding patterns.
//!
//! Gate parameters are drawn from per-gate counter-based RNG substreams,
//! so a circuit is a pure function of `(family, sizes, depth, seed)` and
//! any sub-range of layers can be regenerated independently.

use rand::Rng;

use super::gates::Gate;
use super::recompile::SnakePath;
use super::{Circuit, Geometry, Layer};
use crate::error::{Error, Result};
use crate::rng::{substream, DOMAIN_GATE};

pub const FAMILY_RQC_1D: &str = "rqc1d";
pub const FAMILY_PQC_1D: &str = "pqc1d";
pub const FAMILY_RQC_2D: &str = "rqc2d";
pub const FAMILY_PQC_2D: &str = "pqc2d";

/// Marks a substream index as belonging to a two-qubit gate so that a
/// single-qubit gate at the same (layer, anchor) draws different numbers.
const TWO_QUBIT_STREAM_BIT: u64 = 1 << 55;

fn gate_stream(seed: u64, n_qubits: usize, layer: usize, anchor: usize, two_qubit: bool) -> impl Rng {
    let mut index = (layer as u64) * (n_qubits as u64) + anchor as u64;
    if two_qubit {
        index |= TWO_QUBIT_STREAM_BIT;
    }
    substream(seed, DOMAIN_GATE, index)
}

/// Uniform draw over `[0, π]` for the axis polar angle, then `[0, 2π)`
/// twice for the rotation angle and axis azimuth.
fn draw_su2(seed: u64, n_qubits: usize, layer: usize, qubit: usize) -> Gate {
    let mut rng = gate_stream(seed, n_qubits, layer, qubit, false);
    let alpha = std::f64::consts::PI * rng.gen::<f64>();
    let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    let phi = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    Gate::random_su2(qubit, alpha, theta, phi)
}

fn draw_eswap(seed: u64, n_qubits: usize, layer: usize, a: usize, b: usize) -> Result<Gate> {
    let mut rng = gate_stream(seed, n_qubits, layer, a.min(b), true);
    let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    Gate::eswap(a, b, theta)
}

/// Random chain circuit: every physical layer rotates all qubits with
/// independent random SU(2) gates, then entangles with CZ on pairs
/// `(0,1),(2,3),…` for odd layers `l = 1, 3, …` and `(1,2),(3,4),…` for
/// even layers.
///
/// `n` must be odd and at least 3; `depth` must be even and nonzero.
pub fn rqc_1d(n: usize, depth: usize, seed: u64) -> Result<Circuit> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "rqc1d needs an odd qubit count of at least 3, got {n}"
        )));
    }
    if depth == 0 || depth % 2 == 1 {
        return Err(Error::InvalidArgument(format!(
            "rqc1d needs a positive even depth, got {depth}"
        )));
    }
    let mut layers = Vec::with_capacity(depth);
    for l in 1..=depth {
        let ordinal = l - 1;
        let mut gates: Vec<Gate> = (0..n).map(|q| draw_su2(seed, n, ordinal, q)).collect();
        let start = if l % 2 == 1 { 0 } else { 1 };
        for a in (start..n - 1).step_by(2) {
            gates.push(Gate::cz(a, a + 1)?);
        }
        layers.push(Layer::new(gates));
    }
    let circuit = Circuit {
        family: FAMILY_RQC_1D.into(),
        n_qubits: n,
        geometry: Geometry::Line,
        seed: Some(seed),
        layers,
    };
    circuit.validate()?;
    Ok(circuit)
}

/// Parametrized chain circuit: layer 0 prepares singlet dimers on
/// `(0,1),(2,3),…`, then `depth` layers of eSWAP gates with random angles
/// on pairs `(1,2),(3,4),…` for odd layers and `(0,1),(2,3),…` for even
/// layers. The returned circuit has `depth + 1` physical layers.
///
/// `n` and `depth` must both be even, `n ≥ 4`, `depth ≥ 2`.
pub fn pqc_1d(n: usize, depth: usize, seed: u64) -> Result<Circuit> {
    if n < 4 || n % 2 == 1 {
        return Err(Error::InvalidArgument(format!(
            "pqc1d needs an even qubit count of at least 4, got {n}"
        )));
    }
    if depth == 0 || depth % 2 == 1 {
        return Err(Error::InvalidArgument(format!(
            "pqc1d needs a positive even depth, got {depth}"
        )));
    }
    let mut layers = Vec::with_capacity(depth + 1);
    let prep = (0..n - 1)
        .step_by(2)
        .map(|a| Gate::dimer_prep(a, a + 1))
        .collect::<Result<Vec<_>>>()?;
    layers.push(Layer::new(prep));
    for l in 1..=depth {
        let ordinal = l;
        let start = if l % 2 == 1 { 1 } else { 0 };
        let gates = (start..n - 1)
            .step_by(2)
            .map(|a| draw_eswap(seed, n, ordinal, a, a + 1))
            .collect::<Result<Vec<_>>>()?;
        layers.push(Layer::new(gates));
    }
    let circuit = Circuit {
        family: FAMILY_PQC_1D.into(),
        n_qubits: n,
        geometry: Geometry::Line,
        seed: Some(seed),
        layers,
    };
    circuit.validate()?;
    Ok(circuit)
}

/// The four two-qubit coupling patterns of the grid families. Pairs are
/// returned as `((x, y), (x2, y2))` grid coordinates in natural order
/// (lower row or column first).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum GridPattern {
    VerticalEven,
    VerticalOdd,
    HorizontalEven,
    HorizontalOdd,
}

impl GridPattern {
    pub(crate) fn abcd(step: usize) -> GridPattern {
        match step % 4 {
            0 => GridPattern::VerticalEven,
            1 => GridPattern::VerticalOdd,
            2 => GridPattern::HorizontalEven,
            _ => GridPattern::HorizontalOdd,
        }
    }

    pub(crate) fn pairs(self, lx: usize, ly: usize) -> Vec<((usize, usize), (usize, usize))> {
        let mut out = Vec::new();
        match self {
            GridPattern::VerticalEven | GridPattern::VerticalOdd => {
                let start = if self == GridPattern::VerticalEven { 0 } else { 1 };
                for x in 0..lx {
                    for y in (start..ly.saturating_sub(1)).step_by(2) {
                        out.push(((x, y), (x, y + 1)));
                    }
                }
            }
            GridPattern::HorizontalEven | GridPattern::HorizontalOdd => {
                let start = if self == GridPattern::HorizontalEven { 0 } else { 1 };
                for x in (start..lx.saturating_sub(1)).step_by(2) {
                    for y in 0..ly {
                        out.push(((x, y), (x + 1, y)));
                    }
                }
            }
        }
        out
    }
}

fn check_grid_args(name: &str, lx: usize, ly: usize, depth: usize) -> Result<()> {
    if lx < 2 || ly < 2 {
        return Err(Error::InvalidArgument(format!(
            "{name} needs a grid of at least 2x2, got {lx}x{ly}"
        )));
    }
    if depth == 0 || depth % 4 != 0 {
        return Err(Error::InvalidArgument(format!(
            "{name} needs a positive depth divisible by 4, got {depth}"
        )));
    }
    Ok(())
}

/// Random grid circuit on `lx × ly` qubits addressed by snake-path
/// position: each layer rotates all qubits with random SU(2) gates, then
/// applies CZ on the pattern cycle A, B, C, D (vertical even/odd rows,
/// horizontal even/odd columns). `depth` must be a positive multiple
/// of 4.
pub fn rqc_2d(lx: usize, ly: usize, depth: usize, seed: u64) -> Result<Circuit> {
    check_grid_args("rqc2d", lx, ly, depth)?;
    let n = lx * ly;
    let path = SnakePath::new(lx, ly)?;
    let mut layers = Vec::with_capacity(depth);
    for l in 0..depth {
        let mut gates: Vec<Gate> = (0..n).map(|q| draw_su2(seed, n, l, q)).collect();
        for (a, b) in grid_pattern_path_pairs(GridPattern::abcd(l), &path) {
            gates.push(Gate::cz(a, b)?);
        }
        layers.push(Layer::new(gates));
    }
    let circuit = Circuit {
        family: FAMILY_RQC_2D.into(),
        n_qubits: n,
        geometry: Geometry::Grid { lx, ly },
        seed: Some(seed),
        layers,
    };
    circuit.validate()?;
    Ok(circuit)
}

/// Parametrized grid circuit: the first layer prepares singlet dimers on
/// the vertical even-row pattern, then eSWAP layers with random angles
/// cycle through B, C, D, A. `ly` must be even so the dimer layer covers
/// every qubit; `depth` must be a positive multiple of 4.
pub fn pqc_2d(lx: usize, ly: usize, depth: usize, seed: u64) -> Result<Circuit> {
    check_grid_args("pqc2d", lx, ly, depth)?;
    if ly % 2 == 1 {
        return Err(Error::InvalidArgument(format!(
            "pqc2d needs an even column height, got {ly}"
        )));
    }
    let n = lx * ly;
    let path = SnakePath::new(lx, ly)?;
    let mut layers = Vec::with_capacity(depth);
    let prep = grid_pattern_path_pairs(GridPattern::VerticalEven, &path)
        .into_iter()
        .map(|(a, b)| Gate::dimer_prep(a, b))
        .collect::<Result<Vec<_>>>()?;
    layers.push(Layer::new(prep));
    for l in 1..depth {
        let gates = grid_pattern_path_pairs(GridPattern::abcd(l), &path)
            .into_iter()
            .map(|(a, b)| draw_eswap(seed, n, l, a, b))
            .collect::<Result<Vec<_>>>()?;
        layers.push(Layer::new(gates));
    }
    let circuit = Circuit {
        family: FAMILY_PQC_2D.into(),
        n_qubits: n,
        geometry: Geometry::Grid { lx, ly },
        seed: Some(seed),
        layers,
    };
    circuit.validate()?;
    Ok(circuit)
}

/// Grid pairs translated to snake-path positions, keeping the natural
/// grid order of the two endpoints. On odd snake columns the vertical
/// neighbor `(x, y+1)` sits at the *smaller* path index; target order is
/// preserved and consumers reorder via the gate's path form.
fn grid_pattern_path_pairs(pattern: GridPattern, path: &SnakePath) -> Vec<(usize, usize)> {
    pattern
        .pairs(path.lx(), path.ly())
        .into_iter()
        .map(|(a, b)| (path.index(a.0, a.1), path.index(b.0, b.1)))
        .collect()
}
