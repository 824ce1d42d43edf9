//! Grid-to-path mapping and the SWAP-network recompiler.
//!
//! A grid qubit `(x, y)` lives at path position `x·ly + y` on even
//! columns and `x·ly + (ly−1−y)` on odd columns, so the path snakes up
//! one column and down the next. Vertical couplings are then always
//! path-adjacent; horizontal couplings pair mirror positions of
//! neighboring columns and are not.
//!
//! [`recompile_grid`] rewrites each consecutive pair of horizontal
//! coupling layers (even-column pairs, then odd-column pairs) into a
//! block of `3·ly − 1` path-local layers: columns rotate their qubits
//! with internal SWAP cascades so that each row's boundary pair meets at
//! the column seam exactly once, first for the even-column couplings and,
//! half a period later, for the odd-column ones. Every non-SWAP gate of
//! the two source layers executes at such a meeting point, and the
//! cascades return every qubit to its starting position by the end of the
//! block. Layers whose couplings are already path-adjacent pass through
//! untouched, so a four-pattern grid circuit of depth `D` compiles to
//! `(D/4)·(2 + 3·ly − 1)` two-qubit layers.

use std::collections::HashMap;

use super::gates::{Gate, GateTargets};
use super::{Circuit, CompiledCircuit, Geometry, Layer};
use crate::error::{Error, Result};

/// Column-serpentine bijection between grid coordinates and path
/// positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SnakePath {
    lx: usize,
    ly: usize,
}

impl SnakePath {
    pub fn new(lx: usize, ly: usize) -> Result<SnakePath> {
        if lx == 0 || ly == 0 {
            return Err(Error::InvalidArgument(format!(
                "degenerate grid {lx}x{ly}"
            )));
        }
        Ok(SnakePath { lx, ly })
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly
    }

    pub fn n_qubits(&self) -> usize {
        self.lx * self.ly
    }

    /// Path position of grid site `(x, y)`.
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.lx && y < self.ly);
        let offset = if x % 2 == 0 { y } else { self.ly - 1 - y };
        x * self.ly + offset
    }

    /// Grid site at path position `p`.
    pub fn coords(&self, p: usize) -> (usize, usize) {
        debug_assert!(p < self.n_qubits());
        let x = p / self.ly;
        let r = p % self.ly;
        let y = if x % 2 == 0 { r } else { self.ly - 1 - r };
        (x, y)
    }
}

/// Two-qubit gates of one horizontal coupling layer, keyed by their
/// unordered logical qubit pair, plus that layer's single-qubit gates
/// keyed by qubit.
struct HorizontalLayer {
    pairs: HashMap<(usize, usize), Gate>,
    singles: HashMap<usize, Gate>,
    source: usize,
}

impl HorizontalLayer {
    /// Splits a layer and checks every coupling joins `(x, y)` and
    /// `(x+1, y)` with the stated column parity.
    fn extract(layer: &Layer, path: &SnakePath, even_columns: bool, source: usize) -> Result<HorizontalLayer> {
        let mut pairs = HashMap::new();
        let mut singles = HashMap::new();
        for g in &layer.gates {
            if !g.is_two_qubit() {
                singles.insert(g.qubits()[0], g.clone());
                continue;
            }
            let q = g.qubits();
            let (xa, ya) = path.coords(q[0]);
            let (xb, yb) = path.coords(q[1]);
            let x_min = xa.min(xb);
            let horizontal = ya == yb && xa.abs_diff(xb) == 1;
            if !horizontal || (x_min % 2 == 0) != even_columns {
                return Err(Error::UnsupportedLayout(format!(
                    "layer {} mixes coupling patterns: gate {} joins ({},{}) and ({},{})",
                    source,
                    g.label(),
                    xa,
                    ya,
                    xb,
                    yb
                )));
            }
            pairs.insert((q[0].min(q[1]), q[0].max(q[1])), g.clone());
        }
        Ok(HorizontalLayer { pairs, singles, source })
    }
}

/// Maps a grid circuit onto the path. Path-adjacent layers pass through;
/// each remaining layer must be an even-column coupling layer immediately
/// followed by an odd-column one, and the pair is replaced by its SWAP
/// block.
pub(super) fn recompile_grid(c: &Circuit) -> Result<CompiledCircuit> {
    let Geometry::Grid { lx, ly } = c.geometry else {
        return Err(Error::InvalidArgument("recompile_grid needs a grid circuit".into()));
    };
    let path = SnakePath::new(lx, ly)?;
    let mut layers = Vec::new();
    let mut provenance = Vec::new();
    let mut l = 0;
    while l < c.layers.len() {
        let layer = &c.layers[l];
        let adjacent = layer
            .two_qubit_gates()
            .all(|g| g.qubits()[0].abs_diff(g.qubits()[1]) == 1);
        if adjacent {
            layers.push(layer.clone());
            provenance.push(l);
            l += 1;
            continue;
        }
        let even = HorizontalLayer::extract(layer, &path, true, l)?;
        let Some(next) = c.layers.get(l + 1) else {
            return Err(Error::UnsupportedLayout(format!(
                "even-column coupling layer {} has no odd-column partner",
                l
            )));
        };
        let odd = HorizontalLayer::extract(next, &path, false, l + 1)?;
        emit_swap_block(even, odd, &path, &mut layers, &mut provenance)?;
        l += 2;
    }
    let compiled = CompiledCircuit {
        source_family: c.family.clone(),
        n_qubits: c.n_qubits,
        layers,
        provenance,
    };
    compiled.validate()?;
    Ok(compiled)
}

/// Emits the `3·ly − 1` layers replacing one even-column plus one
/// odd-column coupling layer.
///
/// Columns run synchronized odd-even transposition cascades (staggered by
/// column parity) that cyclically shift each column's qubits toward its
/// seams and back. At even steps `t ≤ 2(ly−1)` the row `ly−1−t/2` of
/// every even-column pair meets at the seam; from step `ly` on, the rows
/// of odd-column pairs meet half a period behind. Single-qubit gates ride
/// along: each executes in the layer where its qubit's coupling slot
/// comes up, and qubits no coupling reaches (odd grid edges) run theirs
/// at the block boundaries where positions equal logical qubits.
fn emit_swap_block(
    mut even: HorizontalLayer,
    mut odd: HorizontalLayer,
    path: &SnakePath,
    out: &mut Vec<Layer>,
    provenance: &mut Vec<usize>,
) -> Result<()> {
    let (lx, m) = (path.lx(), path.ly());
    debug_assert!(m >= 2, "single-row grids have no non-adjacent couplings");
    let n = path.n_qubits();
    // perm[p] = logical qubit currently at path position p.
    let mut perm: Vec<usize> = (0..n).collect();
    let mut pos_of: Vec<usize> = (0..n).collect();

    // Qubits untouched by any coupling slot of the block.
    let even_uncovered = |q: usize| {
        let (x, _) = path.coords(q);
        x % 2 == 0 && x + 1 >= lx
    };
    let odd_uncovered = |q: usize| {
        let (x, _) = path.coords(q);
        x == 0 || (x % 2 == 1 && x + 1 >= lx)
    };

    let last = 3 * m - 2;
    for t in 0..=last {
        let mut ones: Vec<Gate> = Vec::new();
        let mut couplings: Vec<Gate> = Vec::new();
        let mut swaps: Vec<Gate> = Vec::new();

        if t == 0 {
            let mut qs: Vec<usize> = even.singles.keys().copied().filter(|&q| even_uncovered(q)).collect();
            qs.sort_unstable();
            for q in qs {
                let g = even.singles.remove(&q).expect("key from map");
                ones.push(g.with_targets(GateTargets::Single(pos_of[q])));
            }
        }

        // Seam slots whose row is scheduled for this step.
        let emit_slots = |x_start: usize,
                              y: usize,
                              source: &mut HorizontalLayer,
                              ones: &mut Vec<Gate>,
                              couplings: &mut Vec<Gate>|
         -> Result<()> {
            let mut x = x_start;
            while x + 1 < lx {
                let p_left = x * m + (m - 1);
                let p_right = (x + 1) * m;
                let (la, lb) = (perm[p_left], perm[p_right]);
                if la != path.index(x, y) || lb != path.index(x + 1, y) {
                    return Err(Error::UnsupportedLayout(format!(
                        "cascade out of sync at step {t}: seam {x}/{} holds qubits {la},{lb}, expected row {y}",
                        x + 1
                    )));
                }
                for q in [la, lb] {
                    if let Some(g) = source.singles.remove(&q) {
                        ones.push(g.with_targets(GateTargets::Single(pos_of[q])));
                    }
                }
                if let Some(g) = source.pairs.remove(&(la.min(lb), la.max(lb))) {
                    let q = g.qubits();
                    couplings.push(g.with_targets(GateTargets::Pair(pos_of[q[0]], pos_of[q[1]])));
                }
                x += 2;
            }
            Ok(())
        };

        if t % 2 == 0 && t <= 2 * (m - 1) {
            emit_slots(0, m - 1 - t / 2, &mut even, &mut ones, &mut couplings)?;
        }
        let even_couplings = couplings.len();
        if t >= m && (t - m) % 2 == 0 {
            emit_slots(1, m - 1 - (t - m) / 2, &mut odd, &mut ones, &mut couplings)?;
        }
        let odd_couplings = couplings.len() - even_couplings;

        if t == last {
            let mut qs: Vec<usize> = odd.singles.keys().copied().filter(|&q| odd_uncovered(q)).collect();
            qs.sort_unstable();
            for q in qs {
                let g = odd.singles.remove(&q).expect("key from map");
                ones.push(g.with_targets(GateTargets::Single(pos_of[q])));
            }
        }

        // Transposition cascade for this step: column-internal swaps
        // only, collected against the pre-step permutation.
        for x in 0..lx {
            for i in 0..m - 1 {
                let (first, span) = if x % 2 == 1 {
                    (i + 1, 2 * m - 1 + i)
                } else {
                    (m - 1 - i, 3 * m - 3 - i)
                };
                if t >= first && t <= span && (t - first) % 2 == 0 {
                    swaps.push(Gate::swap(x * m + i, x * m + i + 1)?);
                }
            }
        }

        // Attribute the layer to the source whose couplings execute in
        // it; pure SWAP layers split at the block midpoint.
        let layer_source = if odd_couplings > 0 {
            odd.source
        } else if even_couplings > 0 {
            even.source
        } else if t < m {
            even.source
        } else {
            odd.source
        };
        let mut gates = ones;
        gates.append(&mut couplings);
        for s in &swaps {
            gates.push(s.clone());
        }
        let layer = Layer::new(gates);
        layer.validate(n)?;
        out.push(layer);
        provenance.push(layer_source);

        for s in swaps {
            let q = s.qubits();
            perm.swap(q[0], q[1]);
            pos_of[perm[q[0]]] = q[0];
            pos_of[perm[q[1]]] = q[1];
        }
    }

    if perm.iter().enumerate().any(|(p, &q)| p != q) {
        return Err(Error::UnsupportedLayout(
            "cascade did not return qubits to their home positions".into(),
        ));
    }
    for (name, leftover) in [
        ("even-column couplings", even.pairs.len()),
        ("odd-column couplings", odd.pairs.len()),
        ("even-layer rotations", even.singles.len()),
        ("odd-layer rotations", odd.singles.len()),
    ] {
        if leftover > 0 {
            return Err(Error::UnsupportedLayout(format!(
                "{leftover} {name} never reached an adjacent slot"
            )));
        }
    }
    Ok(())
}
