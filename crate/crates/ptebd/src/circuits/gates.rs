//! Gate set for the benchmark circuit families.
//!
//! Gates are stored as a kind plus target qubits; matrices are built on
//! demand, which keeps million-gate circuits cheap to hold in memory. A
//! two-qubit matrix is written in the ordered basis `|t0 t1⟩` where `t0`
//! is the *first* target: element `(σ0'σ1', σ0σ1)` is
//! `⟨σ0'σ1'|U|σ0σ1⟩` with `σ0` on `t0`. Targets are not required to be
//! ascending; [`Gate::path_ordered`] reorients the matrix for consumers
//! that want the lower qubit first.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// What a gate does, independent of where it acts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    /// Hadamard.
    Hadamard,
    /// `exp(-iθ n̂·σ)` with axis `n̂ = (sin α cos φ, sin α sin φ, cos α)`:
    /// `cos θ · 1 − i sin θ · n̂·σ`.
    RandomSu2 { alpha: f64, theta: f64, phi: f64 },
    /// Controlled-Z: `diag(1, 1, 1, -1)`.
    Cz,
    /// Qubit exchange.
    Swap,
    /// `cos(θ/2) · 1 − i sin(θ/2) · SWAP`.
    Eswap { theta: f64 },
    /// Controlled phase: `diag(1, 1, 1, e^{iφ})`.
    ControlledPhase { phi: f64 },
    /// Maps `|00⟩ → (|01⟩−|10⟩)/√2`, `|01⟩ → (|01⟩+|10⟩)/√2`,
    /// `|10⟩ → |00⟩`, `|11⟩ → |11⟩`: entangled-pair preparation.
    DimerPrep,
}

/// Qubits a gate acts on, in gate-local order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateTargets {
    Single(usize),
    Pair(usize, usize),
}

/// A placed gate.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    kind: GateKind,
    targets: GateTargets,
}

impl Gate {
    pub fn hadamard(q: usize) -> Gate {
        Gate {
            kind: GateKind::Hadamard,
            targets: GateTargets::Single(q),
        }
    }

    pub fn random_su2(q: usize, alpha: f64, theta: f64, phi: f64) -> Gate {
        Gate {
            kind: GateKind::RandomSu2 { alpha, theta, phi },
            targets: GateTargets::Single(q),
        }
    }

    pub fn cz(a: usize, b: usize) -> Result<Gate> {
        Gate::pair(GateKind::Cz, a, b)
    }

    pub fn swap(a: usize, b: usize) -> Result<Gate> {
        Gate::pair(GateKind::Swap, a, b)
    }

    pub fn eswap(a: usize, b: usize, theta: f64) -> Result<Gate> {
        Gate::pair(GateKind::Eswap { theta }, a, b)
    }

    pub fn controlled_phase(a: usize, b: usize, phi: f64) -> Result<Gate> {
        Gate::pair(GateKind::ControlledPhase { phi }, a, b)
    }

    pub fn dimer_prep(a: usize, b: usize) -> Result<Gate> {
        Gate::pair(GateKind::DimerPrep, a, b)
    }

    fn pair(kind: GateKind, a: usize, b: usize) -> Result<Gate> {
        if a == b {
            return Err(Error::InvalidArgument(format!(
                "two-qubit gate needs distinct targets, got ({a}, {b})"
            )));
        }
        Ok(Gate {
            kind,
            targets: GateTargets::Pair(a, b),
        })
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn targets(&self) -> GateTargets {
        self.targets
    }

    pub fn arity(&self) -> usize {
        match self.targets {
            GateTargets::Single(_) => 1,
            GateTargets::Pair(_, _) => 2,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.arity() == 2
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self.targets {
            GateTargets::Single(q) => vec![q],
            GateTargets::Pair(a, b) => vec![a, b],
        }
    }

    /// Same gate moved to new targets (arity preserved by construction).
    pub(crate) fn with_targets(&self, targets: GateTargets) -> Gate {
        debug_assert_eq!(
            std::mem::discriminant(&self.targets),
            std::mem::discriminant(&targets)
        );
        Gate {
            kind: self.kind,
            targets,
        }
    }

    /// Serialization token for the kind.
    pub fn label(&self) -> &'static str {
        match self.kind {
            GateKind::Hadamard => "h",
            GateKind::RandomSu2 { .. } => "su2",
            GateKind::Cz => "cz",
            GateKind::Swap => "swap",
            GateKind::Eswap { .. } => "eswap",
            GateKind::ControlledPhase { .. } => "cphase",
            GateKind::DimerPrep => "dimer",
        }
    }

    /// Continuous parameters in serialization order.
    pub fn params(&self) -> Vec<f64> {
        match self.kind {
            GateKind::RandomSu2 { alpha, theta, phi } => vec![alpha, theta, phi],
            GateKind::Eswap { theta } => vec![theta],
            GateKind::ControlledPhase { phi } => vec![phi],
            _ => Vec::new(),
        }
    }

    /// Unitary matrix: `(2, 2)` for one-qubit gates, `(4, 4)` in the
    /// `|t0 t1⟩` basis for two-qubit gates.
    pub fn matrix(&self) -> DenseTensor {
        let c = Complex64::new;
        match self.kind {
            GateKind::Hadamard => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                DenseTensor::from_data(&[2, 2], vec![c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])
                    .expect("static shape")
            }
            GateKind::RandomSu2 { alpha, theta, phi } => {
                let (nx, ny, nz) = (
                    alpha.sin() * phi.cos(),
                    alpha.sin() * phi.sin(),
                    alpha.cos(),
                );
                let (ct, st) = (theta.cos(), theta.sin());
                DenseTensor::from_data(
                    &[2, 2],
                    vec![
                        c(ct, -st * nz),
                        c(-st * ny, -st * nx),
                        c(st * ny, -st * nx),
                        c(ct, st * nz),
                    ],
                )
                .expect("static shape")
            }
            GateKind::Cz => diag4([c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]),
            GateKind::Swap => {
                let mut m = DenseTensor::zeros(&[4, 4]);
                for (r, col) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
                    m.set(&[r, col], c(1.0, 0.0));
                }
                m
            }
            GateKind::Eswap { theta } => {
                let (ch, sh) = ((theta / 2.0).cos(), (theta / 2.0).sin());
                let mut m = diag4([c(ch, -sh), c(ch, 0.0), c(ch, 0.0), c(ch, -sh)]);
                m.set(&[1, 2], c(0.0, -sh));
                m.set(&[2, 1], c(0.0, -sh));
                m
            }
            GateKind::ControlledPhase { phi } => diag4([
                c(1.0, 0.0),
                c(1.0, 0.0),
                c(1.0, 0.0),
                Complex64::from_polar(1.0, phi),
            ]),
            GateKind::DimerPrep => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                let mut m = DenseTensor::zeros(&[4, 4]);
                m.set(&[1, 0], c(h, 0.0));
                m.set(&[2, 0], c(-h, 0.0));
                m.set(&[1, 1], c(h, 0.0));
                m.set(&[2, 1], c(h, 0.0));
                m.set(&[0, 2], c(1.0, 0.0));
                m.set(&[3, 3], c(1.0, 0.0));
                m
            }
        }
    }

    /// For a two-qubit gate: `(low, high, matrix)` with the matrix
    /// expressed in the `|q_low q_high⟩` basis regardless of the stored
    /// target order.
    pub fn path_ordered(&self) -> Result<(usize, usize, DenseTensor)> {
        match self.targets {
            GateTargets::Single(_) => Err(Error::InvalidArgument(
                "path_ordered needs a two-qubit gate".into(),
            )),
            GateTargets::Pair(a, b) if a < b => Ok((a, b, self.matrix())),
            GateTargets::Pair(a, b) => Ok((b, a, exchange_conjugated(&self.matrix()))),
        }
    }
}

fn diag4(d: [Complex64; 4]) -> DenseTensor {
    let mut m = DenseTensor::zeros(&[4, 4]);
    for (i, v) in d.into_iter().enumerate() {
        m.set(&[i, i], v);
    }
    m
}

/// `SWAP · M · SWAP`: the same two-qubit unitary with the tensor slots
/// exchanged.
fn exchange_conjugated(m: &DenseTensor) -> DenseTensor {
    let flip = |x: usize| ((x & 1) << 1) | (x >> 1);
    let mut out = DenseTensor::zeros(&[4, 4]);
    for r in 0..4 {
        for col in 0..4 {
            out.set(&[r, col], m.get(&[flip(r), flip(col)]));
        }
    }
    out
}

/// Builds a gate from its serialization tokens: label, targets, and
/// parameters. Rejects unknown labels and wrong target/parameter counts.
pub fn standard_gate(label: &str, targets: &[usize], params: &[f64]) -> Result<Gate> {
    let want = |t: usize, p: usize| -> Result<()> {
        if targets.len() != t || params.len() != p {
            return Err(Error::InvalidArgument(format!(
                "gate '{label}' takes {t} target(s) and {p} parameter(s), got {} and {}",
                targets.len(),
                params.len()
            )));
        }
        Ok(())
    };
    match label {
        "h" => {
            want(1, 0)?;
            Ok(Gate::hadamard(targets[0]))
        }
        "su2" => {
            want(1, 3)?;
            Ok(Gate::random_su2(targets[0], params[0], params[1], params[2]))
        }
        "cz" => {
            want(2, 0)?;
            Gate::cz(targets[0], targets[1])
        }
        "swap" => {
            want(2, 0)?;
            Gate::swap(targets[0], targets[1])
        }
        "eswap" => {
            want(2, 1)?;
            Gate::eswap(targets[0], targets[1], params[0])
        }
        "cphase" => {
            want(2, 1)?;
            Gate::controlled_phase(targets[0], targets[1], params[0])
        }
        "dimer" => {
            want(2, 0)?;
            Gate::dimer_prep(targets[0], targets[1])
        }
        other => Err(Error::InvalidArgument(format!("unknown gate '{other}'"))),
    }
}

/// `‖U†U − 1‖_F`; zero for an exactly unitary matrix.
pub fn unitarity_defect(matrix: &DenseTensor) -> f64 {
    let n = matrix.shape()[0];
    let gram = crate::tensor::contract(&matrix.conjugated(), &[0], matrix, &[0])
        .expect("square matrix");
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { 1.0 } else { 0.0 };
            sum += (gram.get(&[i, j]) - Complex64::new(expect, 0.0)).norm_sqr();
        }
    }
    sum.sqrt()
}
