//! Quantum Fourier transform: textbook circuit plus a nearest-neighbor
//! compilation.
//!
//! The physical circuit is the standard cascade (a Hadamard on each
//! qubit followed by controlled phases of angle `2π/2^k` against all
//! lower qubits, then a qubit reversal via long-range SWAPs). It is what
//! the dense oracle executes.
//!
//! The compiled form never uses long-range gates. Pass `i` applies a
//! Hadamard at path position 0 and then bubbles that qubit rightward
//! with SWAPs, applying the controlled phase for each qubit it passes;
//! after `n` passes every qubit has absorbed its full phase cascade and
//! the register order is exactly the reversal the transform calls for.
//! On any input the compiled circuit equals the physical one as a
//! unitary.

use super::gates::Gate;
use super::{layered, Circuit, CompiledCircuit, Geometry};
use crate::error::{Error, Result};

pub const FAMILY_QFT: &str = "qft";

fn phase_angle(k: u32) -> f64 {
    2.0 * std::f64::consts::PI / f64::from(2u32.pow(k))
}

/// Standard Fourier-transform circuit on `n ≥ 1` qubits, greedily packed
/// into layers. Controlled phases couple arbitrary distances; only the
/// compiled form is path-local.
pub fn qft_circuit(n: usize) -> Result<Circuit> {
    if n == 0 {
        return Err(Error::InvalidArgument("qft needs at least one qubit".into()));
    }
    if n > 30 {
        return Err(Error::InvalidArgument(format!(
            "qft phase angles underflow beyond 30 qubits, got {n}"
        )));
    }
    let mut gates = Vec::new();
    for i in 0..n {
        gates.push(Gate::hadamard(i));
        for k in 2..=(n - i) {
            gates.push(Gate::controlled_phase(i, i + k - 1, phase_angle(k as u32))?);
        }
    }
    for j in 0..n / 2 {
        gates.push(Gate::swap(j, n - 1 - j)?);
    }
    let circuit = Circuit {
        family: FAMILY_QFT.into(),
        n_qubits: n,
        geometry: Geometry::Line,
        seed: None,
        layers: layered(n, gates),
    };
    circuit.validate()?;
    Ok(circuit)
}

/// Nearest-neighbor compilation of the Fourier transform.
///
/// Rejects circuits whose layers differ from [`qft_circuit`]'s output:
/// the compilation is derived from the qubit count alone, so gate content
/// it did not generate would be silently dropped otherwise. Compiled
/// layers have no meaningful source layer; provenance is self-indexed.
pub(super) fn compile_lnn(c: &Circuit) -> Result<CompiledCircuit> {
    let n = c.n_qubits;
    let reference = qft_circuit(n)?;
    if c.layers != reference.layers {
        return Err(Error::UnsupportedLayout(
            "circuit differs from the generated Fourier-transform structure".into(),
        ));
    }
    let mut gates = Vec::new();
    for i in 0..n {
        gates.push(Gate::hadamard(0));
        for k in 0..n - 1 - i {
            gates.push(Gate::controlled_phase(k, k + 1, phase_angle(k as u32 + 2))?);
            gates.push(Gate::swap(k, k + 1)?);
        }
    }
    let layers = layered(n, gates);
    let provenance = (0..layers.len()).collect();
    let compiled = CompiledCircuit {
        source_family: FAMILY_QFT.into(),
        n_qubits: n,
        layers,
        provenance,
    };
    compiled.validate()?;
    Ok(compiled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{dft_reference, fidelity, statevector_run, Statevector};
    use crate::rng::{substream, DOMAIN_INPUT};
    use crate::Complex64;
    use rand::Rng;

    fn random_state(n: usize, seed: u64) -> Statevector {
        let mut rng = substream(seed, DOMAIN_INPUT, 0);
        let amps: Vec<Complex64> = (0..1usize << n)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        Statevector::from_amplitudes(amps).unwrap().normalized().unwrap()
    }

    #[test]
    fn single_qubit_transform_is_one_hadamard() {
        let c = qft_circuit(1).unwrap();
        assert_eq!(c.layers.len(), 1);
        assert_eq!(c.layers[0].gates.len(), 1);
        assert_eq!(c.layers[0].gates[0].label(), "h");
        let compiled = c.compile().unwrap();
        assert_eq!(compiled.layers.len(), 1);
        assert!(qft_circuit(0).is_err());
    }

    #[test]
    fn zero_state_maps_to_uniform_amplitudes() {
        for n in [1, 3, 5] {
            let c = qft_circuit(n).unwrap();
            let out = statevector_run(&c, &Statevector::basis_state(n, 0).unwrap()).unwrap();
            let want = 2f64.powf(-(n as f64) / 2.0);
            for amp in out.amplitudes() {
                assert!((amp - Complex64::new(want, 0.0)).norm() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn physical_circuit_equals_the_fourier_matrix() {
        for n in 1..=6 {
            let c = qft_circuit(n).unwrap();
            let input = random_state(n, 100 + n as u64);
            let got = statevector_run(&c, &input).unwrap();
            let want = dft_reference(&input).unwrap();
            let f = fidelity(&got, &want).unwrap();
            assert!((f - 1.0).abs() < 1e-12, "n={n}: fidelity {f}");
        }
    }

    #[test]
    fn compiled_circuit_matches_the_physical_one_and_stays_local() {
        for n in 1..=6 {
            let c = qft_circuit(n).unwrap();
            let compiled = c.compile().unwrap();
            compiled.validate().unwrap();
            for layer in &compiled.layers {
                for g in layer.two_qubit_gates() {
                    let q = g.qubits();
                    assert_eq!(q[0].abs_diff(q[1]), 1);
                }
            }
            let input = random_state(n, 200 + n as u64);
            let physical = statevector_run(&c, &input).unwrap();
            let mut s = input;
            for layer in &compiled.layers {
                s = s.apply_layer(layer).unwrap();
            }
            let f = fidelity(&physical, &s).unwrap();
            assert!((f - 1.0).abs() < 1e-12, "n={n}: fidelity {f}");
        }
    }

    #[test]
    fn compilation_rejects_tampered_content() {
        let mut c = qft_circuit(4).unwrap();
        c.layers[0].gates[0] = Gate::hadamard(2);
        assert!(matches!(c.compile(), Err(Error::UnsupportedLayout(_))));
    }
}
