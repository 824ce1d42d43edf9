//! Generates one small instance of every circuit family, compiles it to
//! the nearest-neighbor path, and verifies that compilation preserves
//! the circuit's action on a dense statevector.

use ptebd::circuits::families::{pqc_1d, pqc_2d, rqc_1d, rqc_2d};
use ptebd::circuits::qft::qft_circuit;
use ptebd::circuits::Circuit;
use ptebd::oracle::{fidelity, run_compiled, statevector_run, Statevector};
use ptebd::Result;

fn main() -> Result<()> {
    let instances: Vec<Circuit> = vec![
        rqc_1d(9, 6, 5)?,
        pqc_1d(8, 6, 5)?,
        rqc_2d(2, 4, 4, 5)?,
        pqc_2d(2, 4, 4, 5)?,
        qft_circuit(8)?,
    ];

    println!(
        "{:<6} {:>7} {:>6} {:>6} {:>9} {:>9} {:>12}",
        "family", "qubits", "depth", "gates", "compiled", "2q-depth", "|1 - F|"
    );
    for circuit in &instances {
        let compiled = circuit.compile()?;

        // Same random input through the physical and the compiled
        // circuit; compilation only reorders and routes, so the outputs
        // must agree up to rounding.
        let input = Statevector::basis_state(circuit.n_qubits, 1)?;
        let physical = statevector_run(circuit, &input)?;
        let routed = run_compiled(&compiled, &input)?;
        let err = (1.0 - fidelity(&physical, &routed)?).abs();
        assert!(err < 1e-10);

        println!(
            "{:<6} {:>7} {:>6} {:>6} {:>9} {:>9} {:>12.2e}",
            circuit.family,
            circuit.n_qubits,
            circuit.physical_depth(),
            circuit.gate_count(),
            compiled.layers.len(),
            compiled.compiled_depth(),
            err,
        );
    }
    println!("\ncompilation preserved every circuit's action");
    Ok(())
}
