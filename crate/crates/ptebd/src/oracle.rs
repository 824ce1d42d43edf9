//! Dense statevector reference implementation.
//!
//! Everything here is exact (up to floating point) and deliberately
//! simple: amplitudes live in one `Vec` indexed by the computational
//! basis with qubit 0 as the most significant bit, and gates are applied
//! by direct matrix action on amplitude pairs or quadruples. The MPS
//! engines are validated against these routines at small sizes, so this
//! module must not share truncation or contraction code paths with them.
//!
//! Memory limits: dense states are capped at [`STATEVECTOR_QUBIT_CAP`]
//! qubits; the all-bond truncation and Fourier references have lower
//! caps because they cost `O(4^n)`.

use num_complex::Complex64;

use crate::circuits::{Circuit, CompiledCircuit, Gate, Layer};
use crate::error::{Error, Result};
use crate::tensor::{contract, svd, DenseTensor};

/// Largest dense register: 2^26 amplitudes = 1 GiB.
pub const STATEVECTOR_QUBIT_CAP: usize = 26;
/// Cap for the all-bond truncation reference (repeated full SVD sweeps).
pub const DENSE_TRUNCATION_QUBIT_CAP: usize = 10;
/// Cap for the quadratic-time discrete Fourier reference.
pub const DFT_QUBIT_CAP: usize = 12;

/// Dense amplitude vector over `n` qubits. Basis index bit `n−1−q` holds
/// qubit `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Statevector> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::ShapeMismatch(format!(
                "amplitude count {len} is not a power of two"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits == 0 {
            return Err(Error::InvalidArgument("need at least one qubit".into()));
        }
        if n_qubits > STATEVECTOR_QUBIT_CAP {
            return Err(Error::ResourceLimit(format!(
                "{n_qubits} qubits exceed the dense cap of {STATEVECTOR_QUBIT_CAP}"
            )));
        }
        Ok(Statevector { n_qubits, amps })
    }

    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Statevector> {
        if n_qubits == 0 || n_qubits > STATEVECTOR_QUBIT_CAP {
            return Err(Error::InvalidArgument(format!(
                "qubit count {n_qubits} outside 1..={STATEVECTOR_QUBIT_CAP}"
            )));
        }
        let len = 1usize << n_qubits;
        if index >= len {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} outside a {n_qubits}-qubit register"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); len];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Statevector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Statevector> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::DegenerateState("cannot normalize the zero vector".into()));
        }
        let amps = self.amps.iter().map(|a| a / n).collect();
        Ok(Statevector { n_qubits: self.n_qubits, amps })
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::ShapeMismatch(format!(
                "inner product between {} and {} qubits",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    fn bit_shift(&self, qubit: usize) -> Result<usize> {
        if qubit >= self.n_qubits {
            return Err(Error::InvalidArgument(format!(
                "qubit {} outside a {}-qubit register",
                qubit, self.n_qubits
            )));
        }
        Ok(self.n_qubits - 1 - qubit)
    }

    pub fn apply_gate(&self, gate: &Gate) -> Result<Statevector> {
        let m = gate.matrix();
        let md = m.data();
        let mut amps = self.amps.clone();
        let targets = gate.qubits();
        match targets[..] {
            [q] => {
                let s = self.bit_shift(q)?;
                let mask = 1usize << s;
                for x in 0..amps.len() {
                    if x & mask != 0 {
                        continue;
                    }
                    let (a0, a1) = (amps[x], amps[x | mask]);
                    amps[x] = md[0] * a0 + md[1] * a1;
                    amps[x | mask] = md[2] * a0 + md[3] * a1;
                }
            }
            [qa, qb] => {
                let sa = self.bit_shift(qa)?;
                let sb = self.bit_shift(qb)?;
                let (ma, mb) = (1usize << sa, 1usize << sb);
                for x in 0..amps.len() {
                    if x & ma != 0 || x & mb != 0 {
                        continue;
                    }
                    // Row/column order of the 4x4 matrix is
                    // |first target, second target⟩.
                    let idx = [x, x | mb, x | ma, x | ma | mb];
                    let v = idx.map(|i| amps[i]);
                    for (r, &i) in idx.iter().enumerate() {
                        amps[i] = (0..4).map(|col| md[4 * r + col] * v[col]).sum();
                    }
                }
            }
            _ => unreachable!("gates act on one or two qubits"),
        }
        Ok(Statevector { n_qubits: self.n_qubits, amps })
    }

    /// Applies one layer: single-qubit gates first, then two-qubit gates,
    /// matching the evolution engines' execution order.
    pub fn apply_layer(&self, layer: &Layer) -> Result<Statevector> {
        layer.validate(self.n_qubits)?;
        let mut state = self.clone();
        for g in layer.single_qubit_gates() {
            state = state.apply_gate(g)?;
        }
        for g in layer.two_qubit_gates() {
            state = state.apply_gate(g)?;
        }
        Ok(state)
    }
}

/// Runs a physical circuit on `input`. Long-range two-qubit gates are
/// fine here; only the MPS engines need path locality.
pub fn statevector_run(circuit: &Circuit, input: &Statevector) -> Result<Statevector> {
    if circuit.n_qubits != input.n_qubits() {
        return Err(Error::ShapeMismatch(format!(
            "{}-qubit circuit on a {}-qubit state",
            circuit.n_qubits,
            input.n_qubits()
        )));
    }
    let mut state = input.clone();
    for layer in &circuit.layers {
        state = state.apply_layer(layer)?;
    }
    Ok(state)
}

/// Runs a compiled circuit on `input`.
pub fn run_compiled(circuit: &CompiledCircuit, input: &Statevector) -> Result<Statevector> {
    if circuit.n_qubits != input.n_qubits() {
        return Err(Error::ShapeMismatch(format!(
            "{}-qubit circuit on a {}-qubit state",
            circuit.n_qubits,
            input.n_qubits()
        )));
    }
    let mut state = input.clone();
    for layer in &circuit.layers {
        state = state.apply_layer(layer)?;
    }
    Ok(state)
}

/// `|⟨a|b⟩|²` after normalizing both states.
pub fn fidelity(a: &Statevector, b: &Statevector) -> Result<f64> {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateState("fidelity against the zero vector".into()));
    }
    Ok((a.inner(b)?.norm() / (na * nb)).powi(2))
}

/// Result of [`dense_parallel_truncation`]: the (unnormalized) truncated
/// state and the relative discarded weight per interior bond.
#[derive(Clone, Debug)]
pub struct DenseTruncation {
    pub state: Statevector,
    pub bond_eps: Vec<f64>,
}

/// Truncates every bond of the state's Schmidt decomposition to `chi`
/// values simultaneously and reports the relative discarded weight per
/// bond.
///
/// The state is decomposed exactly by a right-to-left sweep of full-rank
/// SVDs, the smallest Schmidt values of every interior cut are zeroed at
/// once, and the chain is contracted back. This is the defining
/// semantics of one parallel truncation pass, computed without any of
/// the evolution engines' machinery.
pub fn dense_parallel_truncation(state: &Statevector, chi: usize) -> Result<DenseTruncation> {
    let n = state.n_qubits();
    if n > DENSE_TRUNCATION_QUBIT_CAP {
        return Err(Error::ResourceLimit(format!(
            "{n} qubits exceed the truncation-reference cap of {DENSE_TRUNCATION_QUBIT_CAP}"
        )));
    }
    if chi == 0 {
        return Err(Error::InvalidArgument("bond limit must be at least 1".into()));
    }
    if state.norm() == 0.0 {
        return Err(Error::DegenerateState("cannot truncate the zero vector".into()));
    }
    if n == 1 {
        return Ok(DenseTruncation { state: state.clone(), bond_eps: Vec::new() });
    }

    // Right-to-left exact decomposition: after step i the chain is
    // W · B_i · B_{i+1} · … with bond i's Schmidt values in lambdas[i].
    let mut sites: Vec<DenseTensor> = Vec::with_capacity(n);
    let mut lambdas: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut right_dim = 1usize;
    let mut w = DenseTensor::from_data(&[1usize << (n - 1), 2], state.amps.clone())?;
    for i in (1..n).rev() {
        let rows = 1usize << i;
        let f = svd(&w.reshaped(&[rows, w.len() / rows])?)?;
        let rank = f.s.len();
        sites.push(f.vdag.reshaped(&[rank, 2, right_dim])?);
        let mut u = f.u;
        u.scale_axis(1, &f.s)?;
        lambdas[i] = f.s;
        w = u.reshaped(&[rows / 2, 2 * rank])?;
        right_dim = rank;
    }
    sites.push(w.reshaped(&[1, 2, right_dim])?);
    sites.reverse();

    // Zero every interior bond's tail and record its relative weight.
    let mut bond_eps = Vec::with_capacity(n - 1);
    for i in 1..n {
        let total: f64 = lambdas[i].iter().map(|s| s * s).sum();
        let discarded: f64 = lambdas[i].iter().skip(chi).map(|s| s * s).sum();
        bond_eps.push(if total > 0.0 { discarded / total } else { 0.0 });
        let mask: Vec<f64> = (0..lambdas[i].len())
            .map(|k| if k < chi { 1.0 } else { 0.0 })
            .collect();
        sites[i].scale_axis(0, &mask)?;
    }

    let mut acc = sites[0].reshaped(&[2, sites[0].shape()[2]])?;
    for site in &sites[1..] {
        let rows = acc.shape()[0];
        acc = contract(&acc, &[1], site, &[0])?.reshaped(&[rows * 2, site.shape()[2]])?;
    }
    let amps = acc.data().to_vec();
    Ok(DenseTruncation {
        state: Statevector::from_amplitudes(amps)?,
        bond_eps,
    })
}

/// Discrete Fourier transform of the amplitude vector:
/// `out[y] = 2^{−n/2} Σ_x exp(+2πi·x·y/2^n)·in[x]`, by direct summation
/// with a precomputed twiddle table.
pub fn dft_reference(state: &Statevector) -> Result<Statevector> {
    let n = state.n_qubits();
    if n > DFT_QUBIT_CAP {
        return Err(Error::ResourceLimit(format!(
            "{n} qubits exceed the Fourier-reference cap of {DFT_QUBIT_CAP}"
        )));
    }
    let size = 1usize << n;
    let twiddle: Vec<Complex64> = (0..size)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / size as f64;
            Complex64::new(angle.cos(), angle.sin())
        })
        .collect();
    let scale = (size as f64).sqrt().recip();
    let amps = (0..size)
        .map(|y| {
            scale
                * (0..size)
                    .map(|x| twiddle[(x * y) % size] * state.amps[x])
                    .sum::<Complex64>()
        })
        .collect();
    Statevector::from_amplitudes(amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::families::rqc_1d;
    use crate::circuits::qft::qft_circuit;
    use crate::rng::{substream, DOMAIN_INPUT};
    use rand::Rng;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_state(n: usize, seed: u64) -> Statevector {
        let mut rng = substream(seed, DOMAIN_INPUT, 1);
        let amps = (0..1usize << n)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        Statevector::from_amplitudes(amps).unwrap().normalized().unwrap()
    }

    #[test]
    fn qubit_zero_is_the_most_significant_bit() {
        let s = Statevector::basis_state(2, 0).unwrap();
        let after = s.apply_gate(&Gate::hadamard(0)).unwrap();
        // H on qubit 0 populates |00⟩ and |10⟩ = index 2.
        assert!((after.amplitudes()[0] - c(H, 0.0)).norm() < 1e-15);
        assert!((after.amplitudes()[2] - c(H, 0.0)).norm() < 1e-15);
        assert_eq!(after.amplitudes()[1], c(0.0, 0.0));

        let after = s.apply_gate(&Gate::hadamard(1)).unwrap();
        assert!((after.amplitudes()[1] - c(H, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn controlled_gates_are_target_order_insensitive() {
        let s = Statevector::basis_state(2, 3).unwrap();
        let a = s.apply_gate(&Gate::cz(0, 1).unwrap()).unwrap();
        assert!((a.amplitudes()[3] - c(-1.0, 0.0)).norm() < 1e-15);

        let phi = 0.731;
        let x = random_state(2, 5);
        let p01 = x.apply_gate(&Gate::controlled_phase(0, 1, phi).unwrap()).unwrap();
        let p10 = x.apply_gate(&Gate::controlled_phase(1, 0, phi).unwrap()).unwrap();
        assert!((fidelity(&p01, &p10).unwrap() - 1.0).abs() < 1e-13);
        assert_eq!(p01.amplitudes(), p10.amplitudes());
    }

    #[test]
    fn dimer_preparation_respects_target_order() {
        let s = Statevector::basis_state(2, 0).unwrap();
        let forward = s.apply_gate(&Gate::dimer_prep(0, 1).unwrap()).unwrap();
        assert!((forward.amplitudes()[1] - c(H, 0.0)).norm() < 1e-15);
        assert!((forward.amplitudes()[2] - c(-H, 0.0)).norm() < 1e-15);

        let reversed = s.apply_gate(&Gate::dimer_prep(1, 0).unwrap()).unwrap();
        assert!((reversed.amplitudes()[1] - c(-H, 0.0)).norm() < 1e-15);
        assert!((reversed.amplitudes()[2] - c(H, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn layers_run_rotations_before_couplings() {
        // X-like rotation (axis x, angle π/2) on qubit 0 after CZ would
        // pick up the CZ sign; before it, it does not.
        let x_gate = Gate::random_su2(0, std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2, 0.0);
        let layer = Layer::new(vec![x_gate, Gate::cz(0, 1).unwrap()]);
        let s = Statevector::basis_state(2, 3).unwrap();
        let out = s.apply_layer(&layer).unwrap();
        // Rotation first: −i|01⟩, untouched by CZ.
        assert!((out.amplitudes()[1] - c(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn inner_product_is_antilinear_in_the_left_argument() {
        let a = Statevector::from_amplitudes(vec![c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let b = Statevector::from_amplitudes(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((a.inner(&b).unwrap() - c(0.0, -1.0)).norm() < 1e-15);
        assert!(a.inner(&random_state(2, 1)).is_err());
    }

    #[test]
    fn fidelity_is_scale_invariant_and_rejects_zero() {
        let a = random_state(3, 2);
        let scaled = Statevector::from_amplitudes(
            a.amplitudes().iter().map(|z| z * c(0.0, 2.5)).collect(),
        )
        .unwrap();
        assert!((fidelity(&a, &scaled).unwrap() - 1.0).abs() < 1e-13);
        let zero = Statevector::from_amplitudes(vec![c(0.0, 0.0); 8]).unwrap();
        assert!(matches!(fidelity(&a, &zero), Err(Error::DegenerateState(_))));
    }

    #[test]
    fn circuit_runs_preserve_the_norm() {
        let circ = rqc_1d(5, 4, 3).unwrap();
        let input = Statevector::basis_state(5, 0).unwrap();
        let out = statevector_run(&circ, &input).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-12);
        let compiled_out = run_compiled(&circ.compile().unwrap(), &input).unwrap();
        assert!((fidelity(&out, &compiled_out).unwrap() - 1.0).abs() < 1e-12);
        assert!(statevector_run(&circ, &Statevector::basis_state(4, 0).unwrap()).is_err());
    }

    #[test]
    fn bell_pair_truncated_to_one_value_loses_half_the_weight() {
        let bell = Statevector::from_amplitudes(vec![c(H, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(H, 0.0)])
            .unwrap();
        let t = dense_parallel_truncation(&bell, 1).unwrap();
        assert_eq!(t.bond_eps.len(), 1);
        assert!((t.bond_eps[0] - 0.5).abs() < 1e-12);
        assert!((t.state.norm().powi(2) - 0.5).abs() < 1e-12);
        assert!((fidelity(&bell, &t.state).unwrap() - 0.5).abs() < 1e-12);

        // Generous limit: exact reconstruction, zero loss.
        let t = dense_parallel_truncation(&bell, 2).unwrap();
        assert!(t.bond_eps.iter().all(|&e| e == 0.0));
        for (got, want) in t.state.amplitudes().iter().zip(bell.amplitudes()) {
            assert!((got - want).norm() < 1e-12);
        }
    }

    #[test]
    fn untruncated_sweep_reconstructs_any_state() {
        for n in 2..=6 {
            let s = random_state(n, 40 + n as u64);
            let t = dense_parallel_truncation(&s, 1 << (n / 2)).unwrap();
            assert_eq!(t.bond_eps.len(), n - 1);
            assert!(t.bond_eps.iter().all(|&e| e < 1e-24), "n={n}: {:?}", t.bond_eps);
            for (got, want) in t.state.amplitudes().iter().zip(s.amplitudes()) {
                assert!((got - want).norm() < 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn truncation_reference_enforces_its_cap() {
        let s = Statevector::basis_state(DENSE_TRUNCATION_QUBIT_CAP + 1, 0).unwrap();
        assert!(matches!(
            dense_parallel_truncation(&s, 4),
            Err(Error::ResourceLimit(_))
        ));
        let s = Statevector::basis_state(2, 0).unwrap();
        assert!(dense_parallel_truncation(&s, 0).is_err());
    }

    #[test]
    fn fourier_reference_matches_known_transforms() {
        // One qubit: the Hadamard.
        let s = Statevector::basis_state(1, 1).unwrap();
        let f = dft_reference(&s).unwrap();
        assert!((f.amplitudes()[0] - c(H, 0.0)).norm() < 1e-14);
        assert!((f.amplitudes()[1] - c(-H, 0.0)).norm() < 1e-14);

        // Two qubits, input |01⟩ = index 1: out[y] = i^y / 2.
        let s = Statevector::basis_state(2, 1).unwrap();
        let f = dft_reference(&s).unwrap();
        let want = [c(0.5, 0.0), c(0.0, 0.5), c(-0.5, 0.0), c(0.0, -0.5)];
        for (got, want) in f.amplitudes().iter().zip(want) {
            assert!((got - want).norm() < 1e-14);
        }

        // Unitarity on a random state.
        let s = random_state(6, 9);
        let f = dft_reference(&s).unwrap();
        assert!((f.norm() - 1.0).abs() < 1e-12);

        assert!(dft_reference(&Statevector::basis_state(DFT_QUBIT_CAP + 1, 0).unwrap()).is_err());
    }

    #[test]
    fn fourier_reference_agrees_with_textbook_circuit() {
        let n = 4;
        let s = random_state(n, 11);
        let via_circuit = statevector_run(&qft_circuit(n).unwrap(), &s).unwrap();
        let via_sum = dft_reference(&s).unwrap();
        for (a, b) in via_circuit.amplitudes().iter().zip(via_sum.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

}
