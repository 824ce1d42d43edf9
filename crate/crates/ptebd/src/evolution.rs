//! Layer evolution engines for Vidal-form states.
//!
//! Two engines share one two-site update core. [`ptebd_apply_layer`] applies
//! every gate of a layer in a single parallel round and compresses with
//! [`ipmc`], a bond-local truncation that needs no sweep along the chain.
//! [`sequential_apply_layer`] is the conventional reference: two-site updates
//! run one at a time with the rank cap enforced inside each SVD, and a full
//! canonicalization sweep closes the layer.
//!
//! The parallel engine deliberately leaves the state non-canonical after
//! truncating; [`ptsu_step`] pushes it back, and the truncation bookkeeping
//! in [`TruncationReport`] bounds the damage. Every quantity here refers to
//! the stored tensors; log-norm offsets are never folded in.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::circuits::{unitarity_defect, Gate, Layer};
use crate::error::{Error, Result};
use crate::mps::{significant_count, VidalMps};
use crate::tensor::{contract, pseudo_inverse, svd, DenseTensor};

/// Gate matrices beyond this unitarity defect are rejected.
const UNITARITY_TOLERANCE: f64 = 1e-10;

/// Per-bond account of one truncation event.
///
/// `bond_eps[b-1]` is the relative weight discarded across interior bond
/// `b`: the squared norm of the cut directions divided by the squared norm
/// of the full spectrum at that bond. The derived bounds hold when the
/// state entering the truncation is canonical and unit-norm:
///
/// * the squared overlap between the input and the raw truncated state is
///   at least `fidelity_lb_tight = 1 - 2 eps_total` and at least the
///   weaker `fidelity_lb_loose = 1 - 2 Σ_b √ε_b`,
/// * the truncated norm is at least `norm_lb = 1 - √(2 eps_total)`.
#[derive(Clone, Debug)]
pub struct TruncationReport {
    /// Relative discarded weight per interior bond, length `N-1`.
    pub bond_eps: Vec<f64>,
    /// Norm-restoring factors `ν_b = (1 - ε_b)^{-1/2}` per interior bond.
    pub bond_nu: Vec<f64>,
    /// Total relative discarded weight `Σ_b ε_b`.
    pub eps_total: f64,
    /// Squared-overlap lower bound `1 - 2 Σ_b ε_b`.
    pub fidelity_lb_tight: f64,
    /// Squared-overlap lower bound `1 - 2 Σ_b √ε_b`.
    pub fidelity_lb_loose: f64,
    /// Norm lower bound `1 - √(2 Σ_b ε_b)`.
    pub norm_lb: f64,
}

impl TruncationReport {
    /// Derives the bounds from per-bond relative discarded weights.
    pub fn from_bond_eps(bond_eps: Vec<f64>) -> TruncationReport {
        let eps_total: f64 = bond_eps.iter().sum();
        let root_sum: f64 = bond_eps.iter().map(|e| e.sqrt()).sum();
        let bond_nu = bond_eps.iter().map(|e| (1.0 - e).powf(-0.5)).collect();
        TruncationReport {
            bond_eps,
            bond_nu,
            eps_total,
            fidelity_lb_tight: 1.0 - 2.0 * eps_total,
            fidelity_lb_loose: 1.0 - 2.0 * root_sum,
            norm_lb: 1.0 - (2.0 * eps_total).sqrt(),
        }
    }

    /// Report for a step that discarded nothing on any of `bonds` bonds.
    pub fn empty(bonds: usize) -> TruncationReport {
        TruncationReport::from_bond_eps(vec![0.0; bonds])
    }
}

/// Measurements from one layer application.
#[derive(Clone, Debug)]
pub struct StepTrace {
    /// Serialized stages of mutually independent two-site work. The
    /// parallel engine counts the gate round, the truncation round, and
    /// each restoration step as one stage; the sequential engine counts
    /// every two-site update.
    pub parallel_rounds: usize,
    /// Wall-clock time of the evolution work itself. Norm and
    /// canonical-distance diagnostics run outside the measured region.
    pub elapsed: Duration,
    /// State norm after truncation, before norm stabilization.
    pub norm_n: f64,
    /// State norm after norm stabilization; equals `norm_n` when
    /// stabilization is off.
    pub norm_nstar: f64,
    /// Canonical-form deviation at the end of the step.
    pub canonical_distance: f64,
    /// Truncation account for the step.
    pub report: TruncationReport,
}

/// Outcome of one compression pass.
#[derive(Clone, Debug)]
pub struct CompressionTrace {
    /// Truncation account of the slicing phase.
    pub report: TruncationReport,
    /// Serialized stages spent: one for the truncation plus one per
    /// restoration step. Norm stabilization is a scalar rescale of the
    /// bond weights and does not count.
    pub rounds: usize,
    /// Total factor `Π_b ν_b` applied by norm stabilization, 1 when
    /// disabled.
    pub nu_product: f64,
}

/// Result of re-splitting a bond-centered two-site wavefunction.
struct BondUpdate {
    left: DenseTensor,
    lambda: Vec<f64>,
    right: DenseTensor,
    discarded: f64,
    total: f64,
}

impl BondUpdate {
    fn relative_discarded(&self) -> f64 {
        if self.total > 0.0 {
            self.discarded / self.total
        } else {
            0.0
        }
    }
}

/// Two-site update across interior bond `b` (sites `b-1` and `b`).
///
/// Contracts `(Λ[b-1] Γ[b-1] Λ[b]) (Γ[b] Λ[b+1])`, optionally applies a
/// 4x4 gate matrix in the basis `|site b-1, site b⟩`, re-splits by SVD and
/// divides the outer weights back out. Numerically zero singular
/// directions are always dropped; `chi` additionally caps the kept rank.
/// Reads the state only, so disjoint bonds can be processed in parallel
/// before installing.
fn two_site_core(
    state: &VidalMps,
    b: usize,
    gate: Option<&DenseTensor>,
    chi: Option<usize>,
) -> Result<BondUpdate> {
    let mut tl = state.gamma(b - 1).clone();
    tl.scale_axis(0, state.lambda(b - 1))?;
    tl.scale_axis(2, state.lambda(b))?;
    let mut tr = state.gamma(b).clone();
    tr.scale_axis(2, state.lambda(b + 1))?;
    let mut theta = contract(&tl, &[2], &tr, &[0])?;
    if let Some(m) = gate {
        let g = m.reshaped(&[2, 2, 2, 2])?;
        theta = contract(&g, &[2, 3], &theta, &[1, 2])?.permuted(&[2, 0, 1, 3])?;
    }
    let (cl, cr) = (theta.shape()[0], theta.shape()[3]);
    let f = svd(&theta.into_shape(&[cl * 2, 2 * cr])?)?;
    let total: f64 = f.s.iter().map(|v| v * v).sum();
    let mut k = significant_count(&f.s).ok_or_else(|| {
        Error::DegenerateState(format!("two-site update across bond {} lost all weight", b))
    })?;
    if let Some(cap) = chi {
        k = k.min(cap);
    }
    let discarded: f64 = f.s[k..].iter().map(|v| v * v).sum();
    let mut left = f.u.sliced_cols(k)?.into_shape(&[cl, 2, k])?;
    left.scale_axis(0, &pseudo_inverse(state.lambda(b - 1))?)?;
    let mut right = f.vdag.sliced_rows(k)?.into_shape(&[k, 2, cr])?;
    right.scale_axis(2, &pseudo_inverse(state.lambda(b + 1))?)?;
    Ok(BondUpdate { left, lambda: f.s[..k].to_vec(), right, discarded, total })
}

/// Path-ordered matrix and center bond of an adjacent two-qubit gate.
fn adjacent_gate_matrix(gate: &Gate, n_sites: usize) -> Result<(usize, DenseTensor)> {
    let (lo, hi, matrix) = gate.path_ordered()?;
    if hi >= n_sites {
        return Err(Error::ShapeMismatch(format!(
            "gate on ({}, {}) exceeds the {}-site chain",
            lo, hi, n_sites
        )));
    }
    if hi != lo + 1 {
        return Err(Error::UnsupportedLayout(format!(
            "two-site update needs path-adjacent targets, got ({}, {})",
            lo, hi
        )));
    }
    let defect = unitarity_defect(&matrix);
    if defect > UNITARITY_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "gate matrix is not unitary (defect {:.3e})",
            defect
        )));
    }
    Ok((lo + 1, matrix))
}

/// New site tensor after a one-qubit gate: the 2x2 matrix contracted into
/// the physical leg of `Γ[q]`.
fn rotated_site(state: &VidalMps, q: usize, matrix: &DenseTensor) -> Result<DenseTensor> {
    contract(matrix, &[1], state.gamma(q), &[1])?.permuted(&[1, 0, 2])
}

fn checked_single(gate: &Gate, n_sites: usize) -> Result<(usize, DenseTensor)> {
    let q = gate.qubits()[0];
    if q >= n_sites {
        return Err(Error::ShapeMismatch(format!(
            "gate on qubit {} exceeds the {}-site chain",
            q, n_sites
        )));
    }
    let matrix = gate.matrix();
    let defect = unitarity_defect(&matrix);
    if defect > UNITARITY_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "gate matrix is not unitary (defect {:.3e})",
            defect
        )));
    }
    Ok((q, matrix))
}

/// Applies a two-qubit gate to adjacent sites, optionally capping the new
/// bond rank at `chi` inside the SVD. Targets may come in either order.
///
/// Returns the relative weight discarded by the cap.
pub fn tebd_two_site(state: &mut VidalMps, gate: &Gate, chi: Option<usize>) -> Result<f64> {
    if chi == Some(0) {
        return Err(Error::InvalidArgument("rank cap must be positive".into()));
    }
    let (b, matrix) = adjacent_gate_matrix(gate, state.n_sites())?;
    let update = two_site_core(state, b, Some(&matrix), chi)?;
    let eps = update.relative_discarded();
    state.set_bond(b, update.left, update.lambda, update.right);
    Ok(eps)
}

/// One parallel restoration step: identity two-site updates on every odd
/// interior bond, then on every even one. Bonds of equal parity touch
/// disjoint sites, so each half computes from a frozen state and installs
/// afterwards.
///
/// The encoded state is unchanged up to floating-point error; weight moves
/// between the `Γ` and `Λ` tensors toward canonical form. Starting from a
/// normalized state, `⌊N/2⌋` steps restore canonical form exactly.
pub fn ptsu_step(state: &mut VidalMps) -> Result<()> {
    let n = state.n_sites();
    for parity in [1usize, 0usize] {
        let bonds: Vec<usize> = (1..n).filter(|b| b % 2 == parity).collect();
        let frozen: &VidalMps = state;
        let updates: Vec<(usize, BondUpdate)> = bonds
            .par_iter()
            .map(|&b| two_site_core(frozen, b, None, None).map(|u| (b, u)))
            .collect::<Result<Vec<_>>>()?;
        for (b, u) in updates {
            state.set_bond(b, u.left, u.lambda, u.right);
        }
    }
    Ok(())
}

/// Caps every interior bond at rank `chi` in one shot, with no
/// serialization along the chain.
///
/// Phase one computes, independently per interior bond, the kept rank
/// (numerically zero directions always go), the relative discarded weight
/// `ε_b` and the factor `ν_b`. Phase two slices every site tensor to its
/// kept blocks; the bond weights are sorted descending, so the dominant
/// block survives. The `ε_b` are exact Schmidt weights only for a
/// canonical input, but the slicing itself is well defined regardless.
pub fn parallel_truncate(state: &mut VidalMps, chi: usize) -> Result<TruncationReport> {
    if chi == 0 {
        return Err(Error::InvalidArgument("rank cap must be positive".into()));
    }
    let n = state.n_sites();
    let frozen: &VidalMps = state;
    let interior: Vec<usize> = (1..n).collect();
    let computed: Vec<(usize, f64)> = interior
        .par_iter()
        .map(|&b| {
            let w = frozen.lambda(b);
            let k = significant_count(w)
                .ok_or_else(|| Error::DegenerateState(format!("bond {} carries no weight", b)))?
                .min(chi);
            let total: f64 = w.iter().map(|v| v * v).sum();
            let cut: f64 = w[k..].iter().map(|v| v * v).sum();
            Ok((k, cut / total))
        })
        .collect::<Result<Vec<_>>>()?;
    // Boundary bonds stay at their fixed rank 1.
    let mut keep = vec![1usize; n + 1];
    let mut bond_eps = vec![0.0f64; n.saturating_sub(1)];
    for (b, (k, eps)) in interior.iter().zip(&computed) {
        keep[*b] = *k;
        bond_eps[*b - 1] = *eps;
    }
    let gammas: Vec<DenseTensor> = (0..n)
        .into_par_iter()
        .map(|i| frozen.gamma(i).sliced_block3(keep[i], keep[i + 1]))
        .collect::<Result<Vec<_>>>()?;
    let lambdas: Vec<Vec<f64>> =
        (0..=n).map(|b| state.lambda(b)[..keep[b]].to_vec()).collect();
    state.replace_parts(gammas, lambdas);
    Ok(TruncationReport::from_bond_eps(bond_eps))
}

/// Rescales every interior bond weight vector by its `ν_b` from `report`.
/// The encoded state picks up the factor `Π_b ν_b` exactly (each bond's
/// weights enter every amplitude once), which compensates the norm lost to
/// truncation. Returns that factor.
///
/// A bond that lost all its weight has no finite rescaling and is
/// reported as ill-conditioned.
pub fn stabilize_norm(state: &mut VidalMps, report: &TruncationReport) -> Result<f64> {
    let n = state.n_sites();
    if report.bond_nu.len() + 1 != n {
        return Err(Error::ShapeMismatch(format!(
            "report covers {} bonds but the chain has {}",
            report.bond_nu.len(),
            n - 1
        )));
    }
    let mut product = 1.0f64;
    for (i, &nu) in report.bond_nu.iter().enumerate() {
        if !nu.is_finite() || nu <= 0.0 {
            return Err(Error::IllConditioned(format!(
                "bond {} discarded all of its weight; no finite rescaling exists",
                i + 1
            )));
        }
        let scaled: Vec<f64> = state.lambda(i + 1).iter().map(|v| v * nu).collect();
        state.set_lambda(i + 1, scaled);
        product *= nu;
    }
    Ok(product)
}

/// Improved parallel compression: one parallel truncation round capping
/// all bonds at `chi`, optional norm stabilization, then `g` restoration
/// steps pushing the state back toward canonical form.
pub fn ipmc(
    state: &mut VidalMps,
    chi: usize,
    g: usize,
    stabilize: bool,
) -> Result<CompressionTrace> {
    let report = parallel_truncate(state, chi)?;
    let nu_product = if stabilize { stabilize_norm(state, &report)? } else { 1.0 };
    for _ in 0..g {
        ptsu_step(state)?;
    }
    Ok(CompressionTrace { report, rounds: 1 + g, nu_product })
}

/// Applies one circuit layer with the parallel engine.
///
/// All gates run in a single parallel round: a validated layer has
/// site-disjoint two-qubit gates, so every bond update reads a frozen
/// state and the installs touch disjoint tensors. Gate application keeps
/// every significant singular direction; if any bond then exceeds `chi`,
/// one [`ipmc`] pass compresses the state. A non-truncating layer thus
/// costs 1 round and a truncating one `2 + g`.
pub fn ptebd_apply_layer(
    state: &mut VidalMps,
    layer: &Layer,
    chi: usize,
    g: usize,
    stabilize: bool,
) -> Result<StepTrace> {
    if chi == 0 {
        return Err(Error::InvalidArgument("rank cap must be positive".into()));
    }
    let n = state.n_sites();
    layer.validate(n)?;

    let started = Instant::now();
    let singles: Vec<(usize, DenseTensor)> = layer
        .single_qubit_gates()
        .map(|gate| checked_single(gate, n))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(usize, DenseTensor)> = layer
        .two_qubit_gates()
        .map(|gate| adjacent_gate_matrix(gate, n))
        .collect::<Result<Vec<_>>>()?;
    // One-qubit gates act before two-qubit gates within a layer. Both
    // sub-phases are local, so the layer still costs one parallel round.
    {
        let frozen: &VidalMps = state;
        let rotated: Vec<(usize, DenseTensor)> = singles
            .par_iter()
            .map(|(q, m)| rotated_site(frozen, *q, m).map(|t| (*q, t)))
            .collect::<Result<Vec<_>>>()?;
        let state = &mut *state;
        for (q, t) in rotated {
            state.set_gamma(q, t);
        }
    }
    {
        let frozen: &VidalMps = state;
        let updates: Vec<(usize, BondUpdate)> = pairs
            .par_iter()
            .map(|(b, m)| two_site_core(frozen, *b, Some(m), None).map(|u| (*b, u)))
            .collect::<Result<Vec<_>>>()?;
        let state = &mut *state;
        for (b, u) in updates {
            state.set_bond(b, u.left, u.lambda, u.right);
        }
    }
    let mut rounds = 1usize;
    let mut nu_product = 1.0f64;
    let mut report = TruncationReport::empty(n - 1);
    if state.max_bond_dim() > chi {
        let trace = ipmc(state, chi, g, stabilize)?;
        rounds += trace.rounds;
        nu_product = trace.nu_product;
        report = trace.report;
    }
    let elapsed = started.elapsed();

    let norm_nstar = state.norm();
    let norm_n = norm_nstar / nu_product;
    let canonical_distance = state.canonical_distance_with_norm(norm_nstar)?.distance;
    Ok(StepTrace {
        parallel_rounds: rounds,
        elapsed,
        norm_n,
        norm_nstar,
        canonical_distance,
        report,
    })
}

/// Applies one circuit layer with the conventional sequential engine.
///
/// One-qubit gates apply first, then each two-qubit gate runs as its own
/// serialized two-site update in ascending target order with the rank cap
/// enforced inside its SVD. Every update renormalizes its bond weights to
/// unit Euclidean length (the extracted factor accumulates in the
/// log-norm offset) and a full canonicalization sweep closes the layer,
/// so the returned state is canonical with norm 1.
pub fn sequential_apply_layer(
    state: &mut VidalMps,
    layer: &Layer,
    chi: usize,
) -> Result<StepTrace> {
    if chi == 0 {
        return Err(Error::InvalidArgument("rank cap must be positive".into()));
    }
    let n = state.n_sites();
    layer.validate(n)?;

    let started = Instant::now();
    for gate in layer.single_qubit_gates() {
        let (q, m) = checked_single(gate, n)?;
        let t = rotated_site(state, q, &m)?;
        state.set_gamma(q, t);
    }
    let mut pairs: Vec<&Gate> = layer.two_qubit_gates().collect();
    pairs.sort_by_key(|g| g.qubits().into_iter().min());
    let mut bond_eps = vec![0.0f64; n.saturating_sub(1)];
    let mut updates = 0usize;
    for gate in pairs {
        let eps = tebd_two_site(state, gate, Some(chi))?;
        let b = gate.qubits().into_iter().min().expect("two-qubit gate") + 1;
        bond_eps[b - 1] += eps;
        let w: Vec<f64> = state.lambda(b).to_vec();
        let scale = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        state.set_lambda(b, w.iter().map(|v| v / scale).collect());
        state.add_log_norm_offset(scale.ln());
        updates += 1;
    }
    *state = state.canonicalize()?;
    let elapsed = started.elapsed();

    let norm = state.norm();
    let canonical_distance = state.canonical_distance_with_norm(norm)?.distance;
    Ok(StepTrace {
        parallel_rounds: updates,
        elapsed,
        norm_n: norm,
        norm_nstar: norm,
        canonical_distance,
        report: TruncationReport::from_bond_eps(bond_eps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::families::rqc_1d;
    use crate::circuits::standard_gate;
    use crate::oracle::{dense_parallel_truncation, fidelity, statevector_run, Statevector};
    use approx::assert_abs_diff_eq;

    const CAP: usize = 20;

    fn eswap(a: usize, b: usize, theta: f64) -> Gate {
        standard_gate("eswap", &[a, b], &[theta]).expect("valid gate")
    }

    #[test]
    fn a_two_site_gate_matches_the_dense_oracle() {
        for (a, b) in [(2usize, 3usize), (3, 2)] {
            let mut state = VidalMps::random_mps(6, 4, 11).expect("state");
            let before = state.to_statevector(CAP).expect("dense");
            let gate = eswap(a, b, 1.234);
            let eps = tebd_two_site(&mut state, &gate, None).expect("update");
            assert_eq!(eps, 0.0);
            let after = state.to_statevector(CAP).expect("dense");
            let expected = before.apply_gate(&gate).expect("oracle");
            assert!(fidelity(&after, &expected).expect("fidelity") > 1.0 - 1e-12);
            assert_abs_diff_eq!(state.norm(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn a_capped_update_loses_exactly_the_reported_weight() {
        let mut state = VidalMps::random_mps(6, 4, 3).expect("state");
        let eps = tebd_two_site(&mut state, &eswap(2, 3, 1.9), Some(2)).expect("update");
        assert!(eps > 1e-6, "cap at 2 should bite, eps = {eps}");
        // Unit-norm canonical input: the truncated norm is the kept weight.
        assert_abs_diff_eq!(state.norm().powi(2), 1.0 - eps, epsilon = 1e-10);
    }

    #[test]
    fn restoration_steps_preserve_the_encoded_state() {
        let mut state = VidalMps::random_mps(8, 6, 5).expect("state");
        parallel_truncate(&mut state, 3).expect("truncate");
        let before = state.to_statevector(CAP).expect("dense");
        let distance_before = state.canonical_distance().expect("report").distance;
        assert!(distance_before > 1e-8, "truncation should break canonical form");
        ptsu_step(&mut state).expect("step");
        let after = state.to_statevector(CAP).expect("dense");
        assert!(fidelity(&before, &after).expect("fidelity") > 1.0 - 1e-12);
        assert_abs_diff_eq!(before.norm(), after.norm(), epsilon = 1e-12);
    }

    #[test]
    fn restoration_recovers_canonical_form_in_half_n_steps() {
        // Exact restoration in ⌊N/2⌋ steps needs a unit-norm input; either
        // normalization style works.
        for (n, chi, seed, site_scaling) in [(6usize, 8usize, 7u64, true), (9, 8, 23, false)] {
            let mut state = VidalMps::random_mps(n, chi, seed).expect("state");
            let report = parallel_truncate(&mut state, 2).expect("truncate");
            stabilize_norm(&mut state, &report).expect("stabilize");
            let mut normalized = if site_scaling {
                state.normalized_by_site_scaling().expect("normalize")
            } else {
                state.normalized_by_bond_scaling().expect("normalize")
            };
            for _ in 0..n / 2 {
                ptsu_step(&mut normalized).expect("step");
            }
            let report = normalized.canonical_distance().expect("report");
            assert!(
                report.distance < 1e-10,
                "distance after ⌊{n}/2⌋ steps: {}",
                report.distance
            );
        }
    }

    #[test]
    fn parallel_truncation_matches_the_dense_oracle() {
        let mut state = VidalMps::random_mps(8, 8, 13).expect("state");
        let dense = state.to_statevector(CAP).expect("dense");
        let oracle = dense_parallel_truncation(&dense, 3).expect("oracle");
        let report = parallel_truncate(&mut state, 3).expect("truncate");
        assert_eq!(report.bond_eps.len(), oracle.bond_eps.len());
        for (got, want) in report.bond_eps.iter().zip(&oracle.bond_eps) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        }
        let truncated = state.to_statevector(CAP).expect("dense");
        assert!(fidelity(&truncated, &oracle.state).expect("fidelity") > 1.0 - 1e-12);
        assert!(state.max_bond_dim() <= 3);
    }

    #[test]
    fn truncation_respects_its_own_fidelity_and_norm_bounds() {
        let state = VidalMps::random_mps(8, 8, 17).expect("state");
        let before = state.to_statevector(CAP).expect("dense");
        let mut truncated = state.clone();
        let report = parallel_truncate(&mut truncated, 2).expect("truncate");
        assert!(report.eps_total > 1e-4, "cap at 2 should bite");
        let after = truncated.to_statevector(CAP).expect("dense");
        // Squared overlap of the unit-norm input with the raw truncated state.
        let f2 = before.inner(&after).expect("inner").norm_sqr();
        assert!(f2 <= 1.0 + 1e-12);
        assert!(f2 >= report.fidelity_lb_tight - 1e-12);
        assert!(f2 >= report.fidelity_lb_loose - 1e-12);
        assert!(report.fidelity_lb_tight >= report.fidelity_lb_loose);
        let n = truncated.norm();
        assert!(n <= 1.0 + 1e-12);
        assert!(n >= report.norm_lb - 1e-12);
    }

    #[test]
    fn norm_stabilization_applies_the_exact_product_of_factors() {
        let mut state = VidalMps::random_mps(8, 8, 19).expect("state");
        let report = parallel_truncate(&mut state, 3).expect("truncate");
        let norm_before = state.norm();
        let product = stabilize_norm(&mut state, &report).expect("stabilize");
        let expected: f64 = report.bond_nu.iter().product();
        assert_abs_diff_eq!(product, expected, epsilon = 1e-12);
        let norm_after = state.norm();
        assert_abs_diff_eq!(norm_after, norm_before * product, epsilon = 1e-10);
        // Unit-norm canonical input: the stabilized norm stays bracketed.
        assert!(norm_after <= product + 1e-12);
        assert!(norm_after >= (1.0 - (2.0 * report.eps_total).sqrt()) * product - 1e-12);
    }

    #[test]
    fn compression_counts_rounds_and_reduces_canonical_distance() {
        let mut state = VidalMps::random_mps(9, 8, 23).expect("state");
        let mut sliced_only = state.clone();
        parallel_truncate(&mut sliced_only, 3).expect("truncate");
        let raw = sliced_only.canonical_distance().expect("report").distance;
        let trace = ipmc(&mut state, 3, 4, true).expect("compress");
        assert_eq!(trace.rounds, 5);
        assert!(trace.nu_product > 1.0);
        assert!(trace.report.eps_total > 0.0);
        // The stabilized norm is close to but not exactly 1, so restoration
        // converges to a small floor set by the norm offset rather than to
        // zero; exact restoration of normalized states is covered above.
        let distance = state.canonical_distance().expect("report").distance;
        assert!(raw > 9e-2, "slicing should leave the state visibly non-canonical");
        assert!(
            distance < raw / 4.0 && distance < 2.5e-2,
            "distance after compression: {distance} (raw {raw})"
        );
    }

    #[test]
    fn the_parallel_engine_reproduces_an_exact_circuit() {
        let circuit = rqc_1d(7, 4, 41).expect("circuit");
        let mut state = VidalMps::zero_state(7).expect("state");
        for layer in &circuit.layers {
            let trace = ptebd_apply_layer(&mut state, layer, 64, 1, true).expect("layer");
            assert_eq!(trace.parallel_rounds, 1, "no bond can exceed 64 at 7 qubits");
            assert_eq!(trace.report.eps_total, 0.0);
        }
        let dense = statevector_run(&circuit, &Statevector::basis_state(7, 0).expect("input"))
            .expect("oracle");
        let got = state.to_statevector(CAP).expect("dense");
        assert!(fidelity(&got, &dense).expect("fidelity") > 1.0 - 1e-9);
    }

    #[test]
    fn both_engines_agree_without_truncation() {
        let circuit = rqc_1d(7, 6, 43).expect("circuit");
        let mut parallel = VidalMps::zero_state(7).expect("state");
        let mut sequential = VidalMps::zero_state(7).expect("state");
        for layer in &circuit.layers {
            ptebd_apply_layer(&mut parallel, layer, 64, 1, true).expect("parallel");
            let trace = sequential_apply_layer(&mut sequential, layer, 64).expect("sequential");
            assert_eq!(trace.parallel_rounds, layer.two_qubit_count());
            assert!(trace.canonical_distance < 1e-9);
            assert_abs_diff_eq!(trace.norm_n, 1.0, epsilon = 1e-9);
        }
        let a = parallel.to_statevector(CAP).expect("dense");
        let b = sequential.to_statevector(CAP).expect("dense");
        assert!(fidelity(&a, &b).expect("fidelity") > 1.0 - 1e-9);
    }

    #[test]
    fn truncating_layers_cost_two_plus_g_rounds() {
        let circuit = rqc_1d(9, 8, 47).expect("circuit");
        let mut state = VidalMps::zero_state(9).expect("state");
        let mut saw_truncation = false;
        for layer in &circuit.layers {
            let trace = ptebd_apply_layer(&mut state, layer, 2, 2, true).expect("layer");
            if trace.report.eps_total > 0.0 {
                saw_truncation = true;
                assert_eq!(trace.parallel_rounds, 4);
            } else {
                assert_eq!(trace.parallel_rounds, 1);
            }
            assert_abs_diff_eq!(
                trace.norm_nstar,
                trace.norm_n * trace.report.bond_nu.iter().product::<f64>(),
                epsilon = 1e-10
            );
        }
        assert!(saw_truncation, "a depth-8 circuit at cap 2 must truncate");
        assert!(state.max_bond_dim() <= 2);
    }

    #[test]
    fn stabilization_off_leaves_the_norm_alone() {
        let circuit = rqc_1d(9, 8, 53).expect("circuit");
        let mut state = VidalMps::zero_state(9).expect("state");
        let mut last = StepTrace {
            parallel_rounds: 0,
            elapsed: Duration::ZERO,
            norm_n: 1.0,
            norm_nstar: 1.0,
            canonical_distance: 0.0,
            report: TruncationReport::empty(8),
        };
        for layer in &circuit.layers {
            last = ptebd_apply_layer(&mut state, layer, 2, 1, false).expect("layer");
            assert_eq!(last.norm_n, last.norm_nstar);
        }
        assert!(last.norm_n < 1.0 - 1e-6, "repeated truncation must shed norm");
    }

    #[test]
    fn update_rejections() {
        let mut state = VidalMps::random_mps(6, 4, 29).expect("state");
        let far = eswap(1, 4, 0.5);
        assert!(matches!(
            tebd_two_site(&mut state, &far, None),
            Err(Error::UnsupportedLayout(_))
        ));
        let single = standard_gate("h", &[2], &[]).expect("gate");
        assert!(tebd_two_site(&mut state, &single, None).is_err());
        assert!(matches!(
            tebd_two_site(&mut state, &eswap(2, 3, 0.5), Some(0)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            parallel_truncate(&mut state, 0),
            Err(Error::InvalidArgument(_))
        ));
        let full_loss = TruncationReport::from_bond_eps(vec![0.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            stabilize_norm(&mut state, &full_loss),
            Err(Error::IllConditioned(_))
        ));
        let short = TruncationReport::from_bond_eps(vec![0.0; 3]);
        assert!(matches!(
            stabilize_norm(&mut state, &short),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
