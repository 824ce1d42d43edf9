//! Matrix product states in Vidal form.
//!
//! A state on `N` qubits is stored as `N` rank-3 site tensors
//! `Γ[i]` with shape `(χ_i, 2, χ_{i+1})` and `N+1` diagonal bond-weight
//! vectors `Λ[b]`, where bond `b` separates sites `b-1` and `b`. The
//! boundary weights `Λ[0]` and `Λ[N]` are always the single entry `[1.0]`.
//! The amplitude of basis state `σ_0 … σ_{N-1}` (qubit 0 is the most
//! significant bit) is
//!
//! ```text
//! ⟨σ|ψ⟩ = Λ[0] Γ[0]^{σ_0} Λ[1] Γ[1]^{σ_1} … Λ[N-1] Γ[N-1]^{σ_{N-1}} Λ[N]
//! ```
//!
//! The form is *canonical* when, with `A[i] = Λ[i] Γ[i]` and
//! `B[i] = Γ[i] Λ[i+1]`, every site satisfies the isometry conditions
//! `Σ_σ A^σ† A^σ = 1` and `Σ_σ B^σ B^σ† = 1`. Canonical form makes each
//! `Λ[b]` the Schmidt spectrum of the bond cut, which is what the
//! truncation routines in [`crate::evolution`] rely on. [`canonical_distance`]
//! measures the deviation from these conditions; evolution engines keep it
//! near zero but never assume it blindly.
//!
//! Fallible constructors validate structure (shape chaining, weight
//! ordering, boundary weights); numerical canonicality is deliberately
//! *not* part of structural validity, because intermediate states during
//! evolution are legitimately non-canonical.
//!
//! [`canonical_distance`]: VidalMps::canonical_distance

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::oracle::Statevector;
use crate::rng::{substream, DOMAIN_SAMPLE, DOMAIN_SITE};
use crate::tensor::{contract, pseudo_inverse, svd, DenseTensor, SINGULAR_ZERO_RELATIVE_THRESHOLD};

/// Physical dimension of every site (qubits only).
pub const PHYS_DIM: usize = 2;

/// Norm deviation below which [`VidalMps::canonical_distance`] compares the
/// Gram matrices against the identity without a global rescale.
const NORM_RESCALE_TOLERANCE: f64 = 1e-6;

/// Snapshot file magic bytes.
const SNAPSHOT_MAGIC: &[u8; 8] = b"MPSSNAP1";
/// Snapshot format version.
const SNAPSHOT_VERSION: u32 = 1;
/// Upper bound on total snapshot tensor elements accepted by the reader.
const SNAPSHOT_MAX_ELEMENTS: u64 = 1 << 30;

/// Qubit state in Vidal form. See the module docs for conventions.
#[derive(Clone, Debug)]
pub struct VidalMps {
    gammas: Vec<DenseTensor>,
    lambdas: Vec<Vec<f64>>,
    log_norm_offset: f64,
}

/// Deviation of a state from canonical form.
///
/// `left_residuals[i]` is `‖s·Σ_σ A^σ†A^σ − 1‖_F` for site `i` and
/// `right_residuals[i]` the analogous `B`-form residual, where `s` is a
/// global rescale (`norm^{-2/N}` when the norm strays from 1 by more than
/// 1e-6, otherwise 1) that makes the measure insensitive to overall
/// amplitude. `distance` is the mean of all `2N` residuals.
#[derive(Clone, Debug)]
pub struct CanonicalReport {
    pub distance: f64,
    pub norm: f64,
    pub left_residuals: Vec<f64>,
    pub right_residuals: Vec<f64>,
}

impl VidalMps {
    /// Builds a state from raw parts, validating structure only.
    ///
    /// Checks: at least one site, every `Γ[i]` is rank 3 with physical
    /// dimension 2, bond dimensions chain correctly and match the weight
    /// vector lengths, weights are nonnegative and sorted descending, and
    /// both boundary weight vectors are exactly `[1.0]`. Does *not* require
    /// canonical form or unit norm.
    pub fn from_parts(
        gammas: Vec<DenseTensor>,
        lambdas: Vec<Vec<f64>>,
        log_norm_offset: f64,
    ) -> Result<Self> {
        let n = gammas.len();
        if n == 0 {
            return Err(Error::InvalidArgument("state needs at least one site".into()));
        }
        if lambdas.len() != n + 1 {
            return Err(Error::ShapeMismatch(format!(
                "{} sites require {} bond weight vectors, got {}",
                n,
                n + 1,
                lambdas.len()
            )));
        }
        for (i, g) in gammas.iter().enumerate() {
            if g.rank() != 3 {
                return Err(Error::ShapeMismatch(format!(
                    "site tensor {} has rank {}, expected 3",
                    i,
                    g.rank()
                )));
            }
            let s = g.shape();
            if s[1] != PHYS_DIM {
                return Err(Error::ShapeMismatch(format!(
                    "site tensor {} has physical dimension {}, expected {}",
                    i, s[1], PHYS_DIM
                )));
            }
            if s[0] != lambdas[i].len() || s[2] != lambdas[i + 1].len() {
                return Err(Error::ShapeMismatch(format!(
                    "site tensor {} has bond dims ({}, {}), weights have ({}, {})",
                    i,
                    s[0],
                    s[2],
                    lambdas[i].len(),
                    lambdas[i + 1].len()
                )));
            }
        }
        for (b, l) in lambdas.iter().enumerate() {
            if l.is_empty() {
                return Err(Error::ShapeMismatch(format!("bond {} has no weights", b)));
            }
            for w in l.windows(2) {
                if w[1] > w[0] + 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "bond {} weights are not sorted descending",
                        b
                    )));
                }
            }
            if l.iter().any(|&v| !v.is_finite() || v < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "bond {} has negative or non-finite weights",
                    b
                )));
            }
        }
        for &b in [0usize, n].iter() {
            if lambdas[b].len() != 1 || (lambdas[b][0] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "boundary bond {} must carry the single weight 1.0",
                    b
                )));
            }
        }
        if !log_norm_offset.is_finite() {
            return Err(Error::InvalidArgument("log-norm offset must be finite".into()));
        }
        Ok(VidalMps {
            gammas,
            lambdas,
            log_norm_offset,
        })
    }

    /// Computational-basis product state `|bits⟩`; every bit must be 0 or 1.
    pub fn product_state(bits: &[u8]) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidArgument("state needs at least one site".into()));
        }
        let mut gammas = Vec::with_capacity(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b > 1 {
                return Err(Error::InvalidArgument(format!(
                    "bit {} at site {} is not 0 or 1",
                    b, i
                )));
            }
            let mut g = DenseTensor::zeros(&[1, PHYS_DIM, 1]);
            g.set(&[0, b as usize, 0], Complex64::new(1.0, 0.0));
            gammas.push(g);
        }
        let lambdas = vec![vec![1.0]; bits.len() + 1];
        VidalMps::from_parts(gammas, lambdas, 0.0)
    }

    /// All-zeros product state on `n` qubits.
    pub fn zero_state(n: usize) -> Result<Self> {
        VidalMps::product_state(&vec![0u8; n])
    }

    /// Random canonical state with bond dimensions
    /// `min(chi, 2^min(i, n-i))` and unit norm.
    ///
    /// Site-tensor entries are drawn with independent uniform real and
    /// imaginary parts on `[-1, 1)` from one substream per site, so the
    /// state depends only on `(n, chi, seed)`. The raw tensors are then
    /// canonicalized, which fixes the weights and the normalization.
    pub fn random_mps(n: usize, chi: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("state needs at least one site".into()));
        }
        if chi == 0 {
            return Err(Error::InvalidArgument("bond dimension must be at least 1".into()));
        }
        let dim = |b: usize| -> usize {
            let exponent = b.min(n - b).min(40);
            chi.min(1usize << exponent)
        };
        let mut gammas = Vec::with_capacity(n);
        for i in 0..n {
            let (l, r) = (dim(i), dim(i + 1));
            let mut rng = substream(seed, DOMAIN_SITE, i as u64);
            let data = (0..l * PHYS_DIM * r)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            gammas.push(DenseTensor::from_data(&[l, PHYS_DIM, r], data)?);
        }
        let mut lambdas: Vec<Vec<f64>> = (0..=n).map(|b| vec![1.0; dim(b)]).collect();
        // Interior weights need unit Euclidean length only to pass
        // structural validation; canonicalize replaces them anyway.
        for l in &mut lambdas {
            let f = 1.0 / (l.len() as f64).sqrt();
            for v in l.iter_mut() {
                *v *= f;
            }
        }
        lambdas[0] = vec![1.0];
        lambdas[n] = vec![1.0];
        let raw = VidalMps::from_parts(gammas, lambdas, 0.0)?;
        raw.canonicalize()
    }

    pub fn n_sites(&self) -> usize {
        self.gammas.len()
    }

    /// Site tensor `Γ[i]`, shape `(χ_i, 2, χ_{i+1})`.
    pub fn gamma(&self, i: usize) -> &DenseTensor {
        &self.gammas[i]
    }

    /// Bond weights `Λ[b]`, descending.
    pub fn lambda(&self, b: usize) -> &[f64] {
        &self.lambdas[b]
    }

    /// All `N+1` bond dimensions, boundaries included.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.lambdas.iter().map(|l| l.len()).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.lambdas.iter().map(|l| l.len()).max().unwrap_or(0)
    }

    /// Accumulated natural log of norm factors extracted by
    /// renormalization steps. The physical amplitude scale of the state is
    /// `exp(log_norm_offset)` times the stored tensors.
    pub fn log_norm_offset(&self) -> f64 {
        self.log_norm_offset
    }

    pub(crate) fn add_log_norm_offset(&mut self, delta: f64) {
        self.log_norm_offset += delta;
    }

    pub(crate) fn set_gamma(&mut self, i: usize, g: DenseTensor) {
        debug_assert_eq!(g.rank(), 3);
        self.gammas[i] = g;
    }

    pub(crate) fn set_lambda(&mut self, b: usize, l: Vec<f64>) {
        self.lambdas[b] = l;
    }

    /// Installs the result of a two-site update across bond `b`.
    pub(crate) fn set_bond(
        &mut self,
        b: usize,
        left: DenseTensor,
        lambda: Vec<f64>,
        right: DenseTensor,
    ) {
        debug_assert!(b >= 1 && b < self.n_sites());
        debug_assert_eq!(left.shape()[2], lambda.len());
        debug_assert_eq!(right.shape()[0], lambda.len());
        self.gammas[b - 1] = left;
        self.lambdas[b] = lambda;
        self.gammas[b] = right;
    }

    pub(crate) fn replace_parts(&mut self, gammas: Vec<DenseTensor>, lambdas: Vec<Vec<f64>>) {
        debug_assert_eq!(gammas.len(), self.gammas.len());
        debug_assert_eq!(lambdas.len(), self.lambdas.len());
        self.gammas = gammas;
        self.lambdas = lambdas;
    }

    /// `Λ[i] Γ[i]`: the left-isometry form of site `i`.
    pub(crate) fn a_form(&self, i: usize) -> DenseTensor {
        let mut a = self.gammas[i].clone();
        a.scale_axis(0, &self.lambdas[i]).expect("weights match bond dim");
        a
    }

    /// `Γ[i] Λ[i+1]`: the right-isometry form of site `i`.
    pub(crate) fn b_form(&self, i: usize) -> DenseTensor {
        let mut b = self.gammas[i].clone();
        b.scale_axis(2, &self.lambdas[i + 1]).expect("weights match bond dim");
        b
    }

    /// Euclidean norm `‖ψ‖` of the stored tensors (the log-norm offset is
    /// not folded in). Cost `O(N χ³)`.
    pub fn norm(&self) -> f64 {
        let mut e = DenseTensor::identity(1);
        for i in 0..self.n_sites() {
            let a = self.a_form(i);
            let tmp = contract(&e, &[1], &a, &[0]).expect("bond dims chain");
            e = contract(&a.conjugated(), &[0, 1], &tmp, &[0, 1]).expect("bond dims chain");
        }
        e.data()[0].re.max(0.0).sqrt()
    }

    /// Inner product `⟨self|other⟩` of the stored tensors (antilinear in
    /// `self`). Offsets are not folded in.
    pub fn overlap(&self, other: &VidalMps) -> Result<Complex64> {
        if self.n_sites() != other.n_sites() {
            return Err(Error::ShapeMismatch(format!(
                "overlap between {} and {} sites",
                self.n_sites(),
                other.n_sites()
            )));
        }
        let mut e = DenseTensor::identity(1);
        for i in 0..self.n_sites() {
            let bra = self.a_form(i).conjugated();
            let ket = other.a_form(i);
            let tmp = contract(&e, &[1], &ket, &[0])?;
            e = contract(&bra, &[0, 1], &tmp, &[0, 1])?;
        }
        Ok(e.data()[0])
    }

    /// Dense amplitudes of the stored tensors.
    ///
    /// Fails with a resource error when `N > cap`; the memory cost is
    /// `2^N` complex numbers. The log-norm offset is not applied.
    pub fn to_statevector(&self, cap: usize) -> Result<Statevector> {
        let n = self.n_sites();
        if n > cap {
            return Err(Error::ResourceLimit(format!(
                "dense conversion of {} qubits exceeds the cap of {}",
                n, cap
            )));
        }
        // v holds the partial contraction with logical shape
        // (2^i, χ_i), flattened row-major.
        let mut v = vec![Complex64::new(1.0, 0.0)];
        let mut chi = 1usize;
        for i in 0..n {
            let a = self.a_form(i);
            let (chi_r, blocks) = (a.shape()[2], v.len() / chi);
            let ad = a.data();
            let mut next = vec![Complex64::new(0.0, 0.0); blocks * PHYS_DIM * chi_r];
            for b in 0..blocks {
                for l in 0..chi {
                    let amp = v[b * chi + l];
                    if amp == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for sigma in 0..PHYS_DIM {
                        let row = &ad[(l * PHYS_DIM + sigma) * chi_r..][..chi_r];
                        let out = &mut next[(b * PHYS_DIM + sigma) * chi_r..][..chi_r];
                        for (o, &x) in out.iter_mut().zip(row) {
                            *o += amp * x;
                        }
                    }
                }
            }
            v = next;
            chi = chi_r;
        }
        Statevector::from_amplitudes(v)
    }

    /// Returns a canonical, unit-norm state on the same ray.
    ///
    /// Two full SVD sweeps: a left-to-right sweep that makes every site a
    /// left isometry, then a right-to-left sweep that extracts the Schmidt
    /// spectra and rebuilds the `Γ`/`Λ` split. Norm factors extracted along
    /// the way accumulate into the log-norm offset, so the output has norm
    /// 1 and `exp(log_norm_offset)` times the old offset recovers the
    /// original amplitude scale. The global phase is preserved exactly.
    ///
    /// Numerically zero singular directions (relative threshold 1e-14) are
    /// dropped, so bond dimensions never exceed their exact Schmidt rank.
    pub fn canonicalize(&self) -> Result<VidalMps> {
        let n = self.n_sites();
        let mut log_scale = 0.0f64;

        // Left sweep: state = A[0] A[1] … A[n-1] · carry, all A left-isometric.
        let mut left: Vec<DenseTensor> = Vec::with_capacity(n);
        let mut carry = DenseTensor::identity(1);
        for i in 0..n {
            let mut m = self.gammas[i].clone();
            m.scale_axis(2, &self.lambdas[i + 1])?;
            let t = contract(&carry, &[1], &m, &[0])?;
            let (cl, cr) = (t.shape()[0], t.shape()[2]);
            let f = svd(&t.into_shape(&[cl * PHYS_DIM, cr])?)?;
            let k = significant_count(&f.s).ok_or_else(|| {
                Error::DegenerateState("cannot canonicalize a numerically zero state".into())
            })?;
            left.push(f.u.sliced_cols(k)?.into_shape(&[cl, PHYS_DIM, k])?);
            let mut c = f.vdag.sliced_rows(k)?;
            let kept = &f.s[..k];
            let scale: f64 = kept.iter().map(|v| v * v).sum::<f64>().sqrt();
            let rescaled: Vec<f64> = kept.iter().map(|v| v / scale).collect();
            c.scale_axis(0, &rescaled)?;
            log_scale += scale.ln();
            carry = c;
        }
        // carry is 1x1 with unit modulus: the global phase.
        let phase = carry.data()[0];

        // Right sweep: split Schmidt spectra back out of the isometries.
        let mut gammas: Vec<Option<DenseTensor>> = vec![None; n];
        let mut lambdas: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
        lambdas[n] = vec![1.0];
        let mut x = DenseTensor::scalar(phase).into_shape(&[1, 1])?;
        for i in (0..n).rev() {
            let t = contract(&left[i], &[2], &x, &[0])?;
            let (cl, xr) = (t.shape()[0], t.shape()[2]);
            let f = svd(&t.into_shape(&[cl, PHYS_DIM * xr])?)?;
            let k = significant_count(&f.s).ok_or_else(|| {
                Error::DegenerateState("cannot canonicalize a numerically zero state".into())
            })?;
            let kept = &f.s[..k];
            let scale: f64 = kept.iter().map(|v| v * v).sum::<f64>().sqrt();
            log_scale += scale.ln();
            let spectrum: Vec<f64> = kept.iter().map(|v| v / scale).collect();

            let mut g = f.vdag.sliced_rows(k)?.into_shape(&[k, PHYS_DIM, xr])?;
            g.scale_axis(2, &pseudo_inverse(&lambdas[i + 1])?)?;
            gammas[i] = Some(g);

            let mut u = f.u.sliced_cols(k)?;
            u.scale_axis(1, &spectrum)?;
            x = u;
            lambdas[i] = spectrum;
        }
        // x is now 1x1 and purely a phase; fold it into the first site so
        // the decomposition drops nothing.
        let residual_phase = x.data()[0];
        let mut g0 = gammas[0].take().expect("site 0 assigned");
        g0.scale(residual_phase);
        gammas[0] = Some(g0);
        lambdas[0] = vec![1.0];

        VidalMps::from_parts(
            gammas.into_iter().map(|g| g.expect("all sites assigned")).collect(),
            lambdas,
            self.log_norm_offset + log_scale,
        )
    }

    /// Unit-norm copy obtained by scaling every site tensor by
    /// `norm^{-1/N}`; the extracted factor moves into the log-norm offset.
    /// Leaves canonical structure (and any violation of it) untouched.
    pub fn normalized_by_site_scaling(&self) -> Result<VidalMps> {
        let n = self.norm();
        if n <= 0.0 {
            return Err(Error::DegenerateState("cannot normalize a zero state".into()));
        }
        let factor = n.powf(-1.0 / self.n_sites() as f64);
        let mut out = self.clone();
        for g in &mut out.gammas {
            g.scale(Complex64::new(factor, 0.0));
        }
        out.log_norm_offset += n.ln();
        Ok(out)
    }

    /// Unit-norm copy obtained by scaling the `N-1` interior bond weights
    /// by `norm^{-1/(N-1)}`. Requires at least two sites. Interior weights
    /// lose their unit Euclidean length; sortedness is unaffected.
    pub fn normalized_by_bond_scaling(&self) -> Result<VidalMps> {
        let sites = self.n_sites();
        if sites < 2 {
            return Err(Error::InvalidArgument(
                "bond rescaling needs at least one interior bond".into(),
            ));
        }
        let n = self.norm();
        if n <= 0.0 {
            return Err(Error::DegenerateState("cannot normalize a zero state".into()));
        }
        let factor = n.powf(-1.0 / (sites - 1) as f64);
        let mut out = self.clone();
        for b in 1..sites {
            for w in &mut out.lambdas[b] {
                *w *= factor;
            }
        }
        out.log_norm_offset += n.ln();
        Ok(out)
    }

    /// Canonical-form deviation; see [`CanonicalReport`].
    pub fn canonical_distance(&self) -> Result<CanonicalReport> {
        let n = self.norm();
        self.canonical_distance_with_norm(n)
    }

    /// Same as [`canonical_distance`](Self::canonical_distance) but reuses
    /// an already-computed norm.
    pub fn canonical_distance_with_norm(&self, norm: f64) -> Result<CanonicalReport> {
        if norm <= 0.0 {
            return Err(Error::DegenerateState(
                "canonical distance of a zero state is undefined".into(),
            ));
        }
        let n = self.n_sites();
        let rescale = if (norm - 1.0).abs() <= NORM_RESCALE_TOLERANCE {
            1.0
        } else {
            norm.powf(-2.0 / n as f64)
        };
        let mut left = Vec::with_capacity(n);
        let mut right = Vec::with_capacity(n);
        let mut total = 0.0;
        for i in 0..n {
            let a = self.a_form(i);
            let gram_a = contract(&a.conjugated(), &[0, 1], &a, &[0, 1])?;
            let ra = identity_residual(&gram_a, rescale);
            left.push(ra);

            let b = self.b_form(i);
            let gram_b = contract(&b, &[1, 2], &b.conjugated(), &[1, 2])?;
            let rb = identity_residual(&gram_b, rescale);
            right.push(rb);
            total += ra + rb;
        }
        Ok(CanonicalReport {
            distance: total / (2 * n) as f64,
            norm,
            left_residuals: left,
            right_residuals: right,
        })
    }

    /// Von Neumann entanglement entropy (natural log) across interior bond
    /// `b`, computed from the bond weights. Meaningful for canonical
    /// states, where the weights are the Schmidt coefficients.
    pub fn entanglement_entropy(&self, b: usize) -> Result<f64> {
        let p = self.schmidt_probabilities(b)?;
        Ok(p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum())
    }

    /// Entanglement spectrum `ξ_α = -ln p_α` across interior bond `b`,
    /// ascending, zero-weight directions omitted.
    pub fn entanglement_spectrum(&self, b: usize) -> Result<Vec<f64>> {
        let p = self.schmidt_probabilities(b)?;
        Ok(p.iter().filter(|&&x| x > 0.0).map(|&x| -x.ln()).collect())
    }

    fn schmidt_probabilities(&self, b: usize) -> Result<Vec<f64>> {
        let n = self.n_sites();
        if b == 0 || b >= n {
            return Err(Error::InvalidArgument(format!(
                "bond {} is not interior (1..={})",
                b,
                n.saturating_sub(1)
            )));
        }
        let total: f64 = self.lambdas[b].iter().map(|v| v * v).sum();
        if total <= 0.0 {
            return Err(Error::DegenerateState(format!(
                "bond {} carries no weight",
                b
            )));
        }
        Ok(self.lambdas[b].iter().map(|v| v * v / total).collect())
    }

    /// Draws one computational-basis sample. Equivalent to
    /// `sample_bitstrings(seed, 1)`.
    pub fn sample_bitstring(&self, seed: u64) -> Result<Vec<u8>> {
        Ok(self.sample_bitstrings(seed, 1)?.pop().expect("one sample"))
    }

    /// Draws `count` independent basis samples by sweeping left to right
    /// and measuring one site at a time, conditioning on the outcomes so
    /// far.
    ///
    /// Requires a canonical state (distance below 1e-6): marginalizing
    /// the unmeasured right half of the chain to the identity needs the
    /// right-isometry property of the `Γ Λ` site forms. All draws come
    /// from one substream of `seed`, so results depend only on `(state,
    /// seed, count)`.
    pub fn sample_bitstrings(&self, seed: u64, count: usize) -> Result<Vec<Vec<u8>>> {
        let report = self.canonical_distance()?;
        if report.distance >= 1e-6 {
            return Err(Error::PreconditionViolated(format!(
                "sampling needs canonical form; distance is {:.3e}",
                report.distance
            )));
        }
        let n = self.n_sites();
        let b_forms: Vec<DenseTensor> = (0..n).map(|i| self.b_form(i)).collect();
        let mut rng = substream(seed, DOMAIN_SAMPLE, 0);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut bits = Vec::with_capacity(n);
            let mut v = vec![Complex64::new(1.0, 0.0)];
            for a in &b_forms {
                let (chi_l, chi_r) = (a.shape()[0], a.shape()[2]);
                let ad = a.data();
                let mut w = [
                    vec![Complex64::new(0.0, 0.0); chi_r],
                    vec![Complex64::new(0.0, 0.0); chi_r],
                ];
                for l in 0..chi_l {
                    let amp = v[l];
                    for (sigma, ws) in w.iter_mut().enumerate() {
                        let row = &ad[(l * PHYS_DIM + sigma) * chi_r..][..chi_r];
                        for (o, &x) in ws.iter_mut().zip(row) {
                            *o += amp * x;
                        }
                    }
                }
                let p0: f64 = w[0].iter().map(|c| c.norm_sqr()).sum();
                let p1: f64 = w[1].iter().map(|c| c.norm_sqr()).sum();
                let total = p0 + p1;
                if total <= 0.0 {
                    return Err(Error::DegenerateState(
                        "conditional probabilities vanished during sampling".into(),
                    ));
                }
                let bit = usize::from(rng.gen::<f64>() * total >= p0);
                bits.push(bit as u8);
                v = std::mem::take(&mut w[bit]);
                let vn = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                for c in &mut v {
                    *c /= vn;
                }
            }
            out.push(bits);
        }
        Ok(out)
    }

    /// Writes the state in the documented binary snapshot layout.
    ///
    /// Layout (all integers and floats little-endian):
    /// magic `MPSSNAP1`, `u32` version, `u64` site count, `u64` bond
    /// dimensions for bonds `0..=N`, `f64` log-norm offset, then the bond
    /// weight vectors in bond order, then the site tensors in site order as
    /// `(re, im)` pairs in row-major element order.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        w.write_all(&(self.n_sites() as u64).to_le_bytes())?;
        for l in &self.lambdas {
            w.write_all(&(l.len() as u64).to_le_bytes())?;
        }
        w.write_all(&self.log_norm_offset.to_le_bytes())?;
        for l in &self.lambdas {
            for &v in l {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        for g in &self.gammas {
            for c in g.data() {
                w.write_all(&c.re.to_le_bytes())?;
                w.write_all(&c.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a snapshot written by [`write_snapshot`](Self::write_snapshot),
    /// validating magic, version, lengths, and structural invariants, and
    /// rejecting trailing bytes.
    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let corrupt = |msg: &str| Error::Parse {
            line: 0,
            message: format!("snapshot: {msg}"),
        };
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(corrupt("bad magic bytes"));
        }
        let version = read_u32(&mut r)?;
        if version != SNAPSHOT_VERSION {
            return Err(corrupt(&format!("unsupported version {version}")));
        }
        let n = read_u64(&mut r)? as usize;
        if n == 0 || n > 1 << 24 {
            return Err(corrupt(&format!("implausible site count {n}")));
        }
        let mut dims = Vec::with_capacity(n + 1);
        let mut total: u64 = 0;
        for _ in 0..=n {
            let d = read_u64(&mut r)?;
            if d == 0 || d > 1 << 24 {
                return Err(corrupt(&format!("implausible bond dimension {d}")));
            }
            dims.push(d as usize);
        }
        for i in 0..n {
            total = total.saturating_add((dims[i] * PHYS_DIM * dims[i + 1]) as u64);
        }
        if total > SNAPSHOT_MAX_ELEMENTS {
            return Err(Error::ResourceLimit(format!(
                "snapshot holds {total} tensor elements"
            )));
        }
        let offset = read_f64(&mut r)?;
        let mut lambdas = Vec::with_capacity(n + 1);
        for &d in &dims {
            let mut l = Vec::with_capacity(d);
            for _ in 0..d {
                l.push(read_f64(&mut r)?);
            }
            lambdas.push(l);
        }
        let mut gammas = Vec::with_capacity(n);
        for i in 0..n {
            let count = dims[i] * PHYS_DIM * dims[i + 1];
            let mut data = Vec::with_capacity(count);
            for _ in 0..count {
                let re = read_f64(&mut r)?;
                let im = read_f64(&mut r)?;
                data.push(Complex64::new(re, im));
            }
            gammas.push(DenseTensor::from_data(
                &[dims[i], PHYS_DIM, dims[i + 1]],
                data,
            )?);
        }
        let mut trailing = [0u8; 1];
        match r.read(&mut trailing)? {
            0 => VidalMps::from_parts(gammas, lambdas, offset),
            _ => Err(corrupt("trailing bytes after tensor data")),
        }
    }

    /// [`write_snapshot`](Self::write_snapshot) to a file path.
    pub fn save_snapshot<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_snapshot(BufWriter::new(File::create(path)?))
    }

    /// [`read_snapshot`](Self::read_snapshot) from a file path.
    pub fn load_snapshot<P: AsRef<Path>>(path: P) -> Result<Self> {
        VidalMps::read_snapshot(BufReader::new(File::open(path)?))
    }
}

/// Number of singular values above the relative zero threshold; `None`
/// when the whole spectrum is zero.
pub(crate) fn significant_count(s: &[f64]) -> Option<usize> {
    let max = s.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return None;
    }
    let cutoff = max * SINGULAR_ZERO_RELATIVE_THRESHOLD;
    Some(s.iter().take_while(|&&v| v > cutoff).count().max(1))
}

fn identity_residual(gram: &DenseTensor, rescale: f64) -> f64 {
    let n = gram.shape()[0];
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { 1.0 } else { 0.0 };
            let d = gram.get(&[i, j]) * rescale - Complex64::new(expect, 0.0);
            sum += d.norm_sqr();
        }
    }
    sum.sqrt()
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Two-qubit singlet-like state with equal Schmidt weights.
    fn bell_pair() -> VidalMps {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut g0 = DenseTensor::zeros(&[1, 2, 2]);
        g0.set(&[0, 0, 0], c(1.0, 0.0));
        g0.set(&[0, 1, 1], c(1.0, 0.0));
        let mut g1 = DenseTensor::zeros(&[2, 2, 1]);
        g1.set(&[0, 0, 0], c(1.0, 0.0));
        g1.set(&[1, 1, 0], c(1.0, 0.0));
        VidalMps::from_parts(vec![g0, g1], vec![vec![1.0], vec![s, s], vec![1.0]], 0.0).unwrap()
    }

    fn random_raw(n: usize, chi: usize, seed: u64) -> VidalMps {
        // Same tensor layout as random_mps but without the canonicalize,
        // for exercising canonicalize itself.
        let dim = |b: usize| chi.min(1usize << b.min(n - b).min(20));
        let mut gammas = Vec::new();
        for i in 0..n {
            let (l, r) = (dim(i), dim(i + 1));
            let mut rng = substream(seed, DOMAIN_SITE, i as u64);
            let data = (0..l * 2 * r)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            gammas.push(DenseTensor::from_data(&[l, 2, r], data).unwrap());
        }
        let mut lambdas: Vec<Vec<f64>> = (0..=n)
            .map(|b| vec![1.0 / (dim(b) as f64).sqrt(); dim(b)])
            .collect();
        lambdas[0] = vec![1.0];
        lambdas[n] = vec![1.0];
        VidalMps::from_parts(gammas, lambdas, 0.0).unwrap()
    }

    #[test]
    fn product_state_has_unit_amplitude_on_its_basis_state() {
        let psi = VidalMps::product_state(&[1, 0, 1]).unwrap();
        let sv = psi.to_statevector(8).unwrap();
        for (idx, amp) in sv.amplitudes().iter().enumerate() {
            let expect = if idx == 0b101 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(amp.re, expect, epsilon = 1e-15);
            assert_abs_diff_eq!(amp.im, 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-14);
        let report = psi.canonical_distance().unwrap();
        assert!(report.distance < 1e-14);
    }

    #[test]
    fn from_parts_rejects_structural_violations() {
        let psi = bell_pair();
        let gs = vec![psi.gamma(0).clone(), psi.gamma(1).clone()];
        let s = std::f64::consts::FRAC_1_SQRT_2;

        // Wrong weight vector count.
        assert!(VidalMps::from_parts(gs.clone(), vec![vec![1.0], vec![s, s]], 0.0).is_err());
        // Boundary weight not [1.0].
        assert!(VidalMps::from_parts(
            gs.clone(),
            vec![vec![0.5], vec![s, s], vec![1.0]],
            0.0
        )
        .is_err());
        // Ascending interior weights.
        assert!(VidalMps::from_parts(
            gs.clone(),
            vec![vec![1.0], vec![0.3, 0.9], vec![1.0]],
            0.0
        )
        .is_err());
        // Bond dimension mismatch.
        assert!(VidalMps::from_parts(
            gs.clone(),
            vec![vec![1.0], vec![1.0], vec![1.0]],
            0.0
        )
        .is_err());
        // Non-finite offset.
        assert!(VidalMps::from_parts(
            gs,
            vec![vec![1.0], vec![s, s], vec![1.0]],
            f64::NAN
        )
        .is_err());
        // Wrong physical dimension.
        let bad = DenseTensor::zeros(&[1, 3, 1]);
        assert!(VidalMps::from_parts(vec![bad], vec![vec![1.0], vec![1.0]], 0.0).is_err());
    }

    #[test]
    fn random_mps_is_canonical_with_capped_bond_dims() {
        for &(n, chi, seed) in &[(8usize, 5usize, 1u64), (6, 16, 2), (9, 3, 3)] {
            let psi = VidalMps::random_mps(n, chi, seed).unwrap();
            assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-10);
            let report = psi.canonical_distance().unwrap();
            assert!(report.distance < 1e-10, "distance {}", report.distance);
            for (b, l) in (0..=n).map(|b| (b, psi.lambda(b))) {
                let cap = chi.min(1usize << b.min(n - b).min(20));
                assert!(l.len() <= cap, "bond {} has {} > {}", b, l.len(), cap);
                let w: f64 = l.iter().map(|v| v * v).sum();
                assert_abs_diff_eq!(w, 1.0, epsilon = 1e-10);
                for pair in l.windows(2) {
                    assert!(pair[0] >= pair[1]);
                }
            }
        }
    }

    #[test]
    fn random_mps_is_reproducible() {
        let a = VidalMps::random_mps(7, 4, 42).unwrap();
        let b = VidalMps::random_mps(7, 4, 42).unwrap();
        let d = VidalMps::random_mps(7, 4, 43).unwrap();
        assert_eq!(a.gamma(3).data(), b.gamma(3).data());
        assert_eq!(a.lambda(3), b.lambda(3));
        assert_ne!(a.gamma(3).data(), d.gamma(3).data());
    }

    #[test]
    fn canonicalize_preserves_ray_phase_and_extracts_norm() {
        let raw = random_raw(6, 4, 11);
        let raw_norm = raw.norm();
        let canon = raw.canonicalize().unwrap();
        assert_abs_diff_eq!(canon.norm(), 1.0, epsilon = 1e-10);
        assert!(canon.canonical_distance().unwrap().distance < 1e-10);
        // Phase preservation: <canon|raw> equals the raw norm exactly.
        let ov = canon.overlap(&raw).unwrap();
        assert_abs_diff_eq!(ov.re, raw_norm, epsilon = 1e-8);
        assert_abs_diff_eq!(ov.im, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(canon.log_norm_offset().exp(), raw_norm, epsilon = 1e-8);

        // Dense amplitudes agree after undoing the extracted norm.
        let sv_raw = raw.to_statevector(10).unwrap();
        let sv_canon = canon.to_statevector(10).unwrap();
        for (a, b) in sv_raw.amplitudes().iter().zip(sv_canon.amplitudes()) {
            assert_abs_diff_eq!((a - b * raw_norm).norm(), 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn canonicalize_trims_dead_bond_directions() {
        // A product state embedded in bond dimension 3 has Schmidt rank 1
        // everywhere; canonicalize must shrink the bonds to 1.
        let psi = VidalMps::product_state(&[0, 1, 0, 1]).unwrap();
        let mut gammas: Vec<DenseTensor> = Vec::new();
        let n = psi.n_sites();
        for i in 0..n {
            let (l, r) = (
                if i == 0 { 1 } else { 3 },
                if i == n - 1 { 1 } else { 3 },
            );
            let mut g = DenseTensor::zeros(&[l, 2, r]);
            for s in 0..2 {
                g.set(&[0, s, 0], psi.gamma(i).get(&[0, s, 0]));
            }
            gammas.push(g);
        }
        let mut lambdas = vec![vec![1.0, 0.0, 0.0]; n + 1];
        lambdas[0] = vec![1.0];
        lambdas[n] = vec![1.0];
        let padded = VidalMps::from_parts(gammas, lambdas, 0.0).unwrap();
        let canon = padded.canonicalize().unwrap();
        assert_eq!(canon.bond_dims(), vec![1; n + 1]);
        assert_abs_diff_eq!(
            canon.to_statevector(6).unwrap().amplitudes()[0b0101].norm(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn canonicalize_rejects_zero_state() {
        let mut psi = VidalMps::product_state(&[0, 0]).unwrap();
        psi.set_gamma(0, DenseTensor::zeros(&[1, 2, 1]));
        assert!(matches!(
            psi.canonicalize(),
            Err(Error::DegenerateState(_))
        ));
    }

    #[test]
    fn norm_and_overlap_match_dense_computation() {
        let a = random_raw(5, 3, 21);
        let b = random_raw(5, 3, 22);
        let sa = a.to_statevector(8).unwrap();
        let sb = b.to_statevector(8).unwrap();
        assert_abs_diff_eq!(a.norm(), sa.norm(), epsilon = 1e-10);
        let dense: Complex64 = sa
            .amplitudes()
            .iter()
            .zip(sb.amplitudes())
            .map(|(x, y)| x.conj() * y)
            .sum();
        let ov = a.overlap(&b).unwrap();
        assert_abs_diff_eq!((ov - dense).norm(), 0.0, epsilon = 1e-10);
        assert!(a.overlap(&VidalMps::zero_state(4).unwrap()).is_err());
    }

    #[test]
    fn statevector_conversion_respects_cap() {
        let psi = VidalMps::zero_state(5).unwrap();
        assert!(psi.to_statevector(4).is_err());
        assert!(psi.to_statevector(5).is_ok());
    }

    #[test]
    fn entanglement_measures_on_known_states() {
        let bell = bell_pair();
        assert_abs_diff_eq!(bell.entanglement_entropy(1).unwrap(), 2f64.ln(), epsilon = 1e-12);
        let xi = bell.entanglement_spectrum(1).unwrap();
        assert_eq!(xi.len(), 2);
        assert_abs_diff_eq!(xi[0], 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(xi[1], 2f64.ln(), epsilon = 1e-12);

        let product = VidalMps::zero_state(3).unwrap();
        assert_abs_diff_eq!(product.entanglement_entropy(1).unwrap(), 0.0, epsilon = 1e-14);
        assert!(product.entanglement_entropy(0).is_err());
        assert!(product.entanglement_entropy(3).is_err());
    }

    #[test]
    fn canonical_distance_detects_weight_violations() {
        let psi = VidalMps::random_mps(6, 4, 5).unwrap();
        // Doubling one interior weight breaks both isometry conditions.
        let mut lambdas: Vec<Vec<f64>> = (0..=6).map(|b| psi.lambda(b).to_vec()).collect();
        for w in &mut lambdas[3] {
            *w *= 2.0;
        }
        let gammas = (0..6).map(|i| psi.gamma(i).clone()).collect();
        let bent = VidalMps::from_parts(gammas, lambdas, 0.0).unwrap();
        let report = bent.canonical_distance().unwrap();
        assert!(report.distance > 1e-3, "distance {}", report.distance);
        assert!(report.left_residuals.iter().cloned().fold(0.0, f64::max) > 1e-3);
    }

    #[test]
    fn canonical_distance_ignores_global_scale() {
        let psi = VidalMps::random_mps(5, 4, 9).unwrap();
        let mut scaled = psi.clone();
        for i in 0..5 {
            let g = scaled.gamma(i).scaled(c(1.7, 0.0));
            scaled.set_gamma(i, g);
        }
        let report = scaled.canonical_distance().unwrap();
        assert!((report.norm - 1.7f64.powi(5)).abs() < 1e-6);
        assert!(report.distance < 1e-9, "distance {}", report.distance);
    }

    #[test]
    fn global_normalization_helpers_reach_unit_norm() {
        let raw = random_raw(5, 3, 33);
        let n = raw.norm();
        for normalized in [
            raw.normalized_by_site_scaling().unwrap(),
            raw.normalized_by_bond_scaling().unwrap(),
        ] {
            assert_abs_diff_eq!(normalized.norm(), 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(normalized.log_norm_offset(), n.ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn sampling_matches_exact_distribution() {
        let psi = VidalMps::random_mps(5, 4, 17).unwrap();
        let sv = psi.to_statevector(8).unwrap();
        let probs: Vec<f64> = sv.amplitudes().iter().map(|a| a.norm_sqr()).collect();
        let shots = 20_000;
        let samples = psi.sample_bitstrings(99, shots).unwrap();
        let mut counts = vec![0usize; probs.len()];
        for bits in &samples {
            let idx = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            counts[idx] += 1;
        }
        let tv: f64 = probs
            .iter()
            .zip(&counts)
            .map(|(&p, &k)| (p - k as f64 / shots as f64).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "total variation distance {}", tv);

        // Determinism: same seed, same draws.
        let again = psi.sample_bitstrings(99, 3).unwrap();
        assert_eq!(again, samples[..3].to_vec());
    }

    #[test]
    fn sampling_requires_canonical_form() {
        let raw = random_raw(5, 3, 41);
        assert!(matches!(
            raw.sample_bitstrings(1, 1),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn snapshot_roundtrip_is_bit_exact() {
        let psi = VidalMps::random_mps(6, 5, 7).unwrap();
        let mut buf = Vec::new();
        psi.write_snapshot(&mut buf).unwrap();
        let back = VidalMps::read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back.n_sites(), psi.n_sites());
        assert_eq!(back.log_norm_offset(), psi.log_norm_offset());
        for b in 0..=6 {
            assert_eq!(back.lambda(b), psi.lambda(b));
        }
        for i in 0..6 {
            assert_eq!(back.gamma(i).data(), psi.gamma(i).data());
            assert_eq!(back.gamma(i).shape(), psi.gamma(i).shape());
        }
    }

    #[test]
    fn snapshot_reader_rejects_corruption() {
        let psi = VidalMps::random_mps(4, 3, 8).unwrap();
        let mut buf = Vec::new();
        psi.write_snapshot(&mut buf).unwrap();

        // Truncated payload.
        assert!(VidalMps::read_snapshot(&buf[..buf.len() - 5]).is_err());
        // Trailing garbage.
        let mut long = buf.clone();
        long.push(0);
        assert!(VidalMps::read_snapshot(long.as_slice()).is_err());
        // Bad magic.
        let mut bad = buf.clone();
        bad[0] ^= 0xff;
        assert!(VidalMps::read_snapshot(bad.as_slice()).is_err());
        // Bad version.
        let mut badv = buf;
        badv[8] = 99;
        assert!(VidalMps::read_snapshot(badv.as_slice()).is_err());
    }

    #[test]
    fn snapshot_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.mps");
        let psi = VidalMps::random_mps(5, 4, 12).unwrap();
        psi.save_snapshot(&path).unwrap();
        let back = VidalMps::load_snapshot(&path).unwrap();
        let ov = back.overlap(&psi).unwrap();
        assert_abs_diff_eq!(ov.re, 1.0, epsilon = 1e-12);
    }
}
