//! Matrix-product-state simulation of quantum circuits with a
//! parallelizable real-space compression scheme.
//!
//! The crate simulates qubit circuits on a one-dimensional
//! nearest-neighbor path using matrix product states in Vidal form
//! (site tensors Γ plus diagonal bond weights Λ). Two evolution engines
//! share the same state type:
//!
//! * **Parallel engine** ([`evolution::ptebd_apply_layer`]): applies a whole
//!   brickwork layer at once, then compresses every bond simultaneously with
//!   a fixed number of parallel rounds per layer: one bond-slicing
//!   truncation round, an optional norm-stabilization rescale, and `g`
//!   identity-gate simple-update sweeps that drive the state back toward
//!   canonical form. The number of rounds is independent of the qubit count.
//! * **Sequential engine** ([`evolution::sequential_apply_layer`]): the
//!   classic sweep that applies and truncates one two-site gate at a time
//!   and recanonicalizes at the end of the layer. It is the accuracy
//!   baseline; its per-layer work grows linearly with the qubit count.
//!
//! [`circuits`] generates the benchmark families (1D/2D random circuits,
//! dimer-prepared eSWAP circuits, the quantum Fourier transform) and
//! recompiles 2D brickwork onto the path with an exact-depth SWAP schedule.
//! [`oracle`] holds dense statevector references used to validate both
//! engines, and [`harness`] runs experiments, writes CSV, and aggregates
//! reports. The `ptebd` binary is a thin command-line front end over
//! [`harness`]; the `examples/` directory demonstrates each capability as a
//! runnable program.
//!
//! Conventions used throughout:
//!
//! * Qubits are numbered along the path; qubit 0 is the most significant
//!   bit of a computational-basis index.
//! * Bond `b` sits between sites `b-1` and `b`; bonds `0` and `N` are
//!   dummy boundaries with weight vector `[1.0]`.
//! * Bond weights are stored in descending order and (for canonical
//!   states) normalized to unit Euclidean length.

pub mod circuits;
pub mod error;
pub mod evolution;
pub mod harness;
pub mod mps;
pub mod oracle;
pub(crate) mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use num_complex::Complex64;
