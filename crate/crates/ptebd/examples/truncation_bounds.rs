//! Truncates random canonical states and checks the reported discarded
//! weight against a dense mirror of the same state.
//!
//! For a canonical unit-norm state, discarding total relative weight
//! eps at the bonds guarantees
//!
//!   squared error  |Psi - Psi~|^2  <=  2 eps
//!   overlap        F2             >=  1 - 2 eps
//!   kept norm      n              in  [1 - sqrt(2 eps), 1]
//!
//! and rescaling each bond by its kept-weight factor moves the norm back
//! toward one.

use ptebd::evolution::{parallel_truncate, stabilize_norm};
use ptebd::mps::VidalMps;
use ptebd::Result;

fn main() -> Result<()> {
    println!(
        "{:>3} {:>4} {:>5} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "n", "chi", "chi'", "eps", "err2", "2*eps", "F2", "norm", "stabilized"
    );
    for (n, chi, chi_cap, seed) in [
        (6, 8, 2, 11u64),
        (6, 8, 4, 12),
        (7, 8, 3, 13),
        (8, 8, 2, 14),
        (8, 8, 5, 15),
    ] {
        let state = VidalMps::random_mps(n, chi, seed)?.canonicalize()?;
        let exact = state.to_statevector(n)?;

        let mut truncated = state.clone();
        let report = parallel_truncate(&mut truncated, chi_cap)?;
        let kept = truncated.to_statevector(n)?;

        // Squared distance and raw overlap against the unit-norm input.
        let err2: f64 = exact
            .amplitudes()
            .iter()
            .zip(kept.amplitudes())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let f2 = exact.inner(&kept)?.norm_sqr();
        let norm = truncated.norm();

        let nu = stabilize_norm(&mut truncated, &report)?;
        assert!(err2 <= 2.0 * report.eps_total + 1e-12);
        assert!(f2 >= report.fidelity_lb_tight - 1e-12);
        assert!(norm >= report.norm_lb - 1e-12 && norm <= 1.0 + 1e-12);

        println!(
            "{:>3} {:>4} {:>5} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.6} {:>12.6} {:>12.6}",
            n,
            chi,
            chi_cap,
            report.eps_total,
            err2,
            2.0 * report.eps_total,
            f2,
            norm,
            norm * nu,
        );
    }
    println!("\nall bounds hold");
    Ok(())
}
