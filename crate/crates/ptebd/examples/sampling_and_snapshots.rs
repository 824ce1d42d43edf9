//! Samples bitstrings from an evolved state and inspects its
//! entanglement structure.
//!
//! The chain is evolved without truncation, so the sampler's conditional
//! probabilities are exact; the empirical distribution over many draws
//! must approach the dense Born probabilities.

use ptebd::circuits::families::rqc_1d;
use ptebd::evolution::ptebd_apply_layer;
use ptebd::mps::VidalMps;
use ptebd::Result;

const DRAWS: usize = 4000;

fn main() -> Result<()> {
    let n = 7;
    let circuit = rqc_1d(n, 8, 21)?;
    let mut state = VidalMps::zero_state(n)?;
    for layer in &circuit.compile()?.layers {
        ptebd_apply_layer(&mut state, layer, 64, 0, true)?;
    }

    // Empirical frequencies over the basis, qubit 0 as the top bit.
    let mut counts = vec![0usize; 1 << n];
    for bits in state.sample_bitstrings(99, DRAWS)? {
        let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        counts[index] += 1;
    }

    let dense = state.to_statevector(n)?;
    let norm_sqr = dense.amplitudes().iter().map(|a| a.norm_sqr()).sum::<f64>();
    let total_variation: f64 = dense
        .amplitudes()
        .iter()
        .zip(&counts)
        .map(|(amp, &c)| {
            let p = amp.norm_sqr() / norm_sqr;
            let q = c as f64 / DRAWS as f64;
            (p - q).abs()
        })
        .sum::<f64>()
        / 2.0;
    println!("{DRAWS} draws from a {n}-qubit evolved state");
    println!("total variation between empirical and Born probabilities: {total_variation:.4}");
    assert!(total_variation < 0.05, "sampler disagrees with the dense probabilities");

    println!("\nmost frequent outcomes:");
    let mut ranked: Vec<(usize, usize)> =
        counts.iter().copied().enumerate().map(|(i, c)| (c, i)).collect();
    ranked.sort_unstable_by(|a, b| b.cmp(a));
    for &(count, index) in ranked.iter().take(5) {
        let p = dense.amplitudes()[index].norm_sqr() / norm_sqr;
        println!(
            "  |{:0width$b}>  sampled {:.4}  exact {:.4}",
            index,
            count as f64 / DRAWS as f64,
            p,
            width = n
        );
    }

    println!("\nentanglement entropy by bond:");
    for b in 1..n {
        println!("  cut {b}: {:.4}", state.entanglement_entropy(b)?);
    }
    Ok(())
}
