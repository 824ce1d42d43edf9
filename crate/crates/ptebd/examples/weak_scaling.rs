//! Compares the cost structure of the two engines as the chain grows.
//!
//! The parallel engine spends a fixed number of synchronization rounds
//! per truncating layer (two plus the restoration count) no matter how
//! long the chain is, because every round acts on disjoint bonds at
//! once. The sequential sweep instead serializes one two-site update per
//! gate, so its per-layer update count grows linearly with the qubit
//! count. Wall-clock ratios depend on how many hardware threads back the
//! thread budget of one worker per four sites.

use ptebd::harness::runner::{available_threads, scaling_probe, ScalingConfig};
use ptebd::Result;

fn main() -> Result<()> {
    let cfg = ScalingConfig {
        sizes: vec![17, 33, 65],
        depth: 8,
        chi: 4,
        g: 1,
        repeats: 2,
        ..ScalingConfig::default()
    };
    let out = scaling_probe(&cfg)?;

    println!("machine threads available: {}", available_threads());
    println!(
        "{:>5} {:>8} {:>16} {:>16} {:>14} {:>8}",
        "n", "threads", "parallel ns", "sequential ns", "updates/layer", "rounds"
    );
    for t in &out.timings {
        let rounds: Vec<String> = t.truncating_rounds.iter().map(|r| r.to_string()).collect();
        println!(
            "{:>5} {:>8} {:>16} {:>16} {:>14.1} {:>8}",
            t.n,
            t.threads,
            t.ptebd_ns_per_layer.map_or("-".into(), |v| format!("{v:.0}")),
            t.sequential_ns_per_layer.map_or("-".into(), |v| format!("{v:.0}")),
            t.sequential_updates_per_layer,
            rounds.join("|"),
        );
    }
    println!(
        "\nround count stays at 2 + g = {} for every truncating layer at every size;",
        cfg.g + 2
    );
    println!("sequential updates per layer grow with n");
    Ok(())
}
