//! Lists seeds whose first trajectory shows a clean bundle in every cycle,
//! reaches ⟨b†b⟩ ≈ N in each cycle and has no qubit jump, for the
//! single-trajectory figure presets.
//!
//! cargo run --release --example display_seeds -- [first] [count]

use nbundle_cli::checks::staircase;
use nbundle_cli::pipeline::{cycle_window, run_trajectories};
use nbundle_core::config::preset;

fn main() -> anyhow::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let first = args.first().copied().unwrap_or(0);
    let count = args.get(1).copied().unwrap_or(50);
    for name in ["fig3", "fig4a", "fig4b"] {
        let cfg = preset(name)?;
        let windows: Vec<(f64, f64)> = (0..cfg.pulses.count).map(|c| cycle_window(&cfg, c)).collect();
        let mut clean = Vec::new();
        for seed in first..first + count {
            let run = run_trajectories(&cfg, 1, seed)?;
            let full = staircase(&run.records[0].observables, &windows, cfg.model.bundle_n).passed;
            if run.bundles.conforming == 1 && run.bundles.qubit_jumps == 0 && full {
                clean.push(seed);
            }
        }
        println!("{name}: {clean:?}");
    }
    Ok(())
}
