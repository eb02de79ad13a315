//! Adversarial Balanced OMD on the hard bandit instance: average regret
//! shrinks roughly like 1/sqrt(T).
//!
//! cargo run --release --example bandit_regret

use balanced_efg::harness::{run_cell, Protocol, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>8}  {:>10}  {:>12}", "T", "R^T / T", "sqrt(T) R/T");
    for rounds in [1_000u64, 4_000, 16_000, 64_000] {
        let mut cfg = RunConfig::new("bandit-hard", Protocol::AdversarialOmd, rounds);
        cfg.checkpoints = vec![rounds];
        let game = cfg.load_game()?;
        let mut mean = 0.0;
        for seed in 0..4 {
            let cell = run_cell(&cfg, &game, seed, false, |_| Ok(()))?;
            mean += cell.records[0].regret_p1.unwrap_or(f64::NAN) / rounds as f64 / 4.0;
        }
        println!("{rounds:>8}  {mean:>10.4}  {:>12.3}", mean * (rounds as f64).sqrt());
    }
    Ok(())
}
