//! Three players of a general-sum random game run Balanced OMD; the uniform
//! mixture of their round profiles approaches a coarse correlated equilibrium.
//!
//! cargo run --release --example multiplayer_cce

use balanced_efg::harness::{run_cell, Protocol, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for protocol in [Protocol::MultiplayerCceOmd, Protocol::MultiplayerCceCfr] {
        let mut cfg = RunConfig::new("random-tree", protocol, 20_000);
        cfg.random_players = 3;
        cfg.random_zero_sum = false;
        cfg.random_seed = 3;
        let game = cfg.load_game()?;
        println!("{protocol} on {} states", game.num_states());
        run_cell(&cfg, &game, 0, false, |r| {
            println!("  round {:>6}  episodes {:>7}  CCE gap {:.4}", r.round, r.episodes, r.gap.unwrap_or(f64::NAN));
            Ok(())
        })?;
    }
    Ok(())
}
