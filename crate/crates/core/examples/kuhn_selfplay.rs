//! Both players of Kuhn poker learn from bandit feedback with Balanced OMD,
//! then with Balanced CFR; prints the NE gap of the averaged policies in chips.
//!
//! cargo run --release --example kuhn_selfplay -- [episodes]

use balanced_efg::harness::{run_cell, Protocol, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let episodes: u64 = std::env::args().nth(1).map_or(Ok(200_000), |s| s.parse())?;
    for (protocol, per_round) in [(Protocol::SelfplayOmd, 1), (Protocol::SelfplayCfrHedge, 6)] {
        let rounds = episodes / per_round;
        let mut cfg = RunConfig::new("kuhn", protocol, rounds);
        cfg.track_regret = false;
        let game = cfg.load_game()?;
        let map = game.payoff_map().expect("kuhn reports chips");
        println!("{protocol}");
        let cell = run_cell(&cfg, &game, 0, false, |r| {
            let gap = r.gap.map_or(f64::NAN, |g| map.gap_to_native(g));
            println!("  round {:>8}  episodes {:>8}  gap {gap:.4} chips", r.round, r.episodes);
            Ok(())
        })?;
        let value = balanced_efg::equilibrium::game_value(&game, &[&cell.average[0], &cell.average[1]])?;
        println!("  value of the average profile: {:.4} chips (game value -1/18)", map.to_native(value.values[0]));
    }
    Ok(())
}
