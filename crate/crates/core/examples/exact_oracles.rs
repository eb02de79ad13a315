//! Exact evaluation: values, best responses and NE gaps on rock-paper-scissors
//! and Kuhn poker, plus the reference equilibrium solver.
//!
//! cargo run --release --example exact_oracles

use balanced_efg::equilibrium::{solve_zero_sum, Oracle};
use balanced_efg::game::ConditionalPolicy;
use balanced_efg::games::{kuhn_poker, rock_paper_scissors};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rps = rock_paper_scissors();
    let oracle = Oracle::new(&rps)?;
    let mut rock = ConditionalPolicy::uniform(&rps, 0);
    rock.row_mut(0, 0).copy_from_slice(&[1.0, 0.0, 0.0]);
    let uniform = ConditionalPolicy::uniform(&rps, 1);
    let br = oracle.best_response(1, &[&rock, &uniform])?;
    println!("rps: best reply to rock {:?} earns {:.3}", br.policy.row(0, 0), br.value);
    println!("rps: NE gap of (rock, uniform) = {:.3}", oracle.ne_gap(&rock, &uniform)?);

    let kuhn = kuhn_poker();
    let map = kuhn.payoff_map().expect("chips");
    let sol = solve_zero_sum(&kuhn, 2000)?;
    println!(
        "kuhn: reference value {:.5} chips, gap {:.2e} chips",
        map.to_native(sol.value),
        map.gap_to_native(sol.gap)
    );
    for x in 0..3 {
        println!("  opening bet with {:<2}: {:.3}", kuhn.infoset(0, 0, x).name(), sol.mu.prob(0, x, 1));
    }
    Ok(())
}
