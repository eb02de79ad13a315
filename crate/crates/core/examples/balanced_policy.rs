//! Inspects the balanced exploration policies of Kuhn poker's first player:
//! descendant counts, per-step weights and the balanced transition.
//!
//! cargo run --example balanced_policy

use balanced_efg::balanced::{balanced_transition, BalancedFamily};
use balanced_efg::games::kuhn_poker;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let game = kuhn_poker();
    let player = 0;
    let family = BalancedFamily::new(&game, player)?;
    for h in 0..game.horizon() {
        let trans = balanced_transition(&game, player, h)?;
        println!("target step {h}: X_h = {}", game.layer_size(player, h));
        for x in 0..game.layer_size(player, h) {
            println!(
                "  {:<14} weight {:.4}  transition {:.4}",
                game.infoset(player, h, x).name(),
                family.weight(h, x),
                trans.values[x]
            );
        }
        let pol = family.policy(h);
        for k in 0..h {
            for x in 0..game.layer_size(player, k) {
                if game.num_actions(player, k, x) > 1 {
                    println!("  step {k} {:<10} plays {:?}", game.infoset(player, k, x).name(), pol.row(k, x));
                }
            }
        }
    }
    Ok(())
}
