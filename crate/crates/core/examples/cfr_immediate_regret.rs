//! Balanced CFR with regret matching against a fixed random opponent, with
//! the exact immediate counterfactual regrets and the bound they give.
//!
//! cargo run --release --example cfr_immediate_regret

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use balanced_efg::cfr::{cfr_round, exact_immediate_cf_regret, CfrLearner, LocalRule};
use balanced_efg::equilibrium::Oracle;
use balanced_efg::game::ConditionalPolicy;
use balanced_efg::games::{random_tree_game, RandomTreeConfig};
use balanced_efg::harness::random_policy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let game = random_tree_game(&RandomTreeConfig {
        horizon: 3,
        seed: 7,
        ..RandomTreeConfig::default()
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let opponent = random_policy(&game, 1, &mut rng);
    let mut learner = CfrLearner::new(&game, 0, LocalRule::RegretMatching)?;
    let oracle = Oracle::new(&game)?;
    // cfr_round ignores the learner's own slot.
    let own_slot = ConditionalPolicy::uniform(&game, 0);
    let mut history = Vec::new();
    for t in 1..=2000u64 {
        history.push(learner.policy().clone());
        let profile = [&own_slot, &opponent];
        cfr_round(&mut learner, &game, &profile, &mut rng)?;
        if t.is_power_of_two() || t == 2000 {
            let profiles: Vec<Vec<_>> = history.iter().map(|p| vec![p, &opponent]).collect();
            let report = exact_immediate_cf_regret(&oracle, 0, &profiles)?;
            println!(
                "T {t:>5}  realized {:>8.3}  bound sum_h R_h {:>8.3}  per step {:?}",
                report.realized,
                report.bound,
                report.per_step.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
            );
        }
    }
    Ok(())
}
