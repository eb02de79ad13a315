use super::GamesError;
use crate::game::{GameBuilder, GameMode, GameTree, RewardMode, StateRef};

/// Largest number of leaves `A^H` the hard instance may have.
pub const MAX_BANDIT_LEAVES: u128 = 1 << 20;

/// Deterministic-transition tree where the learner observes the state: `A^h`
/// states at step `h`, Bernoulli reward only at the last step with mean
/// `means[leaf * A + action]`. Equivalent to an `A^H`-armed bandit. The second
/// player has one action and one infoset per step.
pub fn bandit_hard_instance(
    actions: usize,
    horizon: usize,
    means: &[f64],
) -> Result<GameTree, GamesError> {
    if actions < 2 || horizon < 1 {
        return Err(GamesError::InvalidParameter(format!(
            "need at least 2 actions and horizon 1, got {actions} and {horizon}"
        )));
    }
    let arms = (actions as u128).checked_pow(horizon as u32).unwrap_or(u128::MAX);
    if arms > MAX_BANDIT_LEAVES {
        return Err(GamesError::TooLarge {
            size: arms,
            limit: MAX_BANDIT_LEAVES,
        });
    }
    if means.len() as u128 != arms {
        return Err(GamesError::InvalidParameter(format!(
            "expected {arms} arm means, got {}",
            means.len()
        )));
    }
    if let Some(m) = means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
        return Err(GamesError::InvalidParameter(format!(
            "arm mean {m} is outside [0, 1]"
        )));
    }
    let mut b = GameBuilder::new(2, horizon, GameMode::ZeroSum).reward_mode(RewardMode::Bernoulli);
    let opponent: Vec<usize> = (0..horizon).map(|h| b.add_infoset(1, h, 1)).collect();
    let x = b.add_infoset(0, 0, actions);
    let mut frontier: Vec<StateRef> = vec![b.add_root(1.0, &[x, opponent[0]])];
    for h in 1..horizon {
        let mut next = Vec::with_capacity(frontier.len() * actions);
        for &s in &frontier {
            for a in 0..actions {
                let x = b.add_infoset(0, h, actions);
                next.push(b.add_child(s, &[a, 0], 1.0, &[x, opponent[h]]));
            }
        }
        frontier = next;
    }
    for (leaf, &s) in frontier.iter().enumerate() {
        for a in 0..actions {
            b.set_zero_sum_reward(s, &[a, 0], means[leaf * actions + a]);
        }
    }
    Ok(b.build()?)
}

/// Arm means with a single best arm (the last one) ahead of the rest by `gap`.
pub fn bandit_means(actions: usize, horizon: usize, gap: f64) -> Result<Vec<f64>, GamesError> {
    if !(0.0..=1.0).contains(&gap) {
        return Err(GamesError::InvalidParameter(format!(
            "gap {gap} is outside [0, 1]"
        )));
    }
    let arms = (actions as u128).checked_pow(horizon as u32).unwrap_or(u128::MAX);
    if arms > MAX_BANDIT_LEAVES {
        return Err(GamesError::TooLarge {
            size: arms,
            limit: MAX_BANDIT_LEAVES,
        });
    }
    let mut means = vec![0.5 - gap / 2.0; arms as usize];
    if let Some(last) = means.last_mut() {
        *last = 0.5 + gap / 2.0;
    }
    Ok(means)
}
