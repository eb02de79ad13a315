use rand::Rng;

use super::{ConditionalPolicy, GameError, GameMode, GameTree, RewardMode};

/// One step of a player's own view: where they were, what they did, what they got.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub infoset: usize,
    pub action: usize,
    pub reward: f64,
}

/// A sampled episode. Learners receive only [`Trajectory::player`] for their own index.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    players: Vec<Vec<Step>>,
    states: Vec<usize>,
}

impl Trajectory {
    pub fn player(&self, player: usize) -> &[Step] {
        &self.players[player]
    }

    /// The hidden state path; for oracles and tests only.
    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn total_reward(&self, player: usize) -> f64 {
        self.players[player].iter().map(|s| s.reward).sum()
    }
}

fn sample_index<R: Rng + ?Sized>(rng: &mut R, weights: impl Iterator<Item = f64>) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last_positive = i;
        }
        cumulative += w;
        if u < cumulative {
            return i;
        }
    }
    last_positive
}

/// Plays one episode with every player following `profile[i]`.
///
/// Draw order per step is fixed (actions by player, rewards, transition) so a
/// seeded generator reproduces the trajectory exactly.
pub fn play_episode<R: Rng + ?Sized>(
    game: &GameTree,
    profile: &[&ConditionalPolicy],
    rng: &mut R,
) -> Result<Trajectory, GameError> {
    let m = game.num_players();
    if profile.len() != m {
        return Err(GameError::WrongArity {
            what: "policies in a profile",
            expected: m,
            found: profile.len(),
        });
    }
    for (i, p) in profile.iter().enumerate() {
        if p.player() != i {
            return Err(GameError::PolicyMismatch {
                player: p.player(),
                reason: format!("passed in slot {i}"),
            });
        }
        p.check_layout(game)?;
    }

    let horizon = game.horizon();
    let mut players: Vec<Vec<Step>> = vec![Vec::with_capacity(horizon); m];
    let mut states = Vec::with_capacity(horizon);
    let mut current = sample_index(rng, game.states(0).iter().map(|s| s.prob()));
    let mut actions = vec![0usize; m];

    for step in 0..horizon {
        let s = game.state(step, current);
        states.push(current);
        for (i, p) in profile.iter().enumerate() {
            let x = s.infoset(i);
            let row = p.row(step, x);
            if row.len() != s.action_counts()[i] {
                return Err(GameError::PolicyMismatch {
                    player: i,
                    reason: format!(
                        "row at infoset {x}, step {step} has {} actions, expected {}",
                        row.len(),
                        s.action_counts()[i]
                    ),
                });
            }
            actions[i] = sample_index(rng, row.iter().copied());
        }
        let joint = s.joint_index(&actions);
        let means = s.mean_rewards(joint);
        match (game.reward_mode(), game.mode()) {
            (RewardMode::Deterministic, _) => {
                for i in 0..m {
                    players[i].push(Step {
                        infoset: s.infoset(i),
                        action: actions[i],
                        reward: means[i],
                    });
                }
            }
            (RewardMode::Bernoulli, GameMode::ZeroSum) => {
                let r = if rng.gen::<f64>() < means[0] { 1.0 } else { 0.0 };
                for (i, reward) in [r, 1.0 - r].into_iter().enumerate() {
                    players[i].push(Step {
                        infoset: s.infoset(i),
                        action: actions[i],
                        reward,
                    });
                }
            }
            (RewardMode::Bernoulli, GameMode::GeneralSum) => {
                for i in 0..m {
                    let reward = if rng.gen::<f64>() < means[i] { 1.0 } else { 0.0 };
                    players[i].push(Step {
                        infoset: s.infoset(i),
                        action: actions[i],
                        reward,
                    });
                }
            }
        }
        if step + 1 < horizon {
            let children = s.children(joint);
            let k = sample_index(rng, children.iter().map(|&c| game.state(step + 1, c).prob()));
            current = children[k];
        }
    }

    Ok(Trajectory { players, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameBuilder;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn coin_game() -> GameTree {
        let mut b = GameBuilder::new(2, 2, GameMode::ZeroSum);
        let x = b.add_infoset(0, 0, 2);
        let y = b.add_infoset(1, 0, 1);
        let root = b.add_root(1.0, &[x, y]);
        for a in 0..2 {
            for k in 0..2 {
                let xa = b.add_infoset(0, 1, 1);
                let yb = b.add_infoset(1, 1, 1);
                let s = b.add_child(root, &[a, 0], 0.5, &[xa, yb]);
                b.set_zero_sum_reward(s, &[0, 0], (a + k) as f64 / 2.0);
            }
        }
        b.build().unwrap()
    }

    #[test]
    fn same_seed_same_trajectory() {
        let g = coin_game();
        let p0 = ConditionalPolicy::uniform(&g, 0);
        let p1 = ConditionalPolicy::uniform(&g, 1);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| play_episode(&g, &[&p0, &p1], &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(7), run(7));
    }

    #[test]
    fn views_follow_the_state_path() {
        let g = coin_game();
        let p0 = ConditionalPolicy::uniform(&g, 0);
        let p1 = ConditionalPolicy::uniform(&g, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let t = play_episode(&g, &[&p0, &p1], &mut rng).unwrap();
            for (step, &s) in t.states().iter().enumerate() {
                assert_eq!(t.player(0)[step].infoset, g.state(step, s).infoset(0));
            }
            assert_eq!(t.total_reward(0) + t.total_reward(1), 2.0);
        }
    }

    #[test]
    fn rejects_misplaced_policies() {
        let g = coin_game();
        let p0 = ConditionalPolicy::uniform(&g, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(play_episode(&g, &[&p0, &p0], &mut rng).is_err());
        assert!(play_episode(&g, &[&p0], &mut rng).is_err());
    }
}
