use serde::{Deserialize, Serialize};

use super::{GameError, GameTree};

const ROW_TOLERANCE: f64 = 1e-9;

/// Per-infoset action distributions `mu_h(. | x_h)` of one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalPolicy {
    player: usize,
    rows: Vec<Vec<Vec<f64>>>,
}

impl ConditionalPolicy {
    pub fn uniform(game: &GameTree, player: usize) -> Self {
        let rows = (0..game.horizon())
            .map(|step| {
                game.infosets(player, step)
                    .iter()
                    .map(|x| vec![1.0 / x.num_actions() as f64; x.num_actions()])
                    .collect()
            })
            .collect();
        ConditionalPolicy { player, rows }
    }

    /// Wraps rows without checking them; see [`ConditionalPolicy::validate`].
    pub fn from_rows(player: usize, rows: Vec<Vec<Vec<f64>>>) -> Self {
        ConditionalPolicy { player, rows }
    }

    pub fn player(&self) -> usize {
        self.player
    }

    pub fn rows(&self) -> &[Vec<Vec<f64>>] {
        &self.rows
    }

    pub fn row(&self, step: usize, infoset: usize) -> &[f64] {
        &self.rows[step][infoset]
    }

    pub fn row_mut(&mut self, step: usize, infoset: usize) -> &mut [f64] {
        &mut self.rows[step][infoset]
    }

    pub fn prob(&self, step: usize, infoset: usize, action: usize) -> f64 {
        self.rows[step][infoset][action]
    }

    /// Checks the layer and infoset counts only; cheap enough for every episode.
    pub fn check_layout(&self, game: &GameTree) -> Result<(), GameError> {
        let mismatch = |reason: String| GameError::PolicyMismatch {
            player: self.player,
            reason,
        };
        if self.player >= game.num_players() {
            return Err(mismatch(format!(
                "the game has {} players",
                game.num_players()
            )));
        }
        if self.rows.len() != game.horizon() {
            return Err(mismatch(format!(
                "{} steps, game horizon is {}",
                self.rows.len(),
                game.horizon()
            )));
        }
        for (step, layer) in self.rows.iter().enumerate() {
            let expected = game.layer_size(self.player, step);
            if layer.len() != expected {
                return Err(mismatch(format!(
                    "{} infosets at step {step}, expected {expected}",
                    layer.len()
                )));
            }
        }
        Ok(())
    }

    /// Full shape and normalization check.
    pub fn validate(&self, game: &GameTree) -> Result<(), GameError> {
        self.check_layout(game)?;
        for (step, layer) in self.rows.iter().enumerate() {
            for (x, row) in layer.iter().enumerate() {
                let n = game.num_actions(self.player, step, x);
                let bad = |reason: String| GameError::PolicyMismatch {
                    player: self.player,
                    reason: format!("infoset {x} at step {step}: {reason}"),
                };
                if row.len() != n {
                    return Err(bad(format!("{} actions, expected {n}", row.len())));
                }
                if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                    return Err(bad("negative or non-finite probability".into()));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_TOLERANCE {
                    return Err(bad(format!("row sums to {sum}")));
                }
            }
        }
        Ok(())
    }

    pub fn sequence_form(&self, game: &GameTree) -> SequenceForm {
        sequence_form(self, game)
    }

    /// Deterministic policy playing `actions[h][x]` everywhere.
    pub fn deterministic(game: &GameTree, player: usize, actions: &[Vec<usize>]) -> Self {
        let rows = actions
            .iter()
            .enumerate()
            .map(|(step, layer)| {
                layer
                    .iter()
                    .enumerate()
                    .map(|(x, &a)| {
                        let mut row = vec![0.0; game.num_actions(player, step, x)];
                        row[a] = 1.0;
                        row
                    })
                    .collect()
            })
            .collect();
        ConditionalPolicy { player, rows }
    }
}

/// Sequence-form reach `mu_{1:h}(x_h, a_h)`: the product of the player's own
/// action probabilities along the unique own history ending in `(x_h, a_h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceForm {
    player: usize,
    values: Vec<Vec<Vec<f64>>>,
}

impl SequenceForm {
    pub fn player(&self) -> usize {
        self.player
    }

    pub fn value(&self, step: usize, infoset: usize, action: usize) -> f64 {
        self.values[step][infoset][action]
    }

    pub fn values(&self) -> &[Vec<Vec<f64>>] {
        &self.values
    }

    /// `mu_{1:h-1}(x_{h-1}, a_{h-1})` for the parent of `x_h`; one at the first step.
    pub fn parent_mass(&self, game: &GameTree, step: usize, infoset: usize) -> f64 {
        match game.infoset(self.player, step, infoset).parent() {
            Some((px, pa)) => self.values[step - 1][px][pa],
            None => 1.0,
        }
    }

    /// Sum over one layer; equals the number of first-step infosets for a valid policy.
    pub fn layer_sum(&self, step: usize) -> f64 {
        self.values[step].iter().flatten().sum()
    }
}

pub fn sequence_form(policy: &ConditionalPolicy, game: &GameTree) -> SequenceForm {
    let player = policy.player;
    let mut values: Vec<Vec<Vec<f64>>> = Vec::with_capacity(game.horizon());
    for step in 0..game.horizon() {
        let layer = game
            .infosets(player, step)
            .iter()
            .enumerate()
            .map(|(x, info)| {
                let parent = match info.parent() {
                    Some((px, pa)) => values[step - 1][px][pa],
                    None => 1.0,
                };
                policy.rows[step][x].iter().map(|p| parent * p).collect()
            })
            .collect();
        values.push(layer);
    }
    SequenceForm { player, values }
}

/// Sequence form in log space, for deep trees where products underflow.
pub fn log_sequence_form(policy: &ConditionalPolicy, game: &GameTree) -> Vec<Vec<Vec<f64>>> {
    let player = policy.player;
    let mut values: Vec<Vec<Vec<f64>>> = Vec::with_capacity(game.horizon());
    for step in 0..game.horizon() {
        let layer = game
            .infosets(player, step)
            .iter()
            .enumerate()
            .map(|(x, info)| {
                let parent = match info.parent() {
                    Some((px, pa)) => values[step - 1][px][pa],
                    None => 0.0,
                };
                policy.rows[step][x]
                    .iter()
                    .map(|p| parent + p.ln())
                    .collect()
            })
            .collect();
        values.push(layer);
    }
    values
}

/// Running sums of sequence-form policies; yields the average policy
/// `sum_t mu^t_{1:h}(x,a) / sum_t mu^t_{1:h-1}(x)`.
#[derive(Debug, Clone)]
pub struct PolicyAverager {
    player: usize,
    sums: Vec<Vec<Vec<f64>>>,
    count: u64,
}

impl PolicyAverager {
    pub fn new(game: &GameTree, player: usize) -> Self {
        let sums = (0..game.horizon())
            .map(|step| {
                game.infosets(player, step)
                    .iter()
                    .map(|x| vec![0.0; x.num_actions()])
                    .collect()
            })
            .collect();
        PolicyAverager {
            player,
            sums,
            count: 0,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn add(&mut self, policy: &ConditionalPolicy, game: &GameTree) -> Result<(), GameError> {
        self.add_weighted(policy, game, 1.0)
    }

    pub fn add_weighted(
        &mut self,
        policy: &ConditionalPolicy,
        game: &GameTree,
        weight: f64,
    ) -> Result<(), GameError> {
        if policy.player != self.player {
            return Err(GameError::PolicyMismatch {
                player: policy.player,
                reason: format!("averager tracks player {}", self.player),
            });
        }
        policy.check_layout(game)?;
        let seq = sequence_form(policy, game);
        for (s, v) in self.sums.iter_mut().flatten().zip(seq.values.iter().flatten()) {
            for (acc, x) in s.iter_mut().zip(v) {
                *acc += weight * x;
            }
        }
        self.count += 1;
        Ok(())
    }

    /// Average policy; infosets with zero accumulated reach get the uniform row.
    pub fn average(&self) -> ConditionalPolicy {
        let rows = self
            .sums
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .map(|row| {
                        // Row sums equal the parent mass by flow conservation.
                        let total: f64 = row.iter().sum();
                        if total > 0.0 {
                            row.iter().map(|v| v / total).collect()
                        } else {
                            vec![1.0 / row.len() as f64; row.len()]
                        }
                    })
                    .collect()
            })
            .collect();
        ConditionalPolicy {
            player: self.player,
            rows,
        }
    }
}

/// Average of a sequence of policies in sequence form, as a conditional policy.
pub fn average_policy(
    policies: &[ConditionalPolicy],
    game: &GameTree,
) -> Result<ConditionalPolicy, GameError> {
    let first = policies.first().ok_or(GameError::EmptyPolicySequence)?;
    let mut averager = PolicyAverager::new(game, first.player);
    for p in policies {
        averager.add(p, game)?;
    }
    Ok(averager.average())
}
