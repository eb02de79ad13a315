use super::{GameMode, GameTree, NORMALIZATION_TOLERANCE};

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    InitialDistribution {
        sum: f64,
    },
    NegativeProbability {
        step: usize,
        state: usize,
        prob: f64,
    },
    /// Children of `(state, joint)` do not sum to one; an empty row sums to zero.
    TransitionRow {
        step: usize,
        state: usize,
        joint: usize,
        sum: f64,
    },
    RewardOutOfRange {
        step: usize,
        state: usize,
        joint: usize,
        player: usize,
        value: f64,
    },
    ZeroSumMismatch {
        step: usize,
        state: usize,
        joint: usize,
    },
    /// Member states of the infoset disagree on the player's own history.
    PerfectRecall {
        player: usize,
        step: usize,
        infoset: usize,
    },
    EmptyInfoset {
        player: usize,
        step: usize,
        infoset: usize,
    },
    /// An `(infoset, action)` before the last step has no successor infoset.
    DeadBranch {
        player: usize,
        step: usize,
        infoset: usize,
        action: usize,
    },
    EmptyStep {
        step: usize,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::InitialDistribution { sum } => {
                write!(f, "initial distribution sums to {sum}")
            }
            Violation::NegativeProbability { step, state, prob } => {
                write!(f, "state {state} at step {step} has probability {prob}")
            }
            Violation::TransitionRow {
                step,
                state,
                joint,
                sum,
            } => write!(
                f,
                "transition row of state {state}, joint action {joint} at step {step} sums to {sum}"
            ),
            Violation::RewardOutOfRange {
                step,
                state,
                joint,
                player,
                value,
            } => write!(
                f,
                "reward {value} of player {player} at state {state}, joint action {joint}, step {step} is outside [0, 1]"
            ),
            Violation::ZeroSumMismatch { step, state, joint } => write!(
                f,
                "rewards at state {state}, joint action {joint}, step {step} do not sum to 1"
            ),
            Violation::PerfectRecall {
                player,
                step,
                infoset,
            } => write!(
                f,
                "infoset {infoset} of player {player} at step {step} mixes different own histories"
            ),
            Violation::EmptyInfoset {
                player,
                step,
                infoset,
            } => write!(
                f,
                "infoset {infoset} of player {player} at step {step} contains no state"
            ),
            Violation::DeadBranch {
                player,
                step,
                infoset,
                action,
            } => write!(
                f,
                "action {action} at infoset {infoset} of player {player}, step {step} leads nowhere"
            ),
            Violation::EmptyStep { step } => write!(f, "step {step} has no states"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "OK");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks normalization, reward range, zero-sum consistency, perfect recall and
/// that no `(infoset, action)` is a dead end before the last step.
pub fn validate_game(game: &GameTree) -> ValidationReport {
    let mut violations = Vec::new();
    let m = game.num_players();
    let horizon = game.horizon();

    for step in 0..horizon {
        if game.states(step).is_empty() {
            violations.push(Violation::EmptyStep { step });
        }
    }

    let initial: f64 = game.states(0).iter().map(|s| s.prob()).sum();
    if (initial - 1.0).abs() > NORMALIZATION_TOLERANCE {
        violations.push(Violation::InitialDistribution { sum: initial });
    }

    for step in 0..horizon {
        for (index, s) in game.states(step).iter().enumerate() {
            if !(s.prob() >= 0.0) {
                violations.push(Violation::NegativeProbability {
                    step,
                    state: index,
                    prob: s.prob(),
                });
            }
            for joint in 0..s.num_joint() {
                let rewards = s.mean_rewards(joint);
                for (player, &value) in rewards.iter().enumerate() {
                    if !(0.0..=1.0).contains(&value) {
                        violations.push(Violation::RewardOutOfRange {
                            step,
                            state: index,
                            joint,
                            player,
                            value,
                        });
                    }
                }
                if game.mode() == GameMode::ZeroSum
                    && (rewards[0] + rewards[1] - 1.0).abs() > NORMALIZATION_TOLERANCE
                {
                    violations.push(Violation::ZeroSumMismatch {
                        step,
                        state: index,
                        joint,
                    });
                }
                if step + 1 < horizon {
                    let sum: f64 = s
                        .children(joint)
                        .iter()
                        .map(|&c| game.state(step + 1, c).prob())
                        .sum();
                    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                        violations.push(Violation::TransitionRow {
                            step,
                            state: index,
                            joint,
                            sum,
                        });
                    }
                }
            }
        }
    }

    for player in 0..m {
        for step in 0..horizon {
            for (infoset, x) in game.infosets(player, step).iter().enumerate() {
                if x.states().is_empty() {
                    violations.push(Violation::EmptyInfoset {
                        player,
                        step,
                        infoset,
                    });
                    continue;
                }
                let recall_ok = x.states().iter().all(|&si| {
                    let own = game.state(step, si).parent().map(|(p, joint)| {
                        let ps = game.state(step - 1, p);
                        (ps.infoset(player), ps.player_action(joint, player))
                    });
                    own == x.parent()
                });
                if !recall_ok {
                    violations.push(Violation::PerfectRecall {
                        player,
                        step,
                        infoset,
                    });
                }
                if step + 1 < horizon {
                    for action in 0..x.num_actions() {
                        if x.children(action).is_empty() {
                            violations.push(Violation::DeadBranch {
                                player,
                                step,
                                infoset,
                                action,
                            });
                        }
                    }
                }
            }
        }
    }

    ValidationReport { violations }
}
