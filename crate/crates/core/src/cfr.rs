//! Balanced counterfactual regret minimization from bandit feedback.
//!
//! A round plays `H` episodes. Episode `h` follows the balanced policy
//! `mu^{*,h}` up to step `h` and the current policy afterwards, and yields an
//! importance-weighted estimate of the counterfactual loss at the step-`h`
//! infoset it visits. Once all `H` estimates are in, every infoset feeds its
//! (possibly zero) loss vector to a local simplex learner.

use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::balanced::{BalancedError, BalancedFamily};
use crate::equilibrium::{
    best_response_to_table, counterfactual_losses, LossTable, Oracle, OracleError,
};
use crate::game::{
    play_episode, sequence_form, ConditionalPolicy, GameError, GameTree, Step, Trajectory,
};
use crate::omd::LossEntry;
use crate::simplex::{Hedge, RegretMatching, SimplexError, SimplexLearner};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CfrError {
    #[error("trajectory does not fit player {player}: {reason}")]
    BadTrajectory { player: usize, reason: String },
    #[error("round is missing the episode for step {step}")]
    IncompleteRound { step: usize },
    #[error("step {step} was already observed this round")]
    DuplicateStep { step: usize },
    #[error("learning rate must be positive, got {eta}")]
    BadRate { eta: f64 },
    #[error(transparent)]
    Balanced(#[from] BalancedError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Local learner run at every infoset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalRule {
    /// Hedge with rate `eta * mu^{*,h}_{1:h}(x_h)` at infoset `x_h`.
    Hedge { eta: f64 },
    RegretMatching,
}

/// `eta = sqrt(X A iota / (H^3 T))` with `iota = log(10 X A / delta)`.
pub fn recommended_eta(x: usize, a: usize, h: usize, t: u64, delta: f64) -> f64 {
    let xa = (x * a) as f64;
    let iota = (10.0 * xa / delta).ln();
    (xa * iota / ((h as f64).powi(3) * t as f64)).sqrt()
}

#[derive(Debug, Clone)]
enum Local {
    Hedge(Hedge),
    Rm(RegretMatching),
}

impl Local {
    fn learner(&mut self) -> &mut dyn SimplexLearner {
        match self {
            Local::Hedge(h) => h,
            Local::Rm(r) => r,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CfrLearner {
    player: usize,
    policy: ConditionalPolicy,
    family: Arc<BalancedFamily>,
    rule: LocalRule,
    locals: Vec<Vec<Local>>,
    pending: Vec<Vec<Vec<f64>>>,
    observed: Vec<bool>,
    parents: Vec<Vec<Option<(usize, usize)>>>,
    rounds: u64,
}

impl CfrLearner {
    pub fn new(game: &GameTree, player: usize, rule: LocalRule) -> Result<Self, CfrError> {
        let family = Arc::new(BalancedFamily::new(game, player)?);
        Self::with_family(game, family, rule)
    }

    pub fn with_family(
        game: &GameTree,
        family: Arc<BalancedFamily>,
        rule: LocalRule,
    ) -> Result<Self, CfrError> {
        if let LocalRule::Hedge { eta } = rule {
            if !(eta > 0.0) || !eta.is_finite() {
                return Err(CfrError::BadRate { eta });
            }
        }
        let player = family.player();
        let horizon = game.horizon();
        let locals = (0..horizon)
            .map(|h| {
                game.infosets(player, h)
                    .iter()
                    .enumerate()
                    .map(|(x, info)| match rule {
                        LocalRule::Hedge { eta } => {
                            Local::Hedge(Hedge::new(info.num_actions(), eta * family.weight(h, x)))
                        }
                        LocalRule::RegretMatching => Local::Rm(RegretMatching::new(info.num_actions())),
                    })
                    .collect()
            })
            .collect();
        let pending = (0..horizon)
            .map(|h| {
                game.infosets(player, h)
                    .iter()
                    .map(|x| vec![0.0; x.num_actions()])
                    .collect()
            })
            .collect();
        let parents = (0..horizon)
            .map(|h| game.infosets(player, h).iter().map(|x| x.parent()).collect())
            .collect();
        Ok(CfrLearner {
            player,
            policy: ConditionalPolicy::uniform(game, player),
            family,
            rule,
            locals,
            pending,
            observed: vec![false; horizon],
            parents,
            rounds: 0,
        })
    }

    pub fn player(&self) -> usize {
        self.player
    }

    pub fn policy(&self) -> &ConditionalPolicy {
        &self.policy
    }

    pub fn family(&self) -> &BalancedFamily {
        &self.family
    }

    pub fn rule(&self) -> LocalRule {
        self.rule
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn horizon(&self) -> usize {
        self.parents.len()
    }

    /// `mu^{(t,h)}`: balanced `mu^{*,h}` at steps `<= h`, current policy after.
    pub fn sampling_policy(&self, h: usize) -> ConditionalPolicy {
        let balanced = self.family.policy(h);
        let rows = (0..self.horizon())
            .map(|k| {
                if k <= h {
                    balanced.rows()[k].clone()
                } else {
                    self.policy.rows()[k].clone()
                }
            })
            .collect();
        ConditionalPolicy::from_rows(self.player, rows)
    }

    fn check_view(&self, view: &[Step]) -> Result<(), CfrError> {
        let bad = |reason: String| CfrError::BadTrajectory {
            player: self.player,
            reason,
        };
        if view.len() != self.horizon() {
            return Err(bad(format!(
                "{} steps, horizon is {}",
                view.len(),
                self.horizon()
            )));
        }
        for (h, s) in view.iter().enumerate() {
            let Some(parent) = self.parents[h].get(s.infoset) else {
                return Err(bad(format!("no infoset {} at step {h}", s.infoset)));
            };
            if s.action >= self.policy.row(h, s.infoset).len() {
                return Err(bad(format!("action {} out of range at step {h}", s.action)));
            }
            let expected = (h > 0).then(|| (view[h - 1].infoset, view[h - 1].action));
            if *parent != expected {
                return Err(bad(format!("step {h} does not follow the previous step")));
            }
        }
        Ok(())
    }

    /// `(H - h - sum_{h' >= h} r_{h'}) / mu^{*,h}_{1:h}(x_h, a_h)` at the visited step-`h` pair
    /// (steps are 0-based, so `H - h` counts the remaining steps).
    pub fn cf_loss_estimate(&self, view: &[Step], h: usize) -> Result<LossEntry, CfrError> {
        self.check_view(view)?;
        let s = view[h];
        let remaining = (self.horizon() - h) as f64;
        let suffix: f64 = view[h..].iter().map(|s| s.reward).sum();
        Ok(LossEntry {
            step: h,
            infoset: s.infoset,
            action: s.action,
            value: (remaining - suffix) * self.family.reciprocal(h, s.infoset),
        })
    }

    /// Records the step-`h` episode of the current round.
    pub fn observe(&mut self, h: usize, view: &[Step]) -> Result<(), CfrError> {
        if self.observed[h] {
            return Err(CfrError::DuplicateStep { step: h });
        }
        let e = self.cf_loss_estimate(view, h)?;
        self.pending[h][e.infoset][e.action] += e.value;
        self.observed[h] = true;
        Ok(())
    }

    /// Feeds every infoset its loss vector (zero where unvisited) and refreshes the policy.
    pub fn finish_round(&mut self) -> Result<(), CfrError> {
        if let Some(step) = self.observed.iter().position(|o| !o) {
            return Err(CfrError::IncompleteRound { step });
        }
        for h in 0..self.horizon() {
            for x in 0..self.locals[h].len() {
                let loss = &mut self.pending[h][x];
                let learner = self.locals[h][x].learner();
                learner.update(loss)?;
                self.policy.row_mut(h, x).copy_from_slice(learner.policy());
                loss.iter_mut().for_each(|l| *l = 0.0);
            }
        }
        self.observed.iter_mut().for_each(|o| *o = false);
        self.rounds += 1;
        Ok(())
    }
}

/// One full round against fixed opponents: `H` episodes, then the update.
/// `profile[player]` is ignored.
pub fn cfr_round<R: Rng + ?Sized>(
    learner: &mut CfrLearner,
    game: &GameTree,
    profile: &[&ConditionalPolicy],
    rng: &mut R,
) -> Result<Vec<Trajectory>, CfrError> {
    if learner.player >= profile.len() {
        return Err(GameError::WrongArity {
            what: "policies in a profile",
            expected: game.num_players(),
            found: profile.len(),
        }
        .into());
    }
    let mut out = Vec::with_capacity(learner.horizon());
    for h in 0..learner.horizon() {
        let sampling = learner.sampling_policy(h);
        let mut joint = profile.to_vec();
        joint[learner.player] = &sampling;
        let traj = play_episode(game, &joint, rng)?;
        learner.observe(h, traj.player(learner.player))?;
        out.push(traj);
    }
    learner.finish_round()?;
    Ok(out)
}

/// Exact counterfactual losses `L_h(x_h, a_h)`, `[step][infoset][action]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualLossTable {
    pub player: usize,
    pub values: Vec<Vec<Vec<f64>>>,
    pub table: LossTable,
}

/// Counterfactual losses of `player` under `profile`, including the player's own
/// continuation policy `profile[player]`.
pub fn exact_counterfactual_loss(
    oracle: &Oracle<'_>,
    player: usize,
    profile: &[&ConditionalPolicy],
) -> Result<CounterfactualLossTable, OracleError> {
    let table = oracle.loss_table(player, profile)?;
    let values = counterfactual_losses(oracle.game(), &table, profile[player]);
    Ok(CounterfactualLossTable {
        player,
        values,
        table,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfRegretReport {
    /// `R^{imm,T}_h(x_h)`; may be negative.
    pub immediate: Vec<Vec<f64>>,
    /// Sum-max aggregate `R_h^T` per step.
    pub per_step: Vec<f64>,
    /// `sum_h R_h^T`.
    pub bound: f64,
    /// Realized regret `max_{mu} sum_t <mu^t - mu, l^t>` on exact losses.
    pub realized: f64,
}

/// Immediate counterfactual regrets over a history of profiles and the
/// decomposition bound they imply.
pub fn exact_immediate_cf_regret(
    oracle: &Oracle<'_>,
    player: usize,
    history: &[Vec<&ConditionalPolicy>],
) -> Result<CfRegretReport, OracleError> {
    let game = oracle.game();
    let horizon = game.horizon();
    if history.is_empty() {
        return Err(OracleError::EmptyMixture);
    }
    let mut acc: Vec<Vec<Vec<f64>>> = (0..horizon)
        .map(|h| {
            game.infosets(player, h)
                .iter()
                .map(|x| vec![0.0; x.num_actions()])
                .collect()
        })
        .collect();
    let mut cumulative = LossTable::zeros(game, player);
    let mut achieved_loss = 0.0;
    for profile in history {
        let cf = exact_counterfactual_loss(oracle, player, profile)?;
        let mu = profile[player];
        for h in 0..horizon {
            for (x, row) in acc[h].iter_mut().enumerate() {
                let l = &cf.values[h][x];
                let expected: f64 = mu.row(h, x).iter().zip(l).map(|(p, v)| p * v).sum();
                for (r, v) in row.iter_mut().zip(l) {
                    *r += expected - v;
                }
            }
        }
        achieved_loss += cf.table.expected_loss(&sequence_form(mu, game));
        cumulative.add_scaled(&cf.table, 1.0);
    }
    let immediate: Vec<Vec<f64>> = acc
        .iter()
        .map(|layer| {
            layer
                .iter()
                .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect()
        })
        .collect();

    let mut per_step = Vec::with_capacity(horizon);
    for target in 0..horizon {
        let mut value: Vec<f64> = immediate[target].clone();
        for k in (0..target).rev() {
            value = game
                .infosets(player, k)
                .iter()
                .map(|info| {
                    (0..info.num_actions())
                        .map(|a| info.children(a).iter().map(|&c| value[c]).sum::<f64>())
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
        }
        per_step.push(value.iter().sum());
    }
    let bound = per_step.iter().sum();

    // min_mu <mu, sum_t l^t> = T * H - max_mu <mu, sum_t g^t> since <mu, p^nu> sums to H per round.
    let t = history.len() as f64;
    let best_reward = best_response_to_table(game, &cumulative).value;
    let min_loss = t * horizon as f64 - best_reward;
    Ok(CfRegretReport {
        immediate,
        per_step,
        bound,
        realized: achieved_loss - min_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{GameBuilder, GameMode};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Max player picks one of two arms, then a second action; reward only at the end.
    fn two_step(reward: f64) -> GameTree {
        let mut b = GameBuilder::new(2, 2, GameMode::ZeroSum);
        let x = b.add_infoset(0, 0, 2);
        let y = b.add_infoset(1, 0, 1);
        let root = b.add_root(1.0, &[x, y]);
        for a in 0..2 {
            let xa = b.add_infoset(0, 1, 2);
            let ya = b.add_infoset(1, 1, 1);
            let s = b.add_child(root, &[a, 0], 1.0, &[xa, ya]);
            b.set_zero_sum_reward(s, &[0, 0], reward);
            b.set_zero_sum_reward(s, &[1, 0], reward);
            b.set_zero_sum_reward(root, &[a, 0], reward);
        }
        b.build().unwrap()
    }

    #[test]
    fn sampling_policy_prefix_is_balanced() {
        let g = two_step(0.5);
        let l = CfrLearner::new(&g, 0, LocalRule::RegretMatching).unwrap();
        assert_eq!(&l.sampling_policy(1), l.family().policy(1));
        let seq = sequence_form(&l.sampling_policy(0), &g);
        assert_eq!(seq.value(0, 0, 1), l.family().weight(0, 0));
    }

    #[test]
    fn all_reward_round_keeps_hedge_policy() {
        let g = two_step(1.0);
        let mut l = CfrLearner::new(&g, 0, LocalRule::Hedge { eta: 0.7 }).unwrap();
        let nu = ConditionalPolicy::uniform(&g, 1);
        let before = l.policy().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trajs = cfr_round(&mut l, &g, &[&before, &nu], &mut rng).unwrap();
        assert_eq!(trajs.len(), 2);
        assert_eq!(l.policy(), &before);
        assert_eq!(l.rounds(), 1);
    }

    #[test]
    fn estimator_value() {
        let g = two_step(0.25);
        let l = CfrLearner::new(&g, 0, LocalRule::RegretMatching).unwrap();
        let view = [
            Step {
                infoset: 0,
                action: 1,
                reward: 0.25,
            },
            Step {
                infoset: 1,
                action: 0,
                reward: 0.25,
            },
        ];
        // Step 0: (2 - 0.5) / (1/2); step 1: (1 - 0.25) / (1/4).
        assert_eq!(l.cf_loss_estimate(&view, 0).unwrap().value, 3.0);
        assert_eq!(l.cf_loss_estimate(&view, 1).unwrap().value, 3.0);
    }

    #[test]
    fn round_must_be_complete() {
        let g = two_step(0.5);
        let mut l = CfrLearner::new(&g, 0, LocalRule::RegretMatching).unwrap();
        assert_eq!(l.finish_round(), Err(CfrError::IncompleteRound { step: 0 }));
        assert!(CfrLearner::new(&g, 0, LocalRule::Hedge { eta: -1.0 }).is_err());
    }

    #[test]
    fn single_step_counterfactual_equals_loss() {
        let g = two_step(0.3);
        let oracle = Oracle::new(&g).unwrap();
        let mu = ConditionalPolicy::uniform(&g, 0);
        let nu = ConditionalPolicy::uniform(&g, 1);
        let cf = exact_counterfactual_loss(&oracle, 0, &[&mu, &nu]).unwrap();
        for x in 0..2 {
            assert_eq!(cf.values[1][x], cf.table.loss[1][x]);
        }
        // Root: immediate 0.7 plus the uniform continuation 0.7.
        assert!((cf.values[0][0][0] - 1.4).abs() < 1e-15);
    }
}
