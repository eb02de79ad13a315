//! Balanced online mirror descent from bandit feedback.
//!
//! Each episode yields an implicit-exploration loss estimate on the visited
//! path only, and the mirror step under the balanced dilated KL has a closed
//! form that rescales the rows of the visited infosets, last step first,
//! carrying a log-normalizer upward. Per-episode work is `O(H * A)`.

use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::balanced::{BalancedError, BalancedFamily};
use crate::game::{
    play_episode, sequence_form, ConditionalPolicy, GameError, GameTree, SequenceForm, Step,
    Trajectory,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OmdError {
    #[error("trajectory does not fit player {player}: {reason}")]
    BadTrajectory { player: usize, reason: String },
    #[error("visited pair at step {step} has zero estimator denominator")]
    ZeroMass { step: usize },
    #[error("learning rate must be positive and the exploration parameter non-negative (eta {eta}, gamma {gamma})")]
    BadParameters { eta: f64, gamma: f64 },
    #[error("update produced a non-finite probability at step {step}")]
    NonFinite { step: usize },
    #[error(transparent)]
    Balanced(#[from] BalancedError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Which dilated KL the mirror step uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    /// Per-step weights `1 / mu^{*,h}_{1:h}`.
    Balanced,
    /// Unit weights: vanilla dilated KL with a constant-`gamma` IX bonus.
    Vanilla,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmdParams {
    pub eta: f64,
    pub gamma: f64,
}

/// `eta = sqrt(X A log A / (H^3 T))`, `gamma = sqrt(X A iota / (H T))`, `iota = log(3 H X A / delta)`.
///
/// `log A` is floored at `log 2` so single-action games keep a positive rate.
pub fn recommended_params(x: usize, a: usize, h: usize, t: u64, delta: f64) -> OmdParams {
    let xa = (x * a) as f64;
    let h = h as f64;
    let t = t as f64;
    let log_a = (a.max(2) as f64).ln();
    let iota = (3.0 * h * xa / delta).ln();
    OmdParams {
        eta: (xa * log_a / (h.powi(3) * t)).sqrt(),
        gamma: (xa * iota / (h * t)).sqrt(),
    }
}

/// Size measures used by the rate formulas: all infosets of the player,
/// single-action ones included, and the largest action count.
pub fn game_dimensions(game: &GameTree, player: usize) -> (usize, usize) {
    (
        game.num_infosets(player),
        game.max_actions(player),
    )
}

/// [`recommended_params`] for one player of a game.
pub fn recommended_for(game: &GameTree, player: usize, rounds: u64, delta: f64) -> OmdParams {
    let (x, a) = game_dimensions(game, player);
    recommended_params(x, a, game.horizon(), rounds, delta)
}

/// Estimated loss of the visited `(infoset, action)` at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossEntry {
    pub step: usize,
    pub infoset: usize,
    pub action: usize,
    pub value: f64,
}

/// A loss estimate supported on one visited path, one entry per step.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLoss {
    pub entries: Vec<LossEntry>,
}

#[derive(Debug, Clone)]
pub struct OmdLearner {
    player: usize,
    policy: ConditionalPolicy,
    family: Arc<BalancedFamily>,
    parents: Vec<Vec<Option<(usize, usize)>>>,
    eta: f64,
    gamma: f64,
    regularizer: Regularizer,
    episodes: u64,
}

impl OmdLearner {
    pub fn new(game: &GameTree, player: usize, params: OmdParams) -> Result<Self, OmdError> {
        let family = Arc::new(BalancedFamily::new(game, player)?);
        Self::with_family(game, family, params)
    }

    pub fn with_family(
        game: &GameTree,
        family: Arc<BalancedFamily>,
        params: OmdParams,
    ) -> Result<Self, OmdError> {
        if !(params.eta > 0.0) || !(params.gamma >= 0.0) || !params.eta.is_finite() {
            return Err(OmdError::BadParameters {
                eta: params.eta,
                gamma: params.gamma,
            });
        }
        let player = family.player();
        let parents = (0..game.horizon())
            .map(|h| {
                game.infosets(player, h)
                    .iter()
                    .map(|x| x.parent())
                    .collect()
            })
            .collect();
        Ok(OmdLearner {
            player,
            policy: ConditionalPolicy::uniform(game, player),
            family,
            parents,
            eta: params.eta,
            gamma: params.gamma,
            regularizer: Regularizer::Balanced,
            episodes: 0,
        })
    }

    pub fn with_regularizer(mut self, regularizer: Regularizer) -> Self {
        self.regularizer = regularizer;
        self
    }

    /// Replaces the current policy, e.g. to start from a non-uniform point.
    pub fn set_policy(&mut self, policy: ConditionalPolicy, game: &GameTree) -> Result<(), OmdError> {
        policy.validate(game)?;
        self.policy = policy;
        Ok(())
    }

    pub fn player(&self) -> usize {
        self.player
    }

    pub fn policy(&self) -> &ConditionalPolicy {
        &self.policy
    }

    pub fn sequence_form(&self, game: &GameTree) -> SequenceForm {
        sequence_form(&self.policy, game)
    }

    pub fn family(&self) -> &BalancedFamily {
        &self.family
    }

    pub fn params(&self) -> OmdParams {
        OmdParams {
            eta: self.eta,
            gamma: self.gamma,
        }
    }

    pub fn regularizer(&self) -> Regularizer {
        self.regularizer
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    /// Regularizer weight of step `h` at infoset `x`: `mu^{*,h}_{1:h}(x, .)` or one.
    pub fn weight(&self, h: usize, x: usize) -> f64 {
        match self.regularizer {
            Regularizer::Balanced => self.family.weight(h, x),
            Regularizer::Vanilla => 1.0,
        }
    }

    fn check_view(&self, view: &[Step]) -> Result<(), OmdError> {
        let bad = |reason: String| OmdError::BadTrajectory {
            player: self.player,
            reason,
        };
        let horizon = self.parents.len();
        if view.len() != horizon {
            return Err(bad(format!("{} steps, horizon is {horizon}", view.len())));
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

    /// IX estimate `(1 - r_h) / (mu_{1:h}(x_h, a_h) + gamma * w_h(x_h))` on the visited path.
    pub fn ix_loss_estimate(&self, view: &[Step]) -> Result<PathLoss, OmdError> {
        self.check_view(view)?;
        let mut reach = 1.0;
        let mut entries = Vec::with_capacity(view.len());
        for (h, s) in view.iter().enumerate() {
            reach *= self.policy.prob(h, s.infoset, s.action);
            let denom = reach + self.gamma * self.weight(h, s.infoset);
            if denom == 0.0 {
                return Err(OmdError::ZeroMass { step: h });
            }
            entries.push(LossEntry {
                step: h,
                infoset: s.infoset,
                action: s.action,
                value: (1.0 - s.reward) / denom,
            });
        }
        Ok(PathLoss { entries })
    }

    /// Closed-form mirror step for a path-supported loss; returns `log Z_h` per step.
    /// Rows off the path are left untouched.
    pub fn update(&mut self, est: &PathLoss) -> Result<Vec<f64>, OmdError> {
        let horizon = self.parents.len();
        let view: Vec<Step> = est
            .entries
            .iter()
            .map(|e| Step {
                infoset: e.infoset,
                action: e.action,
                reward: 0.0,
            })
            .collect();
        self.check_view(&view)?;
        if let Some(e) = est.entries.iter().enumerate().find(|(h, e)| e.step != *h) {
            return Err(OmdError::BadTrajectory {
                player: self.player,
                reason: format!("entry {} is labelled step {}", e.0, e.1.step),
            });
        }
        let mut log_z = vec![0.0; horizon];
        let mut next: Option<(f64, f64)> = None;
        for h in (0..horizon).rev() {
            let e = est.entries[h];
            let w = self.weight(h, e.infoset);
            let mut exponent = -self.eta * w * e.value;
            if let Some((w_next, lz_next)) = next {
                exponent += w / w_next * lz_next;
            }
            let row = self.policy.row_mut(h, e.infoset);
            let p = row[e.action];
            // log(1 - p + p * e^exponent) without cancellation.
            let lz = log_add_exp((-p).ln_1p(), p.ln() + exponent);
            let keep = (-lz).exp();
            for (a, q) in row.iter_mut().enumerate() {
                *q = if a == e.action {
                    (p.ln() + exponent - lz).exp()
                } else {
                    *q * keep
                };
            }
            let total: f64 = row.iter().sum();
            if !total.is_finite() || total <= 0.0 {
                return Err(OmdError::NonFinite { step: h });
            }
            row.iter_mut().for_each(|q| *q /= total);
            log_z[h] = lz;
            next = Some((w, lz));
        }
        Ok(log_z)
    }

    /// Builds the estimate from the player's own view and applies the update.
    pub fn observe(&mut self, view: &[Step]) -> Result<(), OmdError> {
        let est = self.ix_loss_estimate(view)?;
        self.update(&est)?;
        self.episodes += 1;
        Ok(())
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Plays one episode with the learner in its own slot of `profile` and updates it.
pub fn omd_step<R: Rng + ?Sized>(
    learner: &mut OmdLearner,
    game: &GameTree,
    profile: &[&ConditionalPolicy],
    rng: &mut R,
) -> Result<Trajectory, OmdError> {
    let mut joint: Vec<&ConditionalPolicy> = profile.to_vec();
    if learner.player >= joint.len() {
        return Err(GameError::WrongArity {
            what: "policies in a profile",
            expected: game.num_players(),
            found: joint.len(),
        }
        .into());
    }
    joint[learner.player] = &learner.policy;
    let traj = play_episode(game, &joint, rng)?;
    drop(joint);
    learner.observe(traj.player(learner.player))?;
    Ok(traj)
}
