//! Tree-structured partially observable Markov games with perfect recall.
//!
//! A [`GameTree`] stores states layer by layer. Every player owns an infoset at
//! every step; turn-based games give the idle player a single-action infoset.
//! States carry their unique `(parent, joint action)` link and the probability
//! of being reached from it, so the tree structure holds by construction and the
//! transition rows are recovered from the children of each `(state, joint)`.
//!
//! Steps are 0-based throughout the crate: step `h` here is layer `h + 1` in
//! the usual 1-based notation.

mod episode;
mod policy;
mod reach;
mod validate;

pub use episode::{play_episode, Step, Trajectory};
pub use policy::{
    average_policy, log_sequence_form, sequence_form, ConditionalPolicy, PolicyAverager,
    SequenceForm,
};
pub use reach::{
    compute_reach, environment_reach, opponent_reach, others_state_reach, ReachTable, ReachWeights,
};
pub use validate::{validate_game, ValidationReport, Violation};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when checking that probability rows sum to one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("a game needs at least one player")]
    NoPlayers,
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("step {step} is outside the horizon {horizon}")]
    StepOutOfRange { step: usize, horizon: usize },
    #[error("player {player} has no infoset {infoset} at step {step}")]
    InfosetOutOfRange {
        player: usize,
        step: usize,
        infoset: usize,
    },
    #[error("infoset {infoset} of player {player} at step {step} has no actions")]
    ZeroActions {
        player: usize,
        step: usize,
        infoset: usize,
    },
    #[error("state {state} does not exist at step {step}")]
    StateOutOfRange { step: usize, state: usize },
    #[error("action {action} is invalid for player {player} at state {state} of step {step}")]
    ActionOutOfRange {
        step: usize,
        state: usize,
        player: usize,
        action: usize,
    },
    #[error("expected {expected} {what}, found {found}")]
    WrongArity {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("policy for player {player} does not fit the game: {reason}")]
    PolicyMismatch { player: usize, reason: String },
    #[error("cannot average an empty sequence of policies")]
    EmptyPolicySequence,
}

/// Whether player rewards are tied together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameMode {
    /// Two players; the second player's reward is `1 - r` of the first at every step.
    ZeroSum,
    GeneralSum,
}

/// How realized rewards are drawn around their means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardMode {
    /// The realized reward equals its mean.
    Deterministic,
    /// The realized reward is a Bernoulli draw with the stated mean.
    Bernoulli,
}

/// Affine map from player 0's value (sum of per-step rewards) back to native
/// payoff units: `native = scale * value + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffMap {
    pub scale: f64,
    pub offset: f64,
}

impl PayoffMap {
    pub fn to_native(&self, value: f64) -> f64 {
        self.scale * value + self.offset
    }

    /// Converts a difference of values (a gap or a regret).
    pub fn gap_to_native(&self, gap: f64) -> f64 {
        self.scale * gap
    }
}

/// Address of a state: its step and dense index within the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateRef {
    pub step: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    parent: Option<(usize, usize)>,
    prob: f64,
    infosets: Vec<usize>,
    action_counts: Vec<usize>,
    /// Mean rewards laid out as `[joint * num_players + player]`.
    rewards: Vec<f64>,
    children: Vec<Vec<usize>>,
}

impl State {
    /// `(parent state, joint action)` for states after the first step.
    pub fn parent(&self) -> Option<(usize, usize)> {
        self.parent
    }

    /// `p_0(s)` at the first step, otherwise `p(s | parent, joint)`.
    pub fn prob(&self) -> f64 {
        self.prob
    }

    pub fn infoset(&self, player: usize) -> usize {
        self.infosets[player]
    }

    pub fn infosets(&self) -> &[usize] {
        &self.infosets
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn num_joint(&self) -> usize {
        self.action_counts.iter().product()
    }

    pub fn mean_reward(&self, joint: usize, player: usize) -> f64 {
        self.rewards[joint * self.infosets.len() + player]
    }

    pub fn mean_rewards(&self, joint: usize) -> &[f64] {
        let m = self.infosets.len();
        &self.rewards[joint * m..(joint + 1) * m]
    }

    /// Child states at the next step reached through `joint`.
    pub fn children(&self, joint: usize) -> &[usize] {
        &self.children[joint]
    }

    /// Action of `player` inside the joint action index `joint`.
    pub fn player_action(&self, joint: usize, player: usize) -> usize {
        let stride: usize = self.action_counts[..player].iter().product();
        (joint / stride) % self.action_counts[player]
    }

    /// Encodes per-player actions as a joint index; player 0 varies fastest.
    pub fn joint_index(&self, actions: &[usize]) -> usize {
        let mut index = 0;
        let mut stride = 1;
        for (a, n) in actions.iter().zip(&self.action_counts) {
            index += a * stride;
            stride *= n;
        }
        index
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Infoset {
    num_actions: usize,
    parent: Option<(usize, usize)>,
    children: Vec<Vec<usize>>,
    states: Vec<usize>,
    name: String,
}

impl Infoset {
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// The player's own `(infoset, action)` at the previous step, taken from the
    /// first member state. Validation checks that all members agree.
    pub fn parent(&self) -> Option<(usize, usize)> {
        self.parent
    }

    /// Infosets of the same player at the next step reachable through `action`.
    pub fn children(&self, action: usize) -> &[usize] {
        &self.children[action]
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

/// A finite-horizon game with tree structure over states and per-player infosets.
#[derive(Debug, Clone, PartialEq)]
pub struct GameTree {
    num_players: usize,
    horizon: usize,
    mode: GameMode,
    reward_mode: RewardMode,
    payoff_map: Option<PayoffMap>,
    states: Vec<Vec<State>>,
    infosets: Vec<Vec<Vec<Infoset>>>,
}

impl GameTree {
    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn mode(&self) -> GameMode {
        self.mode
    }

    pub fn reward_mode(&self) -> RewardMode {
        self.reward_mode
    }

    pub fn payoff_map(&self) -> Option<PayoffMap> {
        self.payoff_map
    }

    pub fn with_reward_mode(mut self, mode: RewardMode) -> Self {
        self.reward_mode = mode;
        self
    }

    pub fn states(&self, step: usize) -> &[State] {
        &self.states[step]
    }

    pub fn state(&self, step: usize, index: usize) -> &State {
        &self.states[step][index]
    }

    pub fn num_states(&self) -> usize {
        self.states.iter().map(Vec::len).sum()
    }

    /// Number of `(state, joint action)` entries, the size measure used by the oracles.
    pub fn num_state_actions(&self) -> usize {
        self.states
            .iter()
            .flat_map(|layer| layer.iter().map(State::num_joint))
            .sum()
    }

    pub fn infosets(&self, player: usize, step: usize) -> &[Infoset] {
        &self.infosets[player][step]
    }

    pub fn infoset(&self, player: usize, step: usize, index: usize) -> &Infoset {
        &self.infosets[player][step][index]
    }

    pub fn num_actions(&self, player: usize, step: usize, infoset: usize) -> usize {
        self.infosets[player][step][infoset].num_actions
    }

    /// `X_h` for one player.
    pub fn layer_size(&self, player: usize, step: usize) -> usize {
        self.infosets[player][step].len()
    }

    /// Total infoset count `X` of a player, including single-action infosets.
    pub fn num_infosets(&self, player: usize) -> usize {
        self.infosets[player].iter().map(Vec::len).sum()
    }

    /// Infosets where the player actually has a choice (two or more actions).
    pub fn num_decision_infosets(&self, player: usize) -> usize {
        self.infosets[player]
            .iter()
            .flatten()
            .filter(|x| x.num_actions > 1)
            .count()
    }

    /// Largest action count `A` over a player's infosets.
    pub fn max_actions(&self, player: usize) -> usize {
        self.infosets[player]
            .iter()
            .flatten()
            .map(|x| x.num_actions)
            .max()
            .unwrap_or(1)
    }

    /// True when every infoset of the player has the same action count.
    pub fn has_uniform_actions(&self, player: usize) -> bool {
        let a = self.max_actions(player);
        self.infosets[player]
            .iter()
            .flatten()
            .all(|x| x.num_actions == a)
    }

    /// Number of `(infoset, action)` pairs of a player.
    pub fn num_sequences(&self, player: usize) -> usize {
        self.infosets[player]
            .iter()
            .flatten()
            .map(|x| x.num_actions)
            .sum()
    }

    fn from_builder(b: GameBuilder) -> Result<Self, GameError> {
        let m = b.num_players;
        let horizon = b.horizon;
        let mut infosets: Vec<Vec<Vec<Infoset>>> = b
            .infosets
            .iter()
            .map(|steps| {
                steps
                    .iter()
                    .map(|layer| {
                        layer
                            .iter()
                            .map(|(n, name)| Infoset {
                                num_actions: *n,
                                parent: None,
                                children: vec![Vec::new(); *n],
                                states: Vec::new(),
                                name: name.clone(),
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();

        for (player, steps) in infosets.iter().enumerate() {
            for (step, layer) in steps.iter().enumerate() {
                for (infoset, x) in layer.iter().enumerate() {
                    if x.num_actions == 0 {
                        return Err(GameError::ZeroActions {
                            player,
                            step,
                            infoset,
                        });
                    }
                }
            }
        }

        let mut states: Vec<Vec<State>> = Vec::with_capacity(horizon);
        for (step, raw_layer) in b.states.into_iter().enumerate() {
            let mut layer = Vec::with_capacity(raw_layer.len());
            for (index, raw) in raw_layer.into_iter().enumerate() {
                if raw.infosets.len() != m {
                    return Err(GameError::WrongArity {
                        what: "infosets per state",
                        expected: m,
                        found: raw.infosets.len(),
                    });
                }
                let mut action_counts = Vec::with_capacity(m);
                for (player, &x) in raw.infosets.iter().enumerate() {
                    let info = infosets[player][step].get(x).ok_or(
                        GameError::InfosetOutOfRange {
                            player,
                            step,
                            infoset: x,
                        },
                    )?;
                    action_counts.push(info.num_actions);
                }
                let num_joint: usize = action_counts.iter().product();
                let default_rewards: Vec<f64> = match b.mode {
                    GameMode::ZeroSum => vec![0.0, 1.0],
                    GameMode::GeneralSum => vec![0.0; m],
                };
                let mut rewards: Vec<f64> = std::iter::repeat(default_rewards)
                    .take(num_joint)
                    .flatten()
                    .collect();
                for (actions, values) in raw.rewards {
                    if actions.len() != m {
                        return Err(GameError::WrongArity {
                            what: "actions in a joint action",
                            expected: m,
                            found: actions.len(),
                        });
                    }
                    if values.len() != m {
                        return Err(GameError::WrongArity {
                            what: "rewards per joint action",
                            expected: m,
                            found: values.len(),
                        });
                    }
                    let joint = checked_joint(&actions, &action_counts, step, index)?;
                    rewards[joint * m..(joint + 1) * m].copy_from_slice(&values);
                }
                if let Some((parent, joint)) = raw.parent {
                    let parent_state: &State = step
                        .checked_sub(1)
                        .and_then(|s| states.get(s))
                        .and_then(|l: &Vec<State>| l.get(parent))
                        .ok_or(GameError::StateOutOfRange {
                            step: step.saturating_sub(1),
                            state: parent,
                        })?;
                    if joint >= parent_state.num_joint() {
                        return Err(GameError::ActionOutOfRange {
                            step: step - 1,
                            state: parent,
                            player: 0,
                            action: joint,
                        });
                    }
                } else if step != 0 {
                    return Err(GameError::StateOutOfRange { step, state: index });
                }
                layer.push(State {
                    parent: raw.parent,
                    prob: raw.prob,
                    infosets: raw.infosets,
                    action_counts,
                    rewards,
                    children: vec![Vec::new(); num_joint],
                });
            }
            if step > 0 {
                for (index, s) in layer.iter().enumerate() {
                    let (parent, joint) = s.parent.expect("checked above");
                    states[step - 1][parent].children[joint].push(index);
                }
            }
            states.push(layer);
        }

        for (step, layer) in states.iter().enumerate() {
            for (index, s) in layer.iter().enumerate() {
                for player in 0..m {
                    let x = s.infosets[player];
                    let own_parent = s.parent.map(|(p, joint)| {
                        let ps = &states[step - 1][p];
                        (ps.infosets[player], ps.player_action(joint, player))
                    });
                    let info = &mut infosets[player][step][x];
                    if info.states.is_empty() {
                        info.parent = own_parent;
                    }
                    info.states.push(index);
                    if let Some((px, pa)) = own_parent {
                        let siblings = &mut infosets[player][step - 1][px].children[pa];
                        if !siblings.contains(&x) {
                            siblings.push(x);
                        }
                    }
                }
            }
        }
        for steps in infosets.iter_mut() {
            for layer in steps.iter_mut() {
                for info in layer.iter_mut() {
                    for c in info.children.iter_mut() {
                        c.sort_unstable();
                    }
                }
            }
        }

        Ok(GameTree {
            num_players: m,
            horizon,
            mode: b.mode,
            reward_mode: b.reward_mode,
            payoff_map: b.payoff_map,
            states,
            infosets,
        })
    }
}

fn checked_joint(
    actions: &[usize],
    counts: &[usize],
    step: usize,
    state: usize,
) -> Result<usize, GameError> {
    let mut index = 0;
    let mut stride = 1;
    for (player, (&a, &n)) in actions.iter().zip(counts).enumerate() {
        if a >= n {
            return Err(GameError::ActionOutOfRange {
                step,
                state,
                player,
                action: a,
            });
        }
        index += a * stride;
        stride *= n;
    }
    Ok(index)
}

#[derive(Debug, Clone)]
struct RawState {
    parent: Option<(usize, usize)>,
    prob: f64,
    infosets: Vec<usize>,
    rewards: Vec<(Vec<usize>, Vec<f64>)>,
}

/// Incremental constructor for [`GameTree`].
///
/// Index errors are reported by [`GameBuilder::build`]; semantic invariants
/// (normalization, perfect recall, reward range) are left to [`validate_game`].
#[derive(Debug, Clone)]
pub struct GameBuilder {
    num_players: usize,
    horizon: usize,
    mode: GameMode,
    reward_mode: RewardMode,
    payoff_map: Option<PayoffMap>,
    infosets: Vec<Vec<Vec<(usize, String)>>>,
    states: Vec<Vec<RawState>>,
    error: Option<GameError>,
}

impl GameBuilder {
    pub fn new(num_players: usize, horizon: usize, mode: GameMode) -> Self {
        let error = if num_players == 0 {
            Some(GameError::NoPlayers)
        } else if horizon == 0 {
            Some(GameError::ZeroHorizon)
        } else if mode == GameMode::ZeroSum && num_players != 2 {
            Some(GameError::WrongArity {
                what: "players in a zero-sum game",
                expected: 2,
                found: num_players,
            })
        } else {
            None
        };
        GameBuilder {
            num_players,
            horizon,
            mode,
            reward_mode: RewardMode::Deterministic,
            payoff_map: None,
            infosets: vec![vec![Vec::new(); horizon]; num_players],
            states: vec![Vec::new(); horizon],
            error,
        }
    }

    pub fn reward_mode(mut self, mode: RewardMode) -> Self {
        self.reward_mode = mode;
        self
    }

    pub fn payoff_map(mut self, map: PayoffMap) -> Self {
        self.payoff_map = Some(map);
        self
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn mode(&self) -> GameMode {
        self.mode
    }

    fn fail(&mut self, e: GameError) {
        if self.error.is_none() {
            self.error = Some(e);
        }
    }

    pub fn add_infoset(&mut self, player: usize, step: usize, num_actions: usize) -> usize {
        self.add_named_infoset(player, step, num_actions, "")
    }

    pub fn add_named_infoset(
        &mut self,
        player: usize,
        step: usize,
        num_actions: usize,
        name: &str,
    ) -> usize {
        if step >= self.horizon || player >= self.num_players {
            self.fail(GameError::StepOutOfRange {
                step,
                horizon: self.horizon,
            });
            return 0;
        }
        let layer = &mut self.infosets[player][step];
        layer.push((num_actions, name.to_string()));
        layer.len() - 1
    }

    pub fn num_infosets(&self, player: usize, step: usize) -> usize {
        self.infosets[player][step].len()
    }

    /// Action count of an infoset added earlier; 0 if it does not exist.
    pub fn infoset_actions(&self, player: usize, step: usize, infoset: usize) -> usize {
        self.infosets
            .get(player)
            .and_then(|s| s.get(step))
            .and_then(|l| l.get(infoset))
            .map_or(0, |(n, _)| *n)
    }

    /// Adds a first-step state with initial probability `prob`.
    pub fn add_root(&mut self, prob: f64, infosets: &[usize]) -> StateRef {
        self.states[0].push(RawState {
            parent: None,
            prob,
            infosets: infosets.to_vec(),
            rewards: Vec::new(),
        });
        StateRef {
            step: 0,
            index: self.states[0].len() - 1,
        }
    }

    /// Adds a child of `parent` reached through per-player `actions` with
    /// transition probability `prob`.
    pub fn add_child(
        &mut self,
        parent: StateRef,
        actions: &[usize],
        prob: f64,
        infosets: &[usize],
    ) -> StateRef {
        let step = parent.step + 1;
        if step >= self.horizon {
            self.fail(GameError::StepOutOfRange {
                step,
                horizon: self.horizon,
            });
            return StateRef { step: 0, index: 0 };
        }
        let joint = self.joint_of(parent, actions);
        self.states[step].push(RawState {
            parent: Some((parent.index, joint)),
            prob,
            infosets: infosets.to_vec(),
            rewards: Vec::new(),
        });
        StateRef {
            step,
            index: self.states[step].len() - 1,
        }
    }

    /// Adds a child using a raw joint-action index instead of per-player actions.
    pub fn add_child_joint(
        &mut self,
        parent: StateRef,
        joint: usize,
        prob: f64,
        infosets: &[usize],
    ) -> StateRef {
        let step = parent.step + 1;
        if step >= self.horizon {
            self.fail(GameError::StepOutOfRange {
                step,
                horizon: self.horizon,
            });
            return StateRef { step: 0, index: 0 };
        }
        self.states[step].push(RawState {
            parent: Some((parent.index, joint)),
            prob,
            infosets: infosets.to_vec(),
            rewards: Vec::new(),
        });
        StateRef {
            step,
            index: self.states[step].len() - 1,
        }
    }

    fn joint_of(&mut self, state: StateRef, actions: &[usize]) -> usize {
        let Some(raw) = self
            .states
            .get(state.step)
            .and_then(|l| l.get(state.index))
        else {
            self.fail(GameError::StateOutOfRange {
                step: state.step,
                state: state.index,
            });
            return 0;
        };
        let mut counts = Vec::with_capacity(self.num_players);
        for (player, &x) in raw.infosets.iter().enumerate() {
            match self
                .infosets
                .get(player)
                .and_then(|s| s[state.step].get(x))
            {
                Some((n, _)) => counts.push(*n),
                None => {
                    let e = GameError::InfosetOutOfRange {
                        player,
                        step: state.step,
                        infoset: x,
                    };
                    self.fail(e);
                    return 0;
                }
            }
        }
        if actions.len() != counts.len() {
            self.fail(GameError::WrongArity {
                what: "actions in a joint action",
                expected: counts.len(),
                found: actions.len(),
            });
            return 0;
        }
        match checked_joint(actions, &counts, state.step, state.index) {
            Ok(j) => j,
            Err(e) => {
                self.fail(e);
                0
            }
        }
    }

    /// Sets mean rewards of every player for one joint action.
    pub fn set_rewards(&mut self, state: StateRef, actions: &[usize], rewards: &[f64]) {
        match self
            .states
            .get_mut(state.step)
            .and_then(|l| l.get_mut(state.index))
        {
            Some(raw) => raw.rewards.push((actions.to_vec(), rewards.to_vec())),
            None => self.fail(GameError::StateOutOfRange {
                step: state.step,
                state: state.index,
            }),
        }
    }

    /// Zero-sum shorthand: player 0 receives `r`, player 1 receives `1 - r`.
    pub fn set_zero_sum_reward(&mut self, state: StateRef, actions: &[usize], r: f64) {
        self.set_rewards(state, actions, &[r, 1.0 - r]);
    }

    pub fn build(self) -> Result<GameTree, GameError> {
        if let Some(e) = self.error {
            return Err(e);
        }
        GameTree::from_builder(self)
    }
}
