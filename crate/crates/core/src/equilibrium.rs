//! Exact oracles by full-tree dynamic programming: values, loss tables, best
//! responses, NE and CCE gaps, realized regrets, and an exact zero-sum solver.
//!
//! Everything is computed from a player's perspective through a [`LossTable`]:
//! the opponent-and-environment reach of each infoset and the expected loss
//! `1 - r` of each `(infoset, action)` weighted by that reach. Values are
//! linear in the player's own sequence form over this table.

use thiserror::Error;

use crate::game::{
    compute_reach, opponent_reach, sequence_form, ConditionalPolicy, GameError, GameMode,
    GameTree, PolicyAverager, ReachWeights, SequenceForm,
};

pub const DEFAULT_ORACLE_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("game has {entries} state-action entries, above the oracle cap of {cap}")]
    TooLarge { entries: usize, cap: usize },
    #[error("this oracle needs a two-player zero-sum game")]
    NotZeroSum,
    #[error("mixture of profiles is empty")]
    EmptyMixture,
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueReport {
    /// `V_i`: expected sum of player `i`'s rewards.
    pub values: Vec<f64>,
}

/// Per-player view of the other players and the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTable {
    pub player: usize,
    /// `p^{nu}_{1:h}(x_h)`.
    pub reach: ReachWeights,
    /// `l_h(x_h, a_h)`: reach-weighted expected `1 - r`.
    pub loss: Vec<Vec<Vec<f64>>>,
}

impl LossTable {
    pub fn zeros(game: &GameTree, player: usize) -> Self {
        let reach = (0..game.horizon())
            .map(|h| vec![0.0; game.layer_size(player, h)])
            .collect();
        let loss = (0..game.horizon())
            .map(|h| {
                game.infosets(player, h)
                    .iter()
                    .map(|x| vec![0.0; x.num_actions()])
                    .collect()
            })
            .collect();
        LossTable {
            player,
            reach: ReachWeights {
                player,
                values: reach,
            },
            loss,
        }
    }

    pub fn loss(&self, h: usize, x: usize, a: usize) -> f64 {
        self.loss[h][x][a]
    }

    /// Reward form `p^{nu}(x) - l(x, a)`.
    pub fn reward(&self, h: usize, x: usize, a: usize) -> f64 {
        self.reach.values[h][x] - self.loss[h][x][a]
    }

    /// `<mu, l>` summed over all steps.
    pub fn expected_loss(&self, seq: &SequenceForm) -> f64 {
        let mut total = 0.0;
        for (h, layer) in self.loss.iter().enumerate() {
            for (x, row) in layer.iter().enumerate() {
                for (a, l) in row.iter().enumerate() {
                    total += seq.value(h, x, a) * l;
                }
            }
        }
        total
    }

    /// Expected reward of the player playing `seq`; equals `V_i`.
    pub fn expected_reward(&self, seq: &SequenceForm) -> f64 {
        let mut total = 0.0;
        for (h, layer) in self.loss.iter().enumerate() {
            for (x, row) in layer.iter().enumerate() {
                for a in 0..row.len() {
                    total += seq.value(h, x, a) * self.reward(h, x, a);
                }
            }
        }
        total
    }

    /// `self += weight * other`.
    pub fn add_scaled(&mut self, other: &LossTable, weight: f64) {
        for (a, b) in self
            .reach
            .values
            .iter_mut()
            .flatten()
            .zip(other.reach.values.iter().flatten())
        {
            *a += weight * b;
        }
        for (ra, rb) in self.loss.iter_mut().flatten().zip(other.loss.iter().flatten()) {
            for (a, b) in ra.iter_mut().zip(rb) {
                *a += weight * b;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub policy: ConditionalPolicy,
    /// `max_{pi} V_i` against the table's opponents.
    pub value: f64,
    /// Optimal continuation value of every infoset, `[step][infoset]`.
    pub infoset_values: Vec<Vec<f64>>,
}

/// Backward induction over the player's infoset tree maximizing the reward form.
/// Ties go to the lowest action index.
pub fn best_response_to_table(game: &GameTree, table: &LossTable) -> BestResponse {
    let player = table.player;
    let horizon = game.horizon();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); horizon];
    let mut choice: Vec<Vec<usize>> = vec![Vec::new(); horizon];
    for h in (0..horizon).rev() {
        let infosets = game.infosets(player, h);
        let mut vals = Vec::with_capacity(infosets.len());
        let mut acts = Vec::with_capacity(infosets.len());
        for (x, info) in infosets.iter().enumerate() {
            let mut best = f64::NEG_INFINITY;
            let mut best_a = 0;
            for a in 0..info.num_actions() {
                let mut q = table.reward(h, x, a);
                if h + 1 < horizon {
                    q += info.children(a).iter().map(|&c| values[h + 1][c]).sum::<f64>();
                }
                if q > best {
                    best = q;
                    best_a = a;
                }
            }
            vals.push(best);
            acts.push(best_a);
        }
        values[h] = vals;
        choice[h] = acts;
    }
    let value = values[0].iter().sum();
    BestResponse {
        policy: ConditionalPolicy::deterministic(game, player, &choice),
        value,
        infoset_values: values,
    }
}

/// Counterfactual losses `L_h(x,a) = l_h(x,a) + sum_{x' in C(x,a)} sum_{a'} mu(a'|x') L_{h+1}(x',a')`.
pub fn counterfactual_losses(
    game: &GameTree,
    table: &LossTable,
    policy: &ConditionalPolicy,
) -> Vec<Vec<Vec<f64>>> {
    let player = table.player;
    let horizon = game.horizon();
    let mut out: Vec<Vec<Vec<f64>>> = vec![Vec::new(); horizon];
    for h in (0..horizon).rev() {
        let layer = game
            .infosets(player, h)
            .iter()
            .enumerate()
            .map(|(x, info)| {
                (0..info.num_actions())
                    .map(|a| {
                        let mut l = table.loss(h, x, a);
                        if h + 1 < horizon {
                            for &c in info.children(a) {
                                l += policy
                                    .row(h + 1, c)
                                    .iter()
                                    .zip(&out[h + 1][c])
                                    .map(|(p, v)| p * v)
                                    .sum::<f64>();
                            }
                        }
                        l
                    })
                    .collect()
            })
            .collect();
        out[h] = layer;
    }
    out
}

/// Oracle handle carrying the size cap.
#[derive(Debug, Clone, Copy)]
pub struct Oracle<'g> {
    game: &'g GameTree,
}

impl<'g> Oracle<'g> {
    pub fn new(game: &'g GameTree) -> Result<Self, OracleError> {
        Self::with_cap(game, DEFAULT_ORACLE_CAP)
    }

    pub fn with_cap(game: &'g GameTree, cap: usize) -> Result<Self, OracleError> {
        let entries = game.num_state_actions();
        if entries > cap {
            return Err(OracleError::TooLarge { entries, cap });
        }
        Ok(Oracle { game })
    }

    pub fn game(&self) -> &'g GameTree {
        self.game
    }

    fn check_profile(&self, profile: &[&ConditionalPolicy]) -> Result<(), OracleError> {
        let m = self.game.num_players();
        if profile.len() != m {
            return Err(GameError::WrongArity {
                what: "policies in a profile",
                expected: m,
                found: profile.len(),
            }
            .into());
        }
        for (i, p) in profile.iter().enumerate() {
            if p.player() != i {
                return Err(GameError::PolicyMismatch {
                    player: p.player(),
                    reason: format!("passed in slot {i}"),
                }
                .into());
            }
            p.check_layout(self.game)?;
        }
        Ok(())
    }

    fn check_zero_sum(&self) -> Result<(), OracleError> {
        if self.game.mode() != GameMode::ZeroSum {
            return Err(OracleError::NotZeroSum);
        }
        Ok(())
    }

    pub fn value(&self, profile: &[&ConditionalPolicy]) -> Result<ValueReport, OracleError> {
        self.check_profile(profile)?;
        let game = self.game;
        let reach = compute_reach(game, profile);
        let mut values = vec![0.0; game.num_players()];
        for h in 0..game.horizon() {
            for (s, state) in game.states(h).iter().enumerate() {
                for joint in 0..state.num_joint() {
                    let p = reach.value(h, s, joint);
                    if p == 0.0 {
                        continue;
                    }
                    for (v, r) in values.iter_mut().zip(state.mean_rewards(joint)) {
                        *v += p * r;
                    }
                }
            }
        }
        Ok(ValueReport { values })
    }

    /// Loss table of `player` against the other entries of `profile`; the
    /// player's own entry is ignored.
    pub fn loss_table(
        &self,
        player: usize,
        profile: &[&ConditionalPolicy],
    ) -> Result<LossTable, OracleError> {
        self.check_profile(profile)?;
        let game = self.game;
        let m = game.num_players();
        let state_reach = crate::game::others_state_reach(game, player, profile);
        let mut table = LossTable::zeros(game, player);
        table.reach = opponent_reach(game, player, profile);
        for h in 0..game.horizon() {
            for (s, state) in game.states(h).iter().enumerate() {
                let q = state_reach[h][s];
                if q == 0.0 {
                    continue;
                }
                let x = state.infoset(player);
                for joint in 0..state.num_joint() {
                    let mut w = q;
                    for j in (0..m).filter(|&j| j != player) {
                        w *= profile[j].prob(h, state.infoset(j), state.player_action(joint, j));
                    }
                    if w == 0.0 {
                        continue;
                    }
                    let a = state.player_action(joint, player);
                    table.loss[h][x][a] += w * (1.0 - state.mean_reward(joint, player));
                }
            }
        }
        Ok(table)
    }

    /// Loss table against the uniform mixture of `profiles` (others' entries).
    pub fn mixture_loss_table(
        &self,
        player: usize,
        profiles: &[Vec<&ConditionalPolicy>],
    ) -> Result<LossTable, OracleError> {
        if profiles.is_empty() {
            return Err(OracleError::EmptyMixture);
        }
        let mut acc = LossTable::zeros(self.game, player);
        let w = 1.0 / profiles.len() as f64;
        for p in profiles {
            acc.add_scaled(&self.loss_table(player, p)?, w);
        }
        Ok(acc)
    }

    pub fn best_response(
        &self,
        player: usize,
        profile: &[&ConditionalPolicy],
    ) -> Result<BestResponse, OracleError> {
        Ok(best_response_to_table(
            self.game,
            &self.loss_table(player, profile)?,
        ))
    }

    pub fn best_response_to_mixture(
        &self,
        player: usize,
        profiles: &[Vec<&ConditionalPolicy>],
    ) -> Result<BestResponse, OracleError> {
        Ok(best_response_to_table(
            self.game,
            &self.mixture_loss_table(player, profiles)?,
        ))
    }

    /// `max_{mu'} V(mu', nu) - min_{nu'} V(mu, nu')` in player-0 reward units.
    pub fn ne_gap(&self, mu: &ConditionalPolicy, nu: &ConditionalPolicy) -> Result<f64, OracleError> {
        self.check_zero_sum()?;
        let profile = [mu, nu];
        let br_max = self.best_response(0, &profile)?.value;
        let br_min = self.best_response(1, &profile)?.value;
        // V_1 = H - V_0 under the zero-sum convention.
        Ok(br_max + br_min - self.game.horizon() as f64)
    }

    /// `max_i [BR_i(mixture of pi^t_{-i}) - mean_t V_i(pi^t)]`.
    pub fn cce_gap(&self, profiles: &[Vec<&ConditionalPolicy>]) -> Result<f64, OracleError> {
        if profiles.is_empty() {
            return Err(OracleError::EmptyMixture);
        }
        let m = self.game.num_players();
        let mut mean_values = vec![0.0; m];
        for p in profiles {
            for (acc, v) in mean_values.iter_mut().zip(self.value(p)?.values) {
                *acc += v / profiles.len() as f64;
            }
        }
        let mut gap = f64::NEG_INFINITY;
        for (i, mean) in mean_values.iter().enumerate() {
            let br = self.best_response_to_mixture(i, profiles)?.value;
            gap = gap.max(br - mean);
        }
        Ok(gap)
    }
}

pub fn game_value(
    game: &GameTree,
    profile: &[&ConditionalPolicy],
) -> Result<ValueReport, OracleError> {
    Oracle::new(game)?.value(profile)
}

pub fn exact_loss_table(
    game: &GameTree,
    player: usize,
    profile: &[&ConditionalPolicy],
) -> Result<LossTable, OracleError> {
    Oracle::new(game)?.loss_table(player, profile)
}

pub fn best_response(
    game: &GameTree,
    player: usize,
    profile: &[&ConditionalPolicy],
) -> Result<BestResponse, OracleError> {
    Oracle::new(game)?.best_response(player, profile)
}

pub fn ne_gap(
    game: &GameTree,
    mu: &ConditionalPolicy,
    nu: &ConditionalPolicy,
) -> Result<f64, OracleError> {
    Oracle::new(game)?.ne_gap(mu, nu)
}

pub fn cce_gap(
    game: &GameTree,
    profiles: &[Vec<&ConditionalPolicy>],
) -> Result<f64, OracleError> {
    Oracle::new(game)?.cce_gap(profiles)
}

/// Accumulates per-round loss tables and achieved values to report realized
/// regrets `R_i^T = max_{pi} sum_t V_i(pi, pi^t_{-i}) - sum_t V_i(pi^t)`.
#[derive(Debug, Clone)]
pub struct RegretTracker {
    sums: Vec<LossTable>,
    achieved: Vec<f64>,
    rounds: u64,
}

impl RegretTracker {
    pub fn new(game: &GameTree) -> Self {
        RegretTracker {
            sums: (0..game.num_players())
                .map(|i| LossTable::zeros(game, i))
                .collect(),
            achieved: vec![0.0; game.num_players()],
            rounds: 0,
        }
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Records one round in which every player followed `profile`.
    pub fn record(
        &mut self,
        oracle: &Oracle<'_>,
        profile: &[&ConditionalPolicy],
    ) -> Result<(), OracleError> {
        for i in 0..self.sums.len() {
            self.record_player(oracle, i, profile)?;
        }
        self.rounds += 1;
        Ok(())
    }

    /// Records one round for a single player only; the caller advances rounds
    /// with [`RegretTracker::advance`].
    pub fn record_player(
        &mut self,
        oracle: &Oracle<'_>,
        player: usize,
        profile: &[&ConditionalPolicy],
    ) -> Result<(), OracleError> {
        let table = oracle.loss_table(player, profile)?;
        let seq = sequence_form(profile[player], oracle.game());
        self.achieved[player] += table.expected_reward(&seq);
        self.sums[player].add_scaled(&table, 1.0);
        Ok(())
    }

    pub fn advance(&mut self) {
        self.rounds += 1;
    }

    pub fn regret(&self, game: &GameTree, player: usize) -> f64 {
        best_response_to_table(game, &self.sums[player]).value - self.achieved[player]
    }

    pub fn regrets(&self, game: &GameTree) -> Vec<f64> {
        (0..self.sums.len()).map(|i| self.regret(game, i)).collect()
    }

    /// Cumulative loss table of one player.
    pub fn cumulative(&self, player: usize) -> &LossTable {
        &self.sums[player]
    }
}

/// Approximate equilibrium of a two-player zero-sum game from exact feedback.
#[derive(Debug, Clone)]
pub struct ZeroSumSolution {
    pub mu: ConditionalPolicy,
    pub nu: ConditionalPolicy,
    /// `V_0` of the returned pair.
    pub value: f64,
    /// NE gap of the returned pair; bounds the distance of `value` to the game value.
    pub gap: f64,
}

/// Runs alternating exact-feedback counterfactual regret minimization with
/// regret matching+ and linearly weighted averaging.
pub fn solve_zero_sum(game: &GameTree, iterations: usize) -> Result<ZeroSumSolution, OracleError> {
    let oracle = Oracle::new(game)?;
    oracle.check_zero_sum()?;
    let mut policies = [
        ConditionalPolicy::uniform(game, 0),
        ConditionalPolicy::uniform(game, 1),
    ];
    let mut regrets: Vec<Vec<Vec<Vec<f64>>>> = (0..2)
        .map(|i| {
            (0..game.horizon())
                .map(|h| {
                    game.infosets(i, h)
                        .iter()
                        .map(|x| vec![0.0; x.num_actions()])
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut averagers = [PolicyAverager::new(game, 0), PolicyAverager::new(game, 1)];
    for t in 1..=iterations.max(1) {
        for i in 0..2 {
            let table = {
                let profile = [&policies[0], &policies[1]];
                oracle.loss_table(i, &profile)?
            };
            let cf = counterfactual_losses(game, &table, &policies[i]);
            for h in 0..game.horizon() {
                for x in 0..game.layer_size(i, h) {
                    let row = policies[i].row(h, x);
                    let expected: f64 = row.iter().zip(&cf[h][x]).map(|(p, l)| p * l).sum();
                    let reg = &mut regrets[i][h][x];
                    for (r, l) in reg.iter_mut().zip(&cf[h][x]) {
                        *r = (*r + expected - l).max(0.0);
                    }
                    let total: f64 = reg.iter().sum();
                    let n = reg.len() as f64;
                    let new_row: Vec<f64> = if total > 0.0 {
                        reg.iter().map(|r| r / total).collect()
                    } else {
                        vec![1.0 / n; reg.len()]
                    };
                    policies[i].row_mut(h, x).copy_from_slice(&new_row);
                }
            }
            averagers[i].add_weighted(&policies[i], game, t as f64)?;
        }
    }
    let mu = averagers[0].average();
    let nu = averagers[1].average();
    let value = oracle.value(&[&mu, &nu])?.values[0];
    let gap = oracle.ne_gap(&mu, &nu)?;
    Ok(ZeroSumSolution { mu, nu, value, gap })
}
