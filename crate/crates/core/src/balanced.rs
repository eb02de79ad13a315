//! Balanced exploration policies.
//!
//! For a target step `h`, the balanced policy `mu^{*,h}` plays each action at
//! an earlier infoset in proportion to the number of step-`h` infosets it leads
//! to, and uniformly from step `h` on. Its sequence form at step `h` is the
//! per-infoset weight used by the balanced dilated KL, the IX estimator and the
//! counterfactual estimator.

use thiserror::Error;

use crate::game::{sequence_form, ConditionalPolicy, GameError, GameTree};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BalancedError {
    #[error("infoset {infoset} of player {player} at step {step} has no descendants at step {target}")]
    DeadBranch {
        player: usize,
        step: usize,
        infoset: usize,
        target: usize,
    },
    #[error("target step {target} is outside the horizon {horizon}")]
    TargetOutOfRange { target: usize, horizon: usize },
    #[error("divergence is infinite: reference policy is zero at infoset {infoset}, action {action}, step {step} where the first policy has mass")]
    InfiniteDivergence {
        step: usize,
        infoset: usize,
        action: usize,
    },
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Descendant counts toward one target step `h`.
///
/// `node[k][x] = |C_h(x_k)|` for `k <= h` (one at `k = h`) and
/// `edge[k][x][a] = |C_h(x_k, a)|` for `k < h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerCounts {
    target: usize,
    node: Vec<Vec<u64>>,
    edge: Vec<Vec<Vec<u64>>>,
}

impl LayerCounts {
    pub fn target(&self) -> usize {
        self.target
    }

    pub fn node(&self, step: usize, infoset: usize) -> u64 {
        self.node[step][infoset]
    }

    /// Zero at `step == target`: no step-`h` infoset lies strictly after one at step `h`.
    pub fn edge(&self, step: usize, infoset: usize, action: usize) -> u64 {
        if step >= self.target {
            0
        } else {
            self.edge[step][infoset][action]
        }
    }
}

/// Counts for every target step, indexed by target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub layers: Vec<LayerCounts>,
}

impl CountTable {
    pub fn target(&self, h: usize) -> &LayerCounts {
        &self.layers[h]
    }
}

pub fn descendant_counts(game: &GameTree, player: usize) -> CountTable {
    let layers = (0..game.horizon())
        .map(|target| {
            let mut node: Vec<Vec<u64>> = vec![Vec::new(); target + 1];
            let mut edge: Vec<Vec<Vec<u64>>> = vec![Vec::new(); target];
            node[target] = vec![1; game.layer_size(player, target)];
            for k in (0..target).rev() {
                let infosets = game.infosets(player, k);
                edge[k] = infosets
                    .iter()
                    .map(|x| {
                        (0..x.num_actions())
                            .map(|a| x.children(a).iter().map(|&c| node[k + 1][c]).sum())
                            .collect()
                    })
                    .collect();
                node[k] = edge[k].iter().map(|row: &Vec<u64>| row.iter().sum()).collect();
            }
            LayerCounts { target, node, edge }
        })
        .collect();
    CountTable { layers }
}

fn check_target(game: &GameTree, target: usize) -> Result<(), BalancedError> {
    if target >= game.horizon() {
        return Err(BalancedError::TargetOutOfRange {
            target,
            horizon: game.horizon(),
        });
    }
    Ok(())
}

fn policy_from_counts(
    game: &GameTree,
    player: usize,
    counts: &LayerCounts,
) -> Result<ConditionalPolicy, BalancedError> {
    let target = counts.target;
    let mut rows = Vec::with_capacity(game.horizon());
    for step in 0..game.horizon() {
        let mut layer = Vec::with_capacity(game.layer_size(player, step));
        for (x, info) in game.infosets(player, step).iter().enumerate() {
            let n = info.num_actions();
            if step < target {
                let total = counts.node(step, x);
                if total == 0 {
                    return Err(BalancedError::DeadBranch {
                        player,
                        step,
                        infoset: x,
                        target,
                    });
                }
                layer.push(
                    (0..n)
                        .map(|a| counts.edge(step, x, a) as f64 / total as f64)
                        .collect(),
                );
            } else {
                layer.push(vec![1.0 / n as f64; n]);
            }
        }
        rows.push(layer);
    }
    Ok(ConditionalPolicy::from_rows(player, rows))
}

/// `mu^{*,h}` for target step `h` (0-based).
pub fn balanced_policy(
    game: &GameTree,
    player: usize,
    h: usize,
) -> Result<ConditionalPolicy, BalancedError> {
    check_target(game, h)?;
    let counts = descendant_counts(game, player);
    policy_from_counts(game, player, counts.target(h))
}

/// `p^{*,h}_{1:h}(x_h)` for every infoset at the target step.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedTransition {
    pub target: usize,
    pub values: Vec<f64>,
}

/// Evaluates the balanced transition along each infoset's own history:
/// `(|C_h(x_1)| / X_h) * prod_k |C_h(x_{k+1})| / |C_h(x_k, a_k)|`.
pub fn balanced_transition(
    game: &GameTree,
    player: usize,
    h: usize,
) -> Result<BalancedTransition, BalancedError> {
    check_target(game, h)?;
    let counts = descendant_counts(game, player);
    let c = counts.target(h);
    let x_h = game.layer_size(player, h) as f64;
    let mut values = Vec::with_capacity(game.layer_size(player, h));
    for x in 0..game.layer_size(player, h) {
        let mut path = vec![(h, x)];
        let mut cur = (h, x);
        while let Some((px, _)) = game.infoset(player, cur.0, cur.1).parent() {
            cur = (cur.0 - 1, px);
            path.push(cur);
        }
        path.reverse();
        let (_, root) = path[0];
        let mut v = c.node(0, root) as f64 / x_h;
        for k in 0..h {
            let (_, xk) = path[k];
            let (_, xn) = path[k + 1];
            let (_, ak) = game.infoset(player, k + 1, xn).parent().expect("non-root");
            let denom = c.edge(k, xk, ak);
            if denom == 0 {
                return Err(BalancedError::DeadBranch {
                    player,
                    step: k,
                    infoset: xk,
                    target: h,
                });
            }
            v *= c.node(k + 1, xn) as f64 / denom as f64;
        }
        values.push(v);
    }
    Ok(BalancedTransition { target: h, values })
}

/// All balanced policies of one player together with the step weights
/// `mu^{*,h}_{1:h}(x_h, .)` (independent of the action at `x_h`).
#[derive(Debug, Clone)]
pub struct BalancedFamily {
    player: usize,
    counts: CountTable,
    policies: Vec<ConditionalPolicy>,
    weights: Vec<Vec<f64>>,
    reciprocals: Vec<Vec<f64>>,
    layer_sizes: Vec<usize>,
}

impl BalancedFamily {
    pub fn new(game: &GameTree, player: usize) -> Result<Self, BalancedError> {
        let counts = descendant_counts(game, player);
        let mut policies = Vec::with_capacity(game.horizon());
        let mut weights = Vec::with_capacity(game.horizon());
        for h in 0..game.horizon() {
            let policy = policy_from_counts(game, player, counts.target(h))?;
            let seq = sequence_form(&policy, game);
            let w: Vec<f64> = (0..game.layer_size(player, h))
                .map(|x| seq.value(h, x, 0))
                .collect();
            weights.push(w);
            policies.push(policy);
        }
        let reciprocals = weights
            .iter()
            .map(|l| l.iter().map(|w| 1.0 / w).collect())
            .collect();
        let layer_sizes = (0..game.horizon())
            .map(|h| game.layer_size(player, h))
            .collect();
        Ok(BalancedFamily {
            player,
            counts,
            policies,
            weights,
            reciprocals,
            layer_sizes,
        })
    }

    pub fn player(&self) -> usize {
        self.player
    }

    pub fn horizon(&self) -> usize {
        self.policies.len()
    }

    pub fn counts(&self) -> &CountTable {
        &self.counts
    }

    /// `mu^{*,h}` for target step `h`.
    pub fn policy(&self, h: usize) -> &ConditionalPolicy {
        &self.policies[h]
    }

    /// `mu^{*,h}_{1:h}(x_h, a)` for any action `a` at `x_h`.
    pub fn weight(&self, h: usize, infoset: usize) -> f64 {
        self.weights[h][infoset]
    }

    /// `1 / mu^{*,h}_{1:h}(x_h, a)`.
    pub fn reciprocal(&self, h: usize, infoset: usize) -> f64 {
        self.reciprocals[h][infoset]
    }

    pub fn layer_size(&self, h: usize) -> usize {
        self.layer_sizes[h]
    }
}

/// Balanced dilated KL: `sum_h sum_{x,a} mu_{1:h}(x,a) / mu^{*,h}_{1:h}(x,a) * log(mu_h(a|x) / nu_h(a|x))`.
pub fn balanced_dilated_kl(
    mu: &ConditionalPolicy,
    nu: &ConditionalPolicy,
    family: &BalancedFamily,
    game: &GameTree,
) -> Result<f64, BalancedError> {
    weighted_kl(mu, nu, game, |h, x| family.reciprocal(h, x))
}

/// Vanilla dilated KL: as [`balanced_dilated_kl`] with weight `mu_{1:h}`.
pub fn dilated_kl(
    mu: &ConditionalPolicy,
    nu: &ConditionalPolicy,
    game: &GameTree,
) -> Result<f64, BalancedError> {
    weighted_kl(mu, nu, game, |_, _| 1.0)
}

fn weighted_kl(
    mu: &ConditionalPolicy,
    nu: &ConditionalPolicy,
    game: &GameTree,
    scale: impl Fn(usize, usize) -> f64,
) -> Result<f64, BalancedError> {
    mu.check_layout(game)?;
    nu.check_layout(game)?;
    let seq = sequence_form(mu, game);
    let mut total = 0.0;
    for h in 0..game.horizon() {
        for x in 0..game.layer_size(mu.player(), h) {
            let s = scale(h, x);
            for (a, (&p, &q)) in mu.row(h, x).iter().zip(nu.row(h, x)).enumerate() {
                let m = seq.value(h, x, a);
                if m == 0.0 || p == 0.0 {
                    continue;
                }
                if q == 0.0 {
                    return Err(BalancedError::InfiniteDivergence {
                        step: h,
                        infoset: x,
                        action: a,
                    });
                }
                total += s * m * (p / q).ln();
            }
        }
    }
    Ok(total)
}
