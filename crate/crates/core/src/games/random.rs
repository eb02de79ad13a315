use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GamesError;
use crate::game::{GameBuilder, GameMode, GameTree, StateRef};

/// Upper limit on the total number of states a random tree may have.
pub const MAX_RANDOM_STATES: u128 = 200_000;

/// Shape of a random game. Each state spawns `1..=chance_branching` children per
/// joint action; a new state joins an existing infoset of the same own history
/// with probability `merge_rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomTreeConfig {
    pub players: usize,
    pub horizon: usize,
    /// Maximum number of actions per infoset.
    pub actions: usize,
    /// Every infoset gets exactly `actions` actions; otherwise `1..=actions`.
    pub uniform_actions: bool,
    pub chance_branching: usize,
    pub merge_rate: f64,
    pub zero_sum: bool,
    pub seed: u64,
}

impl Default for RandomTreeConfig {
    fn default() -> Self {
        RandomTreeConfig {
            players: 2,
            horizon: 3,
            actions: 2,
            uniform_actions: true,
            chance_branching: 2,
            merge_rate: 0.5,
            zero_sum: true,
            seed: 0,
        }
    }
}

impl RandomTreeConfig {
    fn check(&self) -> Result<(), GamesError> {
        let bad = |what: &str| Err(GamesError::InvalidParameter(what.to_string()));
        if self.players == 0 {
            return bad("players must be positive");
        }
        if self.zero_sum && self.players != 2 {
            return bad("a zero-sum random tree needs exactly 2 players");
        }
        if self.horizon == 0 || self.actions == 0 || self.chance_branching == 0 {
            return bad("horizon, actions and chance_branching must be positive");
        }
        if !(0.0..=1.0).contains(&self.merge_rate) {
            return bad("merge_rate must lie in [0, 1]");
        }
        // Worst case: every state has the full branching under every joint action.
        let per_state = (self.chance_branching as u128)
            .saturating_mul((self.actions as u128).saturating_pow(self.players as u32));
        let mut layer = self.chance_branching as u128;
        let mut total = layer;
        for _ in 1..self.horizon {
            layer = layer.saturating_mul(per_state);
            total = total.saturating_add(layer);
        }
        if total > MAX_RANDOM_STATES {
            return Err(GamesError::TooLarge {
                size: total,
                limit: MAX_RANDOM_STATES,
            });
        }
        Ok(())
    }
}

/// Infoset assignment for one player: states sharing an own history form a
/// group, and only members of a group may share an infoset.
struct Assigner {
    groups: HashMap<(usize, usize), Vec<usize>>,
}

impl Assigner {
    fn assign(
        &mut self,
        b: &mut GameBuilder,
        rng: &mut ChaCha8Rng,
        cfg: &RandomTreeConfig,
        player: usize,
        step: usize,
        history: (usize, usize),
    ) -> usize {
        let members = self.groups.entry(history).or_default();
        if !members.is_empty() && rng.gen_bool(cfg.merge_rate) {
            return members[rng.gen_range(0..members.len())];
        }
        let n = if cfg.uniform_actions {
            cfg.actions
        } else {
            rng.gen_range(1..=cfg.actions)
        };
        let x = b.add_infoset(player, step, n);
        members.push(x);
        x
    }
}

fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    // Put the rounding residue on the last entry so rows sum to 1 to the last bit.
    let head: f64 = probs[..n - 1].iter().sum();
    probs[n - 1] = 1.0 - head;
    probs
}

/// Random perfect-recall game, reproducible from `cfg.seed`.
pub fn random_tree_game(cfg: &RandomTreeConfig) -> Result<GameTree, GamesError> {
    cfg.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mode = if cfg.zero_sum {
        GameMode::ZeroSum
    } else {
        GameMode::GeneralSum
    };
    let m = cfg.players;
    let mut b = GameBuilder::new(m, cfg.horizon, mode);

    // Each frontier entry carries the per-player infosets and action counts.
    let mut frontier: Vec<(StateRef, Vec<usize>, Vec<usize>)> = Vec::new();
    let mut assigners: Vec<Assigner> = (0..m)
        .map(|_| Assigner {
            groups: HashMap::new(),
        })
        .collect();
    let roots = rng.gen_range(1..=cfg.chance_branching);
    for prob in random_distribution(&mut rng, roots) {
        let (xs, ns) = assign_all(&mut b, &mut rng, cfg, &mut assigners, 0, None);
        frontier.push((b.add_root(prob, &xs), xs, ns));
    }
    for step in 1..cfg.horizon {
        let mut assigners: Vec<Assigner> = (0..m)
            .map(|_| Assigner {
                groups: HashMap::new(),
            })
            .collect();
        let mut next = Vec::new();
        for (parent, xs, ns) in &frontier {
            let joints: usize = ns.iter().product();
            for joint in 0..joints {
                let actions = decode(joint, ns);
                let own: Vec<(usize, usize)> =
                    xs.iter().zip(&actions).map(|(&x, &a)| (x, a)).collect();
                let k = rng.gen_range(1..=cfg.chance_branching);
                for prob in random_distribution(&mut rng, k) {
                    let (cx, cn) =
                        assign_all(&mut b, &mut rng, cfg, &mut assigners, step, Some(&own));
                    let child = b.add_child_joint(*parent, joint, prob, &cx);
                    next.push((child, cx, cn));
                }
            }
        }
        set_rewards(&mut b, &mut rng, cfg, &frontier);
        frontier = next;
    }
    set_rewards(&mut b, &mut rng, cfg, &frontier);
    Ok(b.build()?)
}

fn assign_all(
    b: &mut GameBuilder,
    rng: &mut ChaCha8Rng,
    cfg: &RandomTreeConfig,
    assigners: &mut [Assigner],
    step: usize,
    own: Option<&[(usize, usize)]>,
) -> (Vec<usize>, Vec<usize>) {
    let mut xs = Vec::with_capacity(assigners.len());
    let mut ns = Vec::with_capacity(assigners.len());
    for (player, assigner) in assigners.iter_mut().enumerate() {
        // Roots share the empty history, encoded as (usize::MAX, 0).
        let history = own.map_or((usize::MAX, 0), |o| o[player]);
        let x = assigner.assign(b, rng, cfg, player, step, history);
        xs.push(x);
        ns.push(b.infoset_actions(player, step, x));
    }
    (xs, ns)
}

fn decode(mut joint: usize, counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .map(|&n| {
            let a = joint % n;
            joint /= n;
            a
        })
        .collect()
}

fn set_rewards(
    b: &mut GameBuilder,
    rng: &mut ChaCha8Rng,
    cfg: &RandomTreeConfig,
    layer: &[(StateRef, Vec<usize>, Vec<usize>)],
) {
    for (state, _, ns) in layer {
        let joints: usize = ns.iter().product();
        for joint in 0..joints {
            let actions = decode(joint, ns);
            if cfg.zero_sum {
                let r = rng.gen::<f64>();
                b.set_zero_sum_reward(*state, &actions, r);
            } else {
                let r: Vec<f64> = (0..cfg.players).map(|_| rng.gen::<f64>()).collect();
                b.set_rewards(*state, &actions, &r);
            }
        }
    }
}
