//! Independent oracles for integration tests. Everything here works by brute
//! enumeration over paths and ancestries; nothing calls the library's reach,
//! sequence-form, counting or best-response code.

#![allow(dead_code)]

use balanced_efg::game::{ConditionalPolicy, GameTree, Step};
use balanced_efg::games::{random_tree_game, RandomTreeConfig};
use rand::Rng;

/// One complete play with its probability under a profile.
#[derive(Debug, Clone)]
pub struct Path {
    pub prob: f64,
    /// `(state, joint)` per step.
    pub steps: Vec<(usize, usize)>,
}

impl Path {
    pub fn view(&self, game: &GameTree, player: usize) -> Vec<Step> {
        self.steps
            .iter()
            .enumerate()
            .map(|(h, &(s, j))| {
                let st = game.state(h, s);
                Step {
                    infoset: st.infoset(player),
                    action: st.player_action(j, player),
                    reward: st.mean_reward(j, player),
                }
            })
            .collect()
    }
}

/// All positive-probability paths under `profile`.
pub fn enumerate_paths(game: &GameTree, profile: &[&ConditionalPolicy]) -> Vec<Path> {
    let mut out = Vec::new();
    for (s, st) in game.states(0).iter().enumerate() {
        if st.prob() > 0.0 {
            extend(game, profile, 0, s, st.prob(), &mut Vec::new(), &mut out);
        }
    }
    out
}

fn extend(
    game: &GameTree,
    profile: &[&ConditionalPolicy],
    h: usize,
    s: usize,
    prob: f64,
    prefix: &mut Vec<(usize, usize)>,
    out: &mut Vec<Path>,
) {
    let st = game.state(h, s);
    for j in 0..st.num_joint() {
        let mut p = prob;
        for (i, pol) in profile.iter().enumerate() {
            p *= pol.prob(h, st.infoset(i), st.player_action(j, i));
        }
        if p == 0.0 {
            continue;
        }
        prefix.push((s, j));
        if h + 1 == game.horizon() {
            out.push(Path {
                prob: p,
                steps: prefix.clone(),
            });
        } else {
            for &c in st.children(j) {
                let q = game.state(h + 1, c).prob();
                if q > 0.0 {
                    extend(game, profile, h + 1, c, p * q, prefix, out);
                }
            }
        }
        prefix.pop();
    }
}

/// Expected total reward of every player, by path enumeration.
pub fn value_oracle(game: &GameTree, profile: &[&ConditionalPolicy]) -> Vec<f64> {
    let mut v = vec![0.0; game.num_players()];
    for path in enumerate_paths(game, profile) {
        for (h, &(s, j)) in path.steps.iter().enumerate() {
            for (i, vi) in v.iter_mut().enumerate() {
                *vi += path.prob * game.state(h, s).mean_reward(j, i);
            }
        }
    }
    v
}

/// `(step, infoset, action)` ancestors of a step-`h` infoset, root first, excluding itself.
pub fn ancestry(game: &GameTree, player: usize, h: usize, x: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    let (mut k, mut cur) = (h, x);
    while let Some((px, pa)) = game.infoset(player, k, cur).parent() {
        k -= 1;
        out.push((k, px, pa));
        cur = px;
    }
    out.reverse();
    out
}

/// `mu_{1:h}(x, a)` as an explicit product along the ancestry.
pub fn seq_oracle(game: &GameTree, policy: &ConditionalPolicy) -> Vec<Vec<Vec<f64>>> {
    let p = policy.player();
    (0..game.horizon())
        .map(|h| {
            (0..game.layer_size(p, h))
                .map(|x| {
                    let prefix: f64 = ancestry(game, p, h, x)
                        .iter()
                        .map(|&(k, y, a)| policy.prob(k, y, a))
                        .product();
                    (0..game.num_actions(p, h, x))
                        .map(|a| prefix * policy.prob(h, x, a))
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// `|C_h(x_k)|` and `|C_h(x_k, a)|` by scanning every step-`h` infoset's ancestry.
pub struct Counts {
    pub node: Vec<Vec<u64>>,
    pub edge: Vec<Vec<Vec<u64>>>,
}

pub fn counts_oracle(game: &GameTree, player: usize, h: usize) -> Counts {
    let mut node: Vec<Vec<u64>> = (0..=h).map(|k| vec![0; game.layer_size(player, k)]).collect();
    let mut edge: Vec<Vec<Vec<u64>>> = (0..h)
        .map(|k| {
            (0..game.layer_size(player, k))
                .map(|x| vec![0; game.num_actions(player, k, x)])
                .collect()
        })
        .collect();
    for x in 0..game.layer_size(player, h) {
        node[h][x] += 1;
        for (k, y, a) in ancestry(game, player, h, x) {
            node[k][y] += 1;
            edge[k][y][a] += 1;
        }
    }
    Counts { node, edge }
}

/// `mu^{*,h}_{1:h}(x_h, a)` for every step-`h` infoset (independent of `a`).
pub fn balanced_weight_oracle(game: &GameTree, player: usize, h: usize) -> Vec<f64> {
    let c = counts_oracle(game, player, h);
    (0..game.layer_size(player, h))
        .map(|x| {
            let prefix: f64 = ancestry(game, player, h, x)
                .iter()
                .map(|&(k, y, a)| c.edge[k][y][a] as f64 / c.node[k][y] as f64)
                .product();
            prefix / game.num_actions(player, h, x) as f64
        })
        .collect()
}

/// Oracle weights of every step, `[step][infoset]`.
pub fn balanced_weights_all(game: &GameTree, player: usize) -> Vec<Vec<f64>> {
    (0..game.horizon())
        .map(|h| balanced_weight_oracle(game, player, h))
        .collect()
}

/// Balanced dilated KL from precomputed oracle weights and the oracle sequence form.
pub fn balanced_kl_with(
    game: &GameTree,
    weights: &[Vec<f64>],
    mu: &ConditionalPolicy,
    nu: &ConditionalPolicy,
) -> f64 {
    let p = mu.player();
    let seq = seq_oracle(game, mu);
    let mut total = 0.0;
    for h in 0..game.horizon() {
        for x in 0..game.layer_size(p, h) {
            for a in 0..game.num_actions(p, h, x) {
                let m = seq[h][x][a];
                if m > 0.0 {
                    total += m / weights[h][x] * (mu.prob(h, x, a) / nu.prob(h, x, a)).ln();
                }
            }
        }
    }
    total
}

pub fn balanced_kl_oracle(game: &GameTree, mu: &ConditionalPolicy, nu: &ConditionalPolicy) -> f64 {
    balanced_kl_with(game, &balanced_weights_all(game, mu.player()), mu, nu)
}

/// Every deterministic policy of `player`; panics above `cap`.
pub fn pure_policies(game: &GameTree, player: usize, cap: usize) -> Vec<ConditionalPolicy> {
    let slots: Vec<(usize, usize, usize)> = (0..game.horizon())
        .flat_map(|h| {
            (0..game.layer_size(player, h)).map(move |x| (h, x, game.num_actions(player, h, x)))
        })
        .collect();
    let total: usize = slots.iter().map(|s| s.2).product();
    assert!(total <= cap, "{total} pure policies exceed the cap {cap}");
    (0..total)
        .map(|mut code| {
            let mut rows: Vec<Vec<Vec<f64>>> = (0..game.horizon())
                .map(|h| vec![Vec::new(); game.layer_size(player, h)])
                .collect();
            for &(h, x, n) in &slots {
                let a = code % n;
                code /= n;
                let mut row = vec![0.0; n];
                row[a] = 1.0;
                rows[h][x] = row;
            }
            ConditionalPolicy::from_rows(player, rows)
        })
        .collect()
}

/// Rows drawn uniformly from the simplex, bounded away from zero.
pub fn positive_policy<R: Rng>(game: &GameTree, player: usize, rng: &mut R) -> ConditionalPolicy {
    shaped_policy(game, player, rng, 1.0)
}

/// Rows `w_a^k / sum w^k` with exponential `w`: larger `k` gives sharper rows.
pub fn shaped_policy<R: Rng>(game: &GameTree, player: usize, rng: &mut R, k: f64) -> ConditionalPolicy {
    let rows = (0..game.horizon())
        .map(|h| {
            (0..game.layer_size(player, h))
                .map(|x| {
                    let w: Vec<f64> = (0..game.num_actions(player, h, x))
                        .map(|_| (-(1.0 - rng.gen::<f64>()).ln()).powf(k) + 1e-9)
                        .collect();
                    let t: f64 = w.iter().sum();
                    w.iter().map(|v| v / t).collect()
                })
                .collect()
        })
        .collect();
    ConditionalPolicy::from_rows(player, rows)
}

/// Exact loss `l_h(x, a)` of `player` against the others in `profile`, by enumeration.
pub fn loss_oracle(game: &GameTree, player: usize, profile: &[&ConditionalPolicy]) -> Vec<Vec<Vec<f64>>> {
    let own = profile[player];
    let mut loss: Vec<Vec<Vec<f64>>> = (0..game.horizon())
        .map(|h| {
            (0..game.layer_size(player, h))
                .map(|x| vec![0.0; game.num_actions(player, h, x)])
                .collect()
        })
        .collect();
    for path in enumerate_paths(game, profile) {
        let view = path.view(game, player);
        let mut own_prefix = 1.0;
        for (h, s) in view.iter().enumerate() {
            own_prefix *= own.prob(h, s.infoset, s.action);
            loss[h][s.infoset][s.action] += path.prob / own_prefix * (1.0 - s.reward);
        }
    }
    loss
}

/// Counterfactual loss by summing descendants along ancestries.
pub fn cf_loss_oracle(
    game: &GameTree,
    player: usize,
    policy: &ConditionalPolicy,
    loss: &[Vec<Vec<f64>>],
) -> Vec<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<Vec<f64>>> = loss.to_vec();
    for h2 in 0..game.horizon() {
        for x2 in 0..game.layer_size(player, h2) {
            let anc = ancestry(game, player, h2, x2);
            for a2 in 0..game.num_actions(player, h2, x2) {
                // Attribute l_{h2}(x2, a2) to every ancestor pair (h, x, a) with weight mu_{(h+1):h2}.
                for (idx, &(h, x, a)) in anc.iter().enumerate() {
                    let mut w = policy.prob(h2, x2, a2);
                    for &(k, y, b) in &anc[idx + 1..] {
                        w *= policy.prob(k, y, b);
                    }
                    out[h][x][a] += w * loss[h2][x2][a2];
                }
            }
        }
    }
    out
}

pub fn tiny_random_game(seed: u64, horizon: usize, actions: usize, branching: usize) -> GameTree {
    random_tree_game(&RandomTreeConfig {
        horizon,
        actions,
        chance_branching: branching,
        merge_rate: 0.5,
        seed,
        ..RandomTreeConfig::default()
    })
    .expect("small random game")
}

pub fn profile_refs(p: &[ConditionalPolicy]) -> Vec<&ConditionalPolicy> {
    p.iter().collect()
}

/// `max_pure sum_t V_i(pure, others^t) - sum_t V_i(pi^t)` by brute force.
pub fn brute_force_regret(game: &GameTree, player: usize, history: &[Vec<ConditionalPolicy>]) -> f64 {
    let achieved: f64 = history
        .iter()
        .map(|p| value_oracle(game, &profile_refs(p))[player])
        .sum();
    pure_policies(game, player, 4096)
        .iter()
        .map(|pure| {
            history
                .iter()
                .map(|p| {
                    let mut refs = profile_refs(p);
                    refs[player] = pure;
                    value_oracle(game, &refs)[player]
                })
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
        - achieved
}

/// Number of deterministic policies of `player`, saturating.
pub fn pure_count(game: &GameTree, player: usize) -> u128 {
    let mut n: u128 = 1;
    for h in 0..game.horizon() {
        for x in 0..game.layer_size(player, h) {
            n = n.saturating_mul(game.num_actions(player, h, x) as u128);
        }
    }
    n
}

/// Sweep game `i`: equal action counts, `H <= 5`, `A <= 4`, size kept under the generator cap.
pub fn sweep_game(i: u64) -> GameTree {
    let actions = 2 + (i / 5 % 3) as usize;
    let mut horizon = 1 + (i % 5) as usize;
    // Joint branching per state is A^2 * B; keep the expected tree small.
    while ((actions * actions * 2) as f64).powi(horizon as i32) > 4e4 && horizon > 1 {
        horizon -= 1;
    }
    random_tree_game(&RandomTreeConfig {
        horizon,
        actions,
        chance_branching: 2,
        merge_rate: 0.5,
        seed: 1000 + i,
        ..RandomTreeConfig::default()
    })
    .expect("sweep game fits the generator cap")
}

/// `p^{nu}_{1:h}(x_h)` by walking the state tree with the player's own actions unweighted.
pub fn opponent_reach_oracle(
    game: &GameTree,
    player: usize,
    profile: &[&ConditionalPolicy],
) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..game.horizon())
        .map(|h| vec![0.0; game.layer_size(player, h)])
        .collect();
    fn walk(
        game: &GameTree,
        player: usize,
        profile: &[&ConditionalPolicy],
        h: usize,
        s: usize,
        w: f64,
        out: &mut Vec<Vec<f64>>,
    ) {
        let st = game.state(h, s);
        out[h][st.infoset(player)] += w;
        if h + 1 == game.horizon() {
            return;
        }
        for j in 0..st.num_joint() {
            let mut p = w;
            for (i, pol) in profile.iter().enumerate() {
                if i != player {
                    p *= pol.prob(h, st.infoset(i), st.player_action(j, i));
                }
            }
            for &c in st.children(j) {
                walk(game, player, profile, h + 1, c, p * game.state(h + 1, c).prob(), out);
            }
        }
    }
    for (s, st) in game.states(0).iter().enumerate() {
        walk(game, player, profile, 0, s, st.prob(), &mut out);
    }
    out
}
