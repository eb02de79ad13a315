use super::{ConditionalPolicy, GameTree};

/// Probability that an episode reaches each `(state, joint action)`: `[step][state][joint]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachTable {
    values: Vec<Vec<Vec<f64>>>,
}

impl ReachTable {
    pub fn value(&self, step: usize, state: usize, joint: usize) -> f64 {
        self.values[step][state][joint]
    }

    pub fn values(&self) -> &[Vec<Vec<f64>>] {
        &self.values
    }

    pub fn layer_sum(&self, step: usize) -> f64 {
        self.values[step].iter().flatten().sum()
    }
}

/// Environment reach `p_{1:h}(s)`: product of initial and transition
/// probabilities along the state's history.
pub fn environment_reach(game: &GameTree) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(game.horizon());
    for step in 0..game.horizon() {
        let layer = game
            .states(step)
            .iter()
            .map(|s| match s.parent() {
                Some((p, _)) => out[step - 1][p] * s.prob(),
                None => s.prob(),
            })
            .collect();
        out.push(layer);
    }
    out
}

/// Joint reach of every `(state, joint)` under a full profile.
pub fn compute_reach(game: &GameTree, profile: &[&ConditionalPolicy]) -> ReachTable {
    let m = game.num_players();
    let mut values: Vec<Vec<Vec<f64>>> = Vec::with_capacity(game.horizon());
    for step in 0..game.horizon() {
        let layer = game
            .states(step)
            .iter()
            .map(|s| {
                let incoming = match s.parent() {
                    Some((p, j)) => values[step - 1][p][j] * s.prob(),
                    None => s.prob(),
                };
                (0..s.num_joint())
                    .map(|joint| {
                        let mut v = incoming;
                        for i in 0..m {
                            v *= profile[i].prob(step, s.infoset(i), s.player_action(joint, i));
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        values.push(layer);
    }
    ReachTable { values }
}

/// Reach of each state from the environment and every player except `player`,
/// with `player`'s own actions on the path counted as certain.
pub fn others_state_reach(
    game: &GameTree,
    player: usize,
    profile: &[&ConditionalPolicy],
) -> Vec<Vec<f64>> {
    let m = game.num_players();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(game.horizon());
    for step in 0..game.horizon() {
        let layer = game
            .states(step)
            .iter()
            .map(|s| match s.parent() {
                None => s.prob(),
                Some((p, joint)) => {
                    let ps = game.state(step - 1, p);
                    let mut v = out[step - 1][p] * s.prob();
                    for i in (0..m).filter(|&i| i != player) {
                        v *= profile[i].prob(step - 1, ps.infoset(i), ps.player_action(joint, i));
                    }
                    v
                }
            })
            .collect();
        out.push(layer);
    }
    out
}

/// `p^{nu}_{1:h}(x_h)`: total probability mass that the environment and the
/// other players send into each of `player`'s infosets, `[step][infoset]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachWeights {
    pub player: usize,
    pub values: Vec<Vec<f64>>,
}

pub fn opponent_reach(
    game: &GameTree,
    player: usize,
    profile: &[&ConditionalPolicy],
) -> ReachWeights {
    let state_reach = others_state_reach(game, player, profile);
    let values = (0..game.horizon())
        .map(|step| {
            let mut layer = vec![0.0; game.layer_size(player, step)];
            for (s, state) in game.states(step).iter().enumerate() {
                layer[state.infoset(player)] += state_reach[step][s];
            }
            layer
        })
        .collect();
    ReachWeights { player, values }
}
