//! Randomized invariants checked against the test-side enumeration oracles.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use balanced_efg::balanced::{balanced_dilated_kl, balanced_policy, BalancedFamily};
use balanced_efg::cfr::{cfr_round, exact_counterfactual_loss, CfrLearner, LocalRule};
use balanced_efg::equilibrium::{solve_zero_sum, Oracle};
use balanced_efg::game::{play_episode, validate_game, ConditionalPolicy, GameTree};
use balanced_efg::games::{
    bandit_hard_instance, emit_game_file, kuhn_poker, matching_pennies, matrix_game,
    parse_game_file, random_tree_game, rock_paper_scissors, BuiltinParams, RandomTreeConfig,
    BUILTIN_NAMES,
};
use balanced_efg::omd::{omd_step, OmdLearner, OmdParams};

use common::*;

fn small_game() -> impl Strategy<Value = GameTree> {
    (0u64..10_000, 1usize..=3, 2usize..=3, 1usize..=2, 0.0f64..=1.0, any::<bool>()).prop_map(
        |(seed, horizon, actions, branching, merge_rate, uniform_actions)| {
            random_tree_game(&RandomTreeConfig {
                horizon,
                actions,
                chance_branching: branching,
                merge_rate,
                uniform_actions,
                seed,
                ..RandomTreeConfig::default()
            })
            .expect("small game")
        },
    )
}

fn uniform_action_game() -> impl Strategy<Value = GameTree> {
    (0u64..10_000, 1usize..=3, 2usize..=3).prop_map(|(seed, horizon, actions)| {
        tiny_random_game(seed, horizon, actions, 2)
    })
}

fn profile(game: &GameTree, seed: u64) -> Vec<ConditionalPolicy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..game.num_players())
        .map(|i| shaped_policy(game, i, &mut rng, 2.0))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn opponent_reach_is_a_distribution_over_own_sequences(game in small_game(), seed in any::<u64>()) {
        let prof = profile(&game, seed);
        let refs = profile_refs(&prof);
        let oracle = Oracle::new(&game).unwrap();
        for p in 0..2 {
            let table = oracle.loss_table(p, &refs).unwrap();
            let reach = opponent_reach_oracle(&game, p, &refs);
            let seq = seq_oracle(&game, &prof[p]);
            for h in 0..game.horizon() {
                let mut total = 0.0;
                for x in 0..game.layer_size(p, h) {
                    let r = table.reach.values[h][x];
                    prop_assert!((r - reach[h][x]).abs() < 1e-12);
                    prop_assert!((-1e-15..=1.0 + 1e-12).contains(&r));
                    total += seq[h][x].iter().sum::<f64>() * r;
                }
                prop_assert!((total - 1.0).abs() < 1e-9, "step {h}: {total}");
            }
        }
    }

    #[test]
    fn exact_loss_matches_enumeration_and_sums_below_one(game in small_game(), seed in any::<u64>()) {
        let prof = profile(&game, seed);
        let refs = profile_refs(&prof);
        let oracle = Oracle::new(&game).unwrap();
        for p in 0..2 {
            let table = oracle.loss_table(p, &refs).unwrap();
            let truth = loss_oracle(&game, p, &refs);
            let seq = seq_oracle(&game, &prof[p]);
            for h in 0..game.horizon() {
                let mut total = 0.0;
                for x in 0..game.layer_size(p, h) {
                    for a in 0..game.num_actions(p, h, x) {
                        prop_assert!((table.loss(h, x, a) - truth[h][x][a]).abs() < 1e-12);
                        total += seq[h][x][a] * truth[h][x][a];
                    }
                }
                prop_assert!(total <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn values_match_enumeration(game in small_game(), seed in any::<u64>()) {
        let prof = profile(&game, seed);
        let refs = profile_refs(&prof);
        let lib = Oracle::new(&game).unwrap().value(&refs).unwrap().values;
        let truth = value_oracle(&game, &refs);
        for (a, b) in lib.iter().zip(&truth) {
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=game.horizon() as f64 + 1e-12).contains(a));
        }
        // Zero-sum convention: per-step rewards sum to one.
        prop_assert!((lib[0] + lib[1] - game.horizon() as f64).abs() < 1e-12);
    }

    #[test]
    fn sequence_form_matches_products_and_conserves_flow(game in small_game(), seed in any::<u64>()) {
        let prof = profile(&game, seed);
        for p in 0..2 {
            let lib = prof[p].sequence_form(&game);
            let truth = seq_oracle(&game, &prof[p]);
            for h in 0..game.horizon() {
                for x in 0..game.layer_size(p, h) {
                    let parent = match game.infoset(p, h, x).parent() {
                        Some((px, pa)) => truth[h - 1][px][pa],
                        None => 1.0,
                    };
                    prop_assert!((truth[h][x].iter().sum::<f64>() - parent).abs() < 1e-12);
                    for a in 0..game.num_actions(p, h, x) {
                        prop_assert!((lib.value(h, x, a) - truth[h][x][a]).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn episodes_are_reproducible_and_well_formed(game in small_game(), seed in any::<u64>()) {
        let prof = profile(&game, seed);
        let refs = profile_refs(&prof);
        let mut a = ChaCha8Rng::seed_from_u64(seed);
        let mut b = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..5 {
            let ta = play_episode(&game, &refs, &mut a).unwrap();
            let tb = play_episode(&game, &refs, &mut b).unwrap();
            prop_assert_eq!(&ta, &tb);
            for p in 0..2 {
                prop_assert_eq!(ta.player(p).len(), game.horizon());
                prop_assert!(ta.player(p).iter().all(|s| (0.0..=1.0).contains(&s.reward)));
            }
        }
    }

    #[test]
    fn balanced_kl_is_a_weighted_kl_of_reaching_distributions(game in uniform_action_game(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = (seed % 2) as usize;
        let mu = shaped_policy(&game, p, &mut rng, 2.0);
        let nu = shaped_policy(&game, p, &mut rng, 2.0);
        let family = BalancedFamily::new(&game, p).unwrap();
        let lhs = balanced_dilated_kl(&mu, &nu, &family, &game).unwrap();
        let a = game.max_actions(p) as f64;
        let seq = seq_oracle(&game, &mu);
        let mut rhs = 0.0;
        for h in 0..game.horizon() {
            // p^{*,h}_{1:h} from counts: (|C(x_1)| / X_h) * prod |C(x_{k+1})| / |C(x_k, a_k)|.
            let c = counts_oracle(&game, p, h);
            let xh = game.layer_size(p, h) as f64;
            let mut kl = 0.0;
            for x in 0..game.layer_size(p, h) {
                let anc = ancestry(&game, p, h, x);
                let mut nodes: Vec<(usize, usize)> = anc.iter().map(|&(k, y, _)| (k, y)).collect();
                nodes.push((h, x));
                let mut star = c.node[0][nodes[0].1] as f64 / xh;
                for (i, &(k, y, b)) in anc.iter().enumerate() {
                    let (k1, y1) = nodes[i + 1];
                    star *= c.node[k1][y1] as f64 / c.edge[k][y][b] as f64;
                }
                for b in 0..game.num_actions(p, h, x) {
                    let m = seq[h][x][b];
                    let alt = m / mu.prob(h, x, b) * nu.prob(h, x, b);
                    kl += m * star * (m / alt).ln();
                }
            }
            rhs += xh * a * kl;
        }
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn balanced_policies_are_valid_on_uneven_games(game in small_game()) {
        for p in 0..2 {
            for h in 0..game.horizon() {
                let pol = balanced_policy(&game, p, h).unwrap();
                prop_assert!(pol.validate(&game).is_ok());
                let w = balanced_weight_oracle(&game, p, h);
                let seq = pol.sequence_form(&game);
                for (x, wx) in w.iter().enumerate() {
                    prop_assert!(wx.is_finite() && *wx > 0.0);
                    prop_assert!((seq.value(h, x, 0) - wx).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gaps_are_nonnegative(game in small_game(), seed in any::<u64>()) {
        let prof = profile(&game, seed);
        let oracle = Oracle::new(&game).unwrap();
        prop_assert!(oracle.ne_gap(&prof[0], &prof[1]).unwrap() >= -1e-12);
        let other = profile(&game, seed.wrapping_add(1));
        let mixture = vec![profile_refs(&prof), profile_refs(&other)];
        prop_assert!(oracle.cce_gap(&mixture).unwrap() >= -1e-12);
    }

    #[test]
    fn mixture_best_response_matches_brute_force(game in uniform_action_game(), seed in any::<u64>()) {
        prop_assume!((0..2).all(|i| pure_count(&game, i) <= 512));
        let profiles: Vec<Vec<ConditionalPolicy>> = (0..3).map(|k| profile(&game, seed.wrapping_add(k))).collect();
        let mixture: Vec<Vec<&ConditionalPolicy>> = profiles.iter().map(|p| profile_refs(p)).collect();
        let oracle = Oracle::new(&game).unwrap();
        for p in 0..2 {
            let br = oracle.best_response_to_mixture(p, &mixture).unwrap();
            let brute = pure_policies(&game, p, 512)
                .iter()
                .map(|pi| {
                    profiles
                        .iter()
                        .map(|prof| {
                            let mut refs = profile_refs(prof);
                            refs[p] = pi;
                            value_oracle(&game, &refs)[p]
                        })
                        .sum::<f64>()
                        / 3.0
                })
                .fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((br.value - brute).abs() < 1e-12, "{} vs {brute}", br.value);
        }
    }

    #[test]
    fn counterfactual_losses_match_enumeration_and_stay_bounded(game in small_game(), seed in any::<u64>()) {
        let prof = profile(&game, seed);
        let refs = profile_refs(&prof);
        let oracle = Oracle::new(&game).unwrap();
        let horizon = game.horizon();
        for p in 0..2 {
            let lib = exact_counterfactual_loss(&oracle, p, &refs).unwrap();
            let truth = cf_loss_oracle(&game, p, &prof[p], &loss_oracle(&game, p, &refs));
            let reach = opponent_reach_oracle(&game, p, &refs);
            let seq = seq_oracle(&game, &prof[p]);
            for h in 0..horizon {
                let mut total = 0.0;
                for x in 0..game.layer_size(p, h) {
                    for a in 0..game.num_actions(p, h, x) {
                        let v = lib.values[h][x][a];
                        prop_assert!((v - truth[h][x][a]).abs() < 1e-12);
                        prop_assert!(v >= -1e-15 && v <= reach[h][x] * (horizon - h) as f64 + 1e-12);
                        total += seq[h][x][a] * v;
                    }
                }
                prop_assert!(total <= (horizon - h) as f64 + 1e-12);
            }
        }
    }

    #[test]
    fn cfr_hedge_matches_the_closed_form(game in small_game(), seed in any::<u64>(), eta in 0.01f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = (seed % 2) as usize;
        let opp = profile(&game, seed);
        let mut learner = CfrLearner::new(&game, p, LocalRule::Hedge { eta }).unwrap();
        let mut cumulative: Vec<Vec<Vec<f64>>> = (0..game.horizon())
            .map(|h| (0..game.layer_size(p, h)).map(|x| vec![0.0; game.num_actions(p, h, x)]).collect())
            .collect();
        let weights = balanced_weights_all(&game, p);
        for _ in 0..4 {
            let trajs = cfr_round(&mut learner, &game, &profile_refs(&opp), &mut rng).unwrap();
            for (h, t) in trajs.iter().enumerate() {
                let view = t.player(p);
                let s = view[h];
                let suffix: f64 = view[h..].iter().map(|s| s.reward).sum();
                cumulative[h][s.infoset][s.action] += ((game.horizon() - h) as f64 - suffix) / weights[h][s.infoset];
            }
            for h in 0..game.horizon() {
                for x in 0..game.layer_size(p, h) {
                    let logits: Vec<f64> = cumulative[h][x].iter().map(|l| -eta * weights[h][x] * l).collect();
                    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let z: f64 = logits.iter().map(|v| (v - m).exp()).sum();
                    for (a, v) in logits.iter().enumerate() {
                        let expected = (v - m).exp() / z;
                        prop_assert!((learner.policy().prob(h, x, a) - expected).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn omd_keeps_policies_positive(game in small_game(), seed in any::<u64>(), eta in 0.1f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = (seed % 2) as usize;
        let opp = profile(&game, seed);
        let mut learner = OmdLearner::new(&game, p, OmdParams { eta, gamma: 0.01 }).unwrap();
        for _ in 0..200 {
            omd_step(&mut learner, &game, &profile_refs(&opp), &mut rng).unwrap();
        }
        for layer in learner.policy().rows() {
            for row in layer {
                prop_assert!(row.iter().all(|&q| q > 0.0));
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        let lib = learner.sequence_form(&game);
        let truth = seq_oracle(&game, learner.policy());
        for h in 0..game.horizon() {
            for x in 0..game.layer_size(p, h) {
                for a in 0..game.num_actions(p, h, x) {
                    prop_assert!((lib.value(h, x, a) - truth[h][x][a]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn constructors_validate(seed in any::<u64>(), players in 1usize..=3, horizon in 1usize..=3, actions in 1usize..=3, zero_sum in any::<bool>()) {
        let cfg = RandomTreeConfig {
            players,
            horizon,
            actions,
            zero_sum: zero_sum && players == 2,
            seed,
            ..RandomTreeConfig::default()
        };
        let g = random_tree_game(&cfg).unwrap();
        prop_assert!(validate_game(&g).is_ok(), "{}", validate_game(&g));
        prop_assert_eq!(g, random_tree_game(&cfg).unwrap());
    }

    #[test]
    fn bandit_uniform_play_reaches_every_leaf_equally(actions in 2usize..=4, horizon in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = actions.pow(horizon as u32) ;
        let means: Vec<f64> = (0..n).map(|_| rand::Rng::gen::<f64>(&mut rng)).collect();
        let g = bandit_hard_instance(actions, horizon, &means).unwrap();
        prop_assert!(validate_game(&g).is_ok());
        let uniform: Vec<ConditionalPolicy> = (0..2).map(|i| ConditionalPolicy::uniform(&g, i)).collect();
        let paths = enumerate_paths(&g, &profile_refs(&uniform));
        prop_assert_eq!(paths.len(), n);
        let leaf = (actions as f64).powi(-(horizon as i32));
        for path in &paths {
            prop_assert!((path.prob - leaf).abs() < 1e-15);
        }
        let br = Oracle::new(&g).unwrap().best_response(0, &profile_refs(&uniform)).unwrap();
        let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((br.value - best).abs() < 1e-12);
    }

    #[test]
    fn two_column_matrix_value_matches_grid_minimax(m in prop::collection::vec(0.0f64..=1.0, 2..=6).prop_filter("even", |v| v.len() % 2 == 0)) {
        // Rows are player 0's actions; two rows, m.len()/2 columns.
        let cols = m.len() / 2;
        let rows = vec![m[..cols].to_vec(), m[cols..].to_vec()];
        let g = matrix_game(&rows).unwrap();
        let sol = solve_zero_sum(&g, 4000).unwrap();
        let grid = (0..=10_000)
            .map(|k| {
                let p = k as f64 / 10_000.0;
                (0..cols).map(|j| p * rows[0][j] + (1.0 - p) * rows[1][j]).fold(f64::INFINITY, f64::min)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((sol.value - grid).abs() < 1e-3, "{} vs {grid}", sol.value);
    }

    #[test]
    fn constant_matrix_has_constant_value_and_zero_gap(c in 0.0f64..=1.0, r in 1usize..=4, k in 1usize..=4, seed in any::<u64>()) {
        let g = matrix_game(&vec![vec![c; k]; r]).unwrap();
        let prof = profile(&g, seed);
        let oracle = Oracle::new(&g).unwrap();
        prop_assert!((oracle.value(&profile_refs(&prof)).unwrap().values[0] - c).abs() < 1e-12);
        prop_assert!(oracle.ne_gap(&prof[0], &prof[1]).unwrap().abs() < 1e-12);
    }
}

#[test]
fn builtins_validate_and_round_trip_through_the_text_format() {
    for name in BUILTIN_NAMES {
        let g = balanced_efg::games::builtin(name, &BuiltinParams::default()).unwrap();
        assert!(validate_game(&g).is_ok(), "{name}: {}", validate_game(&g));
        let text = emit_game_file(&g);
        let back = parse_game_file(&text).unwrap();
        assert_eq!(back, g, "{name}");
        assert_eq!(emit_game_file(&back), text, "{name}");
    }
    for g in [kuhn_poker(), matching_pennies(), rock_paper_scissors()] {
        assert!(validate_game(&g).is_ok());
    }
}
