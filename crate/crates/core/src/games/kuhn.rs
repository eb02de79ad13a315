//! Three-card Kuhn poker as a turn-based game over three steps.
//!
//! Step 0: the deal is drawn and player 0 checks or bets. Step 1: player 1
//! answers (check/bet after a check, fold/call after a bet). Step 2: after
//! check-bet, player 0 folds or calls; every other line is padded with
//! single-action infosets. The chip outcome is paid at the step where the hand
//! ends as `r = (chips + 2) / 4` for player 0 and `1 - r` for player 1; all
//! other steps pay `0` and `1`.

use crate::game::{GameBuilder, GameMode, GameTree, PayoffMap, RewardMode, StateRef};

/// Game value for player 0 in chips.
pub const KUHN_VALUE_CHIPS: f64 = -1.0 / 18.0;

const CARDS: [&str; 3] = ["J", "Q", "K"];

fn reward(chips: f64) -> f64 {
    (chips + 2.0) / 4.0
}

fn showdown(c0: usize, c1: usize, stake: f64) -> f64 {
    if c0 > c1 {
        stake
    } else {
        -stake
    }
}

pub fn kuhn_poker() -> GameTree {
    let mut b = GameBuilder::new(2, 3, GameMode::ZeroSum)
        .reward_mode(RewardMode::Deterministic)
        .payoff_map(PayoffMap {
            scale: 4.0,
            offset: -2.0,
        });

    // Player 0 infosets.
    let p0_deal: Vec<usize> = CARDS
        .iter()
        .map(|c| b.add_named_infoset(0, 0, 2, c))
        .collect();
    let p0_after: Vec<[usize; 2]> = CARDS
        .iter()
        .map(|c| {
            [
                b.add_named_infoset(0, 1, 1, &format!("{c}/check")),
                b.add_named_infoset(0, 1, 1, &format!("{c}/bet")),
            ]
        })
        .collect();
    let mut p0_last = Vec::new();
    for c in CARDS {
        p0_last.push([
            b.add_named_infoset(0, 2, 2, &format!("{c}/check/bet")),
            b.add_named_infoset(0, 2, 1, &format!("{c}/check/check")),
            b.add_named_infoset(0, 2, 1, &format!("{c}/bet/done")),
        ]);
    }

    // Player 1 infosets.
    let p1_deal: Vec<usize> = CARDS
        .iter()
        .map(|c| b.add_named_infoset(1, 0, 1, c))
        .collect();
    let p1_respond: Vec<[usize; 2]> = CARDS
        .iter()
        .map(|c| {
            [
                b.add_named_infoset(1, 1, 2, &format!("{c}/check")),
                b.add_named_infoset(1, 1, 2, &format!("{c}/bet")),
            ]
        })
        .collect();
    let mut p1_last = Vec::new();
    for c in CARDS {
        let mut row = [[0usize; 2]; 2];
        for (first, f) in ["check", "bet"].iter().enumerate() {
            let answers = if first == 0 { ["check", "bet"] } else { ["fold", "call"] };
            for (second, s) in answers.iter().enumerate() {
                row[first][second] = b.add_named_infoset(1, 2, 1, &format!("{c}/{f}/{s}"));
            }
        }
        p1_last.push(row);
    }

    for c0 in 0..3 {
        for c1 in (0..3).filter(|&c| c != c0) {
            let deal = b.add_root(1.0 / 6.0, &[p0_deal[c0], p1_deal[c1]]);
            // Player 0 check (0) or bet (1); player 1's step-0 action is the only one.
            for first in 0..2 {
                let after = b.add_child(
                    deal,
                    &[first, 0],
                    1.0,
                    &[p0_after[c0][first], p1_respond[c1][first]],
                );
                b.set_zero_sum_reward(deal, &[first, 0], 0.0);
                for second in 0..2 {
                    let ended_chips = match (first, second) {
                        (0, 0) => Some(showdown(c0, c1, 1.0)),
                        (0, 1) => None,
                        (1, 0) => Some(1.0),
                        _ => Some(showdown(c0, c1, 2.0)),
                    };
                    b.set_zero_sum_reward(
                        after,
                        &[0, second],
                        ended_chips.map_or(0.0, reward),
                    );
                    add_last_step(
                        &mut b,
                        after,
                        second,
                        ended_chips.is_none(),
                        [
                            match (first, second) {
                                (0, 1) => p0_last[c0][0],
                                (0, 0) => p0_last[c0][1],
                                _ => p0_last[c0][2],
                            },
                            p1_last[c1][first][second],
                        ],
                        showdown(c0, c1, 2.0),
                    );
                }
            }
        }
    }
    b.build().expect("kuhn construction is index-consistent")
}

fn add_last_step(
    b: &mut GameBuilder,
    parent: StateRef,
    second: usize,
    live: bool,
    infosets: [usize; 2],
    call_chips: f64,
) {
    let last = b.add_child(parent, &[0, second], 1.0, &infosets);
    if live {
        // Player 0 folds (0) or calls (1) facing a bet.
        b.set_zero_sum_reward(last, &[0, 0], reward(-1.0));
        b.set_zero_sum_reward(last, &[1, 0], reward(call_chips));
    } else {
        b.set_zero_sum_reward(last, &[0, 0], 0.0);
    }
}
