use super::GamesError;
use crate::game::{GameBuilder, GameMode, GameTree};

/// One-shot zero-sum game: player 0 picks a row, player 1 a column, and player
/// 0 receives `payoffs[row][col]` (player 1 receives the complement).
pub fn matrix_game(payoffs: &[Vec<f64>]) -> Result<GameTree, GamesError> {
    let rows = payoffs.len();
    let cols = payoffs.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(GamesError::InvalidParameter("payoff matrix is empty".into()));
    }
    if payoffs.iter().any(|r| r.len() != cols) {
        return Err(GamesError::InvalidParameter("payoff matrix is ragged".into()));
    }
    let mut b = GameBuilder::new(2, 1, GameMode::ZeroSum);
    let x = b.add_infoset(0, 0, rows);
    let y = b.add_infoset(1, 0, cols);
    let root = b.add_root(1.0, &[x, y]);
    for (row, entries) in payoffs.iter().enumerate() {
        for (col, &value) in entries.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(GamesError::PayoffOutOfRange { row, col, value });
            }
            b.set_zero_sum_reward(root, &[row, col], value);
        }
    }
    Ok(b.build()?)
}

pub fn matching_pennies() -> GameTree {
    matrix_game(&[vec![1.0, 0.0], vec![0.0, 1.0]]).expect("valid payoffs")
}

/// Win 1, draw 1/2, loss 0.
pub fn rock_paper_scissors() -> GameTree {
    matrix_game(&[
        vec![0.5, 0.0, 1.0],
        vec![1.0, 0.5, 0.0],
        vec![0.0, 1.0, 0.5],
    ])
    .expect("valid payoffs")
}
