//! Built-in games and the text game format.

mod bandit;
mod format;
mod kuhn;
mod matrix;
mod random;

pub use bandit::{bandit_hard_instance, bandit_means, MAX_BANDIT_LEAVES};
pub use format::{emit_game_file, game_hash, parse_game_file, parse_game_unchecked, FormatError};
pub use kuhn::{kuhn_poker, KUHN_VALUE_CHIPS};
pub use matrix::{matching_pennies, matrix_game, rock_paper_scissors};
pub use random::{random_tree_game, RandomTreeConfig};

use thiserror::Error;

use crate::game::GameError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GamesError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("game would have {size} leaves, above the limit of {limit}")]
    TooLarge { size: u128, limit: u128 },
    #[error("payoff {value} at row {row}, column {col} is outside [0, 1]")]
    PayoffOutOfRange { row: usize, col: usize, value: f64 },
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &[
    "kuhn",
    "matching-pennies",
    "rock-paper-scissors",
    "bandit-hard",
    "random-tree",
];

/// Parameters for the parametric built-ins; ignored by the fixed games.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinParams {
    pub bandit_actions: usize,
    pub bandit_horizon: usize,
    pub bandit_means: Option<Vec<f64>>,
    pub bandit_gap: f64,
    pub random: RandomTreeConfig,
}

impl Default for BuiltinParams {
    fn default() -> Self {
        BuiltinParams {
            bandit_actions: 2,
            bandit_horizon: 3,
            bandit_means: None,
            bandit_gap: 0.2,
            random: RandomTreeConfig::default(),
        }
    }
}

/// Builds a built-in game by name.
pub fn builtin(name: &str, params: &BuiltinParams) -> Result<crate::game::GameTree, GamesError> {
    match name {
        "kuhn" => Ok(kuhn_poker()),
        "matching-pennies" => Ok(matching_pennies()),
        "rock-paper-scissors" => Ok(rock_paper_scissors()),
        "bandit-hard" => {
            let means = match &params.bandit_means {
                Some(m) => m.clone(),
                None => bandit_means(params.bandit_actions, params.bandit_horizon, params.bandit_gap)?,
            };
            bandit_hard_instance(params.bandit_actions, params.bandit_horizon, &means)
        }
        "random-tree" => random_tree_game(&params.random),
        other => Err(GamesError::InvalidParameter(format!(
            "unknown built-in game '{other}'; expected one of {}",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}
