//! Experiment runner: protocols, checkpointed metrics, run outputs.

mod config;
mod run;

pub use config::{load_game, OpponentScript, Param, Protocol, RunConfig};
pub use run::{
    merge_metrics, metric_seeds, random_policy, resolve_params, run, run_cell, CellOutput, MetricsRecord,
    ResolvedParams, RunManifest, RunSummary, METRICS_SCHEMA_VERSION,
};

use std::path::PathBuf;

use thiserror::Error;

use crate::cfr::CfrError;
use crate::equilibrium::OracleError;
use crate::game::GameError;
use crate::games::{FormatError, GamesError};
use crate::omd::OmdError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("protocol {protocol} needs {requirement}")]
    Precondition {
        protocol: String,
        requirement: String,
    },
    #[error("metrics: {0}")]
    Metrics(String),
    #[error(transparent)]
    Games(#[from] GamesError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Omd(#[from] OmdError),
    #[error(transparent)]
    Cfr(#[from] CfrError),
    #[error(transparent)]
    Game(#[from] GameError),
}

impl HarnessError {
    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Io { .. } => "io",
            HarnessError::Precondition { .. } => "precondition",
            HarnessError::Metrics(_) => "metrics",
            HarnessError::Games(_) => "game-construction",
            HarnessError::Format(_) => "game-format",
            HarnessError::Oracle(OracleError::TooLarge { .. }) => "oracle-cap",
            HarnessError::Oracle(_) => "oracle",
            HarnessError::Omd(_) => "omd",
            HarnessError::Cfr(_) => "cfr",
            HarnessError::Game(_) => "game",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, e: impl std::fmt::Display) -> Self {
        HarnessError::Io {
            path: path.into(),
            reason: e.to_string(),
        }
    }
}
