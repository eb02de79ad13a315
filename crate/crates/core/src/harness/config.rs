use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::game::{GameTree, RewardMode};
use crate::games::{builtin, parse_game_file, BuiltinParams, RandomTreeConfig, BUILTIN_NAMES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    SelfplayOmd,
    SelfplayCfrHedge,
    SelfplayCfrRm,
    AdversarialOmd,
    MultiplayerCceOmd,
    MultiplayerCceCfr,
    BaselineOmdVanilla,
}

impl Protocol {
    pub const ALL: [Protocol; 7] = [
        Protocol::SelfplayOmd,
        Protocol::SelfplayCfrHedge,
        Protocol::SelfplayCfrRm,
        Protocol::AdversarialOmd,
        Protocol::MultiplayerCceOmd,
        Protocol::MultiplayerCceCfr,
        Protocol::BaselineOmdVanilla,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::SelfplayOmd => "selfplay-omd",
            Protocol::SelfplayCfrHedge => "selfplay-cfr-hedge",
            Protocol::SelfplayCfrRm => "selfplay-cfr-rm",
            Protocol::AdversarialOmd => "adversarial-omd",
            Protocol::MultiplayerCceOmd => "multiplayer-cce-omd",
            Protocol::MultiplayerCceCfr => "multiplayer-cce-cfr",
            Protocol::BaselineOmdVanilla => "baseline-omd-vanilla",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown protocol '{s}'")))
    }
}

/// A hyperparameter given explicitly or derived from the game and `T`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Param {
    #[default]
    Auto,
    Value(f64),
}

impl Serialize for Param {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Param::Auto => s.serialize_str("auto"),
            Param::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Param {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Param::Value(v)),
            Raw::Str(s) if s == "auto" => Ok(Param::Auto),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"auto\", found \"{s}\""
            ))),
        }
    }
}

/// Opponent of the learner in `adversarial-omd`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpponentScript {
    /// `opponent_policy` if given, otherwise uniform.
    #[default]
    Fixed,
    /// Best response to the learner's current policy, refreshed every `opponent_period` rounds.
    BestResponder,
    /// A fresh random policy every round.
    RandomPerRound,
}

/// Flat run configuration; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in game name or path to a game file.
    pub game: String,
    pub protocol: Protocol,
    pub rounds: u64,
    #[serde(default)]
    pub eta: Param,
    #[serde(default)]
    pub gamma: Param,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Rounds at which metrics are recorded; defaults to powers of ten and `rounds`.
    #[serde(default)]
    pub checkpoints: Vec<u64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_oracle_cap")]
    pub oracle_cap: usize,
    /// Compute per-round regrets with the oracle.
    #[serde(default = "default_true")]
    pub track_regret: bool,
    #[serde(default)]
    pub record_wallclock: bool,
    /// Replaces the game's own reward mode.
    #[serde(default = "default_reward_mode")]
    pub reward_mode: RewardMode,
    #[serde(default)]
    pub opponent: OpponentScript,
    #[serde(default = "default_period")]
    pub opponent_period: u64,
    #[serde(default)]
    pub opponent_policy: Option<PathBuf>,
    #[serde(default = "default_bandit_actions")]
    pub bandit_actions: usize,
    #[serde(default = "default_bandit_horizon")]
    pub bandit_horizon: usize,
    #[serde(default)]
    pub bandit_means: Option<Vec<f64>>,
    #[serde(default = "default_bandit_gap")]
    pub bandit_gap: f64,
    #[serde(default = "default_random_players")]
    pub random_players: usize,
    #[serde(default = "default_random_horizon")]
    pub random_horizon: usize,
    #[serde(default = "default_random_actions")]
    pub random_actions: usize,
    #[serde(default = "default_true")]
    pub random_uniform_actions: bool,
    #[serde(default = "default_random_branching")]
    pub random_chance_branching: usize,
    #[serde(default = "default_random_merge")]
    pub random_merge_rate: f64,
    #[serde(default = "default_true")]
    pub random_zero_sum: bool,
    #[serde(default)]
    pub random_seed: u64,
}

fn default_delta() -> f64 {
    0.1
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}
fn default_oracle_cap() -> usize {
    crate::equilibrium::DEFAULT_ORACLE_CAP
}
fn default_reward_mode() -> RewardMode {
    RewardMode::Bernoulli
}
fn default_true() -> bool {
    true
}
fn default_period() -> u64 {
    1
}
fn default_bandit_actions() -> usize {
    BuiltinParams::default().bandit_actions
}
fn default_bandit_horizon() -> usize {
    BuiltinParams::default().bandit_horizon
}
fn default_bandit_gap() -> f64 {
    BuiltinParams::default().bandit_gap
}
fn default_random_players() -> usize {
    RandomTreeConfig::default().players
}
fn default_random_horizon() -> usize {
    RandomTreeConfig::default().horizon
}
fn default_random_actions() -> usize {
    RandomTreeConfig::default().actions
}
fn default_random_branching() -> usize {
    RandomTreeConfig::default().chance_branching
}
fn default_random_merge() -> f64 {
    RandomTreeConfig::default().merge_rate
}

impl RunConfig {
    /// Config with every optional key at its default.
    pub fn new(game: &str, protocol: Protocol, rounds: u64) -> Self {
        let text = format!("game = {game:?}\nprotocol = \"{protocol}\"\nrounds = {rounds}\n");
        toml::from_str(&text).expect("defaults are complete")
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn check(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.opponent_period == 0 {
            return bad("opponent_period must be at least 1".into());
        }
        if let Param::Value(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return bad(format!("eta must be positive, got {eta}"));
            }
        }
        if let Param::Value(gamma) = self.gamma {
            if !(gamma >= 0.0 && gamma.is_finite()) {
                return bad(format!("gamma must be non-negative, got {gamma}"));
            }
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return bad("checkpoints must be strictly increasing".into());
        }
        if let Some(&c) = self.checkpoints.iter().find(|&&c| c == 0 || c > self.rounds) {
            return bad(format!("checkpoint {c} is outside 1..={}", self.rounds));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return bad("seeds must be distinct".into());
        }
        Ok(())
    }

    /// The checkpoint schedule with defaults applied.
    pub fn schedule(&self) -> Vec<u64> {
        if !self.checkpoints.is_empty() {
            return self.checkpoints.clone();
        }
        let mut out = Vec::new();
        let mut c = 1u64;
        while c < self.rounds {
            out.push(c);
            c = c.saturating_mul(10);
        }
        out.push(self.rounds);
        out
    }

    pub fn builtin_params(&self) -> BuiltinParams {
        BuiltinParams {
            bandit_actions: self.bandit_actions,
            bandit_horizon: self.bandit_horizon,
            bandit_means: self.bandit_means.clone(),
            bandit_gap: self.bandit_gap,
            random: RandomTreeConfig {
                players: self.random_players,
                horizon: self.random_horizon,
                actions: self.random_actions,
                uniform_actions: self.random_uniform_actions,
                chance_branching: self.random_chance_branching,
                merge_rate: self.random_merge_rate,
                zero_sum: self.random_zero_sum,
                seed: self.random_seed,
            },
        }
    }

    /// Resolves the game selector and applies the reward-mode override.
    pub fn load_game(&self) -> Result<GameTree, HarnessError> {
        Ok(load_game(&self.game, &self.builtin_params())?.with_reward_mode(self.reward_mode))
    }
}

/// A built-in name or a path to a game file.
pub fn load_game(selector: &str, params: &BuiltinParams) -> Result<GameTree, HarnessError> {
    if BUILTIN_NAMES.contains(&selector) {
        return Ok(builtin(selector, params)?);
    }
    let path = Path::new(selector);
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        reason: format!(
            "{e} (not a file, and not one of the built-ins {})",
            BUILTIN_NAMES.join(", ")
        ),
    })?;
    Ok(parse_game_file(&text)?)
}
