use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{OpponentScript, Param, Protocol, RunConfig};
use super::HarnessError;
use crate::cfr::{cfr_round, recommended_eta, CfrLearner, LocalRule};
use crate::equilibrium::{Oracle, RegretTracker};
use crate::game::{
    play_episode, ConditionalPolicy, GameMode, GameTree, PayoffMap, PolicyAverager,
};
use crate::games::game_hash;
use crate::omd::{game_dimensions, recommended_for, OmdLearner, OmdParams, Regularizer};

pub const METRICS_SCHEMA_VERSION: u32 = 1;

/// One checkpoint row. Empty cells mean "not computed".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub protocol: String,
    pub seed: u64,
    pub round: u64,
    pub episodes: u64,
    /// NE gap (self-play) or CCE gap (multi-player) of the averaged policies, reward units.
    pub gap: Option<f64>,
    /// Cumulative realized regret of player 0.
    pub regret_p1: Option<f64>,
    /// Cumulative realized regret of player 1.
    pub regret_p2: Option<f64>,
    pub wallclock_ms: Option<u64>,
}

/// Hyperparameters actually used by one learning player.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub player: usize,
    pub eta: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub library_version: String,
    pub config: RunConfig,
    pub params: Vec<ResolvedParams>,
    pub checkpoints: Vec<u64>,
    pub game_hash: String,
    pub payoff_map: Option<PayoffMap>,
}

/// Result of one (config, seed) cell.
#[derive(Debug, Clone)]
pub struct CellOutput {
    pub seed: u64,
    pub records: Vec<MetricsRecord>,
    /// Averaged policy of every player over all rounds.
    pub average: Vec<ConditionalPolicy>,
    /// Per-round profiles, kept only on request.
    pub history: Option<Vec<Vec<ConditionalPolicy>>>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub manifest: RunManifest,
    pub cells: Vec<CellOutput>,
    pub out_dir: PathBuf,
}

fn precondition(protocol: Protocol, requirement: &str) -> HarnessError {
    HarnessError::Precondition {
        protocol: protocol.name().into(),
        requirement: requirement.into(),
    }
}

fn check_game(protocol: Protocol, game: &GameTree) -> Result<(), HarnessError> {
    let m = game.num_players();
    match protocol {
        Protocol::SelfplayOmd
        | Protocol::SelfplayCfrHedge
        | Protocol::SelfplayCfrRm
        | Protocol::BaselineOmdVanilla => {
            if m != 2 || game.mode() != GameMode::ZeroSum {
                return Err(precondition(protocol, "a two-player zero-sum game"));
            }
        }
        Protocol::AdversarialOmd => {
            if m != 2 {
                return Err(precondition(protocol, "a two-player game"));
            }
        }
        Protocol::MultiplayerCceOmd | Protocol::MultiplayerCceCfr => {
            if m < 2 {
                return Err(precondition(protocol, "at least two players"));
            }
        }
    }
    Ok(())
}

fn learners_of(protocol: Protocol, game: &GameTree) -> Vec<usize> {
    match protocol {
        Protocol::AdversarialOmd => vec![0],
        _ => (0..game.num_players()).collect(),
    }
}

/// Resolves `auto` hyperparameters per learning player.
pub fn resolve_params(cfg: &RunConfig, game: &GameTree) -> Result<Vec<ResolvedParams>, HarnessError> {
    check_game(cfg.protocol, game)?;
    let players = learners_of(cfg.protocol, game);
    Ok(players
        .into_iter()
        .map(|i| match cfg.protocol {
            Protocol::SelfplayCfrRm => ResolvedParams {
                player: i,
                eta: None,
                gamma: None,
            },
            Protocol::SelfplayCfrHedge | Protocol::MultiplayerCceCfr => {
                let (x, a) = game_dimensions(game, i);
                let eta = match cfg.eta {
                    Param::Value(v) => v,
                    Param::Auto => recommended_eta(x, a, game.horizon(), cfg.rounds, cfg.delta),
                };
                ResolvedParams {
                    player: i,
                    eta: Some(eta),
                    gamma: None,
                }
            }
            _ => {
                let auto = recommended_for(game, i, cfg.rounds, cfg.delta);
                let pick = |p: Param, auto: f64| match p {
                    Param::Value(v) => v,
                    Param::Auto => auto,
                };
                ResolvedParams {
                    player: i,
                    eta: Some(pick(cfg.eta, auto.eta)),
                    gamma: Some(pick(cfg.gamma, auto.gamma)),
                }
            }
        })
        .collect())
}

/// Policy with every row drawn uniformly from its simplex.
pub fn random_policy<R: Rng + ?Sized>(game: &GameTree, player: usize, rng: &mut R) -> ConditionalPolicy {
    let rows = (0..game.horizon())
        .map(|h| {
            game.infosets(player, h)
                .iter()
                .map(|x| {
                    let w: Vec<f64> = (0..x.num_actions())
                        .map(|_| -(1.0 - rng.gen::<f64>()).ln())
                        .collect();
                    let total: f64 = w.iter().sum();
                    w.iter().map(|v| v / total).collect()
                })
                .collect()
        })
        .collect();
    ConditionalPolicy::from_rows(player, rows)
}

fn load_policy(path: &Path, game: &GameTree, player: usize) -> Result<ConditionalPolicy, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let policy: ConditionalPolicy =
        serde_json::from_str(&text).map_err(|e| HarnessError::io(path, e))?;
    if policy.player() != player {
        return Err(HarnessError::Config(format!(
            "{} holds a policy for player {}, expected player {player}",
            path.display(),
            policy.player()
        )));
    }
    policy.validate(game)?;
    Ok(policy)
}

enum Learners {
    Omd(Vec<OmdLearner>),
    Cfr(Vec<CfrLearner>),
}

impl Learners {
    fn policy(&self, k: usize) -> &ConditionalPolicy {
        match self {
            Learners::Omd(l) => l[k].policy(),
            Learners::Cfr(l) => l[k].policy(),
        }
    }
}

fn build_learners(
    cfg: &RunConfig,
    game: &GameTree,
    params: &[ResolvedParams],
) -> Result<Learners, HarnessError> {
    Ok(match cfg.protocol {
        Protocol::SelfplayCfrHedge | Protocol::SelfplayCfrRm | Protocol::MultiplayerCceCfr => {
            let mut out = Vec::with_capacity(params.len());
            for p in params {
                let rule = match p.eta {
                    Some(eta) => LocalRule::Hedge { eta },
                    None => LocalRule::RegretMatching,
                };
                out.push(CfrLearner::new(game, p.player, rule)?);
            }
            Learners::Cfr(out)
        }
        _ => {
            let regularizer = if cfg.protocol == Protocol::BaselineOmdVanilla {
                Regularizer::Vanilla
            } else {
                Regularizer::Balanced
            };
            let mut out = Vec::with_capacity(params.len());
            for p in params {
                let omd = OmdParams {
                    eta: p.eta.expect("omd protocols resolve eta"),
                    gamma: p.gamma.expect("omd protocols resolve gamma"),
                };
                out.push(OmdLearner::new(game, p.player, omd)?.with_regularizer(regularizer));
            }
            Learners::Omd(out)
        }
    })
}

fn episodes_per_round(protocol: Protocol, game: &GameTree) -> u64 {
    let h = game.horizon() as u64;
    match protocol {
        Protocol::SelfplayCfrHedge | Protocol::SelfplayCfrRm => 2 * h,
        Protocol::MultiplayerCceCfr => game.num_players() as u64 * h,
        _ => 1,
    }
}

/// Runs one seed. `on_record` sees every checkpoint row as it is produced.
pub fn run_cell(
    cfg: &RunConfig,
    game: &GameTree,
    seed: u64,
    keep_history: bool,
    mut on_record: impl FnMut(&MetricsRecord) -> Result<(), HarnessError>,
) -> Result<CellOutput, HarnessError> {
    let protocol = cfg.protocol;
    let params = resolve_params(cfg, game)?;
    let mut learners = build_learners(cfg, game, &params)?;
    let m = game.num_players();
    let oracle = Oracle::with_cap(game, cfg.oracle_cap).ok();
    let mut tracker = match (&oracle, cfg.track_regret) {
        (Some(_), true) => Some(RegretTracker::new(game)),
        _ => None,
    };
    let mut averagers: Vec<PolicyAverager> = (0..m).map(|i| PolicyAverager::new(game, i)).collect();
    let mut history = keep_history.then(Vec::new);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Opponent randomness stays off the learners' stream.
    let mut opponent_rng = ChaCha8Rng::seed_from_u64(seed);
    opponent_rng.set_stream(1);

    let mut opponent = match (protocol, &cfg.opponent_policy) {
        (Protocol::AdversarialOmd, Some(path)) if cfg.opponent == OpponentScript::Fixed => {
            load_policy(path, game, 1)?
        }
        _ => ConditionalPolicy::uniform(game, 1),
    };
    if protocol == Protocol::AdversarialOmd
        && cfg.opponent == OpponentScript::BestResponder
        && oracle.is_none()
    {
        return Err(precondition(protocol, "an oracle-sized game for the best-responder opponent"));
    }

    let schedule = cfg.schedule();
    let mut next_checkpoint = schedule.iter().copied().peekable();
    let per_round = episodes_per_round(protocol, game);
    let started = Instant::now();
    let mut records = Vec::with_capacity(schedule.len());

    for t in 1..=cfg.rounds {
        if protocol == Protocol::AdversarialOmd {
            match cfg.opponent {
                OpponentScript::Fixed => {}
                OpponentScript::RandomPerRound => {
                    opponent = random_policy(game, 1, &mut opponent_rng);
                }
                OpponentScript::BestResponder => {
                    if (t - 1) % cfg.opponent_period == 0 {
                        let oracle = oracle.as_ref().expect("checked above");
                        let current = [learners.policy(0), &opponent];
                        opponent = oracle.best_response(1, &current)?.policy;
                    }
                }
            }
        }

        // Profile played this round, before any update.
        let profile: Vec<ConditionalPolicy> = match protocol {
            Protocol::AdversarialOmd => vec![learners.policy(0).clone(), opponent.clone()],
            _ => (0..m).map(|k| learners.policy(k).clone()).collect(),
        };
        let refs: Vec<&ConditionalPolicy> = profile.iter().collect();
        if let (Some(tr), Some(or)) = (tracker.as_mut(), oracle.as_ref()) {
            if protocol == Protocol::AdversarialOmd {
                tr.record_player(or, 0, &refs)?;
                tr.advance();
            } else {
                tr.record(or, &refs)?;
            }
        }
        for (avg, p) in averagers.iter_mut().zip(&refs) {
            avg.add(p, game)?;
        }

        match &mut learners {
            Learners::Omd(ls) => {
                let traj = play_episode(game, &refs, &mut rng)?;
                for l in ls.iter_mut() {
                    let i = l.player();
                    l.observe(traj.player(i))?;
                }
            }
            Learners::Cfr(ls) => {
                for l in ls.iter_mut() {
                    cfr_round(l, game, &refs, &mut rng)?;
                }
            }
        }
        if let Some(h) = history.as_mut() {
            h.push(profile);
        }

        if next_checkpoint.peek() == Some(&t) {
            next_checkpoint.next();
            let record = checkpoint(
                cfg,
                game,
                oracle.as_ref(),
                tracker.as_ref(),
                &averagers,
                seed,
                t,
                t * per_round,
                started,
            )?;
            on_record(&record)?;
            records.push(record);
        }
    }

    Ok(CellOutput {
        seed,
        records,
        average: averagers.iter().map(PolicyAverager::average).collect(),
        history,
    })
}

#[allow(clippy::too_many_arguments)]
fn checkpoint(
    cfg: &RunConfig,
    game: &GameTree,
    oracle: Option<&Oracle<'_>>,
    tracker: Option<&RegretTracker>,
    averagers: &[PolicyAverager],
    seed: u64,
    round: u64,
    episodes: u64,
    started: Instant,
) -> Result<MetricsRecord, HarnessError> {
    let regrets = tracker.map(|tr| tr.regrets(game));
    let gap = match cfg.protocol {
        Protocol::AdversarialOmd => None,
        Protocol::MultiplayerCceOmd | Protocol::MultiplayerCceCfr => regrets.as_ref().map(|r| {
            r.iter().copied().fold(f64::NEG_INFINITY, f64::max) / round as f64
        }),
        _ => match oracle {
            Some(o) => {
                let mu = averagers[0].average();
                let nu = averagers[1].average();
                Some(o.ne_gap(&mu, &nu)?)
            }
            None => None,
        },
    };
    let regret_p2 = match cfg.protocol {
        Protocol::AdversarialOmd => None,
        _ => regrets.as_ref().map(|r| r[1]),
    };
    Ok(MetricsRecord {
        protocol: cfg.protocol.name().into(),
        seed,
        round,
        episodes,
        gap,
        regret_p1: regrets.as_ref().map(|r| r[0]),
        regret_p2,
        wallclock_ms: cfg
            .record_wallclock
            .then(|| started.elapsed().as_millis() as u64),
    })
}

fn metrics_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("metrics-seed-{seed}.csv"))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::io(path, e))?;
    fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}

/// Executes every seed of `cfg` in parallel and writes the run directory:
/// `manifest.json`, one append-only `metrics-seed-<seed>.csv` per seed, the
/// merged `metrics.csv`, and `policy-seed-<seed>-player-<i>.json`.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, HarnessError> {
    cfg.check()?;
    let game = cfg.load_game()?;
    let params = resolve_params(cfg, &game)?;
    let dir = cfg.out_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let manifest = RunManifest {
        schema_version: METRICS_SCHEMA_VERSION,
        library_version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        params,
        checkpoints: cfg.schedule(),
        game_hash: game_hash(&game),
        payoff_map: game.payoff_map(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;

    let cells: Vec<CellOutput> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let path = metrics_path(&dir, seed);
            let file = File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
            let mut writer = csv::Writer::from_writer(file);
            let cell = run_cell(cfg, &game, seed, false, |r| {
                writer
                    .serialize(r)
                    .and_then(|_| writer.flush().map_err(csv::Error::from))
                    .map_err(|e| HarnessError::io(&path, e))
            })?;
            for (i, p) in cell.average.iter().enumerate() {
                write_json(&dir.join(format!("policy-seed-{seed}-player-{i}.json")), p)?;
            }
            Ok(cell)
        })
        .collect::<Result<_, HarnessError>>()?;

    let merged = merge_metrics(&dir, &cfg.seeds)?;
    let path = dir.join("metrics.csv");
    fs::write(&path, merged).map_err(|e| HarnessError::io(&path, e))?;
    Ok(RunSummary {
        manifest,
        cells,
        out_dir: dir,
    })
}

/// Concatenates per-seed metric files in the given seed order under one header.
pub fn merge_metrics(dir: &Path, seeds: &[u64]) -> Result<String, HarnessError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut wrote_any = false;
    for &seed in seeds {
        let path = metrics_path(dir, seed);
        let mut reader = csv::Reader::from_path(&path).map_err(|e| HarnessError::io(&path, e))?;
        for row in reader.deserialize::<MetricsRecord>() {
            let row = row.map_err(|e| HarnessError::io(&path, e))?;
            writer
                .serialize(&row)
                .map_err(|e| HarnessError::Metrics(e.to_string()))?;
            wrote_any = true;
        }
    }
    if !wrote_any {
        writer
            .write_record([
                "protocol",
                "seed",
                "round",
                "episodes",
                "gap",
                "regret_p1",
                "regret_p2",
                "wallclock_ms",
            ])
            .map_err(|e| HarnessError::Metrics(e.to_string()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| HarnessError::Metrics(e.to_string()))?;
    let mut out = String::from_utf8(bytes).map_err(|e| HarnessError::Metrics(e.to_string()))?;
    if !out.ends_with('\n') {
        out.push('\n');
    }
    Ok(out)
}

/// Seeds found in a run directory, ascending.
pub fn metric_seeds(dir: &Path) -> Result<Vec<u64>, HarnessError> {
    let mut seeds = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))? {
        let name = entry.map_err(|e| HarnessError::io(dir, e))?.file_name();
        let name = name.to_string_lossy();
        if let Some(s) = name
            .strip_prefix("metrics-seed-")
            .and_then(|r| r.strip_suffix(".csv"))
        {
            if let Ok(seed) = s.parse() {
                seeds.push(seed);
            }
        }
    }
    seeds.sort_unstable();
    Ok(seeds)
}
