use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use balanced_efg::equilibrium::Oracle;
use balanced_efg::game::{validate_game, ConditionalPolicy, GameMode};
use balanced_efg::games::{emit_game_file, parse_game_unchecked, BuiltinParams, BUILTIN_NAMES};
use balanced_efg::harness::{self, load_game, HarnessError, RunConfig};

#[derive(Parser)]
#[command(name = "efg", version, about = "Equilibrium learning in extensive-form games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replaces the config's seed list; repeatable.
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated rounds.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<u64>>,
        #[arg(long)]
        oracle_cap: Option<usize>,
    },
    /// Print the validation report of a game.
    Validate { game: String },
    /// Print the expected total reward of every player under a profile.
    Value {
        game: String,
        /// One policy JSON file per player, in player order.
        #[arg(long = "policy", required = true)]
        policies: Vec<PathBuf>,
        #[arg(long)]
        oracle_cap: Option<usize>,
    },
    /// Print the NE gap (two-player zero-sum) or CCE gap of a profile.
    Brgap {
        game: String,
        #[arg(long = "policy", required = true)]
        policies: Vec<PathBuf>,
        #[arg(long)]
        oracle_cap: Option<usize>,
    },
    /// Write a built-in game in the text format.
    MakeGame {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        bandit_actions: Option<usize>,
        #[arg(long)]
        bandit_horizon: Option<usize>,
        #[arg(long)]
        bandit_gap: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Merge the per-seed metric files of a run directory into one CSV.
    EmitMetrics {
        #[arg(long)]
        out: PathBuf,
        /// Write here instead of stdout.
        #[arg(long)]
        to: Option<PathBuf>,
    },
}

fn read(path: &PathBuf) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.clone(),
        reason: e.to_string(),
    })
}

fn load_any(selector: &str) -> Result<balanced_efg::game::GameTree, HarnessError> {
    load_game(selector, &BuiltinParams::default())
}

fn load_profile(
    game: &balanced_efg::game::GameTree,
    paths: &[PathBuf],
) -> Result<Vec<ConditionalPolicy>, HarnessError> {
    if paths.len() != game.num_players() {
        return Err(HarnessError::Config(format!(
            "{} policy files given, the game has {} players",
            paths.len(),
            game.num_players()
        )));
    }
    let mut out = Vec::with_capacity(paths.len());
    for (i, path) in paths.iter().enumerate() {
        let p: ConditionalPolicy = serde_json::from_str(&read(path)?).map_err(|e| HarnessError::Io {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        if p.player() != i {
            return Err(HarnessError::Config(format!(
                "{} holds player {}, expected player {i}",
                path.display(),
                p.player()
            )));
        }
        p.validate(game)?;
        out.push(p);
    }
    Ok(out)
}

fn oracle_for(
    game: &balanced_efg::game::GameTree,
    cap: Option<usize>,
) -> Result<Oracle<'_>, HarnessError> {
    Ok(match cap {
        Some(c) => Oracle::with_cap(game, c)?,
        None => Oracle::new(game)?,
    })
}

fn execute(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Run {
            config,
            seeds,
            out,
            checkpoints,
            oracle_cap,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if !seeds.is_empty() {
                cfg.seeds = seeds;
            }
            if let Some(dir) = out {
                cfg.out_dir = dir;
            }
            if let Some(c) = checkpoints {
                cfg.checkpoints = c;
            }
            if let Some(c) = oracle_cap {
                cfg.oracle_cap = c;
            }
            let summary = harness::run(&cfg)?;
            for p in &summary.manifest.params {
                println!(
                    "player {}: eta {} gamma {}",
                    p.player,
                    p.eta.map_or("-".into(), |v| v.to_string()),
                    p.gamma.map_or("-".into(), |v| v.to_string())
                );
            }
            println!("wrote {}", summary.out_dir.display());
            Ok(true)
        }
        Command::Validate { game } => {
            let g = if BUILTIN_NAMES.contains(&game.as_str()) {
                load_any(&game)?
            } else {
                parse_game_unchecked(&read(&PathBuf::from(&game))?)?
            };
            let report = validate_game(&g);
            println!("{report}");
            Ok(report.is_ok())
        }
        Command::Value {
            game,
            policies,
            oracle_cap,
        } => {
            let g = load_any(&game)?;
            let profile = load_profile(&g, &policies)?;
            let refs: Vec<&ConditionalPolicy> = profile.iter().collect();
            let values = oracle_for(&g, oracle_cap)?.value(&refs)?.values;
            for (i, v) in values.iter().enumerate() {
                match (g.payoff_map(), g.mode()) {
                    (Some(map), GameMode::ZeroSum) if i == 0 => {
                        println!("player {i}: {v:.9} (native {:.9})", map.to_native(*v))
                    }
                    _ => println!("player {i}: {v:.9}"),
                }
            }
            Ok(true)
        }
        Command::Brgap {
            game,
            policies,
            oracle_cap,
        } => {
            let g = load_any(&game)?;
            let profile = load_profile(&g, &policies)?;
            let oracle = oracle_for(&g, oracle_cap)?;
            if g.mode() == GameMode::ZeroSum {
                let gap = oracle.ne_gap(&profile[0], &profile[1])?;
                match g.payoff_map() {
                    Some(map) => println!(
                        "ne_gap {gap:.9} (native {:.9})",
                        map.gap_to_native(gap)
                    ),
                    None => println!("ne_gap {gap:.9}"),
                }
            } else {
                let refs: Vec<&ConditionalPolicy> = profile.iter().collect();
                println!("cce_gap {:.9}", oracle.cce_gap(&[refs])?);
            }
            Ok(true)
        }
        Command::MakeGame {
            name,
            out,
            bandit_actions,
            bandit_horizon,
            bandit_gap,
            seed,
        } => {
            let mut params = BuiltinParams::default();
            params.bandit_actions = bandit_actions.unwrap_or(params.bandit_actions);
            params.bandit_horizon = bandit_horizon.unwrap_or(params.bandit_horizon);
            params.bandit_gap = bandit_gap.unwrap_or(params.bandit_gap);
            params.random.seed = seed.unwrap_or(params.random.seed);
            if !BUILTIN_NAMES.contains(&name.as_str()) {
                return Err(HarnessError::Config(format!(
                    "unknown built-in game '{name}'; expected one of {}",
                    BUILTIN_NAMES.join(", ")
                )));
            }
            let text = emit_game_file(&load_game(&name, &params)?);
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| HarnessError::Io {
                    path,
                    reason: e.to_string(),
                })?,
                None => print!("{text}"),
            }
            Ok(true)
        }
        Command::EmitMetrics { out, to } => {
            let seeds = harness::metric_seeds(&out)?;
            let text = harness::merge_metrics(&out, &seeds)?;
            match to {
                Some(path) => std::fs::write(&path, text).map_err(|e| HarnessError::Io {
                    path,
                    reason: e.to_string(),
                })?,
                None => print!("{text}"),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let body = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::from(2)
        }
    }
}
