//! Command-line and run-directory behavior.

use std::path::Path;
use std::process::{Command, Output};

use balanced_efg::game::ConditionalPolicy;
use balanced_efg::games::{emit_game_file, matching_pennies, matrix_game};
use balanced_efg::harness::{self, MetricsRecord, Protocol, RunConfig, RunManifest};
use balanced_efg::omd::recommended_for;

fn efg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_efg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_records(path: &Path) -> Vec<MetricsRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap()
}

#[test]
fn validate_accepts_an_emitted_kuhn_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("kuhn.efg");
    let made = efg(&["make-game", "kuhn", "--out", file.to_str().unwrap()]);
    assert!(made.status.success());
    let out = efg(&["validate", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "OK");
}

#[test]
fn validate_reports_a_broken_file_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.efg");
    let text = emit_game_file(&matching_pennies()).replace("state 0 0 1 root", "state 0 0 0.9 root");
    std::fs::write(&file, text).unwrap();
    let out = efg(&["validate", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("initial distribution sums to 0.9"), "{}", stdout(&out));
}

#[test]
fn brgap_of_the_matching_pennies_equilibrium_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let g = matching_pennies();
    let mut paths = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("p{i}.json"));
        std::fs::write(&path, serde_json::to_string(&ConditionalPolicy::uniform(&g, i)).unwrap()).unwrap();
        paths.push(path);
    }
    let out = efg(&[
        "brgap",
        "matching-pennies",
        "--policy",
        paths[0].to_str().unwrap(),
        "--policy",
        paths[1].to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "ne_gap 0.000000000");

    let value = efg(&[
        "value",
        "matching-pennies",
        "--policy",
        paths[0].to_str().unwrap(),
        "--policy",
        paths[1].to_str().unwrap(),
    ]);
    assert!(stdout(&value).contains("player 0: 0.500000000"));
}

#[test]
fn errors_are_json_on_stderr_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "game = \"kuhn\"\nprotocol = \"selfplay-omd\"\nrounds = 10\nroundz = 3\n").unwrap();
    let out = efg(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");

    std::fs::write(&cfg, "game = \"rock-paper-scissors\"\nprotocol = \"multiplayer-cce-omd\"\nrounds = 10\n").unwrap();
    let ok = efg(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));

    let general = dir.path().join("general.efg");
    let text = emit_game_file(&matching_pennies()).replace("mode zero-sum", "mode general-sum");
    std::fs::write(&general, text).unwrap();
    let body = format!("game = {:?}\nprotocol = \"selfplay-omd\"\nrounds = 10\n", general.to_str().unwrap());
    std::fs::write(&cfg, body).unwrap();
    let pre = efg(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("p").to_str().unwrap()]);
    assert_eq!(pre.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&pre.stderr).unwrap();
    assert_eq!(err["error"], "precondition");
}

#[test]
fn run_writes_manifest_metrics_and_policies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    let out_dir = dir.path().join("out");
    std::fs::write(&cfg_path, "game = \"kuhn\"\nprotocol = \"selfplay-omd\"\nrounds = 300\n").unwrap();
    let out = efg(&[
        "run",
        "--config",
        cfg_path.to_str().unwrap(),
        "--seed",
        "4",
        "--seed",
        "9",
        "--checkpoints",
        "10,100,300",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let manifest: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    let game = balanced_efg::games::kuhn_poker();
    for p in &manifest.params {
        let expected = recommended_for(&game, p.player, 300, 0.1);
        assert_eq!(p.eta, Some(expected.eta));
        assert_eq!(p.gamma, Some(expected.gamma));
    }
    assert_eq!(manifest.checkpoints, vec![10, 100, 300]);
    assert_eq!(manifest.config.seeds, vec![4, 9]);

    let records = read_records(&out_dir.join("metrics.csv"));
    assert_eq!(records.len(), 6);
    assert!(records.iter().all(|r| r.gap.is_some() && r.wallclock_ms.is_none()));
    assert_eq!(records[2].episodes, 300);
    for seed in [4, 9] {
        for player in 0..2 {
            assert!(out_dir.join(format!("policy-seed-{seed}-player-{player}.json")).exists());
        }
    }

    let merged = efg(&["emit-metrics", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(stdout(&merged), std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap());
}

#[test]
fn zero_loss_game_has_zero_regret() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("ones.efg");
    std::fs::write(&file, emit_game_file(&matrix_game(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap())).unwrap();
    for protocol in [Protocol::SelfplayOmd, Protocol::SelfplayCfrHedge, Protocol::AdversarialOmd] {
        let mut cfg = RunConfig::new(file.to_str().unwrap(), protocol, 50);
        cfg.out_dir = dir.path().join(protocol.name());
        let summary = harness::run(&cfg).unwrap();
        for r in &summary.cells[0].records {
            assert_eq!(r.regret_p1, Some(0.0), "{protocol}");
        }
    }
}

#[test]
fn seeds_give_different_trajectories_with_one_schema() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new("kuhn", Protocol::SelfplayCfrHedge, 50);
    cfg.seeds = vec![1, 2];
    cfg.out_dir = dir.path().to_path_buf();
    let summary = harness::run(&cfg).unwrap();
    assert_ne!(summary.cells[0].average, summary.cells[1].average);
    let header = |seed: u64| {
        std::fs::read_to_string(dir.path().join(format!("metrics-seed-{seed}.csv")))
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(header(1), header(2));
    assert_eq!(header(1), "protocol,seed,round,episodes,gap,regret_p1,regret_p2,wallclock_ms");
}

#[test]
fn selfplay_gap_shrinks_on_kuhn() {
    for protocol in [Protocol::SelfplayCfrRm, Protocol::SelfplayOmd] {
        let mut cfg = RunConfig::new("kuhn", protocol, 20_000);
        cfg.checkpoints = vec![100, 20_000];
        cfg.track_regret = false;
        let game = cfg.load_game().unwrap();
        let cell = harness::run_cell(&cfg, &game, 0, false, |_| Ok(())).unwrap();
        let early = cell.records[0].gap.unwrap();
        let late = cell.records[1].gap.unwrap();
        assert!(late < early, "{protocol}: {early} -> {late}");
    }
}
