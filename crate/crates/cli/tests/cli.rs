use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/benton_potato/scenario.toml")
}

fn croprl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_croprl"))
        .args(args)
        .env_remove("CROPRL_LOG")
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = croprl(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn summary(dir: &Path) -> Vec<(String, String)> {
    std::fs::read_to_string(dir.join("summary.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (k, v) = l.split_once(',').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn value(summary: &[(String, String)], key: &str) -> f64 {
    summary
        .iter()
        .find(|(k, _)| k == key)
        .unwrap()
        .1
        .parse()
        .unwrap()
}

fn simulate(policy: &str, seed: &str, out: &Path) {
    let sc = scenario();
    run_ok(&[
        "simulate",
        "--scenario",
        sc.to_str().unwrap(),
        "--policy",
        policy,
        "--seed",
        seed,
        "--out",
        out.to_str().unwrap(),
    ]);
}

#[test]
fn simulate_writes_logs_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    simulate("constant:10", "3", &a);
    simulate("constant:10", "3", &b);
    for file in ["episode.csv", "summary.csv"] {
        assert_eq!(
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap()
        );
    }
    let episode = std::fs::read_to_string(a.join("episode.csv")).unwrap();
    let header = episode.lines().next().unwrap();
    assert!(header.starts_with("day,date,action_requested"));
    assert!(header.contains("obs_paw"));
    let s = summary(&a);
    assert_eq!(episode.lines().count() - 1, value(&s, "days") as usize);
}

#[test]
fn irrigation_beats_none_on_the_shipped_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let (ten, zero) = (dir.path().join("ten"), dir.path().join("zero"));
    simulate("constant:10", "0", &ten);
    simulate("zero", "0", &zero);
    let (ten, zero) = (summary(&ten), summary(&zero));
    assert_eq!(value(&zero, "total_irrigation"), 0.0);
    assert!(value(&ten, "normalized_return") > value(&zero, "normalized_return"));
}

#[test]
fn evaluate_of_a_constant_matches_simulate() {
    let dir = tempfile::tempdir().unwrap();
    simulate("constant:10", "5", dir.path());
    let s = summary(dir.path());
    let sc = scenario();
    let out = dir.path().join("eval");
    let stdout = run_ok(&[
        "evaluate",
        "--scenario",
        sc.to_str().unwrap(),
        "--policy",
        "constant:10",
        "--episodes",
        "1",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(stdout.contains("+/- 0.0000"), "{stdout}");
    let eval = std::fs::read_to_string(out.join("evaluation.csv")).unwrap();
    let row: Vec<&str> = eval.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[5].parse::<f64>().unwrap(), value(&s, "episode_return"));
    assert_eq!(
        row[6].parse::<f64>().unwrap(),
        value(&s, "normalized_return")
    );
}

#[test]
fn train_then_evaluate_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario();
    let config = dir.path().join("ppo.toml");
    std::fs::write(&config, "hidden = [16]\nepochs = 2\n").unwrap();
    let train = |out: &Path| {
        run_ok(&[
            "train",
            "--scenario",
            sc.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--iterations",
            "2",
            "--episodes",
            "2",
            "--seed",
            "1",
            "--out",
            out.to_str().unwrap(),
        ])
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    train(&a);
    train(&b);
    for file in ["history.csv", "policy.json"] {
        assert_eq!(
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap()
        );
    }
    let history = std::fs::read_to_string(a.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 3);
    assert!(!a.join(".policy.json.tmp").exists());

    let ckpt = a.join("policy.json");
    let eval = |extra: &[&str]| {
        let mut args = vec![
            "evaluate",
            "--scenario",
            sc.to_str().unwrap(),
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--episodes",
            "3",
        ];
        args.extend_from_slice(extra);
        run_ok(&args)
    };
    assert_eq!(eval(&[]), eval(&[]));
    assert_eq!(
        eval(&["--stochastic"]),
        eval(&["--stochastic", "--sequential"])
    );

    let sim = dir.path().join("sim");
    simulate(&format!("checkpoint:{}", ckpt.display()), "0", &sim);
    assert!(sim.join("episode.csv").exists());
}

#[test]
fn zero_iterations_writes_an_initial_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario();
    run_ok(&[
        "train",
        "--scenario",
        sc.to_str().unwrap(),
        "--iterations",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let history = std::fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1);
    assert!(dir.path().join("policy.json").exists());
}

#[test]
fn exit_codes() {
    assert_eq!(croprl(&[]).status.code(), Some(1));
    assert_eq!(croprl(&["simulate", "--bogus"]).status.code(), Some(1));
    assert_eq!(croprl(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let missing = croprl(&["simulate", "--scenario", "/nonexistent.toml", "--out", out]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nonexistent"));

    let sc = scenario();
    let bad_policy = croprl(&[
        "simulate",
        "--scenario",
        sc.to_str().unwrap(),
        "--policy",
        "constant:500",
        "--out",
        out,
    ]);
    assert_eq!(bad_policy.status.code(), Some(2));

    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "learning_rte = 0.1\n").unwrap();
    let bad_config = croprl(&[
        "train",
        "--scenario",
        sc.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out",
        out,
    ]);
    assert_eq!(bad_config.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_config.stderr).contains("learning_rte"));
}
