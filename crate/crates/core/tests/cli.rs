use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nmln::io::{load_model, run, RunConfig, Task};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn nmln(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmln")).args(args).output().unwrap()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn oracle_run_writes_artifacts_and_echoes_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("oracle");
    let o = nmln(&["oracle", "--config", &s(&configs().join("oracle_rules.toml")), "--out", &s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("log_z"));
    assert!(stdout.contains("resolved config"));
    for f in ["metrics/oracle.json", "samples/distribution.tsv", "logs/config.toml"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let echoed = RunConfig::from_toml(&fs::read_to_string(out.join("logs/config.toml")).unwrap()).unwrap();
    assert_eq!(echoed.task, Task::Oracle);
    let tsv = fs::read_to_string(out.join("samples/distribution.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 1 + 4096);
}

#[test]
fn flags_override_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("train");
    let o = nmln(&[
        "train",
        "--config",
        &s(&configs().join("kinship_train.toml")),
        "--epochs",
        "3",
        "--seed",
        "42",
        "--out",
        &s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = RunConfig::from_toml(&fs::read_to_string(out.join("logs/config.toml")).unwrap()).unwrap();
    assert_eq!(cfg.train.epochs, 3);
    assert_eq!(cfg.seed, 42);
    assert_eq!(cfg.sampler.seed, 42);
    assert_eq!(fs::read_to_string(out.join("logs/train.jsonl")).unwrap().lines().count(), 3);
    let model = load_model(&out.join("model/model.json")).unwrap();
    assert_eq!(model.k(), 2);
}

#[test]
fn trained_model_feeds_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let mut train = RunConfig::load(&configs().join("oracle_rules.toml")).unwrap();
    train.task = Task::Train;
    train.model.neural = true;
    train.model.hidden = vec![4];
    train.data.train = vec![configs().join("oracle_world.txt")];
    train.train.epochs = 5;
    train.out_dir = tmp.path().join("t");
    let summary = run(&train).unwrap();
    assert!(summary.headline.iter().any(|(k, _)| k == "exact_log_likelihood"));

    let mut eval = train.clone();
    eval.task = Task::Eval;
    eval.model.path = Some(train.out_dir.join("model/model.json"));
    eval.out_dir = tmp.path().join("e");
    let summary = run(&eval).unwrap();
    let ll = summary.headline.iter().find(|(k, _)| k == "log_likelihood").unwrap().1;
    assert!(ll < 0.0 && ll.is_finite());
}

#[test]
fn bad_inputs_fail_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nmln(&["train", "--out", &s(&tmp.path().join("x"))]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("data.train"));

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "task = \"train\"\nunknown_key = 1\n").unwrap();
    let o = nmln(&["train", "--config", &s(&bad)]);
    assert!(!o.status.success());

    let world = tmp.path().join("w.txt");
    fs::write(&world, "sm(a\n").unwrap();
    let o = nmln(&[
        "eval",
        "--signature",
        &s(&configs().join("oracle_signature.txt")),
        "--train",
        &s(&world),
        "--out",
        &s(&tmp.path().join("y")),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn model_signature_mismatch_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let mut train = RunConfig::load(&configs().join("kinship_train.toml")).unwrap();
    train.train.epochs = 1;
    train.out_dir = tmp.path().join("k");
    run(&train).unwrap();
    let o = nmln(&[
        "oracle",
        "--config",
        &s(&configs().join("oracle_rules.toml")),
        "--model",
        &s(&train.out_dir.join("model/model.json")),
        "--out",
        &s(&tmp.path().join("o")),
    ]);
    assert!(!o.status.success());
}
