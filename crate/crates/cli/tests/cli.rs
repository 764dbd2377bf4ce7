use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use tempfile::TempDir;

const SMALL: &str = r#"
[network]
vertices = 5
target = 3
self_loop_gain = 0.5
nominal_weight = -2.0
uncertainty = [-0.2, 0.2]
edges = [[1, 2], [2, 3], [3, 4], [4, 5], [1, 5]]

[scenario]
epsilon1 = 0.3
beta1 = 0.2
m1 = 13
risk_levels = [0.2, 0.4]
master_seed = 9
"#;

// path 1 - 2 - 3 with the target in the middle: each monitor is farther
// from one of the attacks than the target is
const HOPELESS: &str = r#"
[network]
vertices = 3
target = 2
self_loop_gain = 0.5
nominal_weight = -1.0
edges = [[1, 2], [2, 3]]

[scenario]
epsilon1 = 0.3
beta1 = 0.2
m1 = 13
risk_levels = [0.2]
"#;

fn riskplace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskplace")).args(args).env("RISKPLACE_THREADS", "2").output().unwrap()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn malformed_config_exits_with_config_code() {
    let dir = TempDir::new().unwrap();
    let bad = write_config(&dir, "bad.toml", &SMALL.replace("target = 3", "target = 9"));
    let o = riskplace(&["feasibility", &bad]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let unknown = write_config(&dir, "unknown.toml", &SMALL.replace("m1 = 13", "m1 = 13\nbogus = 1"));
    assert_eq!(riskplace(&["feasibility", &unknown]).status.code(), Some(3));
    let missing = dir.path().join("nope.toml");
    assert_ne!(riskplace(&["feasibility", missing.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(riskplace(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(riskplace(&["risk", "x.toml", "--pairs", "a=1"]).status.code(), Some(2));
}

#[test]
fn too_few_samples_are_refused_unless_forced() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    let out = dir.path().join("run");
    let o = riskplace(&["risk", &cfg, "--samples", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("at least 13"), "{}", stderr(&o));
    let o = riskplace(&["risk", &cfg, "--samples", "3", "--force", "--pairs", "a=1,m=2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&out.join("manifest.json"))["m1"], 3);
}

#[test]
fn no_secure_placement_exits_with_five() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "hopeless.toml", HOPELESS);
    let out = dir.path().join("run");
    let o = riskplace(&["game", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    assert!(stderr(&o).contains("no secure placement"));
}

#[test]
fn example_feasibility_finds_the_universal_monitors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("feas");
    let o = riskplace(&["feasibility", "configs/example.toml", "--out", out.to_str().unwrap()]);
    let o = if o.status.code() == Some(0) {
        o
    } else {
        let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/example.toml");
        riskplace(&["feasibility", cfg, "--out", out.to_str().unwrap()])
    };
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("monitors feasible against every attack: {2, 6}"), "{}", stdout(&o));
    let csv = fs::read_to_string(out.join("feasibility.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("3,1,") && l.contains("infeasible_relative_degree")), "{csv}");
    assert!(csv.lines().any(|l| l.starts_with("10,3,") && l.contains("infeasible_relative_degree")), "{csv}");
}

#[test]
fn path_graph_has_no_universal_monitor() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "hopeless.toml", HOPELESS);
    let o = riskplace(&["feasibility", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("monitors feasible against every attack: {}"), "{}", stdout(&o));
}

#[test]
fn pairs_filter_and_game_from_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    let run = dir.path().join("run");
    let o = riskplace(&["risk", &cfg, "--pairs", "a=1,m=2;a=4,m=2;a=1,m=5;a=4,m=5", "--out", run.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let est = json(&run.join("estimates.json"));
    let pairs: Vec<(u64, u64)> = est["estimates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["attack"].as_u64().unwrap(), e["monitor"].as_u64().unwrap()))
        .collect();
    assert_eq!(pairs, vec![(1, 2), (4, 2), (1, 5), (4, 5)]);
    let mut files: Vec<String> =
        fs::read_dir(run.join("samples")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    files.sort();
    assert_eq!(files, vec!["a1_m2.csv", "a1_m5.csv", "a4_m2.csv", "a4_m5.csv"]);
    let samples = fs::read_to_string(run.join("samples/a1_m2.csv")).unwrap();
    assert_eq!(samples.lines().next(), Some("pair,sample_index,gamma_star"));
    assert_eq!(samples.lines().count(), 14);

    let game = dir.path().join("game");
    let o = riskplace(&["game", "--from-run", run.to_str().unwrap(), "--level", "0.2", "--out", game.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(&game.join("game_beta0.2.json"));
    assert!(report["duality_gap"].as_f64().unwrap() <= 1e-8);
    assert!(!game.join("game_beta0.4.json").exists());

    let o = riskplace(&["game", "--from-run", run.to_str().unwrap(), "--level", "0.3", "--out", game.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn manifest_digest_matches_the_copied_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "small.toml", SMALL);
    let run = dir.path().join("run");
    let o = riskplace(&["risk", &cfg, "--screen", "--out", run.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let copied = fs::read(run.join("config.toml")).unwrap();
    assert_eq!(copied, SMALL.as_bytes());
    let digest: String = Sha256::digest(&copied).iter().map(|b| format!("{b:02x}")).collect();
    let manifest = json(&run.join("manifest.json"));
    assert_eq!(manifest["config_digest"], digest.as_str());
    assert_eq!(manifest["seed"], 9);
    assert!(manifest.get("timing").is_none());
    let timing = json(&run.join("timing.json"));
    assert!(timing.as_array().unwrap().iter().any(|t| t["phase"] == "risk"));
}
