use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn toy_config(dir: &Path, extra: &str) -> PathBuf {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/toy.toml")).unwrap();
    let text = text
        .replace("output_dir = \"../runs/toy\"", "output_dir = \"out\"")
        .replace("total_iterations = 2000", "total_iterations = 6")
        .replace("checkpoint_every = 500", "checkpoint_every = 4")
        .replace("max_epochs = 200", "max_epochs = 3")
        .replace("per_class = 25", "per_class = 6");
    let path = dir.join("toy.toml");
    fs::write(&path, format!("{text}\n{extra}")).unwrap();
    path
}

fn emoaug(args: &[&str], root: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_emoaug"));
    cmd.args(args).env("RUST_LOG", "warn").env_remove("EMOAUG_OUTPUT_ROOT");
    if let Some(r) = root {
        cmd.env("EMOAUG_OUTPUT_ROOT", r);
    }
    cmd.output().unwrap()
}

fn stage(name: &str, config: &Path) -> Output {
    emoaug(&[name, "--config", config.to_str().unwrap()], None)
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

#[test]
fn full_toy_pipeline_produces_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "");
    for s in ["features", "train-aug", "augment", "train-ser", "eval", "tsne", "report"] {
        let o = stage(s, &cfg);
        assert_eq!(o.status.code(), Some(0), "{s}: {}", text(&o));
    }
    let out = dir.path().join("out");
    for sys in ["NoAUG", "AUG"] {
        let report: Value = serde_json::from_str(&fs::read_to_string(out.join(format!("reports/fold0_{sys}.json"))).unwrap()).unwrap();
        let uar = report["uar"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&uar));
        assert_eq!(report["meta"]["system"], sys);
        assert_eq!(report["meta"]["config_fingerprint"].as_str().unwrap().len(), 64);
    }
    let table = fs::read_to_string(out.join("tables/imbalanced.md")).unwrap();
    assert!(table.contains("NoAUG") && table.contains("AUG"), "{table}");
    assert!(out.join("tsne/AUG/tsne.png").exists());

    let hybrid = fs::read_to_string(out.join("hybrid/fold0/AUG/manifest.jsonl")).unwrap();
    let baseline = fs::read_to_string(out.join("hybrid/fold0/NoAUG/manifest.jsonl")).unwrap();
    assert_eq!(hybrid.lines().count(), 5 * baseline.lines().count());

    let log = fs::read_to_string(out.join("artifacts.jsonl")).unwrap();
    let entries: Vec<Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    for s in ["features", "train-aug", "augment", "train-ser", "eval", "tsne", "report"] {
        assert!(entries.iter().any(|e| e["stage"] == s), "no artifacts for {s}");
    }
    let fingerprints: std::collections::BTreeSet<&str> =
        entries.iter().map(|e| e["config_fingerprint"].as_str().unwrap()).collect();
    assert_eq!(fingerprints.len(), 1);
    let table_entry = entries.iter().find(|e| e["path"] == "tables/imbalanced.md").unwrap();
    assert_eq!(table_entry["bytes"].as_u64().unwrap() as usize, table.len());
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "");
    for s in ["features", "train-aug", "eval", "report"] {
        let o = emoaug(&[s, "--config", cfg.to_str().unwrap(), "--dry-run"], None);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o));
        assert!(text(&o).contains(&format!("stage: {s}")));
    }
    let entries: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries, vec![std::ffi::OsString::from("toy.toml")]);
}

#[test]
fn misspelled_key_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "");
    let bad = fs::read_to_string(&cfg).unwrap().replace("w_g = 1.0", "w_gg = 1.0");
    fs::write(&cfg, bad).unwrap();
    let o = stage("features", &cfg);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("w_gg"), "{}", text(&o));
}

#[test]
fn missing_stage_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "");
    let o = stage("eval", &cfg);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("`features`"), "{}", text(&o));

    assert_eq!(stage("features", &cfg).status.code(), Some(0));
    let o = stage("eval", &cfg);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).contains("`train-ser`"), "{}", text(&o));
    let o = stage("augment", &cfg);
    assert!(text(&o).contains("`train-aug`"), "{}", text(&o));
}

#[test]
fn output_root_env_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "");
    let root = dir.path().join("elsewhere");
    let o = emoaug(&["features", "--config", cfg.to_str().unwrap(), "--seed", "3"], Some(&root));
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(root.join("features/manifest.jsonl").exists());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn bad_invocations_exit_with_validation_status() {
    let o = emoaug(&["train-aug", "--config", "/nonexistent/cfg.toml"], None);
    assert_eq!(o.status.code(), Some(1));
    let o = emoaug(&["bogus"], None);
    assert_eq!(o.status.code(), Some(1));
    let o = emoaug(&["--help"], None);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn seed_changes_features() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "");
    let run = |seed: &str, root: &Path| {
        let o = emoaug(&["features", "--config", cfg.to_str().unwrap(), "--seed", seed], Some(root));
        assert_eq!(o.status.code(), Some(0), "{}", text(&o));
        fs::read(root.join("features/store/index.json")).unwrap();
        fs::read_to_string(root.join("artifacts.jsonl")).unwrap()
    };
    let hashes = |log: String| -> Vec<String> {
        log.lines()
            .map(|l| serde_json::from_str::<Value>(l).unwrap()["sha256"].as_str().unwrap().to_string())
            .collect()
    };
    let a = hashes(run("1", &dir.path().join("a")));
    let b = hashes(run("1", &dir.path().join("b")));
    let c = hashes(run("2", &dir.path().join("c")));
    assert_eq!(a, b);
    assert_ne!(a, c);
}
