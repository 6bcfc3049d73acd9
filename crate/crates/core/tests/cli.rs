use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL_CONFIG: &str = r#"{
    "content": {"dim": 8, "epochs": 3},
    "walk": {"dim": 8, "walks_per_node": 3, "walk_length": 12, "epochs": 1},
    "train": {"max_outer_iters": 3}
}"#;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_name-disambig"));
    cmd.env_remove("NAME_DISAMBIG_SEED").env_remove("NAME_DISAMBIG_OUTPUT");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "{:?} failed: {}",
        cmd,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Workspace {
            dir: tempfile::tempdir().unwrap(),
        };
        fs::write(ws.path("config.json"), SMALL_CONFIG).unwrap();
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// A planted corpus at `synth/corpus.jsonl` with `synth/truth.json`.
    fn synth(&self, authors: usize, papers: usize) -> PathBuf {
        let out = self.path("synth");
        run(bin()
            .args(["synth", "--authors", &authors.to_string(), "--papers", &papers.to_string()])
            .arg("--output")
            .arg(&out));
        out
    }

    fn stage(&self, stage: &str, output: &Path, extra: &[&str]) -> Output {
        let mut cmd = bin();
        cmd.arg(stage)
            .arg("--config")
            .arg(self.path("config.json"))
            .arg("--output")
            .arg(output)
            .args(extra);
        cmd.output().unwrap()
    }
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn files(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn synth_writes_every_record_and_label() {
    let ws = Workspace::new();
    let dir = ws.synth(3, 10);
    let lines = fs::read_to_string(dir.join("corpus.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 30);
    assert_eq!(json(&dir.join("truth.json")).as_object().unwrap().len(), 30);
}

#[test]
fn evaluate_without_clusters_names_the_missing_file() {
    let ws = Workspace::new();
    let synth = ws.synth(2, 4);
    let truth = synth.join("truth.json");
    let out = ws.stage("evaluate", &ws.path("empty"), &["--truth", truth.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("clusters.json"));
}

#[test]
fn pipeline_matches_the_stages_run_in_order() {
    let ws = Workspace::new();
    let synth = ws.synth(3, 6);
    let input = synth.join("corpus.jsonl");
    let truth = synth.join("truth.json");
    let args = ["--input", input.to_str().unwrap(), "--truth", truth.to_str().unwrap()];

    let whole = ws.path("whole");
    let out = ws.stage("pipeline", &whole, &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let staged = ws.path("staged");
    for stage in ["ingest", "embed-content", "embed-relation", "train", "cluster", "evaluate"] {
        let out = ws.stage(stage, &staged, &args);
        assert!(out.status.success(), "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(files(&whole), files(&staged));

    let report = json(&whole.join("report.json"));
    let f1 = report["macro"]["f1"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f1));
}

#[test]
fn empty_corpus_gives_an_empty_report() {
    let ws = Workspace::new();
    let input = ws.path("empty.jsonl");
    fs::write(&input, "").unwrap();
    let out_dir = ws.path("out");
    let out = ws.stage("pipeline", &out_dir, &["--input", input.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["names"].as_array().unwrap().len(), 0);
}

#[test]
fn k_file_clusters_without_metrics() {
    let ws = Workspace::new();
    let synth = ws.synth(2, 5);
    let k_file = ws.path("k.json");
    fs::write(&k_file, r#"{"J. Smith": 2}"#).unwrap();
    let out_dir = ws.path("out");
    let input = synth.join("corpus.jsonl");
    let out = ws.stage(
        "pipeline",
        &out_dir,
        &["--input", input.to_str().unwrap(), "--k-file", k_file.to_str().unwrap()],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let clusters = json(&out_dir.join("clusters.json"));
    let name = &clusters["names"][0];
    assert_eq!(name["k"], 2);
    assert_eq!(name["clusters"].as_array().unwrap().len(), 2);
    assert!(name.get("f1").is_none());
    assert!(!out_dir.join("report.json").exists());
}

#[test]
fn unknown_config_key_is_an_error() {
    let ws = Workspace::new();
    let bad = ws.path("bad.json");
    fs::write(&bad, r#"{"train": {"max_outer_iter": 3}}"#).unwrap();
    let out = bin().arg("ingest").arg("--config").arg(&bad).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("max_outer_iter"));
}

#[test]
fn seed_comes_from_the_environment() {
    let ws = Workspace::new();
    let out_env = ws.path("env");
    let out_flag = ws.path("flag");
    run(bin().args(["synth", "--authors", "2", "--papers", "3"]).arg("--output").arg(&out_env).env("NAME_DISAMBIG_SEED", "5"));
    run(bin().args(["synth", "--authors", "2", "--papers", "3", "--seed", "5"]).arg("--output").arg(&out_flag));
    let default = ws.synth(2, 3);
    let corpus = |d: &Path| fs::read(d.join("corpus.jsonl")).unwrap();
    assert_eq!(corpus(&out_env), corpus(&out_flag));
    assert_ne!(corpus(&out_env), corpus(&default));
}
