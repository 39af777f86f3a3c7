#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

pub fn tscf() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tscf"));
    cmd.env_remove("TSCF_SEED").env_remove("RUST_LOG");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    tscf().args(args).output().expect("tscf runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert_eq!(code(&out), 0, "tscf {args:?}\nstderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// Synthetic splits plus fitted centroid classifier and linear scorer.
pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    pub fn new(kind: &str, channels: usize, seed: u64) -> Self {
        Self::with_sizes(kind, 32, channels, 40, 10, seed)
    }

    pub fn with_sizes(kind: &str, length: usize, channels: usize, train: usize, test: usize, seed: u64) -> Self {
        let ws = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        ok(&[
            "gen-synth",
            "--kind",
            kind,
            "--length",
            &length.to_string(),
            "--channels",
            &channels.to_string(),
            "--train-size",
            &train.to_string(),
            "--test-size",
            &test.to_string(),
            "--seed",
            &seed.to_string(),
            "--out",
            p(ws.dir.path()),
        ]);
        ok(&["fit", "--train", p(&ws.train()), "--kind", "centroid", "--out", p(&ws.classifier())]);
        ok(&["fit", "--train", p(&ws.train()), "--kind", "linear", "--out", p(&ws.scorer())]);
        ws
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn train(&self) -> PathBuf {
        self.path("train.json")
    }

    pub fn test(&self) -> PathBuf {
        self.path("test.json")
    }

    pub fn classifier(&self) -> PathBuf {
        self.path("classifier.json")
    }

    pub fn scorer(&self) -> PathBuf {
        self.path("scorer.json")
    }

    /// Writes a config file with a small search budget.
    pub fn small_config(&self) -> PathBuf {
        let path = self.path("config.json");
        fs::write(
            &path,
            r#"{"format_version": 1, "run": {"population_size": 20, "phase1_generations": 15, "phase2_generations": 5, "reinit_generations": 10}}"#,
        )
        .unwrap();
        path
    }

    /// Base `explain` arguments writing to `out`.
    pub fn explain_args(&self, out: &Path) -> Vec<String> {
        [
            "explain",
            "--test",
            p(&self.test()),
            "--train",
            p(&self.train()),
            "--classifier",
            p(&self.classifier()),
            "--scorer",
            p(&self.scorer()),
            "--out",
            p(out),
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }
}

pub fn run_owned(args: &[String]) -> Output {
    tscf().args(args).output().expect("tscf runs")
}

pub fn ok_owned(args: &[String]) -> Output {
    let out = run_owned(args);
    assert_eq!(code(&out), 0, "tscf {args:?}\nstderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

pub fn read_value(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

/// Loads a shipped schema with references into the shared definitions
/// rewritten as local ones.
pub fn schema(name: &str) -> Value {
    let common = read_value(&schema_dir().join("common.schema.json"));
    let text = fs::read_to_string(schema_dir().join(name)).unwrap();
    let mut schema: Value = serde_json::from_str(&text.replace("common.schema.json#/definitions/", "#/definitions/")).unwrap();
    let defs = schema
        .as_object_mut()
        .unwrap()
        .entry("definitions")
        .or_insert_with(|| Value::Object(Default::default()));
    for (k, v) in common["definitions"].as_object().unwrap() {
        defs.as_object_mut().unwrap().insert(k.clone(), v.clone());
    }
    schema
}

const VALIDATOR: &str = r#"
import json, sys
import jsonschema
schema = json.loads(sys.argv[1])
doc = json.load(sys.stdin)
errors = [f"{e.message} at {list(e.absolute_path)}" for e in jsonschema.Draft7Validator(schema).iter_errors(doc)]
print("\n".join(errors))
sys.exit(1 if errors else 0)
"#;

/// Validates with the Python `jsonschema` package (draft-07).
pub fn assert_valid(schema_name: &str, doc: &Value) {
    let schema = schema(schema_name);
    let mut child = Command::new("python3")
        .args(["-c", VALIDATOR, &schema.to_string()])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .expect("python3 with jsonschema");
    child.stdin.take().unwrap().write_all(doc.to_string().as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success(), "{schema_name}: {}", String::from_utf8_lossy(&out.stdout));
}
