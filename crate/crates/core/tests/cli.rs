use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use knowledge_bottleneck::probe::{write_pgm, GrayImage};
use sha2::{Digest, Sha256};

fn kbn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kbn"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .env_remove("KBN_ENDPOINT")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = kbn(dir, args);
    assert!(
        o.status.success(),
        "kbn {args:?} exited {:?}\nstderr: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// SHA-256 of every file under `dir` except run manifests, keyed by
/// relative path.
fn artifact_hashes(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
            if rel.starts_with("manifest-") {
                continue;
            }
            let digest = Sha256::digest(std::fs::read(&p).unwrap());
            out.insert(rel, digest.iter().map(|b| format!("{b:02x}")).collect());
        }
    }
    out
}

fn full_pipeline(dir: &Path) -> String {
    for cmd in ["synth", "index", "generate", "ground", "prior", "train"] {
        ok(dir, &["--mock", cmd]);
    }
    ok(dir, &["--mock", "eval"])
}

#[test]
fn mock_pipeline_runs_end_to_end_and_reproducibly() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let row_a = full_pipeline(a.path());
    let row_b = full_pipeline(b.path());
    assert_eq!(row_a, row_b);
    let first = row_a.lines().next().unwrap();
    assert_eq!(first.split(" / ").count(), 4, "{row_a}");
    assert!(row_a.contains("Overall"));

    for f in [
        "corpus.jsonl",
        "task.json",
        "index.kidx",
        "bottleneck.jsonl",
        "grounders.json",
        "prior.json",
        "head.json",
        "metrics.json",
    ] {
        assert!(a.path().join(f).exists(), "{f} missing");
    }
    for cmd in [
        "synth", "index", "generate", "ground", "prior", "train", "eval",
    ] {
        assert!(a.path().join(format!("manifest-{cmd}.json")).exists());
    }
    assert_eq!(artifact_hashes(a.path()), artifact_hashes(b.path()));

    let metrics: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.path().join("metrics.json")).unwrap()).unwrap();
    assert!(metrics["metrics"]["ood_acc"].as_f64().unwrap() >= 80.0);

    let json = ok(a.path(), &["--json", "diversity"]);
    let d: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(d["n_concepts"], 5);
    assert!(d["diversity"].as_f64().unwrap() > 0.0);

    ok(a.path(), &["train", "--probe"]);
    let probe_row = ok(a.path(), &["eval", "--probe"]);
    assert!(probe_row.starts_with("100.0 / 0.0"), "{probe_row}");
}

#[test]
fn index_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth"]);
    ok(dir.path(), &["index"]);
    let first = std::fs::read(dir.path().join("index.kidx")).unwrap();
    ok(dir.path(), &["index"]);
    assert_eq!(
        Sha256::digest(first),
        Sha256::digest(std::fs::read(dir.path().join("index.kidx")).unwrap())
    );
}

#[test]
fn corpus_line_without_id_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("docs.jsonl");
    std::fs::write(
        &corpus,
        "{\"id\": \"a\", \"title\": \"A\", \"text\": \"lung opacity\"}\n{\"title\": \"B\", \"text\": \"no id here\"}\n",
    )
    .unwrap();
    let o = kbn(dir.path(), &["index", "--corpus", corpus.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 2") && err.contains("id"), "{err}");
}

#[test]
fn single_concept_diversity_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.jsonl");
    std::fs::write(
        &path,
        "{\"text\": \"Is there lung opacity?\", \"source_doc_id\": \"d\", \"reference_sentence\": \"lung opacity\", \"origin_query\": \"pneumonia\"}\n",
    )
    .unwrap();
    let o = kbn(
        dir.path(),
        &["diversity", "--bottleneck", path.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("at least 2"), "{}", stderr(&o));
}

#[test]
fn eval_numbers_prints_the_headline_row() {
    let dir = tempfile::tempdir().unwrap();
    let numbers = dir.path().join("numbers.txt");
    std::fs::write(&numbers, "89.7 58.8 73.1\n").unwrap();
    let out = ok(
        dir.path(),
        &["eval", "--numbers", numbers.to_str().unwrap()],
    );
    assert_eq!(out.lines().next().unwrap(), "89.7 / 58.8 / 30.9 / 74.3");
    assert!(out.contains("73.7"), "{out}");

    let json = dir.path().join("numbers.json");
    std::fs::write(&json, r#"{"id": 89.7, "ood": 58.8}"#).unwrap();
    let out = ok(
        dir.path(),
        &["--json", "eval", "--numbers", json.to_str().unwrap()],
    );
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["row"], "89.7 / 58.8 / 30.9 / 74.3");
    assert!(v["metrics"]["overall"].is_null());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(kbn(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        kbn(dir.path(), &["train", "--epochs", "many"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(kbn(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn missing_inputs_exit_two_and_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = kbn(dir.path(), &["index"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("corpus.jsonl"), "{}", stderr(&o));

    let o = kbn(dir.path(), &["generate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("index.kidx"), "{}", stderr(&o));

    let o = kbn(dir.path(), &["eval"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("head.json"), "{}", stderr(&o));
}

#[test]
fn remote_mode_without_endpoint_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth"]);
    ok(dir.path(), &["index"]);
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"mode": "remote", "endpoint_env": "KBN_TEST_UNSET_ENDPOINT"}"#,
    )
    .unwrap();
    let o = kbn(
        dir.path(),
        &["--config", config.to_str().unwrap(), "generate"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("KBN_TEST_UNSET_ENDPOINT"));
    // --mock wins over the config file.
    ok(
        dir.path(),
        &["--config", config.to_str().unwrap(), "--mock", "generate"],
    );
}

#[test]
fn probe_reads_pgm_listings() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("images");
    std::fs::create_dir(&data).unwrap();
    let mut rows = String::new();
    for i in 0..500 {
        let class = i % 2;
        let level = if class == 1 { 230 } else { 25 };
        let pixels = (0..32 * 30)
            .map(|p| (level + (p * 7 + i) % 20) as u8)
            .collect();
        let name = format!("img{i:03}.pgm");
        std::fs::write(
            data.join(&name),
            write_pgm(&GrayImage::new(32, 30, pixels).unwrap()),
        )
        .unwrap();
        let split = if i < 400 { "train" } else { "test" };
        rows.push_str(&format!(
            "{{\"path\": \"{name}\", \"label\": {class}, \"split\": \"{split}\"}}\n"
        ));
    }
    std::fs::write(data.join("images.jsonl"), rows).unwrap();
    let out = ok(
        dir.path(),
        &["--json", "probe", "--data", data.to_str().unwrap()],
    );
    let reports: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 2);
    assert!(reports[0]["accuracy"].as_f64().unwrap() >= 95.0, "{out}");

    let o = kbn(
        dir.path(),
        &[
            "probe",
            "--data",
            dir.path().join("nowhere").to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(2));
}
