mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use legalqa_core::cli::RunConfig;
use legalqa_core::corpus::{group_by_question, summary_id, Split};
use legalqa_core::embeddings::VectorTable;
use legalqa_core::labeling::PredictionSet;

fn legalqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_legalqa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Writes the synthetic workspace and its config file.
fn workspace(dir: &Path, seed: u64) -> (RunConfig, PathBuf) {
    let config = common::synthetic_workspace(dir, seed);
    let path = dir.join("run.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    (config, path)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn full_pipeline_word2vec() {
    let dir = tempfile::tempdir().unwrap();
    let (config, cfg) = workspace(dir.path(), 11);
    let cfg = s(&cfg);

    ok(&legalqa(&["prepare", "-c", cfg]));
    let dev_summaries = config.paths.summaries_dir.join("dev");
    let dataset = legalqa_core::cli::load_dataset(config.paths.dev.as_ref().unwrap(), Split::Dev).unwrap();
    let groups = group_by_question(&dataset);
    assert_eq!(fs::read_dir(&dev_summaries).unwrap().count(), groups.len());

    ok(&legalqa(&["train-embeddings", "-c", cfg]));
    for f in ["word2vec.vec", "glove.vec", "vocab.tsv"] {
        assert!(config.paths.embeddings_dir.join(f).is_file(), "{f}");
    }
    let w2v = VectorTable::read(&config.paths.embeddings_dir.join("word2vec.vec")).unwrap();
    assert_eq!(w2v.dim(), 5);

    let out = legalqa(&["predict", "-c", cfg]);
    ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("word2vec-cosine"), "{stdout}");
    let out_dir = &config.paths.output_dir;
    let preds = PredictionSet::read_csv(&out_dir.join("word2vec-cosine.dev.predictions.csv")).unwrap();
    assert_eq!(preds.len(), dataset.candidate_count);
    assert!(preds.questions_without_single_positive().is_empty());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("word2vec-cosine.dev.report.json")).unwrap()).unwrap();
    assert_eq!(report["provenance"]["system"], "word2vec-cosine");
    assert_eq!(report["provenance"]["seed"], 1);
    assert_eq!(report["provenance"]["rule"]["epsilon"], 0.0005);
    assert!(report["report"]["macro_f1"].as_f64().unwrap() >= 0.0);
    assert!(out_dir.join("word2vec-cosine.dev.report.txt").is_file());
    assert!(out_dir.join("word2vec-cosine.dev.scores.csv").is_file());

    // ablation writes its own file
    ok(&legalqa(&["predict", "-c", cfg, "--no-replacement"]));
    assert!(out_dir.join("word2vec-cosine-noreplace.dev.predictions.csv").is_file());

    // test split has no gold labels: predictions only
    ok(&legalqa(&["predict", "-c", cfg, "--split", "test"]));
    assert!(out_dir.join("word2vec-cosine.test.predictions.csv").is_file());
    assert!(!out_dir.join("word2vec-cosine.test.report.json").exists());

    let out = legalqa(&[
        "evaluate",
        "--predictions",
        s(&out_dir.join("word2vec-cosine.dev.predictions.csv")),
        "--dataset",
        s(config.paths.dev.as_ref().unwrap()),
        "--scores",
        s(&out_dir.join("word2vec-cosine.dev.scores.csv")),
    ]);
    ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("Higher score"), "{stdout}");

    let out = legalqa(&["sweep", "-c", cfg, "--grid", "0:0.002:0.0001"]);
    ok(&out);
    let sweep: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(out_dir.join("word2vec-cosine.sweep.train+dev.json")).unwrap(),
    )
    .unwrap();
    let grid = sweep["sweep"]["grid"].as_array().unwrap();
    let scores: Vec<f64> = sweep["sweep"]["scores"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(grid.len(), 21);
    assert!(grid.iter().any(|t| (t.as_f64().unwrap() - 0.0005).abs() < 1e-12));
    let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(sweep["sweep"]["best_f1"].as_f64().unwrap(), best);
}

#[test]
fn predictions_are_byte_identical_across_runs() {
    let run = |dir: &Path| -> Vec<u8> {
        let (config, cfg) = workspace(dir, 3);
        let cfg = s(&cfg);
        ok(&legalqa(&["prepare", "-c", cfg]));
        ok(&legalqa(&["train-embeddings", "-c", cfg, "--kind", "glove"]));
        ok(&legalqa(&["predict", "-c", cfg, "--system", "glove-cosine"]));
        fs::read(config.paths.output_dir.join("glove-cosine.dev.predictions.csv")).unwrap()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(a.path()), run(b.path()));
}

#[test]
fn transformer_systems_use_exported_vectors() {
    let dir = tempfile::tempdir().unwrap();
    let (config, cfg) = workspace(dir.path(), 4);
    let cfg = s(&cfg);
    ok(&legalqa(&["prepare", "-c", cfg]));

    let out = legalqa(&["predict", "-c", cfg, "--system", "transformer-euclidean"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("exporter"), "{}", stderr(&out));

    // stand-in for the exporter: a tiny bag-of-words vector per id
    let dataset = legalqa_core::cli::load_dataset(config.paths.dev.as_ref().unwrap(), Split::Dev).unwrap();
    let mut table = VectorTable::new(4);
    let embed = |text: &str| {
        let mut v = vec![0.0; 4];
        for t in legalqa_core::textproc::tokenize(text) {
            v[t.len() % 4] += 1.0;
        }
        v
    };
    for g in group_by_question(&dataset) {
        table.insert(g.question_id.clone(), embed(&g.question_text)).unwrap();
        table.insert(summary_id(&g.question_id), embed(&g.explanation_text)).unwrap();
        for c in &g.candidates {
            table.insert(c.candidate_id.clone(), embed(&c.answer_text)).unwrap();
        }
    }
    fs::create_dir_all(&config.paths.embeddings_dir).unwrap();
    table.write(&config.paths.embeddings_dir.join("transformer.vec")).unwrap();

    for system in ["transformer-cosine", "transformer-euclidean", "transformer-manhattan"] {
        ok(&legalqa(&["predict", "-c", cfg, "--system", system]));
        let preds = PredictionSet::read_csv(
            &config.paths.output_dir.join(format!("{system}.dev.predictions.csv")),
        )
        .unwrap();
        assert_eq!(preds.len(), dataset.candidate_count);
    }
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(config.paths.output_dir.join("transformer-manhattan.dev.report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["provenance"]["rule"]["mode"], "distance");
}

#[test]
fn validation_errors_exit_one_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (config, cfg) = workspace(dir.path(), 5);

    let out = legalqa(&["predict", "-c", s(&cfg), "--system", "bert-cosine"]);
    assert_eq!(out.status.code(), Some(1));

    // distance system with a similarity rule
    let mut bad = config.clone();
    bad.system = legalqa_core::cli::System::TransformerEuclidean;
    let bad_path = dir.path().join("bad.json");
    fs::write(&bad_path, serde_json::to_string(&bad).unwrap()).unwrap();
    let out = legalqa(&["predict", "-c", s(&bad_path)]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));

    let out = legalqa(&["prepare", "-c", s(&cfg), "--dev", "/nonexistent/dev.jsonl"]);
    assert_eq!(out.status.code(), Some(1));

    let out = legalqa(&["sweep", "-c", s(&cfg), "--grid", ","]);
    assert_eq!(out.status.code(), Some(1));

    // predict before prepare: summaries missing
    let out = legalqa(&["predict", "-c", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("prepare"), "{}", stderr(&out));

    assert!(!config.paths.output_dir.exists());
    assert!(!config.paths.summaries_dir.exists());
}

#[test]
fn failing_summarizer_exits_two_and_leaves_no_partial_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let (config, cfg) = workspace(dir.path(), 6);
    let script = dir.path().join("broken.py");
    fs::write(&script, "import sys\nsys.stdin.read()\nsys.exit(1)\n").unwrap();
    let out = legalqa(&[
        "prepare",
        "-c",
        s(&cfg),
        "--summarizer",
        &format!("python3 {}", script.display()),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let leftovers: Vec<_> = fs::read_dir(&config.paths.summaries_dir)
        .map(|d| d.map(|e| e.unwrap().file_name()).collect())
        .unwrap_or_default();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn prepare_handles_empty_and_blank_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let summaries = dir.path().join("summaries");
    let out = legalqa(&["prepare", "--dev", s(&empty), "--summaries-dir", s(&summaries)]);
    ok(&out);
    assert_eq!(fs::read_dir(summaries.join("dev")).unwrap().count(), 0);

    let blank = dir.path().join("blank.csv");
    fs::write(&blank, "question,answer,explanation,label\nWhat?,Yes,,1\nWhat?,No,,0\n").unwrap();
    let out = legalqa(&["prepare", "--train", s(&blank), "--summaries-dir", s(&summaries)]);
    ok(&out);
    let file = summaries.join("train").join("train-q0000.json");
    let record: serde_json::Value = serde_json::from_str(&fs::read_to_string(file).unwrap()).unwrap();
    assert_eq!(record["final_summary"], "");
    assert!(stderr(&out).contains("empty explanation"), "{}", stderr(&out));
}

#[test]
fn prepare_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let (config, cfg) = workspace(dir.path(), 8);
    ok(&legalqa(&["prepare", "-c", s(&cfg)]));
    let read_all = || -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<_> = fs::read_dir(config.paths.summaries_dir.join("train"))
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let first = read_all();
    ok(&legalqa(&["prepare", "-c", s(&cfg)]));
    assert_eq!(first, read_all());
}
