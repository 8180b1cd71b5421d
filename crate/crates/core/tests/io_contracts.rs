use std::fs;
use std::path::Path;

use legalqa_core::embeddings::{
    load_external_embeddings, train_glove, train_word2vec, TrainConfig, VectorTable,
};
use legalqa_core::summarizer::{
    segment, summarize_segmentwise, BackendKind, ExternalSummarizer, SummarySpec, Summarizer,
};
use legalqa_core::textproc::{build_vocab, count_cooccurrence, tokenize, Vocabulary, Weighting};
use legalqa_core::Error;

/// Writes a python summarizer that answers in reverse order and keeps the
/// first `keep` words of each request. With `drop_last`, it skips the final
/// request.
fn script(dir: &Path, keep: usize, drop_last: bool) -> ExternalSummarizer {
    let path = dir.join("summarizer.py");
    fs::write(
        &path,
        format!(
            r#"import json, sys
reqs = [json.loads(l) for l in sys.stdin if l.strip()]
if {drop_last}:
    reqs = reqs[:-1]
for r in reversed(reqs):
    words = r["text"].split()[:{keep}]
    print(json.dumps({{"id": r["id"], "summary": " ".join(words)}}, ensure_ascii=False))
"#,
            drop_last = if drop_last { "True" } else { "False" },
        ),
    )
    .unwrap();
    ExternalSummarizer::from_command_line(&format!("python3 {}", path.display())).unwrap()
}

fn words(n: usize) -> String {
    (0..n).map(|i| format!("tok{i}")).collect::<Vec<_>>().join(" ")
}

#[test]
fn external_summarizer_maps_unordered_responses() {
    let dir = tempfile::tempdir().unwrap();
    let backend = script(dir.path(), 2, false);
    let chunks = vec!["alpha beta gamma".to_owned(), "Ârticle 3 applies".to_owned(), "x".to_owned()];
    let out = backend.summarize_chunks(&chunks).unwrap();
    assert_eq!(out, vec!["alpha beta", "Ârticle 3", "x"]);
    assert_eq!(backend.kind(), BackendKind::External);
    assert!(backend.summarize_chunks(&[]).unwrap().is_empty());
}

#[test]
fn external_summarizer_missing_id_names_chunk() {
    let dir = tempfile::tempdir().unwrap();
    let backend = script(dir.path(), 2, true);
    let chunks: Vec<String> = (0..3).map(|i| format!("chunk {i}")).collect();
    match backend.summarize_chunks(&chunks) {
        Err(Error::Summarizer { chunk, .. }) => assert_eq!(chunk, 2),
        other => panic!("expected summarizer error, got {other:?}"),
    }
}

#[test]
fn external_summarizer_failures_are_errors() {
    let missing = ExternalSummarizer::from_command_line("/nonexistent/summarizer").unwrap();
    assert!(matches!(
        missing.summarize_chunks(&["a".into()]),
        Err(Error::Summarizer { .. })
    ));
    let dir = tempfile::tempdir().unwrap();
    let exit3 = write(dir.path(), "exit3.py", "import sys\nsys.stdin.read()\nsys.exit(3)\n");
    let failing = ExternalSummarizer::from_command_line(&format!("python3 {}", exit3.display()));
    assert!(matches!(
        failing.unwrap().summarize_chunks(&["a".into()]),
        Err(Error::Summarizer { .. })
    ));
    assert!(ExternalSummarizer::from_command_line("   ").is_err());
}

#[test]
fn segmentwise_with_external_backend() {
    let dir = tempfile::tempdir().unwrap();
    let backend = script(dir.path(), 200, false);
    let text = words(2500);
    let spec = SummarySpec::default();
    let record = summarize_segmentwise("dev-q0000", &text, &spec, &backend).unwrap();
    // three level-1 chunks, 200 words kept from each
    assert_eq!(tokenize(&record.level1_summary).len(), 600);
    let level2_chunks = segment(&record.level1_summary, spec.level2_segment_tokens).len();
    assert_eq!(level2_chunks, 600_usize.div_ceil(300));
    assert_eq!(tokenize(&record.final_summary).len(), 400);
    assert!(record.final_summary.starts_with("tok0 tok1"));
    assert_eq!(record.backend, BackendKind::External);
}

#[test]
fn embedding_file_round_trip_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vectors.vec");
    let mut table = VectorTable::new(3);
    table.insert("dev-q0000", vec![0.1, -2.5, 1e-7]).unwrap();
    table.insert("dev-q0000-a00", vec![1.0 / 3.0, 0.0, -0.0]).unwrap();
    table.insert("dev-q0000-summary", vec![3.0, 4.0, 5.0]).unwrap();
    table.write(&path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("3 3"));
    for line in lines {
        assert_eq!(line.split(' ').count(), 4);
    }
    let back = load_external_embeddings(&path).unwrap();
    assert_eq!(back, table);
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn embedding_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let empty = load_external_embeddings(&write(d, "empty.vec", "")).unwrap();
    assert!(empty.is_empty());
    let header_only = load_external_embeddings(&write(d, "h.vec", "0 1536\n")).unwrap();
    assert!(header_only.is_empty());

    match load_external_embeddings(&write(d, "dims.vec", "2 5\na 1 2 3 4 5\nb 1 2 3 4 5 6\n")) {
        Err(Error::InconsistentDimension { line, expected, found, .. }) => {
            assert_eq!((line, expected, found), (3, 5, 6))
        }
        other => panic!("{other:?}"),
    }
    match load_external_embeddings(&write(d, "dup.vec", "2 1\na 1\na 2\n")) {
        Err(Error::DuplicateId { line, id, .. }) => assert_eq!((line, id.as_str()), (3, "a")),
        other => panic!("{other:?}"),
    }
    match load_external_embeddings(&write(d, "nan.vec", "2 2\na 1 2\nb 1 oops\n")) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    // truncated: header promises more entries than present
    match load_external_embeddings(&write(d, "short.vec", "3 2\na 1 2\nb 3 4\n")) {
        Err(Error::Parse { .. }) => {}
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        load_external_embeddings(&d.join("absent.vec")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn vocabulary_tsv_round_trip() {
    let corpus = vec![tokenize("the court held the motion moot"), tokenize("the court")];
    let vocab = build_vocab(&corpus, 1).unwrap();
    let f = tempfile::NamedTempFile::new().unwrap();
    vocab.write_tsv(f.path()).unwrap();
    let text = fs::read_to_string(f.path()).unwrap();
    assert!(text.starts_with("the\t3\ncourt\t2\n"));
    let back = Vocabulary::read_tsv(f.path()).unwrap();
    assert_eq!(back.tokens(), vocab.tokens());
    assert_eq!(back.frequencies(), vocab.frequencies());
}

fn small_corpus() -> Vec<Vec<String>> {
    (0..20)
        .map(|i| tokenize(&format!("the court granted motion {} to dismiss claim {}", i % 4, i % 3)))
        .collect()
}

#[test]
fn trainers_are_seed_deterministic() {
    let corpus = small_corpus();
    let vocab = build_vocab(&corpus, 1).unwrap();
    let w2v = TrainConfig {
        epochs: 3,
        ..TrainConfig::word2vec()
    };
    let a = train_word2vec(&corpus, &vocab, &w2v).unwrap();
    let b = train_word2vec(&corpus, &vocab, &w2v).unwrap();
    assert_eq!(a.matrix.to_bits(), b.matrix.to_bits());
    assert_eq!(a.matrix.dim(), 5);
    assert_eq!(a.matrix.rows(), vocab.len());
    let c = train_word2vec(&corpus, &vocab, &TrainConfig { seed: 2, ..w2v }).unwrap();
    assert_ne!(a.matrix.to_bits(), c.matrix.to_bits());

    let glove = TrainConfig {
        epochs: 5,
        ..TrainConfig::glove()
    };
    let table = count_cooccurrence(&corpus, &vocab, glove.window, Weighting::InverseDistance).unwrap();
    let g1 = train_glove(&table, vocab.len(), &glove).unwrap();
    let g2 = train_glove(&table, vocab.len(), &glove).unwrap();
    assert_eq!(g1.matrix.to_bits(), g2.matrix.to_bits());
    assert_eq!(g1.epoch_loss.len(), 5);
}

#[test]
fn word2vec_loss_falls_on_alternating_corpus() {
    let corpus = vec![(0..100).map(|i| if i % 2 == 0 { "a" } else { "b" }.to_owned()).collect::<Vec<_>>()];
    let vocab = build_vocab(&corpus, 1).unwrap();
    let trained = train_word2vec(&corpus, &vocab, &TrainConfig::word2vec()).unwrap();
    let first = trained.epoch_loss[0];
    let last = *trained.epoch_loss.last().unwrap();
    assert!(last < first, "first {first} last {last}");
}

#[test]
fn parallel_training_still_finite() {
    let corpus = small_corpus();
    let vocab = build_vocab(&corpus, 1).unwrap();
    let config = TrainConfig {
        threads: 4,
        epochs: 3,
        ..TrainConfig::word2vec()
    };
    let trained = train_word2vec(&corpus, &vocab, &config).unwrap();
    assert!(trained.matrix.as_slice().iter().all(|v| v.is_finite()));
    let table = count_cooccurrence(&corpus, &vocab, 10, Weighting::InverseDistance).unwrap();
    let glove = train_glove(&table, vocab.len(), &TrainConfig { threads: 4, ..TrainConfig::glove() }).unwrap();
    assert!(glove.matrix.as_slice().iter().all(|v| v.is_finite()));
}
