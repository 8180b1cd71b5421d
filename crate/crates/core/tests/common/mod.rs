#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use legalqa_core::cli::{Paths, RunConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const TOPICS: [&[&str]; 6] = [
    &["jurisdiction", "diversity", "citizenship", "amount", "controversy", "federal"],
    &["pleading", "complaint", "plausible", "dismiss", "motion", "allegations"],
    &["discovery", "privilege", "deposition", "interrogatories", "sanctions", "documents"],
    &["venue", "transfer", "district", "convenience", "forum", "residence"],
    &["joinder", "claims", "parties", "supplemental", "nucleus", "operative"],
    &["judgment", "summary", "genuine", "dispute", "material", "fact"],
];

const FILLER: [&str; 12] = [
    "the", "court", "held", "that", "a", "party", "may", "not", "under", "rule", "because", "here",
];

fn sentence(rng: &mut ChaCha8Rng, words: &[&str], len: usize) -> String {
    let mut out: Vec<&str> = Vec::with_capacity(len);
    for i in 0..len {
        let pool: &[&str] = if i % 2 == 0 { words } else { &FILLER };
        out.push(pool.choose(rng).unwrap());
    }
    let mut s = out.join(" ");
    s.push('.');
    s[..1].to_uppercase() + &s[1..]
}

/// Rows of a synthetic legal QA split. The correct answer draws its words
/// from the same topic as the question and explanation, the distractors
/// from other topics.
pub fn synthetic_rows(seed: u64, questions: usize, labeled: bool) -> Vec<serde_json::Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for q in 0..questions {
        let topic = rng.gen_range(0..TOPICS.len());
        let question = format!("Question {q}: {}", sentence(&mut rng, TOPICS[topic], 8));
        let explanation: Vec<String> = (0..rng.gen_range(2..6))
            .map(|_| sentence(&mut rng, TOPICS[topic], 10))
            .collect();
        let explanation = explanation.join(" ");
        let n_candidates = rng.gen_range(2..=4);
        let correct = rng.gen_range(0..n_candidates);
        for k in 0..n_candidates {
            let t = if k == correct {
                topic
            } else {
                (topic + rng.gen_range(1..TOPICS.len())) % TOPICS.len()
            };
            let mut answer = sentence(&mut rng, TOPICS[t], 6);
            if k != correct && rng.gen_bool(0.5) {
                // near-miss distractor sharing the question's topic
                answer = format!("{} {}", sentence(&mut rng, TOPICS[topic], 4), answer);
            }
            let mut row = json!({
                "question": question,
                "answer": answer,
                "explanation": explanation,
            });
            if labeled {
                row["label"] = json!(u8::from(k == correct));
            }
            rows.push(row);
        }
    }
    rows
}

pub fn write_rows(path: &Path, rows: &[serde_json::Value]) {
    let body: String = rows.iter().map(|r| format!("{r}\n")).collect();
    fs::write(path, body).unwrap();
}

/// Writes train/dev/test splits under `dir` and returns a config using them.
pub fn synthetic_workspace(dir: &Path, seed: u64) -> RunConfig {
    let data = dir.join("data");
    fs::create_dir_all(&data).unwrap();
    let split = |name: &str, s: u64, n: usize, labeled: bool| -> PathBuf {
        let p = data.join(format!("{name}.jsonl"));
        write_rows(&p, &synthetic_rows(s, n, labeled));
        p
    };
    RunConfig {
        paths: Paths {
            train: Some(split("train", seed, 40, true)),
            dev: Some(split("dev", seed + 1, 15, true)),
            test: Some(split("test", seed + 2, 15, false)),
            embeddings_dir: dir.join("embeddings"),
            summaries_dir: dir.join("summaries"),
            output_dir: dir.join("output"),
            external_embeddings: None,
        },
        ..RunConfig::default()
    }
}
