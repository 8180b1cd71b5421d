use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use legalqa_core::cli::{
    cmd_evaluate, cmd_predict, cmd_prepare, cmd_sweep, cmd_train_embeddings, parse_grid,
    CommandError, RunConfig, System,
};
use legalqa_core::corpus::Split;
use legalqa_core::embeddings::EmbeddingSource;
use legalqa_core::evaluation::render_results_table;

#[derive(Parser)]
#[command(name = "legalqa", version, about = "Unsupervised answer selection for legal multiple-choice questions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Overrides {
    /// JSON run configuration; flags below override its fields
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    embeddings_dir: Option<PathBuf>,
    #[arg(long)]
    summaries_dir: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Transformer vectors file (default: <embeddings-dir>/transformer.vec)
    #[arg(long)]
    external_embeddings: Option<PathBuf>,
    #[arg(long)]
    system: Option<System>,
    #[arg(long)]
    split: Option<Split>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Disable runner-up replacement
    #[arg(long)]
    no_replacement: bool,
    /// Summarizer command speaking JSON lines on stdin/stdout
    #[arg(long)]
    summarizer: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Overrides {
    fn resolve(self) -> Result<RunConfig, CommandError> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        let p = &mut config.paths;
        p.train = self.train.or(p.train.take());
        p.dev = self.dev.or(p.dev.take());
        p.test = self.test.or(p.test.take());
        p.external_embeddings = self.external_embeddings.or(p.external_embeddings.take());
        if let Some(d) = self.embeddings_dir {
            p.embeddings_dir = d;
        }
        if let Some(d) = self.summaries_dir {
            p.summaries_dir = d;
        }
        if let Some(d) = self.output_dir {
            p.output_dir = d;
        }
        if let Some(system) = self.system {
            if system.metric().is_distance() != config.system.metric().is_distance() {
                config.rule.mode = system.default_rule().mode;
            }
            config.system = system;
        }
        if let Some(split) = self.split {
            config.split = split;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(e) = self.epsilon {
            config.rule.epsilon = e;
        }
        if let Some(d) = self.delta {
            config.rule.delta = d;
        }
        if self.no_replacement {
            config.rule.replacement_enabled = false;
        }
        if self.summarizer.is_some() {
            config.summarizer_command = self.summarizer;
        }
        if let Some(t) = self.threads {
            config.word2vec.threads = t;
            config.glove.threads = t;
        }
        Ok(config)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainKind {
    Word2vec,
    Glove,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Summarize every explanation and write one JSON file per question
    Prepare(Overrides),
    /// Train word2vec and/or GloVe vectors on questions, answers and summaries
    TrainEmbeddings {
        #[arg(long, value_enum, default_value = "all")]
        kind: TrainKind,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Score, label and (if gold labels exist) evaluate one split
    Predict(Overrides),
    /// Evaluate a predictions CSV against a labeled dataset file
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "dev")]
        split: Split,
        /// Scores CSV for the higher-score distribution table
        #[arg(long)]
        scores: Option<PathBuf>,
    },
    /// Sweep the replacement threshold and keep the best macro-F1
    Sweep {
        /// Comma list or start:stop:step
        #[arg(long)]
        grid: String,
        /// Splits to pool for the sweep
        #[arg(long, value_delimiter = ',', default_value = "train,dev")]
        on: Vec<Split>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn run(cli: Cli) -> Result<(), CommandError> {
    match cli.command {
        Command::Prepare(o) => {
            for r in cmd_prepare(&o.resolve()?)? {
                println!(
                    "{}: {} candidates, {} questions -> {}",
                    r.split,
                    r.candidates,
                    r.questions,
                    r.directory.display()
                );
            }
        }
        Command::TrainEmbeddings { kind, overrides } => {
            let sources: &[EmbeddingSource] = match kind {
                TrainKind::Word2vec => &[EmbeddingSource::Word2vec],
                TrainKind::Glove => &[EmbeddingSource::Glove],
                TrainKind::All => &[EmbeddingSource::Word2vec, EmbeddingSource::Glove],
            };
            for r in cmd_train_embeddings(&overrides.resolve()?, sources)? {
                let last = r.epoch_loss.last().copied().unwrap_or(f64::NAN);
                println!(
                    "{:?}: {} words, final epoch loss {last:.6} -> {}",
                    r.source,
                    r.vocab_size,
                    r.path.display()
                );
            }
        }
        Command::Predict(o) => {
            let out = cmd_predict(&o.resolve()?)?;
            println!("predictions -> {}", out.predictions_path.display());
            if let Some(report) = &out.report {
                print!(
                    "{}",
                    render_results_table(&[(out.provenance.system.as_str(), report)])
                );
            }
            if let Some(table) = &out.distribution {
                print!("{}", table.to_text(&format!("{} set counts:", out.provenance.split)));
            }
        }
        Command::Evaluate {
            predictions,
            dataset,
            split,
            scores,
        } => {
            let out = cmd_evaluate(&predictions, &dataset, split, scores.as_deref())?;
            print!("{}", render_results_table(&[("predictions", &out.report)]));
            if let Some(table) = &out.distribution {
                print!("{}", table.to_text(&format!("{split} set counts:")));
            }
        }
        Command::Sweep {
            grid,
            on,
            overrides,
        } => {
            let grid = parse_grid(&grid)?;
            let config = overrides.resolve()?;
            let out = cmd_sweep(&config, &grid, &on)?;
            println!(
                "best threshold {} (macro-F1 {:.4})",
                out.sweep.best_threshold, out.sweep.best_f1
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
