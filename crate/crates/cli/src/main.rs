//! `disclose`: batch detection, evaluation, abstraction, rating, corpus tools and the API server.
//!
//! A successful run ends stdout with a one-line JSON summary. Failures print a JSON error
//! to stderr with exit code 2 (input), 3 (plugin) or 4 (provider).

mod commands;
mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use disclose_core::abstraction::Strategy;
use disclose_core::config::AppConfig;
use disclose_core::corpus::SplitSizes;
use disclose_core::detect::SegmentStrategy;
use disclose_core::Layer;

use crate::commands::*;
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "disclose", version, about = "Self-disclosure detection and abstraction toolkit")]
struct Cli {
    /// TOML config file. DISCLOSE_* environment variables override it.
    #[arg(long, global = true, env = "DISCLOSE_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Sampling,
    #[value(alias = "end_to_end", alias = "e2e")]
    EndToEnd,
    Iterative,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Sampling => Strategy::Sampling,
            StrategyArg::EndToEnd => Strategy::EndToEnd,
            StrategyArg::Iterative => Strategy::Iterative,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LayerArg {
    Gold,
    Predicted,
}

#[derive(Subcommand)]
enum Command {
    /// Detect disclosure spans in documents (JSONL of Document records).
    Detect {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// whole | words256 | words128 | words64 | sentence
        #[arg(long)]
        strategy: Option<SegmentStrategy>,
        /// Use the gold spans in this file as the tagger (upper-bound runs).
        #[arg(long)]
        oracle_gold: Option<PathBuf>,
    },
    /// Score predicted spans against gold spans.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Documents, needed for token-level F1.
        #[arg(long)]
        docs: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        /// Also write the text table here.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Generate abstraction candidates for each span.
    Abstract {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        docs: PathBuf,
        #[arg(long, value_enum, default_value = "end-to-end")]
        strategy: StrategyArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        with_thought: bool,
    },
    /// Rate the importance of each span in its thread context.
    Rate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        threads: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        with_thought: bool,
    },
    /// Corpus ingestion, filtering and splitting.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Build a teacher-labelled abstraction corpus. Resumes an existing output file.
    Distill {
        #[arg(long)]
        docs: PathBuf,
        /// Gold spans to abstract.
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        temperature: f64,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        host: Option<String>,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Convert a directory of .txt/.ann pairs to document and span JSONL.
    IngestBrat {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value = "gold")]
        annotator: String,
        #[arg(long, value_enum, default_value = "gold")]
        layer: LayerArg,
        #[arg(long)]
        docs_out: PathBuf,
        #[arg(long)]
        spans_out: PathBuf,
    },
    /// Drop NSFW, removed and non-English posts.
    FilterReddit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// JSON object mapping post id to English score.
        #[arg(long)]
        lang_scores: Option<PathBuf>,
        /// Keep a seeded sample of this many posts.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Keep first-person human turns.
    FilterSharegpt {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split thread records into train/dev/test.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, requires_all = ["dev", "test"], conflicts_with = "ratios")]
        train: Option<usize>,
        #[arg(long)]
        dev: Option<usize>,
        #[arg(long)]
        test: Option<usize>,
        /// train,dev,test fractions, e.g. 0.8,0.1,0.1
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Split by this numeric field instead of shuffling; test gets the newest.
        #[arg(long)]
        time_field: Option<String>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = AppConfig::resolve(cli.config.as_deref())?;
    let summary = match cli.command {
        Command::Detect {
            input,
            out,
            strategy,
            oracle_gold,
        } => detect(
            &cfg,
            DetectArgs {
                input,
                out,
                strategy,
                oracle_gold,
            },
        )?,
        Command::Eval {
            pred,
            gold,
            docs,
            report,
            table,
        } => {
            let (summary, text) = eval(EvalArgs {
                pred,
                gold,
                docs,
                report,
                table,
            })?;
            print!("{text}");
            summary
        }
        Command::Abstract {
            input,
            docs,
            strategy,
            out,
            with_thought,
        } => abstract_spans(
            &cfg,
            AbstractArgs {
                input,
                docs,
                strategy: strategy.into(),
                out,
                with_thought,
            },
        )?,
        Command::Rate {
            input,
            threads,
            out,
            with_thought,
        } => rate(
            &cfg,
            RateArgs {
                input,
                threads,
                out,
                with_thought,
            },
        )?,
        Command::Corpus(c) => corpus(c)?,
        Command::Distill {
            docs,
            gold,
            out,
            temperature,
        } => distill(
            &cfg,
            DistillArgs {
                docs,
                gold,
                out,
                temperature,
            },
        )?,
        Command::Serve { port, host } => {
            if let Some(p) = port {
                cfg.service.port = p;
            }
            if let Some(h) = host {
                cfg.service.host = h;
            }
            serve(&cfg)?
        }
    };
    println!("{summary}");
    Ok(())
}

fn corpus(c: CorpusCommand) -> CliResult<serde_json::Value> {
    match c {
        CorpusCommand::IngestBrat {
            dir,
            annotator,
            layer,
            docs_out,
            spans_out,
        } => ingest_brat(IngestBratArgs {
            dir,
            annotator,
            layer: match layer {
                LayerArg::Gold => Layer::Gold,
                LayerArg::Predicted => Layer::Predicted,
            },
            docs_out,
            spans_out,
        }),
        CorpusCommand::FilterReddit {
            input,
            out,
            report,
            lang_scores,
            sample,
            seed,
        } => filter_reddit(FilterRedditArgs {
            input,
            out,
            report,
            lang_scores,
            sample,
            seed,
        }),
        CorpusCommand::FilterSharegpt { input, out } => filter_sharegpt(&input, &out),
        CorpusCommand::Split {
            input,
            out_dir,
            train,
            dev,
            test,
            ratios,
            seed,
            time_field,
        } => {
            let sizes = match (train, dev, test, ratios) {
                (Some(train), Some(dev), Some(test), None) => SplitSizes::Counts { train, dev, test },
                (None, None, None, Some(r)) if r.len() == 3 => SplitSizes::Ratios {
                    train: r[0],
                    dev: r[1],
                    test: r[2],
                },
                _ => return Err(CliError::input("give --train/--dev/--test counts or --ratios")),
            };
            split(SplitArgs {
                input,
                out_dir,
                sizes,
                seed,
                time_field,
            })
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        log::error!("{e}");
        eprintln!("{}", e.summary());
        std::process::exit(e.kind.exit_code());
    }
}
