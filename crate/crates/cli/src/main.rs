//! `intake`: synthesize, check and evaluate simulated intake corpora.

mod commands;
mod output;

use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use output::{envelope, CliError, Outcome};

#[derive(Parser)]
#[command(name = "intake", version, about = "Simulated psychiatric intake corpora: synthesis and evaluation")]
struct Cli {
    /// Print a JSON envelope instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
pub struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Profile JSON file (one profile or an array) or directory of them.
    #[arg(long)]
    profiles: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `paths.output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `session.workers`.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of sessions and write the corpus.
    Synthesize {
        #[command(flatten)]
        run: RunArgs,
        /// Exit 1 if any session fails.
        #[arg(long)]
        strict: bool,
    },
    /// Diagnostic alignment metrics for a corpus or a truth/pred CSV.
    Evaluate {
        corpus: Option<PathBuf>,
        /// CSV with `truth,pred` columns instead of a corpus.
        #[arg(long, conflicts_with = "corpus")]
        pairs: Option<PathBuf>,
        /// Human unreliability ratings (`record_id,rater_id,score`, 1-5).
        #[arg(long)]
        human: Option<PathBuf>,
        /// Write metrics.json and metrics.txt here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare evaluator configurations on the same profiles and seeds.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated arm configs; each contributes `[agent]` and its backends.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        arms: Vec<PathBuf>,
    },
    /// Check every record against the structural and clinical invariants.
    Validate {
        corpus: PathBuf,
        /// Config whose scale repository to use.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Corpus statistics.
    Stats { corpus: PathBuf },
    /// Copy a corpus, optionally without internal traces.
    Export {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Strip internal reasoning traces.
        #[arg(long)]
        public: bool,
    },
    /// Draw a sample with fixed counts per deception strategy.
    Sample {
        corpus: PathBuf,
        /// Counts for concealment, exaggeration, frankness.
        #[arg(long, value_delimiter = ',', default_values_t = [12, 13, 25])]
        strata: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score transcripts on the five realism dimensions.
    Rate {
        /// Config providing the rater backend.
        #[arg(long)]
        config: PathBuf,
        /// One corpus directory per compared system.
        #[arg(required = true)]
        corpora: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write scripted demo profiles, scripts and configs.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: usize,
        /// Write the two-arm ablation family instead of the mixed corpus.
        #[arg(long)]
        ablation: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synthesize { .. } => "synthesize",
            Command::Evaluate { .. } => "evaluate",
            Command::Ablate { .. } => "ablate",
            Command::Validate { .. } => "validate",
            Command::Stats { .. } => "stats",
            Command::Export { .. } => "export",
            Command::Sample { .. } => "sample",
            Command::Rate { .. } => "rate",
            Command::Fixtures { .. } => "fixtures",
        }
    }
}

fn dispatch(command: Command) -> Result<Outcome, CliError> {
    match command {
        Command::Synthesize { run, strict } => commands::synthesize(&run, strict),
        Command::Evaluate { corpus, pairs, human, out } => {
            commands::evaluate(corpus.as_deref(), pairs.as_deref(), human.as_deref(), out.as_deref())
        }
        Command::Ablate { run, arms } => commands::ablate(&run, &arms),
        Command::Validate { corpus, config } => commands::validate(&corpus, config.as_deref()),
        Command::Stats { corpus } => commands::stats(&corpus),
        Command::Export { corpus, out, public } => commands::export(&corpus, &out, public),
        Command::Sample { corpus, strata, seed, out } => commands::sample(&corpus, &strata, seed, &out),
        Command::Rate { config, corpora, seed, out } => commands::rate(&config, &corpora, seed, out.as_deref()),
        Command::Fixtures { out, count, ablation } => commands::fixtures(&out, count, ablation),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() && std::env::args().any(|a| a == "--json") => {
            let rendered = e.render().to_string();
            let summary = rendered.split("\n\nUsage").next().unwrap_or_default();
            let words: Vec<&str> = summary.trim_start_matches("error: ").split_whitespace().collect();
            let outcome = Err(CliError::usage(words.join(" ")));
            println!("{}", serde_json::to_string_pretty(&envelope("usage", &outcome)).expect("envelope serializes"));
            return ExitCode::from(output::EXIT_CONFIG);
        }
        Err(e) => e.exit(),
    };
    let name = cli.command.name();
    let outcome = dispatch(cli.command);
    // A closed pipe on stdout is not worth a panic.
    let mut stdout = std::io::stdout().lock();
    if cli.json {
        let text = serde_json::to_string_pretty(&envelope(name, &outcome)).expect("envelope serializes");
        let _ = writeln!(stdout, "{text}");
    } else {
        match &outcome {
            Ok(o) => {
                let _ = write!(stdout, "{}", o.text);
            }
            Err(e) => eprintln!("error: {}", e.message),
        }
    }
    ExitCode::from(match &outcome {
        Ok(o) => o.code,
        Err(e) => e.code,
    })
}
