//! `pgpo`: corpus generation, training runs, batch verification and
//! reporting.
//!
//! Exit codes: 0 success, 1 validation error (bad flags, config or input
//! records under `--strict`), 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use pgpo_core::harness::{self, RunConfig};
use pgpo_core::{Error, Variant};

#[derive(Debug, Parser)]
#[command(name = "pgpo", version, about = "Process-gated policy optimization experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// TOML run config. Unset keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated variant list, e.g. GRPO,PGPO.
    #[arg(long, global = true, value_delimiter = ',')]
    variant: Option<Vec<Variant>>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Treat unparseable or unknown verify records as a failure.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write tables, queries and gold chains (plus perturbed chains if configured).
    GenCorpus {
        /// Corpus directory. Defaults to `<out>/corpus`.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Train every configured variant on identical seeds.
    Train,
    /// Score `{query_id, text}` JSONL records against a corpus.
    Verify {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Defaults to `<input>.breakdowns.jsonl`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build the comparison table and curve CSV.
    Report {
        /// Run directories. Defaults to the variant directories under `<out>`.
        runs: Vec<PathBuf>,
        /// Where report.md and curves.csv go. Defaults to `<out>`.
        #[arg(long)]
        to: Option<PathBuf>,
    },
    /// Print the resolved config as TOML.
    PrintConfig,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn resolve(g: &Global) -> Result<RunConfig, Failure> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p).map_err(|e| Failure::Validation(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(v) = &g.variant {
        cfg.variants = v.clone();
    }
    if let Some(s) = g.steps {
        cfg.steps = s;
    }
    if let Some(o) = &g.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("summary serializes")
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = resolve(&cli.global)?;
    match cli.command {
        Command::PrintConfig => print!("{}", cfg.to_toml()),
        Command::GenCorpus { dir } => {
            let dir = dir.unwrap_or_else(|| cfg.out.join("corpus"));
            println!("{}", json(&harness::gen_corpus(&cfg, &dir)?));
        }
        Command::Train => {
            for v in &cfg.variants {
                let art = harness::train_variant(&cfg, *v)?;
                let last = art.reports.last();
                eprintln!(
                    "{}: {} steps, terminal reward {}",
                    v,
                    art.reports.len(),
                    last.map_or("n/a".into(), |r| format!("{:.4}", r.mean_reward))
                );
                println!("{}", art.dir.display());
            }
        }
        Command::Verify { corpus, input, output } => {
            let output = output.unwrap_or_else(|| {
                let mut s = input.clone().into_os_string();
                s.push(".breakdowns.jsonl");
                s.into()
            });
            let summary = harness::verify_file(&corpus, &input, &output, &cfg.reward)?;
            println!("{}", json(&summary));
            if cli.global.strict && summary.errors > 0 {
                return Err(Failure::Validation(format!(
                    "{} record(s) could not be verified",
                    summary.errors
                )));
            }
        }
        Command::Report { runs, to } => {
            let runs = if runs.is_empty() {
                harness::discover_runs(&cfg.out)
            } else {
                runs
            };
            let report = harness::build_report(&runs);
            let (md, csv) = report.write(to.as_deref().unwrap_or(&cfg.out))?;
            print!("{}", report.to_markdown());
            eprintln!("wrote {} and {}", md.display(), csv.display());
            if report.rows.is_empty() {
                return Err(Failure::Runtime("no completed runs to report".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
