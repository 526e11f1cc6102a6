//! `synroute`: generate route corpora, build building-block indexes,
//! benchmark responses, run inference and reconstruct routes.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use synroute_core::RouteShape;

use config::{FileConfig, Overrides, RunConfig};
use error::{CliError, Outcome};

#[derive(Debug, Parser)]
#[command(
    name = "synroute",
    version,
    about = "Synthesis-route data, validation and reconstruction"
)]
struct Cli {
    /// Versioned TOML config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Building-block library (SMILES<TAB>id per line).
    #[arg(long, global = true)]
    library: Option<PathBuf>,
    /// Reaction templates (id<TAB>name<TAB>SMARTS per line).
    #[arg(long, global = true)]
    templates: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads and in-flight requests.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample routes and write prompt/response training pairs as JSON lines.
    GenData {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value = "linear")]
        shape: RouteShape,
        /// Instruction text file for the prompts.
        #[arg(long)]
        instruction: Option<PathBuf>,
        /// Output file (default: <out>/corpus.jsonl).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build one retrieval index per (template, slot).
    BuildIndex {
        /// Directory for the index files (default: <out>/index).
        #[arg(long)]
        index_dir: Option<PathBuf>,
    },
    /// Benchmark a file of responses and write the metric report.
    Validate { responses: PathBuf },
    /// Query a backend for every target under a sampling plan.
    Infer {
        /// One target SMILES per line.
        targets: PathBuf,
        #[command(flatten)]
        task: TaskArgs,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Execute predicted routes against the library.
    Reconstruct {
        responses: PathBuf,
        #[command(flatten)]
        task: TaskArgs,
        /// Load indexes from here instead of building them in memory.
        #[arg(long)]
        index_dir: Option<PathBuf>,
    },
    /// infer, validate and reconstruct in one run.
    Pipeline {
        targets: PathBuf,
        #[command(flatten)]
        task: TaskArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long)]
        index_dir: Option<PathBuf>,
        /// Print the resolved configuration and request count, then stop.
        #[arg(long)]
        dry_run: bool,
    },
}

#[derive(Debug, Args, Default)]
struct TaskArgs {
    /// llm-benchmark, synthesis-planning, synthesizable-analog or hit-expansion.
    #[arg(long)]
    task: Option<String>,
    /// frozen-only, low-only, medium-only, high-only, frugal or greedy.
    #[arg(long)]
    plan: Option<String>,
    /// Neighbors per retriever.
    #[arg(long)]
    k: Option<usize>,
    /// Routes kept per response.
    #[arg(long)]
    n_syn: Option<usize>,
}

#[derive(Debug, Args, Default)]
struct BackendArgs {
    /// Directory of canned responses.
    #[arg(long)]
    mock_dir: Option<PathBuf>,
    /// HTTP completion endpoint.
    #[arg(long)]
    endpoint: Option<String>,
    /// plain or openai-chat.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    timeout_secs: Option<u64>,
    #[arg(long)]
    instruction: Option<PathBuf>,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        let mut o = Overrides {
            library: self.library.clone(),
            templates: self.templates.clone(),
            out: self.out.clone(),
            seed: self.seed,
            jobs: self.jobs,
            ..Default::default()
        };
        let (task, backend) = match &self.command {
            Command::GenData { instruction, .. } => {
                o.instruction = instruction.clone();
                (None, None)
            }
            Command::Infer { task, backend, .. } | Command::Pipeline { task, backend, .. } => {
                (Some(task), Some(backend))
            }
            Command::Reconstruct { task, .. } => (Some(task), None),
            Command::BuildIndex { .. } | Command::Validate { .. } => (None, None),
        };
        if let Some(t) = task {
            o.task = t.task.clone();
            o.plan = t.plan.clone();
            o.k = t.k;
            o.n_syn = t.n_syn;
        }
        if let Some(b) = backend {
            o.mock_dir = b.mock_dir.clone();
            o.url = b.endpoint.clone();
            o.format = b.format.clone();
            o.model = b.model.clone();
            o.timeout_secs = b.timeout_secs;
            o.instruction = b.instruction.clone();
        }
        o
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let file = cli.config.as_deref().map(FileConfig::load).transpose()?;
    let cfg = RunConfig::resolve(&cli.overrides(), file.as_ref())?;
    // Ignore the error when a pool already exists (only in tests).
    let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build_global();
    match cli.command {
        Command::GenData { n, shape, output, .. } => commands::gen_data(&cfg, n, shape, output),
        Command::BuildIndex { index_dir } => commands::build_index(&cfg, index_dir),
        Command::Validate { responses } => commands::validate(&cfg, &responses),
        Command::Infer { targets, .. } => commands::infer(&cfg, &targets),
        Command::Reconstruct {
            responses, index_dir, ..
        } => commands::reconstruct(&cfg, &responses, index_dir.as_deref()),
        Command::Pipeline {
            targets,
            index_dir,
            dry_run,
            ..
        } => commands::pipeline(&cfg, &targets, index_dir.as_deref(), dry_run),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            if let Outcome::Partial(msg) = &outcome {
                eprintln!("warning: {msg}");
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
