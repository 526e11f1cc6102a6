//! Run configuration: the versioned TOML file, command-line overrides and
//! per-task defaults, resolved in that order of precedence (flags first).

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use synroute_core::llm::{sampling_plan, Backend, HttpBackend, MockBackend, SamplingPlan, Task, WireFormat};

use crate::error::CliError;

/// Config file versions this build understands.
pub const CONFIG_VERSION: u32 = 1;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TASK: Task = Task::SynthesisPlanning;
pub const DEFAULT_TIMEOUT_SECS: u64 = 120;

/// Instruction used when neither flag nor config names one.
pub const DEFAULT_INSTRUCTION: &str = include_str!("../../../data/instruction.txt");

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub version: u32,
    pub library: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub instruction: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub task: Option<String>,
    pub plan: Option<String>,
    pub k: Option<usize>,
    pub n_syn: Option<usize>,
    #[serde(default)]
    pub backend: FileBackend,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileBackend {
    pub mock_dir: Option<PathBuf>,
    pub url: Option<String>,
    /// Name of the environment variable holding the bearer token.
    pub token_env: Option<String>,
    pub timeout_secs: Option<u64>,
    pub format: Option<String>,
    pub model: Option<String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        // Check the version first so an old or new file gets a clear message
        // rather than an unknown-field error.
        let raw: toml::Table = text.parse().map_err(|e| CliError::Usage(format!("config: {e}")))?;
        match raw.get("version").and_then(|v| v.as_integer()) {
            Some(v) if v == CONFIG_VERSION as i64 => {}
            Some(v) => {
                return Err(CliError::Usage(format!(
                    "config: unsupported version {v} (this build reads version {CONFIG_VERSION})"
                )))
            }
            None => return Err(CliError::Usage("config: missing integer `version`".into())),
        }
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    /// Reads `path`; relative paths inside resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.library,
            &mut cfg.templates,
            &mut cfg.instruction,
            &mut cfg.out,
            &mut cfg.backend.mock_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Values given on the command line; every field optional.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub library: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub instruction: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub task: Option<String>,
    pub plan: Option<String>,
    pub k: Option<usize>,
    pub n_syn: Option<usize>,
    pub mock_dir: Option<PathBuf>,
    pub url: Option<String>,
    pub timeout_secs: Option<u64>,
    pub format: Option<String>,
    pub model: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendConfig {
    None,
    Mock {
        dir: PathBuf,
    },
    Http {
        url: String,
        token_env: Option<String>,
        timeout_secs: u64,
        format: WireFormat,
        model: Option<String>,
    },
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub library: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub instruction: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub jobs: usize,
    pub task: Task,
    pub plan: String,
    pub k: usize,
    pub n_syn: usize,
    pub backend: BackendConfig,
}

fn parse_format(s: &str) -> Result<WireFormat, CliError> {
    match s {
        "plain" => Ok(WireFormat::Plain),
        "openai-chat" => Ok(WireFormat::OpenaiChat),
        _ => Err(CliError::Usage(format!(
            "unknown wire format {s:?} (plain, openai-chat)"
        ))),
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl RunConfig {
    pub fn resolve(flags: &Overrides, file: Option<&FileConfig>) -> Result<Self, CliError> {
        let empty = FileConfig::default();
        let f = file.unwrap_or(&empty);
        let task_name = flags.task.clone().or_else(|| f.task.clone());
        let task = match task_name {
            Some(name) => name.parse::<Task>().map_err(|e| CliError::Usage(e.to_string()))?,
            None => DEFAULT_TASK,
        };
        let defaults = task.defaults();
        let plan = flags
            .plan
            .clone()
            .or_else(|| f.plan.clone())
            .unwrap_or_else(|| defaults.plan.to_string());
        sampling_plan(&plan).map_err(|e| CliError::Usage(e.to_string()))?;
        let k = flags.k.or(f.k).unwrap_or(defaults.k);
        let n_syn = flags.n_syn.or(f.n_syn).unwrap_or(defaults.n_syn);
        if k == 0 || n_syn == 0 {
            return Err(CliError::Usage("k and n_syn must be positive".into()));
        }
        let jobs = flags.jobs.or(f.jobs).unwrap_or_else(default_jobs);
        if jobs == 0 {
            return Err(CliError::Usage("jobs must be positive".into()));
        }

        let fb = &f.backend;
        let url = flags.url.clone().or_else(|| fb.url.clone());
        let mock_dir = flags.mock_dir.clone().or_else(|| fb.mock_dir.clone());
        let backend = match (flags.url.is_some(), flags.mock_dir.is_some()) {
            (true, true) => return Err(CliError::Usage("give either --endpoint or --mock-dir, not both".into())),
            // A flag picks the backend kind even when the file names the other.
            (true, false) => http_backend(url, flags, fb)?,
            (false, true) => BackendConfig::Mock {
                dir: mock_dir.unwrap_or_default(),
            },
            (false, false) => match (url, mock_dir) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Usage(
                        "config names both backend.url and backend.mock_dir".into(),
                    ))
                }
                (Some(u), None) => http_backend(Some(u), flags, fb)?,
                (None, Some(d)) => BackendConfig::Mock { dir: d },
                (None, None) => BackendConfig::None,
            },
        };

        Ok(RunConfig {
            library: flags.library.clone().or_else(|| f.library.clone()),
            templates: flags.templates.clone().or_else(|| f.templates.clone()),
            instruction: flags.instruction.clone().or_else(|| f.instruction.clone()),
            out: flags
                .out
                .clone()
                .or_else(|| f.out.clone())
                .unwrap_or_else(|| PathBuf::from("out")),
            seed: flags.seed.or(f.seed).unwrap_or(DEFAULT_SEED),
            jobs,
            task,
            plan,
            k,
            n_syn,
            backend,
        })
    }

    pub fn library_path(&self) -> Result<&Path, CliError> {
        existing(self.library.as_deref(), "library", "--library")
    }

    pub fn templates_path(&self) -> Result<&Path, CliError> {
        existing(self.templates.as_deref(), "templates", "--templates")
    }

    pub fn sampling_plan(&self) -> SamplingPlan {
        sampling_plan(&self.plan).expect("plan checked during resolution")
    }

    pub fn instruction_text(&self) -> Result<String, CliError> {
        match &self.instruction {
            None => Ok(DEFAULT_INSTRUCTION.to_string()),
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read instruction {}: {e}", p.display()))),
        }
    }

    pub fn make_backend(&self) -> Result<Box<dyn Backend>, CliError> {
        match &self.backend {
            BackendConfig::None => Err(CliError::Usage(
                "no backend configured (use --mock-dir or --endpoint)".into(),
            )),
            BackendConfig::Mock { dir } => {
                if !dir.is_dir() {
                    return Err(CliError::Usage(format!(
                        "mock directory {} does not exist",
                        dir.display()
                    )));
                }
                Ok(Box::new(MockBackend::new(dir.clone())))
            }
            BackendConfig::Http {
                url,
                token_env,
                timeout_secs,
                format,
                model,
            } => {
                let token = match token_env {
                    Some(var) => Some(
                        std::env::var(var).map_err(|_| CliError::Usage(format!("token variable {var} is not set")))?,
                    ),
                    None => None,
                };
                Ok(Box::new(HttpBackend::new(
                    url,
                    token,
                    Duration::from_secs(*timeout_secs),
                    *format,
                    model.clone(),
                )))
            }
        }
    }
}

fn http_backend(url: Option<String>, flags: &Overrides, fb: &FileBackend) -> Result<BackendConfig, CliError> {
    let format = match flags.format.as_deref().or(fb.format.as_deref()) {
        Some(s) => parse_format(s)?,
        None => WireFormat::Plain,
    };
    Ok(BackendConfig::Http {
        url: url.unwrap_or_default(),
        token_env: fb.token_env.clone(),
        timeout_secs: flags.timeout_secs.or(fb.timeout_secs).unwrap_or(DEFAULT_TIMEOUT_SECS),
        format,
        model: flags.model.clone().or_else(|| fb.model.clone()),
    })
}

fn existing<'a>(path: Option<&'a Path>, what: &str, flag: &str) -> Result<&'a Path, CliError> {
    let p = path.ok_or_else(|| CliError::Usage(format!("no {what} given (use {flag} or the config file)")))?;
    if !p.is_file() {
        return Err(CliError::Usage(format!("{what} file {} does not exist", p.display())));
    }
    Ok(p)
}
