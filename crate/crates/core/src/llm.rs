//! Boundary to a text-generation endpoint: prompts, sampling plans, task
//! defaults, backends and batched dispatch.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Generation length requested from backends.
pub const DEFAULT_MAX_TOKENS: u32 = 2048;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend returned status {status}: {body}")]
    Backend { status: u16, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("unknown sampling plan {0:?}")]
    UnknownPlan(String),
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("empty target SMILES")]
    EmptyTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSetting {
    pub temperature: f64,
    pub top_p: f64,
    pub repeats: u32,
}

const FROZEN: (f64, f64) = (0.1, 0.1);
const LOW: (f64, f64) = (0.6, 0.5);
const MEDIUM: (f64, f64) = (1.0, 0.7);
const HIGH: (f64, f64) = (1.5, 0.9);

fn setting((temperature, top_p): (f64, f64), repeats: u32) -> SamplingSetting {
    SamplingSetting {
        temperature,
        top_p,
        repeats,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub name: String,
    pub settings: Vec<SamplingSetting>,
}

pub const PLAN_NAMES: [&str; 6] = [
    "frozen-only",
    "low-only",
    "medium-only",
    "high-only",
    "frugal",
    "greedy",
];

pub fn sampling_plan(name: &str) -> Result<SamplingPlan, LlmError> {
    let settings = match name {
        "frozen-only" => vec![setting(FROZEN, 1)],
        "low-only" => vec![setting(LOW, 5)],
        "medium-only" => vec![setting(MEDIUM, 5)],
        "high-only" => vec![setting(HIGH, 5)],
        "frugal" => vec![
            setting(FROZEN, 1),
            setting(LOW, 1),
            setting(MEDIUM, 1),
            setting(HIGH, 1),
        ],
        "greedy" => vec![
            setting(FROZEN, 1),
            setting(LOW, 2),
            setting(MEDIUM, 3),
            setting(HIGH, 4),
        ],
        _ => return Err(LlmError::UnknownPlan(name.to_string())),
    };
    Ok(SamplingPlan {
        name: name.to_string(),
        settings,
    })
}

impl SamplingPlan {
    pub fn total_inferences(&self) -> usize {
        self.settings.iter().map(|s| s.repeats as usize).sum()
    }

    /// (setting, repeat index) in dispatch order.
    pub fn expand(&self) -> Vec<(SamplingSetting, u32)> {
        self.settings
            .iter()
            .flat_map(|s| (0..s.repeats).map(move |r| (*s, r)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    LlmBenchmark,
    SynthesisPlanning,
    SynthesizableAnalog,
    HitExpansion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskDefaults {
    pub plan: &'static str,
    pub k: usize,
    pub n_syn: usize,
}

impl Task {
    pub const ALL: [Task; 4] = [
        Task::LlmBenchmark,
        Task::SynthesisPlanning,
        Task::SynthesizableAnalog,
        Task::HitExpansion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::LlmBenchmark => "llm-benchmark",
            Task::SynthesisPlanning => "synthesis-planning",
            Task::SynthesizableAnalog => "synthesizable-analog",
            Task::HitExpansion => "hit-expansion",
        }
    }

    pub fn defaults(self) -> TaskDefaults {
        match self {
            Task::LlmBenchmark => TaskDefaults {
                plan: "frozen-only",
                k: 5,
                n_syn: 25,
            },
            Task::SynthesisPlanning => TaskDefaults {
                plan: "greedy",
                k: 5,
                n_syn: 25,
            },
            Task::SynthesizableAnalog => TaskDefaults {
                plan: "high-only",
                k: 10,
                n_syn: 50,
            },
            Task::HitExpansion => TaskDefaults {
                plan: "high-only",
                k: 20,
                n_syn: 100,
            },
        }
    }
}

impl std::str::FromStr for Task {
    type Err = LlmError;
    fn from_str(s: &str) -> Result<Self, LlmError> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| LlmError::UnknownTask(s.to_string()))
    }
}

/// Instruction followed by an input section holding the target.
pub fn build_prompt(target: &str, instruction: &str) -> Result<String, LlmError> {
    let target = target.trim();
    if target.is_empty() {
        return Err(LlmError::EmptyTarget);
    }
    Ok(format!(
        "### Instruction:\n{}\n\n### Input:\n{}\n\n### Response:\n",
        instruction.trim_end(),
        target
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub prompt: String,
    pub target: String,
    pub temperature: f64,
    pub top_p: f64,
    pub repeat: u32,
    pub max_tokens: u32,
}

pub trait Backend: Send + Sync {
    fn id(&self) -> String;
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError>;
}

/// Replays canned responses from a directory. The file for a request is
/// `<hex sha256 of "target\ttemperature\ttop_p\trepeat">.txt`.
#[derive(Debug, Clone)]
pub struct MockBackend {
    dir: PathBuf,
}

impl MockBackend {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        MockBackend { dir: dir.into() }
    }

    pub fn key(target: &str, temperature: f64, top_p: f64, repeat: u32) -> String {
        let mut h = Sha256::new();
        h.update(format!("{target}\t{temperature}\t{top_p}\t{repeat}").as_bytes());
        hex::encode(h.finalize())
    }

    pub fn path_for(&self, target: &str, temperature: f64, top_p: f64, repeat: u32) -> PathBuf {
        self.dir
            .join(format!("{}.txt", Self::key(target, temperature, top_p, repeat)))
    }

    /// Stores a canned response.
    pub fn put(&self, target: &str, temperature: f64, top_p: f64, repeat: u32, text: &str) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        std::fs::write(self.path_for(target, temperature, top_p, repeat), text)
    }
}

/// Fills `backend` with canned answers for every request `plan` makes per
/// route target: the route's own response on the first and every other
/// request, a corrupted copy (faults applied in rotation) on the rest.
/// Returns the targets in route order.
pub fn populate_mock(
    backend: &MockBackend,
    routes: &[crate::route::SynthesisRoute],
    plan: &SamplingPlan,
    templates: &crate::templates::TemplateSet,
) -> std::io::Result<Vec<String>> {
    use crate::validate::faults;
    let mut targets = Vec::with_capacity(routes.len());
    let mut rotation = 0usize;
    for route in routes {
        let exact = route.to_response().raw_text;
        for (j, (s, r)) in plan.expand().into_iter().enumerate() {
            let text = if j % 2 == 0 {
                exact.clone()
            } else {
                let fault = faults::ALL[rotation % faults::ALL.len()];
                rotation += 1;
                faults::apply(fault, &exact, templates).unwrap_or_else(|| exact.clone())
            };
            backend.put(&route.final_product, s.temperature, s.top_p, r, &text)?;
        }
        targets.push(route.final_product.clone());
    }
    Ok(targets)
}

impl Backend for MockBackend {
    fn id(&self) -> String {
        "mock".to_string()
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let path = self.path_for(&req.target, req.temperature, req.top_p, req.repeat);
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(LlmError::Backend {
                status: 404,
                body: format!("no canned response {}", path.display()),
            }),
            Err(e) => Err(LlmError::Transport(e.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WireFormat {
    /// `{prompt, temperature, top_p, max_tokens}` in, `{"text": ...}` out.
    Plain,
    /// Chat-completions style: one user message, first choice's content.
    OpenaiChat,
}

#[derive(Debug, Clone)]
pub struct HttpBackend {
    pub url: String,
    pub token: Option<String>,
    pub timeout: Duration,
    pub format: WireFormat,
    pub model: Option<String>,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct PlainRequest<'a> {
    prompt: &'a str,
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct PlainResponse {
    text: String,
}

impl HttpBackend {
    pub fn new(url: &str, token: Option<String>, timeout: Duration, format: WireFormat, model: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpBackend {
            url: url.to_string(),
            token,
            timeout,
            format,
            model,
            agent,
        }
    }

    fn body(&self, req: &CompletionRequest) -> String {
        match self.format {
            WireFormat::Plain => serde_json::to_string(&PlainRequest {
                prompt: &req.prompt,
                temperature: req.temperature,
                top_p: req.top_p,
                max_tokens: req.max_tokens,
            }),
            WireFormat::OpenaiChat => serde_json::to_string(&serde_json::json!({
                "model": self.model.clone().unwrap_or_default(),
                "messages": [{"role": "user", "content": req.prompt}],
                "temperature": req.temperature,
                "top_p": req.top_p,
                "max_tokens": req.max_tokens,
            })),
        }
        .expect("request serializes")
    }

    fn extract(&self, body: &str) -> Result<String, LlmError> {
        let bad = |m: &str| LlmError::Backend {
            status: 200,
            body: format!("{m}: {body}"),
        };
        match self.format {
            WireFormat::Plain => serde_json::from_str::<PlainResponse>(body)
                .map(|r| r.text)
                .map_err(|_| bad("missing \"text\"")),
            WireFormat::OpenaiChat => {
                let v: serde_json::Value = serde_json::from_str(body).map_err(|_| bad("not JSON"))?;
                v.pointer("/choices/0/message/content")
                    .and_then(|c| c.as_str())
                    .map(str::to_string)
                    .ok_or_else(|| bad("missing choices[0].message.content"))
            }
        }
    }

    fn send_once(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let mut call = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(t) = &self.token {
            call = call.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = call.send(self.body(req)).map_err(map_ureq)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(map_ureq)?;
        if !(200..300).contains(&status) {
            return Err(LlmError::Backend { status, body: text });
        }
        self.extract(&text)
    }
}

fn map_ureq(e: ureq::Error) -> LlmError {
    match e {
        ureq::Error::Timeout(_) => LlmError::Timeout,
        ureq::Error::StatusCode(status) => LlmError::Backend {
            status,
            body: String::new(),
        },
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => LlmError::Timeout,
        other => LlmError::Transport(other.to_string()),
    }
}

impl Backend for HttpBackend {
    fn id(&self) -> String {
        format!("http:{}", self.url)
    }

    /// One retry on transport failures; backend answers are never retried.
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        match self.send_once(req) {
            Err(LlmError::Transport(_)) => self.send_once(req),
            other => other,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InferenceRecord {
    pub target_smiles: String,
    pub temperature: f64,
    pub top_p: f64,
    pub repeat: u32,
    pub backend: String,
    pub response: Option<String>,
    pub error: Option<String>,
    /// Wall-clock time; not serialized so outputs stay reproducible.
    #[serde(skip)]
    pub latency: Duration,
}

/// Equality ignores latency.
impl PartialEq for InferenceRecord {
    fn eq(&self, o: &Self) -> bool {
        self.target_smiles == o.target_smiles
            && self.temperature == o.temperature
            && self.top_p == o.top_p
            && self.repeat == o.repeat
            && self.backend == o.backend
            && self.response == o.response
            && self.error == o.error
    }
}

/// Runs `plan` for every target with at most `jobs` requests in flight.
/// Records come back target-major in plan order regardless of completion
/// order; failures are recorded and do not stop the run.
pub fn run_task(
    targets: &[String],
    plan: &SamplingPlan,
    instruction: &str,
    backend: &dyn Backend,
    jobs: usize,
) -> Vec<InferenceRecord> {
    let expanded = plan.expand();
    let work: Vec<(usize, SamplingSetting, u32)> = (0..targets.len())
        .flat_map(|t| expanded.iter().map(move |&(s, r)| (t, s, r)))
        .collect();
    let backend_id = backend.id();
    let slots: Vec<Mutex<Option<InferenceRecord>>> = work.iter().map(|_| Mutex::new(None)).collect();
    let next = Mutex::new(0usize);
    let run_one = |(t, s, r): (usize, SamplingSetting, u32)| {
        let target = &targets[t];
        let start = Instant::now();
        let outcome = build_prompt(target, instruction).and_then(|prompt| {
            backend.complete(&CompletionRequest {
                prompt,
                target: target.clone(),
                temperature: s.temperature,
                top_p: s.top_p,
                repeat: r,
                max_tokens: DEFAULT_MAX_TOKENS,
            })
        });
        let (response, error) = match outcome {
            Ok(text) => (Some(text), None),
            Err(e) => (None, Some(e.to_string())),
        };
        InferenceRecord {
            target_smiles: target.clone(),
            temperature: s.temperature,
            top_p: s.top_p,
            repeat: r,
            backend: backend_id.clone(),
            response,
            error,
            latency: start.elapsed(),
        }
    };
    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1).min(work.len().max(1)) {
            scope.spawn(|| loop {
                let i = {
                    let mut n = next.lock().expect("queue lock");
                    let i = *n;
                    *n += 1;
                    i
                };
                if i >= work.len() {
                    break;
                }
                let rec = run_one(work[i]);
                *slots[i].lock().expect("slot lock") = Some(rec);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every job ran"))
        .collect()
}

/// Records grouped by target, in first-appearance order.
pub fn group_by_target(records: &[InferenceRecord]) -> Vec<(String, Vec<&InferenceRecord>)> {
    let mut order = Vec::new();
    let mut map: BTreeMap<&str, Vec<&InferenceRecord>> = BTreeMap::new();
    for r in records {
        map.entry(&r.target_smiles)
            .or_insert_with(|| {
                order.push(r.target_smiles.clone());
                Vec::new()
            })
            .push(r);
    }
    order
        .into_iter()
        .map(|t| {
            let v = map.remove(t.as_str()).unwrap_or_default();
            (t, v)
        })
        .collect()
}
