//! Subcommand bodies. Each returns an [`Outcome`] when it ran to the end
//! and a [`CliError`] when it could not.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use synroute_chem::parse_smiles;
use synroute_core::llm::{run_task, InferenceRecord};
use synroute_core::reconstruct::{batch_reconstruct, BatchSummary, ResponseRecord, TargetSummary};
use synroute_core::{
    benchmark_corpus, BenchmarkReport, BuildingBlockLibrary, CompatibilityTable, GeneratorConfig, IndexSet,
    ReconContext, ReconstructionConfig, RouteGenerator, RouteShape, TemplateSet,
};

use crate::config::RunConfig;
use crate::error::{CliError, Outcome};
use crate::io::{jsonl, load_records, load_targets, pretty, write_atomic, InputRecord};

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const INDEX_DIR: &str = "index";
pub const RESPONSES_FILE: &str = "responses.jsonl";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const TARGETS_DIR: &str = "targets";

fn load_library(cfg: &RunConfig) -> Result<BuildingBlockLibrary, CliError> {
    let path = cfg.library_path()?;
    BuildingBlockLibrary::load(path).map_err(|e| CliError::Usage(format!("library {}: {e}", path.display())))
}

fn load_templates(cfg: &RunConfig) -> Result<TemplateSet, CliError> {
    let path = cfg.templates_path()?;
    TemplateSet::load(path).map_err(|e| CliError::Usage(format!("templates {}: {e}", path.display())))
}

pub fn gen_data(cfg: &RunConfig, n: usize, shape: RouteShape, output: Option<PathBuf>) -> Result<Outcome, CliError> {
    let library = load_library(cfg)?;
    let templates = load_templates(cfg)?;
    let instruction = cfg.instruction_text()?;
    let table = CompatibilityTable::new(&library, &templates);
    table.fill_all();
    let generator = RouteGenerator::new(&table, GeneratorConfig::default());
    let pairs = generator
        .generate_corpus(n, cfg.seed, shape, &instruction)
        .context("generating routes")?;
    let path = output.unwrap_or_else(|| cfg.out.join(CORPUS_FILE));
    write_atomic(&path, &jsonl(&pairs))?;
    println!("wrote {} {shape:?} route(s) to {}", pairs.len(), path.display());
    Ok(Outcome::Complete)
}

pub fn build_index(cfg: &RunConfig, dir: Option<PathBuf>) -> Result<Outcome, CliError> {
    let library = load_library(cfg)?;
    let templates = load_templates(cfg)?;
    let set = IndexSet::build(&library, &templates);
    for &(t, s) in set.empty_slots() {
        eprintln!(
            "warning: template {} slot {s} has no compatible building blocks; skipped",
            templates.get(t).id
        );
    }
    let dir = dir.unwrap_or_else(|| cfg.out.join(INDEX_DIR));
    // Stale files from an earlier build of a now-empty slot would be picked
    // up by a later load.
    for &(t, s) in set.empty_slots() {
        let stale = dir.join(IndexSet::file_name(&templates.get(t).id, s));
        if stale.exists() {
            std::fs::remove_file(&stale).with_context(|| format!("removing {}", stale.display()))?;
        }
    }
    let paths = set.save_dir(&templates, &dir).context("writing indexes")?;
    println!("wrote {} index file(s) to {}", paths.len(), dir.display());
    Ok(Outcome::Complete)
}

fn responses_text(records: &[InputRecord]) -> Vec<String> {
    // A failed inference counts as an invalid response.
    records.iter().map(|r| r.response.clone().unwrap_or_default()).collect()
}

fn write_report(report: &BenchmarkReport, out: &Path) -> Result<(), CliError> {
    let mut json = report.to_json();
    if !json.ends_with('\n') {
        json.push('\n');
    }
    write_atomic(&out.join(REPORT_JSON), json.as_bytes())?;
    write_atomic(&out.join(REPORT_TXT), report.to_table().as_bytes())?;
    Ok(())
}

pub fn validate(cfg: &RunConfig, responses: &Path) -> Result<Outcome, CliError> {
    let templates = load_templates(cfg)?;
    let records = load_records(responses)?;
    let report = benchmark_corpus(&responses_text(&records), &templates);
    write_report(&report, &cfg.out)?;
    print!("{}", report.to_table());
    Ok(Outcome::Complete)
}

pub fn infer(cfg: &RunConfig, targets: &Path) -> Result<Outcome, CliError> {
    let targets = load_targets(targets)?;
    let records = run_inference(cfg, &targets)?;
    write_atomic(&cfg.out.join(RESPONSES_FILE), &jsonl(&records))?;
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    println!(
        "{} response(s) for {} target(s), {failed} failed; wrote {}",
        records.len(),
        targets.len(),
        cfg.out.join(RESPONSES_FILE).display()
    );
    Ok(if failed > 0 {
        Outcome::Partial(format!("{failed} inference(s) failed"))
    } else {
        Outcome::Complete
    })
}

fn run_inference(cfg: &RunConfig, targets: &[String]) -> Result<Vec<InferenceRecord>, CliError> {
    let backend = cfg.make_backend()?;
    let instruction = cfg.instruction_text()?;
    Ok(run_task(
        targets,
        &cfg.sampling_plan(),
        &instruction,
        backend.as_ref(),
        cfg.jobs,
    ))
}

fn load_indexes(
    templates: &TemplateSet,
    library: &BuildingBlockLibrary,
    dir: Option<&Path>,
) -> Result<IndexSet, CliError> {
    match dir {
        Some(d) => {
            IndexSet::load_dir(templates, d).map_err(|e| CliError::Usage(format!("indexes {}: {e}", d.display())))
        }
        None => Ok(IndexSet::build(library, templates)),
    }
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    k: usize,
    n_syn: usize,
    #[serde(flatten)]
    summary: &'a BatchSummary,
}

/// Runs reconstruction over `records` and writes per-target results plus
/// the summary under `out`. Returns the number of unusable targets.
fn reconstruct_records(
    cfg: &RunConfig,
    records: &[ResponseRecord],
    index_dir: Option<&Path>,
    mut annotate: impl FnMut(usize, &mut TargetSummary),
) -> Result<(BatchSummary, usize), CliError> {
    let library = load_library(cfg)?;
    let templates = load_templates(cfg)?;
    let indexes = load_indexes(&templates, &library, index_dir)?;
    let ctx = ReconContext {
        library: &library,
        templates: &templates,
        indexes: &indexes,
    };
    let rcfg = ReconstructionConfig::new(cfg.k, cfg.n_syn);
    let (mut per_target, summary) = batch_reconstruct(records, &ctx, &rcfg);
    let dir = cfg.out.join(TARGETS_DIR);
    let mut bad_targets = 0;
    for (i, t) in per_target.iter_mut().enumerate() {
        if parse_smiles(&t.target).is_err() {
            bad_targets += 1;
        }
        annotate(i, t);
        write_atomic(&dir.join(format!("{:04}.json", i + 1)), &pretty(t))?;
    }
    let file = SummaryFile {
        k: cfg.k,
        n_syn: cfg.n_syn,
        summary: &summary,
    };
    write_atomic(&cfg.out.join(SUMMARY_JSON), &pretty(&file))?;
    write_atomic(&cfg.out.join(SUMMARY_TXT), summary.to_table().as_bytes())?;
    Ok((summary, bad_targets))
}

pub fn reconstruct(cfg: &RunConfig, responses: &Path, index_dir: Option<&Path>) -> Result<Outcome, CliError> {
    let records = load_records(responses)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| match r.target {
            Some(t) => Ok(ResponseRecord {
                target_smiles: t,
                response: r.response,
            }),
            None => Err(CliError::Usage(format!(
                "{}: record {} has no target",
                responses.display(),
                i + 1
            ))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (summary, bad) = reconstruct_records(cfg, &records, index_dir, |_, _| {})?;
    print!("{}", summary.to_table());
    Ok(if bad > 0 {
        Outcome::Partial(format!("{bad} target(s) are not valid SMILES"))
    } else {
        Outcome::Complete
    })
}

#[derive(Serialize)]
struct DryRun<'a> {
    config: &'a RunConfig,
    targets: usize,
    inferences_per_target: usize,
    requests: usize,
    steps: [&'static str; 3],
}

pub fn pipeline(cfg: &RunConfig, targets: &Path, index_dir: Option<&Path>, dry_run: bool) -> Result<Outcome, CliError> {
    let targets = load_targets(targets)?;
    let per_target = cfg.sampling_plan().total_inferences();
    if dry_run {
        // Fail on the same configuration problems a real run would.
        cfg.library_path()?;
        cfg.templates_path()?;
        cfg.make_backend()?;
        let plan = DryRun {
            config: cfg,
            targets: targets.len(),
            inferences_per_target: per_target,
            requests: targets.len() * per_target,
            steps: ["infer", "validate", "reconstruct"],
        };
        print!("{}", String::from_utf8(pretty(&plan)).expect("utf-8 json"));
        return Ok(Outcome::Complete);
    }
    // Load inputs up front so a bad path fails before any request is sent.
    load_library(cfg)?;
    let templates = load_templates(cfg)?;

    let records = run_inference(cfg, &targets)?;
    write_atomic(&cfg.out.join(RESPONSES_FILE), &jsonl(&records))?;
    let failed = records.iter().filter(|r| r.error.is_some()).count();

    let inputs: Vec<InputRecord> = records
        .iter()
        .map(|r| InputRecord {
            target: Some(r.target_smiles.clone()),
            response: r.response.clone(),
        })
        .collect();
    let report = benchmark_corpus(&responses_text(&inputs), &templates);
    write_report(&report, &cfg.out)?;

    let recon_input: Vec<ResponseRecord> = records
        .iter()
        .map(|r| ResponseRecord {
            target_smiles: r.target_smiles.clone(),
            response: r.response.clone(),
        })
        .collect();
    // Targets are summarized in first-appearance order.
    let mut order: Vec<&str> = Vec::new();
    for r in &records {
        if !order.contains(&r.target_smiles.as_str()) {
            order.push(&r.target_smiles);
        }
    }
    let (summary, bad) = reconstruct_records(cfg, &recon_input, index_dir, |i, t| {
        let errors = records.iter().filter(|r| r.target_smiles == order[i]).filter_map(|r| {
            r.error.as_ref().map(|e| {
                format!(
                    "inference T={} top_p={} repeat={}: {e}",
                    r.temperature, r.top_p, r.repeat
                )
            })
        });
        t.diagnostics.extend(errors);
    })?;

    println!("{} response(s), {failed} failed inference(s)", records.len());
    print!("{}", report.to_table());
    print!("{}", summary.to_table());
    let mut problems = Vec::new();
    if failed > 0 {
        problems.push(format!("{failed} inference(s) failed"));
    }
    if bad > 0 {
        problems.push(format!("{bad} target(s) are not valid SMILES"));
    }
    Ok(if problems.is_empty() {
        Outcome::Complete
    } else {
        Outcome::Partial(problems.join("; "))
    })
}
