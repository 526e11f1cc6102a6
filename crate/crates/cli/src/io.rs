//! Input readers and output writers shared by the subcommands.

use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// One line of a responses file. Inference records carry
/// `target_smiles`/`response`, training pairs `input`/`output`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputRecord {
    pub target: Option<String>,
    /// None when the line records a failed inference.
    pub response: Option<String>,
}

fn read(path: &Path, what: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {what} {}: {e}", path.display())))
}

/// One SMILES per line (first whitespace-separated field); blank lines and
/// '#' comments skipped.
pub fn load_targets(path: &Path) -> Result<Vec<String>, CliError> {
    Ok(read(path, "targets")?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_whitespace().next().map(str::to_string))
        .collect())
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, names: [&str; 2]) -> Option<&'a Value> {
    names.iter().find_map(|n| obj.get(*n))
}

pub fn parse_records(text: &str) -> Result<Vec<InputRecord>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(line).map_err(|e| format!("line {}: {e}", n + 1))?;
        let Value::Object(obj) = v else {
            return Err(format!("line {}: expected a JSON object", n + 1));
        };
        let target = match field(&obj, ["target_smiles", "input"]) {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(format!("line {}: target is not a string", n + 1)),
        };
        let response = match field(&obj, ["response", "output"]) {
            None => return Err(format!("line {}: no `response` or `output` field", n + 1)),
            Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(format!("line {}: response is not a string", n + 1)),
        };
        out.push(InputRecord { target, response });
    }
    Ok(out)
}

pub fn load_records(path: &Path) -> Result<Vec<InputRecord>, CliError> {
    parse_records(&read(path, "responses")?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).expect("serializable");
        buf.push(b'\n');
    }
    buf
}

pub fn pretty<T: Serialize>(item: &T) -> Vec<u8> {
    let mut buf = serde_json::to_vec_pretty(item).expect("serializable");
    buf.push(b'\n');
    buf
}

/// Writes through a temporary sibling and renames, so an interrupted run
/// never leaves a half-written file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", path.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}
