//! Template sets loaded from TSV files with columns `id`, `name`, `smirks`.

use std::collections::HashMap;
use std::path::Path;

use synroute_chem::{ChemError, ReactionTemplate};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("cannot read templates {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("template line {line}: expected 3 tab-separated columns, found {found}")]
    Columns { line: usize, found: usize },
    #[error("template line {line} ({id}): {source}")]
    Parse {
        line: usize,
        id: String,
        #[source]
        source: ChemError,
    },
    #[error("duplicate template id {0}")]
    DuplicateId(String),
    #[error("template set is empty")]
    Empty,
}

/// Whitespace-free form used for string equality of templates.
pub fn normalize_template_text(text: &str) -> String {
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

#[derive(Debug, Clone, Default)]
pub struct TemplateSet {
    templates: Vec<ReactionTemplate>,
    by_text: HashMap<String, usize>,
    by_id: HashMap<String, usize>,
}

impl TemplateSet {
    pub fn new(templates: Vec<ReactionTemplate>) -> Result<Self, TemplateError> {
        let mut set = TemplateSet::default();
        for t in templates {
            set.push(t)?;
        }
        Ok(set)
    }

    fn push(&mut self, t: ReactionTemplate) -> Result<(), TemplateError> {
        if self.by_id.contains_key(&t.id) {
            return Err(TemplateError::DuplicateId(t.id.clone()));
        }
        let idx = self.templates.len();
        self.by_id.insert(t.id.clone(), idx);
        self.by_text
            .entry(normalize_template_text(t.smarts_text()))
            .or_insert(idx);
        self.templates.push(t);
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let mut set = TemplateSet::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(TemplateError::Columns {
                    line: n + 1,
                    found: cols.len(),
                });
            }
            let (id, name, smirks) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
            let t = ReactionTemplate::new(id, name, smirks).map_err(|source| TemplateError::Parse {
                line: n + 1,
                id: id.to_string(),
                source,
            })?;
            set.push(t)?;
        }
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self, TemplateError> {
        let text = std::fs::read_to_string(path).map_err(|source| TemplateError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let set = Self::parse(&text)?;
        if set.is_empty() {
            return Err(TemplateError::Empty);
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn templates(&self) -> &[ReactionTemplate] {
        &self.templates
    }

    pub fn get(&self, idx: usize) -> &ReactionTemplate {
        &self.templates[idx]
    }

    pub fn index_of_id(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    /// Template whose SMIRKS equals `text` after whitespace removal.
    pub fn index_of_text(&self, text: &str) -> Option<usize> {
        self.by_text.get(&normalize_template_text(text)).copied()
    }

    /// Every (template index, slot) pair in set order.
    pub fn slots(&self) -> Vec<(usize, usize)> {
        self.templates
            .iter()
            .enumerate()
            .flat_map(|(t, tpl)| (0..tpl.num_slots()).map(move |s| (t, s)))
            .collect()
    }
}
