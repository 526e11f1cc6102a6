//! Building-block libraries: one SMILES per line, optionally followed by a
//! tab and an identifier. Blank lines and `#` comments are skipped.

use std::collections::HashMap;
use std::path::Path;

use synroute_chem::{canonical_smiles, morgan_fingerprint, parse_smiles, ChemError, Fingerprint, Molecule};
use thiserror::Error;

/// Width of the fingerprints used for building-block search.
pub const BB_FP_BITS: usize = 256;
/// Radius of the fingerprints used for building-block search.
pub const BB_FP_RADIUS: u32 = 2;

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("cannot read library {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("library line {line}: cannot parse {smiles:?}: {source}")]
    Parse {
        line: usize,
        smiles: String,
        #[source]
        source: ChemError,
    },
    #[error("library is empty")]
    Empty,
}

#[derive(Debug, Clone)]
pub struct LibraryEntry {
    pub id: String,
    pub smiles: String,
    pub canonical: String,
    pub mol: Molecule,
    pub fp: Fingerprint,
}

#[derive(Debug, Clone, Default)]
pub struct BuildingBlockLibrary {
    entries: Vec<LibraryEntry>,
    by_canonical: HashMap<String, usize>,
}

impl BuildingBlockLibrary {
    /// Builds a library from (id, smiles) pairs. Entries whose canonical form
    /// repeats an earlier entry are dropped.
    pub fn from_pairs<I, S, T>(pairs: I) -> Result<Self, LibraryError>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        let mut lib = BuildingBlockLibrary::default();
        for (n, (id, smiles)) in pairs.into_iter().enumerate() {
            let smiles = smiles.as_ref().trim();
            let mol = parse_smiles(smiles).map_err(|source| LibraryError::Parse {
                line: n + 1,
                smiles: smiles.to_string(),
                source,
            })?;
            lib.push(id.into(), smiles, mol);
        }
        Ok(lib)
    }

    /// Convenience constructor assigning ids `BB0001`, `BB0002`, ...
    pub fn from_smiles<I, T>(smiles: I) -> Result<Self, LibraryError>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        Self::from_pairs(
            smiles
                .into_iter()
                .enumerate()
                .map(|(i, s)| (format!("BB{:04}", i + 1), s)),
        )
    }

    pub fn parse(text: &str) -> Result<Self, LibraryError> {
        let mut lib = BuildingBlockLibrary::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (smiles, id) = match line.split_once('\t') {
                Some((s, id)) => (s.trim(), id.trim().to_string()),
                None => (line, format!("L{}", n + 1)),
            };
            let mol = parse_smiles(smiles).map_err(|source| LibraryError::Parse {
                line: n + 1,
                smiles: smiles.to_string(),
                source,
            })?;
            lib.push(id, smiles, mol);
        }
        Ok(lib)
    }

    pub fn load(path: &Path) -> Result<Self, LibraryError> {
        let text = std::fs::read_to_string(path).map_err(|source| LibraryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let lib = Self::parse(&text)?;
        if lib.is_empty() {
            return Err(LibraryError::Empty);
        }
        Ok(lib)
    }

    fn push(&mut self, id: String, smiles: &str, mol: Molecule) {
        let canonical = canonical_smiles(&mol);
        if self.by_canonical.contains_key(&canonical) {
            return;
        }
        let fp = morgan_fingerprint(&mol, BB_FP_RADIUS, BB_FP_BITS);
        self.by_canonical.insert(canonical.clone(), self.entries.len());
        self.entries.push(LibraryEntry {
            id,
            smiles: smiles.to_string(),
            canonical,
            mol,
            fp,
        });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LibraryEntry] {
        &self.entries
    }

    pub fn get(&self, doc: usize) -> &LibraryEntry {
        &self.entries[doc]
    }

    /// Document id of the entry with this canonical SMILES.
    pub fn find_canonical(&self, canonical: &str) -> Option<usize> {
        self.by_canonical.get(canonical).copied()
    }

    pub fn contains_canonical(&self, canonical: &str) -> bool {
        self.by_canonical.contains_key(canonical)
    }

    /// A copy without the entries whose canonical SMILES are listed.
    pub fn without(&self, canonicals: &[&str]) -> Self {
        let mut lib = BuildingBlockLibrary::default();
        for e in &self.entries {
            if !canonicals.contains(&e.canonical.as_str()) {
                lib.push(e.id.clone(), &e.smiles, e.mol.clone());
            }
        }
        lib
    }

    /// Library text in the on-disk format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.smiles);
            out.push('\t');
            out.push_str(&e.id);
            out.push('\n');
        }
        out
    }
}
