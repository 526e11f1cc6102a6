//! Small-molecule toolkit: SMILES parsing and canonical output, SMARTS
//! patterns and substructure matching, reaction templates, Morgan
//! fingerprints and Murcko scaffolds.

pub mod canon;
pub mod element;
pub mod error;
pub mod fingerprint;
pub mod matcher;
pub mod molecule;
pub mod reaction;
pub mod scaffold;
pub mod smarts;
pub mod smiles;

pub use canon::{canonical_form, canonical_smiles};
pub use error::{ChemError, Result};
pub use fingerprint::{morgan_fingerprint, tanimoto, Fingerprint, HASH_SEED};
pub use matcher::{has_match, match_substructure, Match};
pub use molecule::{Atom, Bond, BondOrder, Molecule};
pub use reaction::{parse_reaction, ReactionTemplate};
pub use scaffold::murcko_scaffold;
pub use smarts::{parse_smarts, Pattern};
pub use smiles::parse_smiles;

/// Parses `text` and returns its canonical SMILES.
pub fn canonicalize(text: &str) -> Result<String> {
    let mol = parse_smiles(text)?;
    Ok(canonical_smiles(&mol))
}
