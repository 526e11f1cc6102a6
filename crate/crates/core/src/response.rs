//! The JSON answer format exchanged with the language model:
//!
//! ```json
//! {"reactions": [{"reaction_template": "...", "reactants": ["..."], "product": "..."}],
//!  "building_blocks": ["..."]}
//! ```
//!
//! Reactions are listed retrosynthetically: the step making the target comes
//! first and each later step makes a reactant of an earlier one.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseStep {
    pub reaction_template: String,
    pub reactants: Vec<String>,
    pub product: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResponseBody {
    reactions: Vec<ResponseStep>,
    building_blocks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlmResponse {
    pub reactions: Vec<ResponseStep>,
    pub building_blocks: Vec<String>,
    pub raw_text: String,
}

/// Why a text is not a well-formed response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseFailure {
    pub message: String,
}

impl std::fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

/// Strict parse: unknown or missing keys and wrong value types fail.
pub fn parse_response(text: &str) -> Result<LlmResponse, ParseFailure> {
    let body: ResponseBody = serde_json::from_str(text).map_err(|e| ParseFailure { message: e.to_string() })?;
    Ok(LlmResponse {
        reactions: body.reactions,
        building_blocks: body.building_blocks,
        raw_text: text.to_string(),
    })
}

impl LlmResponse {
    pub fn new(reactions: Vec<ResponseStep>, building_blocks: Vec<String>) -> Self {
        let mut r = LlmResponse {
            reactions,
            building_blocks,
            raw_text: String::new(),
        };
        r.raw_text = r.to_json();
        r
    }

    /// Compact JSON in the pinned key order.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ResponseBody {
            reactions: self.reactions.clone(),
            building_blocks: self.building_blocks.clone(),
        })
        .expect("response serializes")
    }

    /// Number of SMILES strings (reactants, products, building blocks).
    pub fn smiles_count(&self) -> usize {
        self.reactions.iter().map(|s| s.reactants.len() + 1).sum::<usize>() + self.building_blocks.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let r = LlmResponse::new(
            vec![ResponseStep {
                reaction_template: "[C:1]>>[C:1]".into(),
                reactants: vec!["CC".into()],
                product: "CC".into(),
            }],
            vec!["CC".into()],
        );
        let back = parse_response(&r.raw_text).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.smiles_count(), 3);
    }

    #[test]
    fn strict_schema() {
        assert!(parse_response(r#"{"reaction":[],"building_blocks":[]}"#).is_err());
        assert!(parse_response(r#"{"reactions":[],"building_blocks":"CC"}"#).is_err());
        assert!(parse_response(r#"{"reactions":[],"building_blocks":[],"extra":1}"#).is_err());
        assert!(parse_response(r#"{"reactions":[],"building_blocks":[]"#).is_err());
        assert!(parse_response(r#"{"reactions":[],"building_blocks":[]}"#).is_ok());
    }
}
