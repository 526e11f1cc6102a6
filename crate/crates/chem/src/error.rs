use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChemError {
    #[error("syntax error at offset {pos}: {message}")]
    Syntax { pos: usize, message: String },

    #[error("valence error on atom {atom}: {message}")]
    Valence { atom: usize, message: String },

    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),

    #[error("invalid molecular graph: {0}")]
    Structure(String),

    #[error("product atom map {0} has no source in the reactant patterns")]
    MapClosure(u32),

    #[error("template expects {expected} reactants, got {got}")]
    SlotCountMismatch { expected: usize, got: usize },

    #[error("fingerprint width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },
}

impl ChemError {
    pub(crate) fn syntax(pos: usize, message: impl Into<String>) -> Self {
        ChemError::Syntax {
            pos,
            message: message.into(),
        }
    }

    pub(crate) fn valence(atom: usize, message: impl Into<String>) -> Self {
        ChemError::Valence {
            atom,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, ChemError>;
