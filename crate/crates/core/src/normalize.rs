//! Shared text canonicalization: drug-name tokenization and ICD-9 code
//! normalization. Every module that compares names or codes goes through
//! these two functions so the comparisons agree.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Characters that separate tokens in addition to whitespace. They are
/// dropped, never kept as tokens.
const SPLIT_PUNCT: [char; 7] = ['(', ')', ',', '/', ';', '+', '-'];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("ICD-9 code {raw:?} is empty after normalization")]
    EmptyCode { raw: String },
    #[error("ICD-9 code {raw:?} contains interior whitespace")]
    WhitespaceInCode { raw: String },
}

/// A name reduced to comparable form: lowercased tokens plus the original
/// string it came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenizedName {
    pub raw: String,
    pub tokens: Vec<String>,
}

impl TokenizedName {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Lowercases and splits on whitespace and a fixed punctuation set.
/// Digits stay attached to their unit suffix, so "200mg" and "5%" are
/// single tokens. Tokens never contain whitespace or split punctuation,
/// which makes the function idempotent over `tokens.join(" ")`.
pub fn tokenize_name(raw: &str) -> TokenizedName {
    let lowered = raw.to_lowercase();
    let tokens = lowered
        .split(|c: char| c.is_whitespace() || SPLIT_PUNCT.contains(&c))
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect();
    TokenizedName {
        raw: raw.to_owned(),
        tokens,
    }
}

/// A normalized ICD-9 code: uppercase, no dots, no surrounding whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Icd9Code(String);

impl Icd9Code {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Reinserts the conventional dot for display alongside dotted
    /// vocabularies: E-codes dot after the fourth character, everything
    /// else after the third. Codes short enough to carry no dot are
    /// returned unchanged.
    pub fn dotted(&self) -> String {
        let s = &self.0;
        let split_at = if s.starts_with('E') { 4 } else { 3 };
        if s.len() > split_at {
            format!("{}.{}", &s[..split_at], &s[split_at..])
        } else {
            s.clone()
        }
    }
}

impl std::fmt::Display for Icd9Code {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Canonical ICD-9 form shared by diagnosis records (usually dotless) and
/// ontology files (usually dotted): strip surrounding whitespace, remove
/// dots, uppercase. Rejects codes that end up empty or keep interior
/// whitespace.
pub fn normalize_icd9(raw: &str) -> Result<Icd9Code, NormalizeError> {
    let stripped: String = raw.trim().chars().filter(|&c| c != '.').collect();
    let upper = stripped.to_uppercase();
    if upper.is_empty() {
        return Err(NormalizeError::EmptyCode {
            raw: raw.to_owned(),
        });
    }
    if upper.chars().any(char::is_whitespace) {
        return Err(NormalizeError::WhitespaceInCode {
            raw: raw.to_owned(),
        });
    }
    Ok(Icd9Code(upper))
}
