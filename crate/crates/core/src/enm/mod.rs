//! Entity-name translation model: a word-level lexical table t(target |
//! source) over tokenized names, trained with EM and scored with the
//! length-normalized product-of-sums formula. Sources are the words of a
//! reference (KB) name plus a distinguished NULL word that generates
//! insignificant target words; targets are the words of the mention.

mod io;
mod train;

pub use io::{load_table, save_table};
pub use train::{train_em, EmConfig, TrainingPair};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::normalize::TokenizedName;

/// Source word standing for "generated from nothing". Tokenized text is
/// always lowercase, so this uppercase spelling can never collide with a
/// real token; it is also the literal spelling used in table files.
pub const NULL_WORD: &str = "<NULL>";

/// Score-time stand-in for t(w | NULL) when the table has never seen the
/// mention word w at all. Keeps a stray token (a lot size, a container
/// word) from zeroing the whole product, and because it multiplies every
/// candidate's score equally it never changes the ranking.
pub const UNKNOWN_NULL_FLOOR: f64 = 1e-6;

/// How far a per-source probability mass may drift from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EnmError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training pair {index} has an empty {side} token list (raw: {raw:?})")]
    EmptyTokenList {
        index: usize,
        side: &'static str,
        raw: String,
    },
    #[error("invalid EM config: {reason}")]
    InvalidConfig { reason: String },
    #[error("cannot score an empty {side}")]
    EmptyName { side: &'static str },
    #[error("epsilon must be a positive finite number, got {value}")]
    InvalidEpsilon { value: f64 },
    #[error("probability for ({source_word:?} -> {target_word:?}) is {prob}, outside [0, 1]")]
    InvalidProb {
        source_word: String,
        target_word: String,
        prob: f64,
    },
    #[error("probabilities for source {source_word:?} sum to {sum}, not 1")]
    NormalizationViolated { source_word: String, sum: f64 },
    #[error("table has no {null} source row", null = NULL_WORD)]
    MissingNull,
    #[error("table file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("table file {path} is not valid JSON: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Lexical translation table. Rows are source words (KB-name words plus
/// NULL), each row a distribution over mention words summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationTable {
    epsilon: f64,
    probs: BTreeMap<String, BTreeMap<String, f64>>,
    target_vocab: BTreeSet<String>,
}

impl TranslationTable {
    /// Builds a table from raw (source, target, prob) entries without
    /// validating normalization; call [`TranslationTable::validate`] when
    /// the entries are supposed to form proper distributions.
    pub fn from_entries<I>(epsilon: f64, entries: I) -> Self
    where
        I: IntoIterator<Item = (String, String, f64)>,
    {
        let mut probs: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        let mut target_vocab = BTreeSet::new();
        for (source, target, prob) in entries {
            target_vocab.insert(target.clone());
            probs.entry(source).or_default().insert(target, prob);
        }
        TranslationTable {
            epsilon,
            probs,
            target_vocab,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// t(target | source); zero for any pair the table has no entry for.
    pub fn prob(&self, source: &str, target: &str) -> f64 {
        self.probs
            .get(source)
            .and_then(|row| row.get(target))
            .copied()
            .unwrap_or(0.0)
    }

    /// t(target | NULL) as used by scoring: stored value for words the
    /// table knows, [`UNKNOWN_NULL_FLOOR`] for words it has never seen.
    pub fn null_prob_for_scoring(&self, target: &str) -> f64 {
        if self.target_vocab.contains(target) {
            self.prob(NULL_WORD, target)
        } else {
            UNKNOWN_NULL_FLOOR
        }
    }

    pub fn source_vocab(&self) -> impl Iterator<Item = &str> {
        self.probs.keys().map(String::as_str)
    }

    pub fn target_vocab(&self) -> &BTreeSet<String> {
        &self.target_vocab
    }

    /// All stored entries in (source, target) order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.probs.iter().flat_map(|(s, row)| {
            row.iter().map(move |(t, &p)| (s.as_str(), t.as_str(), p))
        })
    }

    pub fn num_entries(&self) -> usize {
        self.probs.values().map(BTreeMap::len).sum()
    }

    /// Checks that every stored probability is a finite value in [0, 1],
    /// every source row sums to 1 within [`NORMALIZATION_TOLERANCE`], and
    /// the NULL row exists.
    pub fn validate(&self) -> Result<(), EnmError> {
        if !self.probs.contains_key(NULL_WORD) {
            return Err(EnmError::MissingNull);
        }
        for (source, row) in &self.probs {
            let mut sum = 0.0;
            for (target, &p) in row {
                if !p.is_finite() || !(0.0..=1.0 + NORMALIZATION_TOLERANCE).contains(&p) {
                    return Err(EnmError::InvalidProb {
                        source_word: source.clone(),
                        target_word: target.clone(),
                        prob: p,
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(EnmError::NormalizationViolated {
                    source_word: source.clone(),
                    sum,
                });
            }
        }
        Ok(())
    }
}

/// Translation probability of `mention` given `candidate`:
///
/// ```text
/// epsilon / (l_d + 1)^l_m * prod over mention words w of
///     (t(w | NULL) + sum over candidate words v of t(w | v))
/// ```
///
/// where l_d and l_m are the candidate and mention lengths. Accumulated in
/// log space so long names cannot underflow, returned on the linear scale.
/// The result lies in [0, epsilon].
pub fn score(
    mention: &TokenizedName,
    candidate: &TokenizedName,
    table: &TranslationTable,
    epsilon: f64,
) -> Result<f64, EnmError> {
    if mention.is_empty() {
        return Err(EnmError::EmptyName { side: "mention" });
    }
    if candidate.is_empty() {
        return Err(EnmError::EmptyName { side: "candidate" });
    }
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(EnmError::InvalidEpsilon { value: epsilon });
    }

    let l_m = mention.len() as f64;
    let l_d1 = candidate.len() as f64 + 1.0;
    let mut log_score = epsilon.ln() - l_m * l_d1.ln();
    for w in &mention.tokens {
        let mut sum = table.null_prob_for_scoring(w);
        for v in &candidate.tokens {
            sum += table.prob(v, w);
        }
        if sum <= 0.0 {
            return Ok(0.0);
        }
        log_score += sum.ln();
    }
    // exp(ln x) can land one ulp above the mathematical bound.
    Ok(log_score.exp().min(epsilon))
}
