//! EM training of the lexical table. The E-step uses the closed form for
//! this model family (per-word alignment posteriors factorize), so no
//! alignment enumeration is needed; counts and log-likelihood come out of
//! a single pass over the pairs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::normalize::TokenizedName;

use super::{EnmError, TranslationTable, NULL_WORD};

/// One supervision example: a reference name (source side) and a name
/// observed to denote the same entity (target side).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub source: TokenizedName,
    pub target: TokenizedName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    /// Upper bound on EM updates.
    pub max_iterations: usize,
    /// Stop once the log-likelihood improves by less than this between
    /// successive iterations.
    pub log_likelihood_tolerance: f64,
    /// Length-model constant; cancels in ranking, kept for calibrated
    /// probabilities.
    pub epsilon: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iterations: 50,
            log_likelihood_tolerance: 1e-4,
            epsilon: 1.0,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<(), EnmError> {
        if self.max_iterations == 0 {
            return Err(EnmError::InvalidConfig {
                reason: "max_iterations must be at least 1".into(),
            });
        }
        if !self.log_likelihood_tolerance.is_finite() || self.log_likelihood_tolerance <= 0.0 {
            return Err(EnmError::InvalidConfig {
                reason: format!(
                    "log_likelihood_tolerance must be positive, got {}",
                    self.log_likelihood_tolerance
                ),
            });
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 || self.epsilon > 1.0 {
            return Err(EnmError::InvalidConfig {
                reason: format!("epsilon must lie in (0, 1], got {}", self.epsilon),
            });
        }
        Ok(())
    }
}

type Probs = BTreeMap<String, BTreeMap<String, f64>>;

/// Trains the table and returns it with the log-likelihood trace, one
/// entry per iteration, each measured under the parameters that iteration
/// started from. The trace is non-decreasing up to float noise.
pub fn train_em(
    pairs: &[TrainingPair],
    config: &EmConfig,
) -> Result<(TranslationTable, Vec<f64>), EnmError> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(EnmError::EmptyTrainingSet);
    }
    for (index, pair) in pairs.iter().enumerate() {
        if pair.source.is_empty() {
            return Err(EnmError::EmptyTokenList {
                index,
                side: "source",
                raw: pair.source.raw.clone(),
            });
        }
        if pair.target.is_empty() {
            return Err(EnmError::EmptyTokenList {
                index,
                side: "target",
                raw: pair.target.raw.clone(),
            });
        }
    }

    let mut probs = uniform_init(pairs);
    let mut trace: Vec<f64> = Vec::new();
    for _ in 0..config.max_iterations {
        let (counts, ll) = e_step(pairs, &probs, config.epsilon);
        if let Some(&prev) = trace.last() {
            if ll - prev < config.log_likelihood_tolerance {
                trace.push(ll);
                let table = finish(probs, config.epsilon);
                table.validate()?;
                return Ok((table, trace));
            }
        }
        trace.push(ll);
        probs = m_step(counts);
    }
    let table = finish(probs, config.epsilon);
    table.validate()?;
    Ok((table, trace))
}

/// Uniform start: 1 / |target vocab| for every co-occurring (source,
/// target) pair plus the NULL row. Pairs that never co-occur would get
/// zero expected count on the first update anyway, so they are never
/// materialized; the trained values are identical to a dense start.
fn uniform_init(pairs: &[TrainingPair]) -> Probs {
    let target_vocab: BTreeSet<&str> = pairs
        .iter()
        .flat_map(|p| p.target.tokens.iter().map(String::as_str))
        .collect();
    let uniform = 1.0 / target_vocab.len() as f64;

    let mut probs: Probs = BTreeMap::new();
    for pair in pairs {
        for w in &pair.target.tokens {
            probs
                .entry(NULL_WORD.to_owned())
                .or_default()
                .entry(w.clone())
                .or_insert(uniform);
            for v in &pair.source.tokens {
                probs
                    .entry(v.clone())
                    .or_default()
                    .entry(w.clone())
                    .or_insert(uniform);
            }
        }
    }
    probs
}

/// Expected alignment counts and the data log-likelihood under `probs`.
fn e_step(pairs: &[TrainingPair], probs: &Probs, epsilon: f64) -> (Probs, f64) {
    let mut counts: Probs = BTreeMap::new();
    let mut ll = 0.0;
    for pair in pairs {
        let l_d1 = pair.source.len() as f64 + 1.0;
        ll += epsilon.ln() - pair.target.len() as f64 * l_d1.ln();
        for w in &pair.target.tokens {
            let t_null = probs[NULL_WORD][w];
            let mut denom = t_null;
            for v in &pair.source.tokens {
                denom += probs[v][w];
            }
            ll += denom.ln();
            *counts
                .entry(NULL_WORD.to_owned())
                .or_default()
                .entry(w.clone())
                .or_insert(0.0) += t_null / denom;
            for v in &pair.source.tokens {
                *counts
                    .entry(v.clone())
                    .or_default()
                    .entry(w.clone())
                    .or_insert(0.0) += probs[v][w] / denom;
            }
        }
    }
    (counts, ll)
}

/// Renormalizes counts into per-source distributions. Every materialized
/// source has positive total count because translation probabilities stay
/// positive on co-occurring pairs.
fn m_step(counts: Probs) -> Probs {
    counts
        .into_iter()
        .map(|(source, row)| {
            let total: f64 = row.values().sum();
            let normalized = row.into_iter().map(|(t, c)| (t, c / total)).collect();
            (source, normalized)
        })
        .collect()
}

fn finish(probs: Probs, epsilon: f64) -> TranslationTable {
    TranslationTable::from_entries(
        epsilon,
        probs
            .into_iter()
            .flat_map(|(s, row)| row.into_iter().map(move |(t, p)| (s.clone(), t, p))),
    )
}
