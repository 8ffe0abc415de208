//! Link-quality evaluation against gold labels, plus the dataset
//! statistics table recomputed purely from a built graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{PddGraph, Term};
use crate::ingest::KbId;
use crate::linker::LinkDecision;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("mention {mention:?} was decided but has no gold label")]
    GoldMissing { mention: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    TruePositive,
    FalsePositive,
    FalseNegative,
    TrueNegative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MentionVerdict {
    pub mention: String,
    /// None means the gold label says "correctly unlinkable".
    pub gold: Option<KbId>,
    /// None means the decision left the mention unlinked.
    pub decided: Option<KbId>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
    /// None when no mention was linked, so the ratio is undefined.
    pub precision: Option<f64>,
    /// None when gold holds no linkable mention among those evaluated.
    pub recall: Option<f64>,
    pub verdicts: Vec<MentionVerdict>,
}

impl EvalReport {
    pub fn evaluated(&self) -> usize {
        self.true_positive + self.false_positive + self.false_negative + self.true_negative
    }

    /// Aligned plain-text rendering of the headline numbers.
    pub fn render_text(&self) -> String {
        let ratio = |v: Option<f64>| match v {
            Some(x) => format!("{x:.4}"),
            None => "undefined".to_string(),
        };
        let rows = [
            ("evaluated mentions", self.evaluated().to_string()),
            ("true positives", self.true_positive.to_string()),
            ("false positives", self.false_positive.to_string()),
            ("false negatives", self.false_negative.to_string()),
            ("true negatives", self.true_negative.to_string()),
            ("precision", ratio(self.precision)),
            ("recall", ratio(self.recall)),
        ];
        render_rows(&rows)
    }
}

fn render_rows(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (key, value) in rows {
        out.push_str(&format!("{key:<width$}  {value}\n"));
    }
    out
}

/// Scores every decided mention against gold. A gold value of None marks
/// the mention as correctly unlinkable; gold entries for mentions that
/// were never decided are ignored.
pub fn evaluate_links(
    decisions: &BTreeMap<String, LinkDecision>,
    gold: &BTreeMap<String, Option<KbId>>,
) -> Result<EvalReport, EvalError> {
    let mut report = EvalReport {
        true_positive: 0,
        false_positive: 0,
        false_negative: 0,
        true_negative: 0,
        precision: None,
        recall: None,
        verdicts: Vec::with_capacity(decisions.len()),
    };
    for (mention, decision) in decisions {
        let gold_id = gold
            .get(mention)
            .ok_or_else(|| EvalError::GoldMissing {
                mention: mention.clone(),
            })?
            .as_ref();
        let decided = decision.linked_kb_id();
        let verdict = match (decided, gold_id) {
            (Some(d), Some(g)) if d == g => Verdict::TruePositive,
            (Some(_), _) => Verdict::FalsePositive,
            (None, Some(_)) => Verdict::FalseNegative,
            (None, None) => Verdict::TrueNegative,
        };
        match verdict {
            Verdict::TruePositive => report.true_positive += 1,
            Verdict::FalsePositive => report.false_positive += 1,
            Verdict::FalseNegative => report.false_negative += 1,
            Verdict::TrueNegative => report.true_negative += 1,
        }
        report.verdicts.push(MentionVerdict {
            mention: mention.clone(),
            gold: gold_id.cloned(),
            decided: decided.cloned(),
            verdict,
        });
    }
    let linked = report.true_positive + report.false_positive;
    if linked > 0 {
        report.precision = Some(report.true_positive as f64 / linked as f64);
    }
    let linkable = report.true_positive + report.false_negative;
    if linkable > 0 {
        report.recall = Some(report.true_positive as f64 / linkable as f64);
    }
    Ok(report)
}

/// Entity and triple counts, every row recomputed from the graph alone.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DatasetStatistics {
    pub patients: usize,
    pub drugs_total: usize,
    pub drugs_linked: usize,
    pub diseases_total: usize,
    pub diseases_linked: usize,
    pub demographic_triples: usize,
    pub patient_drug_triples: usize,
    pub patient_drug_triples_linked: usize,
    pub patient_disease_triples: usize,
    pub patient_disease_triples_linked: usize,
}

impl DatasetStatistics {
    pub fn render_text(&self) -> String {
        let rows = [
            ("patients", self.patients.to_string()),
            ("drugs (total)", self.drugs_total.to_string()),
            ("drugs (linked)", self.drugs_linked.to_string()),
            ("diseases (total)", self.diseases_total.to_string()),
            ("diseases (linked)", self.diseases_linked.to_string()),
            (
                "demographic triples",
                self.demographic_triples.to_string(),
            ),
            (
                "patient-drug triples (total)",
                self.patient_drug_triples.to_string(),
            ),
            (
                "patient-drug triples (linked drug)",
                self.patient_drug_triples_linked.to_string(),
            ),
            (
                "patient-disease triples (total)",
                self.patient_disease_triples.to_string(),
            ),
            (
                "patient-disease triples (linked disease)",
                self.patient_disease_triples_linked.to_string(),
            ),
        ];
        render_rows(&rows)
    }
}

/// Pure function of the graph: patients are subjects of fact triples,
/// entities are fact objects, and "linked" means the entity carries a
/// sameAs triple.
pub fn dataset_statistics(graph: &PddGraph) -> DatasetStatistics {
    let prescribed = graph.config().prescribed_predicate();
    let diagnosed = graph.config().diagnosed_predicate();
    let same_as = graph.config().same_as_predicate();

    let mut stats = DatasetStatistics::default();
    let mut patients = BTreeSet::new();
    let mut drugs = BTreeSet::new();
    let mut diseases = BTreeSet::new();
    let mut linked_entities = BTreeSet::new();

    for triple in graph.iter() {
        if triple.predicate == same_as {
            linked_entities.insert(&triple.subject);
        } else {
            patients.insert(&triple.subject);
            if triple.predicate == prescribed {
                if let Term::Iri(object) = &triple.object {
                    drugs.insert(object);
                }
            } else if triple.predicate == diagnosed {
                if let Term::Iri(object) = &triple.object {
                    diseases.insert(object);
                }
            } else {
                stats.demographic_triples += 1;
            }
        }
    }

    stats.patients = patients.len();
    stats.drugs_total = drugs.len();
    stats.drugs_linked = drugs.iter().filter(|d| linked_entities.contains(*d)).count();
    stats.diseases_total = diseases.len();
    stats.diseases_linked = diseases
        .iter()
        .filter(|d| linked_entities.contains(*d))
        .count();

    for triple in graph.iter() {
        let linked_object = match &triple.object {
            Term::Iri(object) => linked_entities.contains(object),
            Term::Literal { .. } => false,
        };
        if triple.predicate == prescribed {
            stats.patient_drug_triples += 1;
            if linked_object {
                stats.patient_drug_triples_linked += 1;
            }
        } else if triple.predicate == diagnosed {
            stats.patient_disease_triples += 1;
            if linked_object {
                stats.patient_disease_triples_linked += 1;
            }
        }
    }

    stats
}
