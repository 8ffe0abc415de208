//! Links one drug mention to the KB: score every entry's canonical name
//! with the translation model, keep the top-k as candidates, discard any
//! candidate that contradicts the patient record (no shared indication,
//! no compatible dosage), then take the argmax with a lexicographic
//! kb_id tie-break. Disease linking is exact matching on normalized
//! codes. Every step is pure and deterministic.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enm::{score, EnmError, TranslationTable};
use crate::ingest::{
    DiagnosisRecord, Dosage, DrugKb, DrugKbEntry, KbId, PatientId, PrescriptionRecord,
};
use crate::normalize::{normalize_icd9, tokenize_name, Icd9Code, NormalizeError, TokenizedName};

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("drug KB is empty")]
    EmptyKb,
    #[error("candidate_limit must be at least 1")]
    ZeroCandidateLimit,
    #[error("mention {mention:?} tokenizes to nothing")]
    Untokenizable { mention: String },
    #[error(transparent)]
    Score(#[from] EnmError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkerConfig {
    /// How many top-scoring KB entries get rule-checked.
    pub candidate_limit: usize,
    /// Best scores below this mean "nothing plausible": stay unlinked.
    pub score_floor: f64,
    /// Relative slack when comparing a prescribed dosage value against a
    /// KB standard dosage value.
    pub dosage_tolerance: f64,
}

impl Default for LinkerConfig {
    fn default() -> Self {
        LinkerConfig {
            candidate_limit: 50,
            score_floor: 1e-12,
            dosage_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleOutcome {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleAuditEntry {
    pub kb_id: KbId,
    pub score: f64,
    pub rule1: RuleOutcome,
    pub rule2: RuleOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "outcome")]
pub enum LinkOutcome {
    Linked { kb_id: KbId, score: f64 },
    Unlinked { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkDecision {
    pub mention_raw: String,
    #[serde(flatten)]
    pub outcome: LinkOutcome,
    /// Every candidate that was considered, in ranking order.
    pub rule_audit: Vec<RuleAuditEntry>,
}

impl LinkDecision {
    pub fn linked_kb_id(&self) -> Option<&KbId> {
        match &self.outcome {
            LinkOutcome::Linked { kb_id, .. } => Some(kb_id),
            LinkOutcome::Unlinked { .. } => None,
        }
    }
}

/// Patient-record lookups the rules need, built once per corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PatientContext {
    diagnoses_by_patient: BTreeMap<PatientId, BTreeSet<Icd9Code>>,
    patients_by_drug: BTreeMap<String, BTreeSet<PatientId>>,
    dosages_by_drug: BTreeMap<String, Vec<Dosage>>,
}

impl PatientContext {
    pub fn build(
        prescriptions: &[PrescriptionRecord],
        diagnoses: &[DiagnosisRecord],
    ) -> Result<Self, NormalizeError> {
        let mut ctx = PatientContext::default();
        for dx in diagnoses {
            let code = normalize_icd9(&dx.icd9_code_raw)?;
            ctx.diagnoses_by_patient
                .entry(dx.patient_id.clone())
                .or_default()
                .insert(code);
        }
        for rx in prescriptions {
            ctx.patients_by_drug
                .entry(rx.drug_name_raw.clone())
                .or_default()
                .insert(rx.patient_id.clone());
            if let Some(dosage) = &rx.dosage {
                ctx.dosages_by_drug
                    .entry(rx.drug_name_raw.clone())
                    .or_default()
                    .push(dosage.clone());
            }
        }
        Ok(ctx)
    }
}

/// Shared-indication rule: some patient who took the mention must carry a
/// diagnosis the candidate treats. Skipped when the candidate lists no
/// indications or nobody took the mention; those cases say nothing either
/// way.
pub fn check_rule1(
    candidate: &DrugKbEntry,
    mention_raw: &str,
    ctx: &PatientContext,
) -> RuleOutcome {
    if candidate.indications.is_empty() {
        return RuleOutcome::Skipped;
    }
    let takers = match ctx.patients_by_drug.get(mention_raw) {
        Some(t) if !t.is_empty() => t,
        _ => return RuleOutcome::Skipped,
    };
    let indications: BTreeSet<&Icd9Code> = candidate.indications.iter().collect();
    for patient in takers {
        if let Some(codes) = ctx.diagnoses_by_patient.get(patient) {
            if codes.iter().any(|c| indications.contains(c)) {
                return RuleOutcome::Pass;
            }
        }
    }
    RuleOutcome::Fail
}

/// Dosage-compatibility rule: some prescribed dosage of the mention must
/// match a candidate standard dosage, same unit case-insensitively and
/// value within `tolerance * standard`. Skipped when the candidate lists
/// no standard dosages or no prescription of the mention carries one.
pub fn check_rule2(
    candidate: &DrugKbEntry,
    mention_raw: &str,
    ctx: &PatientContext,
    tolerance: f64,
) -> RuleOutcome {
    if candidate.dosages.is_empty() {
        return RuleOutcome::Skipped;
    }
    let prescribed = match ctx.dosages_by_drug.get(mention_raw) {
        Some(d) if !d.is_empty() => d,
        _ => return RuleOutcome::Skipped,
    };
    for dose in prescribed {
        let unit = dose.unit.to_lowercase();
        for standard in &candidate.dosages {
            if unit == standard.unit.to_lowercase()
                && (dose.value - standard.value).abs() <= tolerance * standard.value
            {
                return RuleOutcome::Pass;
            }
        }
    }
    RuleOutcome::Fail
}

/// Scores every KB entry against the mention and returns the top `k` as
/// (kb_id, score), highest score first, ties broken by ascending kb_id.
pub fn generate_candidates(
    mention: &TokenizedName,
    kb: &DrugKb,
    table: &TranslationTable,
    epsilon: f64,
    k: usize,
) -> Result<Vec<(KbId, f64)>, LinkError> {
    if kb.is_empty() {
        return Err(LinkError::EmptyKb);
    }
    if k == 0 {
        return Err(LinkError::ZeroCandidateLimit);
    }
    let mut scored = Vec::with_capacity(kb.len());
    for entry in kb.entries() {
        let candidate = tokenize_name(&entry.name);
        let s = score(mention, &candidate, table, epsilon)?;
        scored.push((entry.id.clone(), s));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}

/// Full decision for one mention. The audit records every candidate with
/// its rule outcomes; a candidate with any `fail` can never be chosen.
pub fn link_drug(
    mention_raw: &str,
    kb: &DrugKb,
    table: &TranslationTable,
    epsilon: f64,
    ctx: &PatientContext,
    config: &LinkerConfig,
) -> Result<LinkDecision, LinkError> {
    let mention = tokenize_name(mention_raw);
    if mention.is_empty() {
        return Err(LinkError::Untokenizable {
            mention: mention_raw.to_owned(),
        });
    }
    let candidates = generate_candidates(&mention, kb, table, epsilon, config.candidate_limit)?;
    let rule_audit: Vec<RuleAuditEntry> = candidates
        .iter()
        .map(|(kb_id, score)| {
            let entry = kb.get(kb_id).expect("candidate ids come from the KB");
            RuleAuditEntry {
                kb_id: kb_id.clone(),
                score: *score,
                rule1: check_rule1(entry, mention_raw, ctx),
                rule2: check_rule2(entry, mention_raw, ctx, config.dosage_tolerance),
            }
        })
        .collect();

    // Candidates are already (score desc, kb_id asc), so the first
    // survivor is the argmax with the tie-break baked in.
    let best = rule_audit
        .iter()
        .find(|a| a.rule1 != RuleOutcome::Fail && a.rule2 != RuleOutcome::Fail);
    let outcome = match best {
        None => LinkOutcome::Unlinked {
            reason: "all candidates failed rules".into(),
        },
        Some(a) if a.score < config.score_floor => LinkOutcome::Unlinked {
            reason: "below score floor".into(),
        },
        Some(a) => LinkOutcome::Linked {
            kb_id: a.kb_id.clone(),
            score: a.score,
        },
    };
    Ok(LinkDecision {
        mention_raw: mention_raw.to_owned(),
        outcome,
        rule_audit,
    })
}

/// Exact-match disease link after normalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiseaseLink {
    pub code: Icd9Code,
    pub linked: bool,
}

pub fn link_disease(
    icd9_raw: &str,
    ontology: &crate::ingest::Icd9Ontology,
) -> Result<DiseaseLink, NormalizeError> {
    let code = normalize_icd9(icd9_raw)?;
    let linked = ontology.contains(&code);
    Ok(DiseaseLink { code, linked })
}
