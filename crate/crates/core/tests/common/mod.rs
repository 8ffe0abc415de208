//! Independent oracles for the integration suites. Each one recomputes a
//! library result by a deliberately different route: EM by enumerating
//! every alignment instead of the closed form, scoring in linear space
//! instead of logs, linking by scan over the full KB, and statistics by
//! recounting the raw CSV rows.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use pdd_core::enm::{TranslationTable, NULL_WORD};
use pdd_core::ingest::{DrugKb, KbId};
use pdd_core::linker::{check_rule1, check_rule2, LinkerConfig, PatientContext, RuleOutcome};
use pdd_core::normalize::{tokenize_name, TokenizedName};

pub type Probs = BTreeMap<String, BTreeMap<String, f64>>;

/// Builds a TokenizedName straight from words, bypassing tokenization.
pub fn name_of(tokens: &[&str]) -> TokenizedName {
    TokenizedName {
        raw: tokens.join(" "),
        tokens: tokens.iter().map(|t| (*t).to_string()).collect(),
    }
}

/// EM reference: dense uniform start over (source + NULL) x target, and
/// an E-step that walks all (l_s + 1)^(l_t) alignments of every pair,
/// weighting counts by the posterior of each full alignment. Measurement
/// and stop handling mirror the library trainer: the likelihood of each
/// iteration is taken under the parameters it started from, and an early
/// stop returns the pre-update table.
pub fn oracle_train_em(
    pairs: &[(Vec<String>, Vec<String>)],
    max_iterations: usize,
    tolerance: f64,
    epsilon: f64,
) -> (Probs, Vec<f64>) {
    let targets: BTreeSet<&str> = pairs
        .iter()
        .flat_map(|(_, t)| t.iter().map(String::as_str))
        .collect();
    let mut sources: BTreeSet<&str> = pairs
        .iter()
        .flat_map(|(s, _)| s.iter().map(String::as_str))
        .collect();
    sources.insert(NULL_WORD);

    let uniform = 1.0 / targets.len() as f64;
    let mut probs: Probs = sources
        .iter()
        .map(|&s| {
            let row = targets.iter().map(|&t| (t.to_string(), uniform)).collect();
            (s.to_string(), row)
        })
        .collect();

    let mut trace = Vec::new();
    for _ in 0..max_iterations {
        let (counts, ll) = enumerate_alignments(pairs, &probs, epsilon);
        if let Some(&prev) = trace.last() {
            if ll - prev < tolerance {
                trace.push(ll);
                return (probs, trace);
            }
        }
        trace.push(ll);
        for (source, row) in &mut probs {
            let count_row = counts.get(source);
            let total: f64 = count_row.map(|r| r.values().sum()).unwrap_or(0.0);
            for (target, prob) in row.iter_mut() {
                *prob = match count_row.and_then(|r| r.get(target)) {
                    Some(c) if total > 0.0 => c / total,
                    _ => 0.0,
                };
            }
        }
    }
    (probs, trace)
}

fn enumerate_alignments(
    pairs: &[(Vec<String>, Vec<String>)],
    probs: &Probs,
    epsilon: f64,
) -> (Probs, f64) {
    let mut counts: Probs = BTreeMap::new();
    let mut ll = 0.0;
    for (source, target) in pairs {
        let mut slots: Vec<&str> = vec![NULL_WORD];
        slots.extend(source.iter().map(String::as_str));
        let n_alignments = slots.len().pow(target.len() as u32);

        let mut joints = Vec::with_capacity(n_alignments);
        let mut total = 0.0;
        for a in 0..n_alignments {
            let mut joint = 1.0;
            let mut code = a;
            for word in target {
                joint *= probs[slots[code % slots.len()]][word];
                code /= slots.len();
            }
            joints.push(joint);
            total += joint;
        }
        ll += epsilon.ln() - target.len() as f64 * (slots.len() as f64).ln() + total.ln();

        for (a, joint) in joints.into_iter().enumerate() {
            if joint == 0.0 {
                continue;
            }
            let posterior = joint / total;
            let mut code = a;
            for word in target {
                *counts
                    .entry(slots[code % slots.len()].to_string())
                    .or_default()
                    .entry(word.clone())
                    .or_insert(0.0) += posterior;
                code /= slots.len();
            }
        }
    }
    (counts, ll)
}

/// Direct linear-space evaluation of the translation score, no logs.
pub fn oracle_score(
    mention: &TokenizedName,
    candidate: &TokenizedName,
    table: &TranslationTable,
    epsilon: f64,
) -> f64 {
    let mut value = epsilon / (candidate.len() as f64 + 1.0).powi(mention.len() as i32);
    for w in &mention.tokens {
        let mut sum = table.null_prob_for_scoring(w);
        for v in &candidate.tokens {
            sum += table.prob(v, w);
        }
        value *= sum;
    }
    value
}

/// Re-derives one link decision by scan: score the whole KB in linear
/// space, keep the top candidates, drop rule failers, pick the first
/// survivor unless it sits below the floor.
pub fn oracle_link(
    mention_raw: &str,
    kb: &DrugKb,
    table: &TranslationTable,
    epsilon: f64,
    ctx: &PatientContext,
    config: &LinkerConfig,
) -> Option<(KbId, f64)> {
    let mention = tokenize_name(mention_raw);
    let mut scored: Vec<(KbId, f64)> = kb
        .entries()
        .iter()
        .map(|e| {
            let s = oracle_score(&mention, &tokenize_name(&e.name), table, epsilon);
            (e.id.clone(), s)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(config.candidate_limit);
    for (id, score) in scored {
        let entry = kb.get(&id).expect("scored ids come from the KB");
        if check_rule1(entry, mention_raw, ctx) == RuleOutcome::Fail
            || check_rule2(entry, mention_raw, ctx, config.dosage_tolerance) == RuleOutcome::Fail
        {
            continue;
        }
        return if score < config.score_floor {
            None
        } else {
            Some((id, score))
        };
    }
    None
}

/// Statistics recomputed from the raw CSV files plus the linked mention
/// and code sets, mirroring the loader acceptance rules but sharing no
/// code with the graph builder.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct RawRecount {
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

fn recount_code(raw: &str) -> String {
    raw.trim()
        .chars()
        .filter(|&c| c != '.')
        .collect::<String>()
        .to_uppercase()
}

pub fn recount_from_raw(
    patients_csv: &Path,
    prescriptions_csv: &Path,
    diagnoses_csv: &Path,
    linked_mentions: &BTreeSet<String>,
    linked_codes: &BTreeSet<String>,
) -> RawRecount {
    let read = |path: &Path| {
        let mut reader = csv::Reader::from_path(path).expect("recount input opens");
        let header: Vec<String> = reader
            .headers()
            .expect("recount header parses")
            .iter()
            .map(str::to_owned)
            .collect();
        let rows: Vec<Vec<String>> = reader
            .records()
            .map(|r| {
                r.expect("recount row parses")
                    .iter()
                    .map(str::to_owned)
                    .collect()
            })
            .collect();
        (header, rows)
    };

    // Duplicate patient rows merge, last write wins per attribute.
    let (header, rows) = read(patients_csv);
    let id_col = header.iter().position(|h| h == "patient_id").unwrap();
    let mut demographics: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    for row in rows {
        let id = row[id_col].trim();
        if id.is_empty() {
            continue;
        }
        let slot = demographics.entry(id.to_string()).or_default();
        for (col, value) in header.iter().zip(&row) {
            if col != "patient_id" && !value.is_empty() {
                slot.insert(col.clone(), value.clone());
            }
        }
    }
    let known: BTreeSet<&String> = demographics.keys().collect();

    let (header, rows) = read(prescriptions_csv);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (idc, drugc, valc, unitc) = (
        col("patient_id"),
        col("drug_name"),
        col("dosage_value"),
        col("dosage_unit"),
    );
    let mut drug_pairs: BTreeSet<(String, String)> = BTreeSet::new();
    for row in rows {
        let id = row[idc].trim();
        let drug = row[drugc].trim();
        let (value, unit) = (row[valc].trim(), row[unitc].trim());
        if id.is_empty() || !known.contains(&id.to_string()) || drug.is_empty() {
            continue;
        }
        let dosage_ok = match (value.is_empty(), unit.is_empty()) {
            (true, true) => true,
            (false, false) => matches!(value.parse::<f64>(), Ok(v) if v.is_finite() && v > 0.0),
            _ => false,
        };
        if !dosage_ok {
            continue;
        }
        drug_pairs.insert((id.to_string(), drug.to_lowercase()));
    }

    let (header, rows) = read(diagnoses_csv);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (idc, codec) = (col("patient_id"), col("icd9_code"));
    let mut code_pairs: BTreeSet<(String, String)> = BTreeSet::new();
    for row in rows {
        let id = row[idc].trim();
        let code = row[codec].trim();
        if id.is_empty() || !known.contains(&id.to_string()) || code.is_empty() {
            continue;
        }
        code_pairs.insert((id.to_string(), recount_code(code)));
    }

    let linked_drug_keys: BTreeSet<String> =
        linked_mentions.iter().map(|m| m.to_lowercase()).collect();
    let linked_code_keys: BTreeSet<String> =
        linked_codes.iter().map(|c| recount_code(c)).collect();

    let mut out = RawRecount::default();
    let mut subjects: BTreeSet<&String> = BTreeSet::new();
    for (id, attrs) in &demographics {
        out.demographic_triples += attrs.len();
        if !attrs.is_empty() {
            subjects.insert(id);
        }
    }
    let drugs: BTreeSet<&String> = drug_pairs.iter().map(|(_, d)| d).collect();
    let codes: BTreeSet<&String> = code_pairs.iter().map(|(_, c)| c).collect();
    out.drugs_total = drugs.len();
    out.drugs_linked = drugs.iter().filter(|d| linked_drug_keys.contains(d.as_str())).count();
    out.diseases_total = codes.len();
    out.diseases_linked = codes.iter().filter(|c| linked_code_keys.contains(c.as_str())).count();
    out.patient_drug_triples = drug_pairs.len();
    out.patient_disease_triples = code_pairs.len();
    for (id, drug) in &drug_pairs {
        subjects.insert(id);
        if linked_drug_keys.contains(drug) {
            out.patient_drug_triples_linked += 1;
        }
    }
    for (id, code) in &code_pairs {
        subjects.insert(id);
        if linked_code_keys.contains(code) {
            out.patient_disease_triples_linked += 1;
        }
    }
    out.patients = subjects.len();
    out
}
