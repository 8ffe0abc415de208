//! Seed-deterministic synthetic corpus generator with gold links. The
//! clean profile emits canonical names verbatim; the mimic-like profile
//! corrupts mentions the way hospital formularies do (appended lot sizes
//! and container words, reordered tokens, alias substitution) and injects
//! a few solution-style mentions that have no KB entity at all.
//!
//! Determinism contract: one RNG stream, every draw in a fixed loop
//! order, no hash-map iteration anywhere. The same seed and sizes give
//! byte-identical files from [`write_corpus`].

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::normalize::normalize_icd9;

use super::{
    DiagnosisRecord, Dosage, DrugKbEntry, IngestError, KbId, PatientId, PatientRecord,
    PrescriptionRecord,
};

/// Tokens that carry no entity information; the mimic-like profile glues
/// them onto mentions and noisy aliases so the model can learn to drop
/// them.
pub const INSIGNIFICANT_PHRASES: [&str; 5] = ["10%", "200mg", "Glass Bottle", "Mini Bag Plus", "NS"];

/// Saline-style mentions with no KB entity. They always carry an "ml"
/// dosage while KB standard dosages never use "ml", so the dosage rule
/// discards every candidate and they stay unlinked.
const UNLINKABLE_MENTIONS: [&str; 4] = ["NS", "1/2 NS", "NS (Glass Bottle)", "NS (Mini Bag Plus)"];

const NAME_ONSETS: [&str; 20] = [
    "al", "bro", "car", "dex", "el", "fen", "gly", "hy", "lam", "mer", "nor", "oxa", "pra",
    "quin", "ril", "sorb", "tri", "ur", "vel", "zon",
];
const NAME_MIDDLES: [&str; 10] = ["a", "e", "i", "o", "u", "ami", "eri", "ino", "ola", "uvi"];
const NAME_CODAS: [&str; 15] = [
    "pril", "sartan", "olol", "statin", "mycin", "cillin", "azole", "idone", "etine", "axel",
    "umab", "tinib", "profen", "zide", "micin",
];
const SALT_WORDS: [&str; 5] = ["Sodium", "Potassium", "Calcium", "Ferrous", "Magnesium"];
const SALT_SUFFIXES: [&str; 5] = ["Hydrochloride", "Sulfate", "Citrate", "Tartrate", "Maleate"];

const DOSE_VALUES: [f64; 15] = [
    5.0, 10.0, 20.0, 25.0, 40.0, 50.0, 81.0, 100.0, 125.0, 200.0, 250.0, 325.0, 500.0, 850.0,
    1000.0,
];
// "ml" is deliberately absent: it is reserved for the unlinkable
// solution mentions.
const DOSE_UNITS: [&str; 4] = ["mg", "mcg", "g", "units"];

const NAMED_CONDITIONS: [(&str, &str); 8] = [
    ("995.92", "Severe sepsis"),
    ("401.9", "Unspecified essential hypertension"),
    ("250.00", "Diabetes mellitus without complication type II"),
    ("285.9", "Anemia unspecified"),
    ("486", "Pneumonia organism unspecified"),
    ("428.0", "Congestive heart failure unspecified"),
    ("584.9", "Acute kidney failure unspecified"),
    ("038.9", "Unspecified septicemia"),
];
const CONDITION_QUALIFIERS: [&str; 5] = ["Acute", "Chronic", "Unspecified", "Secondary", "Benign"];
const CONDITION_SITES: [&str; 7] = [
    "respiratory", "cardiac", "renal", "hepatic", "metabolic", "vascular", "neural",
];
const CONDITION_KINDS: [&str; 5] = [
    "disorder", "insufficiency", "syndrome", "infection", "obstruction",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseProfile {
    Clean,
    MimicLike,
}

/// One `icd9_ontology.json` row, kept in the dotted source form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyRow {
    pub code: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub patients: Vec<PatientRecord>,
    pub prescriptions: Vec<PrescriptionRecord>,
    pub diagnoses: Vec<DiagnosisRecord>,
    pub drug_kb: Vec<DrugKbEntry>,
    pub ontology: Vec<OntologyRow>,
    /// True entity for every distinct mention; `None` marks mentions that
    /// are correctly unlinkable.
    pub gold_links: BTreeMap<String, Option<KbId>>,
}

/// Paths written by [`write_corpus`], all inside the chosen directory.
#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub patients: PathBuf,
    pub prescriptions: PathBuf,
    pub diagnoses: PathBuf,
    pub drug_kb: PathBuf,
    pub icd9_ontology: PathBuf,
    pub gold_links: PathBuf,
}

pub fn generate_synthetic_corpus(
    seed: u64,
    n_patients: usize,
    n_kb_drugs: usize,
    profile: NoiseProfile,
) -> Result<SyntheticCorpus, IngestError> {
    if n_patients < 1 || n_kb_drugs < 1 {
        return Err(IngestError::SynthSize {
            n_patients,
            n_kb_drugs,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mimic = profile == NoiseProfile::MimicLike;

    let ontology = gen_ontology(&mut rng, 60 + n_kb_drugs / 2);
    let (drug_kb, mention_pools) = gen_drug_kb(&mut rng, n_kb_drugs, &ontology, mimic);

    let mut gold_links: BTreeMap<String, Option<KbId>> = BTreeMap::new();
    for (entry, pool) in drug_kb.iter().zip(&mention_pools) {
        for mention in pool {
            gold_links.insert(mention.clone(), Some(entry.id.clone()));
        }
    }

    let mut patients = Vec::with_capacity(n_patients);
    for i in 0..n_patients {
        patients.push(PatientRecord {
            patient_id: PatientId::new((10000 + i).to_string()),
            demographics: vec![
                ("gender".into(), if rng.gen_bool(0.5) { "M" } else { "F" }.into()),
                ("age".into(), rng.gen_range(18..95).to_string()),
                (
                    "admission_type".into(),
                    ["EMERGENCY", "ELECTIVE", "URGENT"][rng.gen_range(0..3)].into(),
                ),
            ],
        });
    }

    let mut prescriptions = Vec::new();
    let mut diagnoses = Vec::new();
    let mut dx_seen: BTreeSet<(PatientId, String)> = BTreeSet::new();
    let push_dx = |patient: &PatientId,
                   code: String,
                   diagnoses: &mut Vec<DiagnosisRecord>,
                   dx_seen: &mut BTreeSet<(PatientId, String)>| {
        if dx_seen.insert((patient.clone(), code.clone())) {
            diagnoses.push(DiagnosisRecord {
                patient_id: patient.clone(),
                icd9_code_raw: code,
            });
        }
    };

    for patient in &patients {
        let n_rx = rng.gen_range(1..=4);
        for _ in 0..n_rx {
            let drug_idx = rng.gen_range(0..drug_kb.len());
            let entry = &drug_kb[drug_idx];
            let pool = &mention_pools[drug_idx];
            let mention = pool[rng.gen_range(0..pool.len())].clone();
            let dosage = if rng.gen_bool(0.85) {
                Some(entry.dosages[rng.gen_range(0..entry.dosages.len())].clone())
            } else {
                None
            };
            prescriptions.push(PrescriptionRecord {
                patient_id: patient.patient_id.clone(),
                drug_name_raw: mention,
                dosage,
            });
            // A diagnosis the drug treats, so the shared-indication rule
            // always has its witness.
            let indication = &entry.indications[rng.gen_range(0..entry.indications.len())];
            push_dx(
                &patient.patient_id,
                indication.as_str().to_owned(),
                &mut diagnoses,
                &mut dx_seen,
            );
        }
        for _ in 0..rng.gen_range(0..=2) {
            let row = &ontology[rng.gen_range(0..ontology.len())];
            let code = normalize_icd9(&row.code).expect("generated codes are valid");
            push_dx(
                &patient.patient_id,
                code.as_str().to_owned(),
                &mut diagnoses,
                &mut dx_seen,
            );
        }
        if mimic && rng.gen_bool(0.04) {
            let mention = UNLINKABLE_MENTIONS[rng.gen_range(0..UNLINKABLE_MENTIONS.len())];
            let value = [250.0, 500.0, 1000.0][rng.gen_range(0..3)];
            prescriptions.push(PrescriptionRecord {
                patient_id: patient.patient_id.clone(),
                drug_name_raw: mention.to_owned(),
                dosage: Some(Dosage {
                    value,
                    unit: "ml".into(),
                }),
            });
            gold_links.insert(mention.to_owned(), None);
        }
    }

    if mimic {
        // Guarantee the phenomenon regardless of patient count: the first
        // patients always carry a solution mention and an off-ontology
        // diagnosis code.
        let first = patients[0].patient_id.clone();
        prescriptions.push(PrescriptionRecord {
            patient_id: first.clone(),
            drug_name_raw: "NS".into(),
            dosage: Some(Dosage {
                value: 1000.0,
                unit: "ml".into(),
            }),
        });
        gold_links.insert("NS".into(), None);
        push_dx(&first, "71970".into(), &mut diagnoses, &mut dx_seen);
        let second = patients[patients.len().min(2) - 1].patient_id.clone();
        prescriptions.push(PrescriptionRecord {
            patient_id: second.clone(),
            drug_name_raw: "NS (Glass Bottle)".into(),
            dosage: Some(Dosage {
                value: 500.0,
                unit: "ml".into(),
            }),
        });
        gold_links.insert("NS (Glass Bottle)".into(), None);
        push_dx(&second, "NULL".into(), &mut diagnoses, &mut dx_seen);
    }

    // Gold covers exactly the mentions that occur in prescriptions.
    let mentioned: BTreeSet<&str> = prescriptions
        .iter()
        .map(|p| p.drug_name_raw.as_str())
        .collect();
    gold_links.retain(|mention, _| mentioned.contains(mention.as_str()));

    Ok(SyntheticCorpus {
        patients,
        prescriptions,
        diagnoses,
        drug_kb,
        ontology,
        gold_links,
    })
}

fn gen_ontology(rng: &mut ChaCha8Rng, n_codes: usize) -> Vec<OntologyRow> {
    let mut rows: Vec<OntologyRow> = NAMED_CONDITIONS
        .iter()
        .map(|(code, label)| OntologyRow {
            code: (*code).into(),
            label: (*label).into(),
        })
        .collect();
    let mut seen: BTreeSet<String> = rows.iter().map(|r| r.code.clone()).collect();
    while rows.len() < n_codes.max(NAMED_CONDITIONS.len()) {
        let code = format!("{}.{:02}", rng.gen_range(100..900), rng.gen_range(0..100));
        // 719.70 is reserved as a deliberately unmapped code.
        if code == "719.70" || !seen.insert(code.clone()) {
            continue;
        }
        let label = format!(
            "{} {} {}",
            CONDITION_QUALIFIERS[rng.gen_range(0..CONDITION_QUALIFIERS.len())],
            CONDITION_SITES[rng.gen_range(0..CONDITION_SITES.len())],
            CONDITION_KINDS[rng.gen_range(0..CONDITION_KINDS.len())],
        );
        rows.push(OntologyRow { code, label });
    }
    rows
}

/// Returns the KB plus one mention pool per entry (the distinct surface
/// strings prescriptions will use for that drug).
fn gen_drug_kb(
    rng: &mut ChaCha8Rng,
    n_kb_drugs: usize,
    ontology: &[OntologyRow],
    mimic: bool,
) -> (Vec<DrugKbEntry>, Vec<Vec<String>>) {
    let mut used_words: BTreeSet<String> = BTreeSet::new();
    let mut fresh_word = |rng: &mut ChaCha8Rng| loop {
        let word = format!(
            "{}{}{}",
            NAME_ONSETS[rng.gen_range(0..NAME_ONSETS.len())],
            NAME_MIDDLES[rng.gen_range(0..NAME_MIDDLES.len())],
            NAME_CODAS[rng.gen_range(0..NAME_CODAS.len())],
        );
        if used_words.insert(word.clone()) {
            let mut chars = word.chars();
            let first = chars.next().unwrap().to_uppercase();
            break format!("{}{}", first, chars.as_str());
        }
    };

    let mut entries = Vec::with_capacity(n_kb_drugs);
    let mut pools = Vec::with_capacity(n_kb_drugs);
    for i in 0..n_kb_drugs {
        let base = fresh_word(rng);
        let name = if rng.gen_bool(0.2) {
            format!("{} {}", SALT_WORDS[rng.gen_range(0..SALT_WORDS.len())], base)
        } else {
            base
        };

        let mut aliases = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            aliases.push(fresh_word(rng));
        }
        if mimic {
            if rng.gen_bool(0.4) {
                aliases.push(format!(
                    "{} {}",
                    name,
                    SALT_SUFFIXES[rng.gen_range(0..SALT_SUFFIXES.len())]
                ));
            }
            if rng.gen_bool(0.6) {
                aliases.push(format!(
                    "{} {}",
                    name,
                    INSIGNIFICANT_PHRASES[rng.gen_range(0..INSIGNIFICANT_PHRASES.len())]
                ));
            }
        }

        let n_ind = rng.gen_range(1..=3);
        let mut indications = BTreeSet::new();
        while indications.len() < n_ind {
            let row = &ontology[rng.gen_range(0..ontology.len())];
            indications.insert(normalize_icd9(&row.code).expect("generated codes are valid"));
        }

        let n_dose = rng.gen_range(1..=3);
        let mut dosages: Vec<Dosage> = Vec::new();
        while dosages.len() < n_dose {
            let d = Dosage {
                value: DOSE_VALUES[rng.gen_range(0..DOSE_VALUES.len())],
                unit: DOSE_UNITS[rng.gen_range(0..DOSE_UNITS.len())].into(),
            };
            if !dosages.iter().any(|x| x == &d) {
                dosages.push(d);
            }
        }

        let mut pool = vec![name.clone()];
        if mimic {
            if rng.gen_bool(0.6) {
                pool.push(format!(
                    "{} {}",
                    name,
                    INSIGNIFICANT_PHRASES[rng.gen_range(0..INSIGNIFICANT_PHRASES.len())]
                ));
            }
            if !aliases.is_empty() && rng.gen_bool(0.5) {
                pool.push(aliases[rng.gen_range(0..aliases.len())].clone());
            }
            let words: Vec<&str> = name.split(' ').collect();
            if words.len() > 1 && rng.gen_bool(0.3) {
                let mut reordered = words.clone();
                reordered.reverse();
                pool.push(reordered.join(" "));
            }
            pool.sort();
            pool.dedup();
            pool.shuffle(rng);
        }

        entries.push(DrugKbEntry {
            id: KbId::new(format!("DB{:05}", 10000 + i)),
            name,
            aliases,
            indications: indications.into_iter().collect(),
            dosages,
        });
        pools.push(pool);
    }
    (entries, pools)
}

/// Writes the six corpus files into `dir` with stable ordering and
/// formatting; same corpus, same bytes.
pub fn write_corpus(corpus: &SyntheticCorpus, dir: &Path) -> Result<CorpusPaths, IngestError> {
    let io_err = |path: &Path, e: std::io::Error| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    };
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let paths = CorpusPaths {
        patients: dir.join("patients.csv"),
        prescriptions: dir.join("prescriptions.csv"),
        diagnoses: dir.join("diagnoses.csv"),
        drug_kb: dir.join("drug_kb.json"),
        icd9_ontology: dir.join("icd9_ontology.json"),
        gold_links: dir.join("gold_links.json"),
    };

    let csv_err = |path: &Path, e: csv::Error| IngestError::Csv {
        path: path.display().to_string(),
        source: e,
    };

    let mut w = csv::Writer::from_path(&paths.patients)
        .map_err(|e| csv_err(&paths.patients, e))?;
    w.write_record(["patient_id", "gender", "age", "admission_type"])
        .map_err(|e| csv_err(&paths.patients, e))?;
    for p in &corpus.patients {
        let find = |key: &str| {
            p.demographics
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .unwrap_or("")
        };
        w.write_record([
            p.patient_id.as_str(),
            find("gender"),
            find("age"),
            find("admission_type"),
        ])
        .map_err(|e| csv_err(&paths.patients, e))?;
    }
    w.flush().map_err(|e| io_err(&paths.patients, e))?;

    let mut w = csv::Writer::from_path(&paths.prescriptions)
        .map_err(|e| csv_err(&paths.prescriptions, e))?;
    w.write_record(["patient_id", "drug_name", "dosage_value", "dosage_unit"])
        .map_err(|e| csv_err(&paths.prescriptions, e))?;
    for rx in &corpus.prescriptions {
        let (value, unit) = match &rx.dosage {
            Some(d) => (format!("{}", d.value), d.unit.clone()),
            None => (String::new(), String::new()),
        };
        w.write_record([
            rx.patient_id.as_str(),
            rx.drug_name_raw.as_str(),
            &value,
            &unit,
        ])
        .map_err(|e| csv_err(&paths.prescriptions, e))?;
    }
    w.flush().map_err(|e| io_err(&paths.prescriptions, e))?;

    let mut w =
        csv::Writer::from_path(&paths.diagnoses).map_err(|e| csv_err(&paths.diagnoses, e))?;
    w.write_record(["patient_id", "icd9_code"])
        .map_err(|e| csv_err(&paths.diagnoses, e))?;
    for dx in &corpus.diagnoses {
        w.write_record([dx.patient_id.as_str(), dx.icd9_code_raw.as_str()])
            .map_err(|e| csv_err(&paths.diagnoses, e))?;
    }
    w.flush().map_err(|e| io_err(&paths.diagnoses, e))?;

    let json_err = |path: &Path, e: serde_json::Error| IngestError::Json {
        path: path.display().to_string(),
        source: e,
    };
    let write_json = |path: &Path, value: String| -> Result<(), IngestError> {
        std::fs::write(path, value + "\n").map_err(|e| io_err(path, e))
    };
    write_json(
        &paths.drug_kb,
        serde_json::to_string_pretty(&corpus.drug_kb).map_err(|e| json_err(&paths.drug_kb, e))?,
    )?;
    write_json(
        &paths.icd9_ontology,
        serde_json::to_string_pretty(&corpus.ontology)
            .map_err(|e| json_err(&paths.icd9_ontology, e))?,
    )?;
    write_json(
        &paths.gold_links,
        serde_json::to_string_pretty(&corpus.gold_links)
            .map_err(|e| json_err(&paths.gold_links, e))?,
    )?;
    Ok(paths)
}
