//! Input records and loaders. CSV loaders are lenient at row granularity:
//! a bad row is rejected with its row number and reason while the rest of
//! the file loads, and `rows_read = rows_accepted + rejects.len()` always
//! holds. File-level problems (missing file, missing column, malformed
//! JSON, inconsistent KB) are hard errors.

pub mod synth;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalize::{normalize_icd9, tokenize_name, Icd9Code, NormalizeError};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: missing required column {column:?}")]
    MissingColumn { path: String, column: String },
    #[error("{path}: not valid JSON: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("drug KB has duplicate id {id:?}")]
    DuplicateKbId { id: String },
    #[error("drug KB entry {id:?} has a name with no tokens: {name:?}")]
    EmptyKbName { id: String, name: String },
    #[error("drug KB entry {id:?} has an invalid indication: {source}")]
    InvalidIndication {
        id: String,
        #[source]
        source: NormalizeError,
    },
    #[error("drug KB entry {id:?} has an invalid dosage: {reason}")]
    InvalidDosage { id: String, reason: String },
    #[error("ontology code {raw:?} is invalid: {source}")]
    InvalidOntologyCode {
        raw: String,
        #[source]
        source: NormalizeError,
    },
    #[error("synthetic corpus sizes must be at least 1 (got {n_patients} patients, {n_kb_drugs} drugs)")]
    SynthSize { n_patients: usize, n_kb_drugs: usize },
}

/// EMR patient identifier, kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatientId(String);

impl PatientId {
    pub fn new(id: impl Into<String>) -> Self {
        PatientId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for PatientId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Drug KB identifier (e.g. "DB00945").
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KbId(String);

impl KbId {
    pub fn new(id: impl Into<String>) -> Self {
        KbId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for KbId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub patient_id: PatientId,
    /// (attribute, value) pairs in column order; empty cells are omitted.
    pub demographics: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dosage {
    pub value: f64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrescriptionRecord {
    pub patient_id: PatientId,
    pub drug_name_raw: String,
    pub dosage: Option<Dosage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisRecord {
    pub patient_id: PatientId,
    pub icd9_code_raw: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrugKbEntry {
    pub id: KbId,
    pub name: String,
    pub aliases: Vec<String>,
    pub indications: Vec<Icd9Code>,
    pub dosages: Vec<Dosage>,
}

/// The reference drug vocabulary, in file order, with an id index.
#[derive(Debug, Clone, PartialEq)]
pub struct DrugKb {
    entries: Vec<DrugKbEntry>,
    by_id: BTreeMap<KbId, usize>,
}

impl DrugKb {
    pub fn new(entries: Vec<DrugKbEntry>) -> Result<Self, IngestError> {
        let mut by_id = BTreeMap::new();
        for (i, entry) in entries.iter().enumerate() {
            if by_id.insert(entry.id.clone(), i).is_some() {
                return Err(IngestError::DuplicateKbId {
                    id: entry.id.as_str().to_owned(),
                });
            }
        }
        Ok(DrugKb { entries, by_id })
    }

    pub fn get(&self, id: &KbId) -> Option<&DrugKbEntry> {
        self.by_id.get(id).map(|&i| &self.entries[i])
    }

    pub fn entries(&self) -> &[DrugKbEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Disease reference vocabulary keyed by normalized code.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Icd9Ontology {
    labels: BTreeMap<Icd9Code, String>,
}

impl Icd9Ontology {
    pub fn new(labels: BTreeMap<Icd9Code, String>) -> Self {
        Icd9Ontology { labels }
    }

    pub fn contains(&self, code: &Icd9Code) -> bool {
        self.labels.contains_key(code)
    }

    pub fn label(&self, code: &Icd9Code) -> Option<&str> {
        self.labels.get(code).map(String::as_str)
    }

    pub fn codes(&self) -> impl Iterator<Item = &Icd9Code> {
        self.labels.keys()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// A row the loader refused, with the 1-based data row number (the first
/// row after the header is row 1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowReject {
    pub row: usize,
    pub reason: String,
}

/// Loader result: accepted records plus the reject report.
/// `rows_read = rows_accepted + rejects.len()`; `records.len()` can be
/// smaller than `rows_accepted` only for loaders that merge rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadOutcome<T> {
    pub records: Vec<T>,
    pub rows_read: usize,
    pub rows_accepted: usize,
    pub rejects: Vec<RowReject>,
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(csv::ReaderBuilder::new().flexible(false).from_reader(file))
}

fn headers(path: &Path, reader: &mut csv::Reader<File>) -> Result<Vec<String>, IngestError> {
    Ok(reader
        .headers()
        .map_err(|e| IngestError::Csv {
            path: path.display().to_string(),
            source: e,
        })?
        .iter()
        .map(str::to_owned)
        .collect())
}

/// Loads `patient_id[,attr...]` rows. Duplicate ids merge with
/// last-write-wins per attribute; records come back in first-seen order.
pub fn load_patients(path: &Path) -> Result<LoadOutcome<PatientRecord>, IngestError> {
    let mut reader = open_csv(path)?;
    let header = headers(path, &mut reader)?;
    let id_col = header
        .iter()
        .position(|h| h == "patient_id")
        .ok_or_else(|| IngestError::MissingColumn {
            path: path.display().to_string(),
            column: "patient_id".into(),
        })?;

    let mut records: Vec<PatientRecord> = Vec::new();
    let mut index: BTreeMap<PatientId, usize> = BTreeMap::new();
    let mut rows_read = 0;
    let mut rows_accepted = 0;
    let mut rejects = Vec::new();
    for (row, result) in reader.records().enumerate() {
        let row = row + 1;
        rows_read += 1;
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                rejects.push(RowReject {
                    row,
                    reason: format!("malformed row: {e}"),
                });
                continue;
            }
        };
        let id = record.get(id_col).unwrap_or("").trim();
        if id.is_empty() {
            rejects.push(RowReject {
                row,
                reason: "empty patient_id".into(),
            });
            continue;
        }
        rows_accepted += 1;
        let id = PatientId::new(id);
        let slot = *index.entry(id.clone()).or_insert_with(|| {
            records.push(PatientRecord {
                patient_id: id.clone(),
                demographics: Vec::new(),
            });
            records.len() - 1
        });
        for (col, value) in header.iter().zip(record.iter()) {
            if col == "patient_id" || value.is_empty() {
                continue;
            }
            let demo = &mut records[slot].demographics;
            match demo.iter_mut().find(|(attr, _)| attr == col) {
                Some((_, v)) => *v = value.to_owned(),
                None => demo.push((col.clone(), value.to_owned())),
            }
        }
    }
    Ok(LoadOutcome {
        records,
        rows_read,
        rows_accepted,
        rejects,
    })
}

fn require_columns(
    path: &Path,
    header: &[String],
    wanted: &[&str],
) -> Result<Vec<usize>, IngestError> {
    wanted
        .iter()
        .map(|&w| {
            header
                .iter()
                .position(|h| h == w)
                .ok_or_else(|| IngestError::MissingColumn {
                    path: path.display().to_string(),
                    column: w.into(),
                })
        })
        .collect()
}

/// Loads `patient_id,drug_name,dosage_value,dosage_unit` rows. A blank
/// value+unit means no dosage was recorded; half-blank dosages, malformed
/// or non-positive values, unknown patients, and empty drug names are
/// rejected row-by-row.
pub fn load_prescriptions(
    path: &Path,
    known_patients: &BTreeSet<PatientId>,
) -> Result<LoadOutcome<PrescriptionRecord>, IngestError> {
    let mut reader = open_csv(path)?;
    let header = headers(path, &mut reader)?;
    let cols = require_columns(
        path,
        &header,
        &["patient_id", "drug_name", "dosage_value", "dosage_unit"],
    )?;

    let mut out = LoadOutcome {
        records: Vec::new(),
        rows_read: 0,
        rows_accepted: 0,
        rejects: Vec::new(),
    };
    for (row, result) in reader.records().enumerate() {
        let row = row + 1;
        out.rows_read += 1;
        macro_rules! reject {
            ($($arg:tt)*) => {{
                out.rejects.push(RowReject { row, reason: format!($($arg)*) });
                continue
            }};
        }
        let record = match result {
            Ok(r) => r,
            Err(e) => reject!("malformed row: {e}"),
        };
        let get = |i: usize| record.get(cols[i]).unwrap_or("").trim();
        let (id, drug, value, unit) = (get(0), get(1), get(2), get(3));
        if id.is_empty() {
            reject!("empty patient_id");
        }
        let patient_id = PatientId::new(id);
        if !known_patients.contains(&patient_id) {
            reject!("unknown patient {id:?}");
        }
        if drug.is_empty() {
            reject!("empty drug_name");
        }
        let dosage = match (value.is_empty(), unit.is_empty()) {
            (true, true) => None,
            (true, false) => reject!("dosage_unit without dosage_value"),
            (false, true) => reject!("dosage_value without dosage_unit"),
            (false, false) => match value.parse::<f64>() {
                Ok(v) if v.is_finite() && v > 0.0 => Some(Dosage {
                    value: v,
                    unit: unit.to_owned(),
                }),
                Ok(v) => reject!("dosage_value {v} is not positive"),
                Err(_) => reject!("malformed dosage_value {value:?}"),
            },
        };
        out.rows_accepted += 1;
        out.records.push(PrescriptionRecord {
            patient_id,
            drug_name_raw: drug.to_owned(),
            dosage,
        });
    }
    Ok(out)
}

/// Loads `patient_id,icd9_code` rows; unknown patients and empty codes
/// are rejected.
pub fn load_diagnoses(
    path: &Path,
    known_patients: &BTreeSet<PatientId>,
) -> Result<LoadOutcome<DiagnosisRecord>, IngestError> {
    let mut reader = open_csv(path)?;
    let header = headers(path, &mut reader)?;
    let cols = require_columns(path, &header, &["patient_id", "icd9_code"])?;

    let mut out = LoadOutcome {
        records: Vec::new(),
        rows_read: 0,
        rows_accepted: 0,
        rejects: Vec::new(),
    };
    for (row, result) in reader.records().enumerate() {
        let row = row + 1;
        out.rows_read += 1;
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                out.rejects.push(RowReject {
                    row,
                    reason: format!("malformed row: {e}"),
                });
                continue;
            }
        };
        let id = record.get(cols[0]).unwrap_or("").trim();
        let code = record.get(cols[1]).unwrap_or("").trim();
        if id.is_empty() {
            out.rejects.push(RowReject {
                row,
                reason: "empty patient_id".into(),
            });
            continue;
        }
        let patient_id = PatientId::new(id);
        if !known_patients.contains(&patient_id) {
            out.rejects.push(RowReject {
                row,
                reason: format!("unknown patient {id:?}"),
            });
            continue;
        }
        if code.is_empty() {
            out.rejects.push(RowReject {
                row,
                reason: "empty icd9_code".into(),
            });
            continue;
        }
        out.rows_accepted += 1;
        out.records.push(DiagnosisRecord {
            patient_id,
            icd9_code_raw: code.to_owned(),
        });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct KbEntryFile {
    id: String,
    name: String,
    #[serde(default)]
    aliases: Vec<String>,
    #[serde(default)]
    indications: Vec<String>,
    #[serde(default)]
    dosages: Vec<Dosage>,
}

/// Loads the drug KB JSON array. Aliases are deduplicated on their
/// tokenized form (case and punctuation insensitive); aliases that
/// duplicate the canonical name or tokenize to nothing are dropped.
pub fn load_drug_kb(path: &Path) -> Result<DrugKb, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let parsed: Vec<KbEntryFile> =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| IngestError::Json {
            path: path.display().to_string(),
            source: e,
        })?;

    let mut entries = Vec::with_capacity(parsed.len());
    for raw in parsed {
        let name_key = tokenize_name(&raw.name).tokens.join(" ");
        if name_key.is_empty() {
            return Err(IngestError::EmptyKbName {
                id: raw.id,
                name: raw.name,
            });
        }
        let mut seen = BTreeSet::from([name_key]);
        let mut aliases = Vec::new();
        for alias in raw.aliases {
            let key = tokenize_name(&alias).tokens.join(" ");
            if !key.is_empty() && seen.insert(key) {
                aliases.push(alias);
            }
        }
        let indications = raw
            .indications
            .iter()
            .map(|c| {
                normalize_icd9(c).map_err(|source| IngestError::InvalidIndication {
                    id: raw.id.clone(),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        for dosage in &raw.dosages {
            if !dosage.value.is_finite() || dosage.value <= 0.0 {
                return Err(IngestError::InvalidDosage {
                    id: raw.id,
                    reason: format!("value {} is not positive", dosage.value),
                });
            }
            if dosage.unit.trim().is_empty() {
                return Err(IngestError::InvalidDosage {
                    id: raw.id,
                    reason: "empty unit".into(),
                });
            }
        }
        entries.push(DrugKbEntry {
            id: KbId::new(raw.id),
            name: raw.name,
            aliases,
            indications,
            dosages: raw.dosages,
        });
    }
    DrugKb::new(entries)
}

#[derive(Deserialize)]
struct OntologyEntryFile {
    code: String,
    label: String,
}

/// Loads the `[{code, label}]` ontology JSON; codes are normalized, and a
/// repeated code keeps the last label.
pub fn load_icd9_ontology(path: &Path) -> Result<Icd9Ontology, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let parsed: Vec<OntologyEntryFile> =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| IngestError::Json {
            path: path.display().to_string(),
            source: e,
        })?;
    let mut labels = BTreeMap::new();
    for entry in parsed {
        let code = normalize_icd9(&entry.code).map_err(|source| {
            IngestError::InvalidOntologyCode {
                raw: entry.code.clone(),
                source,
            }
        })?;
        labels.insert(code, entry.label);
    }
    Ok(Icd9Ontology::new(labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn write(dir: &tempfile::TempDir, name: &str, content: &str) -> PathBuf {
        let path = dir.path().join(name);
        std::fs::write(&path, content).unwrap();
        path
    }

    fn patient_set(ids: &[&str]) -> BTreeSet<PatientId> {
        ids.iter().map(|i| PatientId::new(*i)).collect()
    }

    #[test]
    fn patients_load_in_file_order_with_demographics() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            &dir,
            "patients.csv",
            "patient_id,gender,age\n18740,M,64\n274671,F,71\n",
        );
        let out = load_patients(&path).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.records[0].patient_id.as_str(), "18740");
        assert_eq!(
            out.records[0].demographics,
            vec![("gender".into(), "M".into()), ("age".into(), "64".into())]
        );
        assert_eq!(out.records[1].patient_id.as_str(), "274671");
        assert_eq!(out.rows_read, 2);
        assert_eq!(out.rows_accepted, 2);
        assert!(out.rejects.is_empty());
    }

    #[test]
    fn header_only_file_yields_no_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "patients.csv", "patient_id,gender\n");
        let out = load_patients(&path).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.rows_read, 0);
    }

    #[test]
    fn duplicate_patients_merge_last_write_wins() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            &dir,
            "patients.csv",
            "patient_id,gender,age\n1,M,50\n2,F,60\n1,,51\n",
        );
        let out = load_patients(&path).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.rows_accepted, 3);
        assert_eq!(
            out.records[0].demographics,
            vec![("gender".into(), "M".into()), ("age".into(), "51".into())]
        );
    }

    #[test]
    fn empty_patient_id_is_rejected_with_row_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "patients.csv", "patient_id,gender\n1,M\n,F\n2,F\n");
        let out = load_patients(&path).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.rejects.len(), 1);
        assert_eq!(out.rejects[0].row, 2);
        assert_eq!(out.rows_read, out.rows_accepted + out.rejects.len());
    }

    #[test]
    fn missing_patient_id_column_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(&dir, "patients.csv", "id,gender\n1,M\n");
        assert!(matches!(
            load_patients(&path),
            Err(IngestError::MissingColumn { .. })
        ));
    }

    #[test]
    fn prescriptions_parse_dosage_and_blank_dosage() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            &dir,
            "rx.csv",
            "patient_id,drug_name,dosage_value,dosage_unit\n\
             18740,Aspirin,81,mg\n18740,NS (Glass Bottle),,\n",
        );
        let out = load_prescriptions(&path, &patient_set(&["18740"])).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(
            out.records[0].dosage,
            Some(Dosage {
                value: 81.0,
                unit: "mg".into()
            })
        );
        assert_eq!(out.records[1].drug_name_raw, "NS (Glass Bottle)");
        assert_eq!(out.records[1].dosage, None);
    }

    #[test]
    fn prescription_rejects_cover_every_bad_row_kind() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            &dir,
            "rx.csv",
            "patient_id,drug_name,dosage_value,dosage_unit\n\
             1,Aspirin,81,mg\n\
             9,Aspirin,81,mg\n\
             1,Aspirin,eighty,mg\n\
             1,Aspirin,-5,mg\n\
             1,Aspirin,0,mg\n\
             1,Aspirin,81,\n\
             1,Aspirin,,mg\n\
             1,,81,mg\n",
        );
        let out = load_prescriptions(&path, &patient_set(&["1"])).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.rows_read, 8);
        assert_eq!(out.rejects.len(), 7);
        assert_eq!(out.rows_read, out.rows_accepted + out.rejects.len());
        let rows: Vec<usize> = out.rejects.iter().map(|r| r.row).collect();
        assert_eq!(rows, vec![2, 3, 4, 5, 6, 7, 8]);
        assert!(out.rejects[0].reason.contains("unknown patient"));
        assert!(out.rejects[1].reason.contains("malformed dosage_value"));
    }

    #[test]
    fn non_finite_dosage_values_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            &dir,
            "rx.csv",
            "patient_id,drug_name,dosage_value,dosage_unit\n1,Aspirin,inf,mg\n1,Aspirin,NaN,mg\n",
        );
        let out = load_prescriptions(&path, &patient_set(&["1"])).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.rejects.len(), 2);
    }

    #[test]
    fn diagnoses_load_and_reject_unknown_patients() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            &dir,
            "dx.csv",
            "patient_id,icd9_code\n274671,995.92\n999,401.9\n274671,\n",
        );
        let out = load_diagnoses(&path, &patient_set(&["274671"])).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].icd9_code_raw, "995.92");
        assert_eq!(out.rejects.len(), 2);
        assert_eq!(out.rows_read, out.rows_accepted + out.rejects.len());
    }

    #[test]
    fn drug_kb_loads_and_dedups_aliases_case_insensitively() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            &dir,
            "kb.json",
            r#"[
                {"id": "DB09341", "name": "Dextrose",
                 "aliases": ["Glucose", "glucose", "D-Glucose", "dextrose"],
                 "indications": ["251.2"],
                 "dosages": [{"value": 50.0, "unit": "g"}]},
                {"id": "DB00945", "name": "Aspirin"}
            ]"#,
        );
        let kb = load_drug_kb(&path).unwrap();
        assert_eq!(kb.len(), 2);
        let dextrose = kb.get(&KbId::new("DB09341")).unwrap();
        assert_eq!(dextrose.aliases, vec!["Glucose", "D-Glucose"]);
        assert_eq!(dextrose.indications[0].as_str(), "2512");
        let aspirin = kb.get(&KbId::new("DB00945")).unwrap();
        assert!(aspirin.aliases.is_empty());
        assert!(aspirin.dosages.is_empty());
    }

    #[test]
    fn drug_kb_rejects_duplicates_and_empty_names() {
        let dir = tempfile::tempdir().unwrap();
        let dup = write(
            &dir,
            "dup.json",
            r#"[{"id": "DB1", "name": "A"}, {"id": "DB1", "name": "B"}]"#,
        );
        assert!(matches!(
            load_drug_kb(&dup),
            Err(IngestError::DuplicateKbId { .. })
        ));
        let empty = write(&dir, "empty.json", r#"[{"id": "DB1", "name": " ( ) "}]"#);
        assert!(matches!(
            load_drug_kb(&empty),
            Err(IngestError::EmptyKbName { .. })
        ));
        let bad_dosage = write(
            &dir,
            "dosage.json",
            r#"[{"id": "DB1", "name": "A", "dosages": [{"value": 0.0, "unit": "mg"}]}]"#,
        );
        assert!(matches!(
            load_drug_kb(&bad_dosage),
            Err(IngestError::InvalidDosage { .. })
        ));
    }

    #[test]
    fn ontology_normalizes_codes() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            &dir,
            "icd9.json",
            r#"[{"code": "995.92", "label": "Severe sepsis"},
                {"code": "v30.00", "label": "Single liveborn"}]"#,
        );
        let onto = load_icd9_ontology(&path).unwrap();
        assert_eq!(onto.len(), 2);
        assert!(onto.contains(&normalize_icd9("99592").unwrap()));
        assert_eq!(
            onto.label(&normalize_icd9("V3000").unwrap()),
            Some("Single liveborn")
        );
        let bad = write(&dir, "bad.json", r#"[{"code": " . ", "label": "x"}]"#);
        assert!(matches!(
            load_icd9_ontology(&bad),
            Err(IngestError::InvalidOntologyCode { .. })
        ));
    }
}
