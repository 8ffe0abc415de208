//! Patient-fact RDF graph: deduplicated triples over IRIs minted from
//! patient ids, drug mention names, and normalized diagnosis codes, with
//! sameAs bridges to external vocabularies for linked entities. The
//! serialization lives in [`ntriples`].

pub mod ntriples;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{DiagnosisRecord, PatientRecord, PrescriptionRecord};
use crate::linker::{DiseaseLink, LinkDecision};
use crate::normalize::Icd9Code;

pub const OWL_SAME_AS: &str = "http://www.w3.org/2002/07/owl#sameAs";

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("namespace {namespace:?} is not an absolute IRI: {reason}")]
    InvalidNamespace { namespace: String, reason: String },
    #[error("cannot mint an IRI from an empty {what}")]
    EmptyComponent { what: &'static str },
    #[error("{what} {text:?} contains control characters and cannot become an IRI")]
    UnencodableText { what: &'static str, text: String },
    #[error("no link decision for mention {mention:?}")]
    MissingDrugDecision { mention: String },
    #[error("no disease decision for code {code:?}")]
    MissingDiseaseDecision { code: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// An absolute IRI. Construction goes through the mint functions or the
/// parser, both of which keep the angle-bracket-unsafe characters out.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Self {
        Iri(value.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for Iri {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Iri),
    Literal {
        value: String,
        datatype: Option<Iri>,
    },
}

impl Term {
    pub fn literal(value: impl Into<String>) -> Self {
        Term::Literal {
            value: value.into(),
            datatype: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    /// Base namespace for every minted local IRI.
    pub namespace: String,
    /// Prefix for drug sameAs objects; the kb_id is appended verbatim.
    pub drug_kb_iri_prefix: String,
    /// Prefix for disease sameAs objects; the dotted code is appended.
    pub icd9_iri_prefix: String,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            namespace: "http://kmap.xjtudlc.com/pdd_data/".into(),
            drug_kb_iri_prefix: "http://bio2rdf.org/drugbank:".into(),
            icd9_iri_prefix: "http://bio2rdf.org/icd9:".into(),
        }
    }
}

impl GraphConfig {
    /// A namespace must look like an absolute IRI: a scheme, then only
    /// characters that survive inside angle brackets.
    pub fn validate(&self) -> Result<(), GraphError> {
        for (what, value) in [
            ("namespace", &self.namespace),
            ("drug_kb_iri_prefix", &self.drug_kb_iri_prefix),
            ("icd9_iri_prefix", &self.icd9_iri_prefix),
        ] {
            let err = |reason: &str| GraphError::InvalidNamespace {
                namespace: value.clone(),
                reason: format!("{what}: {reason}"),
            };
            let scheme_len = value.find(':').ok_or_else(|| err("no scheme"))?;
            let mut chars = value[..scheme_len].chars();
            let leading_alpha = chars.next().map(|c| c.is_ascii_alphabetic());
            if leading_alpha != Some(true)
                || !chars.all(|c| c.is_ascii_alphanumeric() || "+-.".contains(c))
            {
                return Err(err("malformed scheme"));
            }
            if value
                .chars()
                .any(|c| c.is_whitespace() || c.is_control() || "<>\"{}|^`".contains(c))
            {
                return Err(err("contains characters not allowed in an IRI"));
            }
        }
        Ok(())
    }

    pub fn prescribed_predicate(&self) -> Iri {
        Iri::new(format!("{}prescribed", self.namespace))
    }

    pub fn diagnosed_predicate(&self) -> Iri {
        Iri::new(format!("{}diagnosed", self.namespace))
    }

    pub fn same_as_predicate(&self) -> Iri {
        Iri::new(OWL_SAME_AS)
    }
}

/// Percent-encodes everything outside the RFC 3986 unreserved set, one
/// `%XX` per UTF-8 byte, uppercase hex.
pub fn percent_encode(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for byte in text.bytes() {
        match byte {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'.' | b'_' | b'~' => {
                out.push(byte as char)
            }
            _ => out.push_str(&format!("%{byte:02X}")),
        }
    }
    out
}

fn checked_component(what: &'static str, text: &str) -> Result<(), GraphError> {
    if text.is_empty() {
        return Err(GraphError::EmptyComponent { what });
    }
    if text.chars().any(char::is_control) {
        return Err(GraphError::UnencodableText {
            what,
            text: text.to_owned(),
        });
    }
    Ok(())
}

/// Patient IRIs keep the id verbatim (percent-encoded where required).
pub fn mint_patient_iri(config: &GraphConfig, patient_id: &str) -> Result<Iri, GraphError> {
    checked_component("patient id", patient_id)?;
    Ok(Iri::new(format!(
        "{}{}",
        config.namespace,
        percent_encode(patient_id)
    )))
}

/// Drug entity IRIs use the lowercased mention name, so mentions that
/// differ only in case share one entity.
pub fn mint_drug_iri(config: &GraphConfig, mention_raw: &str) -> Result<Iri, GraphError> {
    checked_component("drug name", mention_raw)?;
    Ok(Iri::new(format!(
        "{}{}",
        config.namespace,
        percent_encode(&mention_raw.to_lowercase())
    )))
}

/// Disease entity IRIs use the normalized code behind an "icd" marker.
pub fn mint_disease_iri(config: &GraphConfig, code: &Icd9Code) -> Result<Iri, GraphError> {
    Ok(Iri::new(format!(
        "{}icd{}",
        config.namespace,
        percent_encode(code.as_str())
    )))
}

fn mint_demographic_predicate(config: &GraphConfig, attr: &str) -> Result<Iri, GraphError> {
    checked_component("attribute name", attr)?;
    Ok(Iri::new(format!(
        "{}{}",
        config.namespace,
        percent_encode(attr)
    )))
}

/// Deduplicated triple set with the config it was minted under.
#[derive(Debug, Clone, PartialEq)]
pub struct PddGraph {
    config: GraphConfig,
    triples: BTreeSet<Triple>,
}

/// Wildcard query: `None` matches anything in that position.
#[derive(Debug, Clone, Default)]
pub struct TriplePattern {
    pub subject: Option<Iri>,
    pub predicate: Option<Iri>,
    pub object: Option<Term>,
}

impl PddGraph {
    pub fn new(config: GraphConfig) -> Result<Self, GraphError> {
        config.validate()?;
        Ok(PddGraph {
            config,
            triples: BTreeSet::new(),
        })
    }

    pub fn config(&self) -> &GraphConfig {
        &self.config
    }

    /// Returns false when the triple was already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        self.triples.insert(triple)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    /// Triples in canonical (subject, predicate, object) order.
    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    /// Linear scan; results come back in canonical order.
    pub fn query(&self, pattern: &TriplePattern) -> Vec<&Triple> {
        self.triples
            .iter()
            .filter(|t| {
                pattern.subject.as_ref().is_none_or(|s| *s == t.subject)
                    && pattern.predicate.as_ref().is_none_or(|p| *p == t.predicate)
                    && pattern.object.as_ref().is_none_or(|o| *o == t.object)
            })
            .collect()
    }
}

/// Distinct-entity and triple counts observed while building; these equal
/// independent recounts from the input records by construction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BuildCounts {
    pub patients: usize,
    pub drug_entities: usize,
    pub disease_entities: usize,
    pub demographic_triples: usize,
    pub prescription_triples: usize,
    pub diagnosis_triples: usize,
    pub drug_sameas_triples: usize,
    pub disease_sameas_triples: usize,
}

/// Materializes the graph: demographic facts, prescribed and diagnosed
/// facts for every record (linked or not), and sameAs bridges only for
/// entities whose decision is linked. Every observed mention and code
/// must have a decision.
pub fn build_graph(
    patients: &[PatientRecord],
    prescriptions: &[PrescriptionRecord],
    diagnoses: &[DiagnosisRecord],
    drug_decisions: &BTreeMap<String, LinkDecision>,
    disease_decisions: &BTreeMap<String, DiseaseLink>,
    config: GraphConfig,
) -> Result<(PddGraph, BuildCounts), GraphError> {
    let mut graph = PddGraph::new(config)?;
    let mut subjects: BTreeSet<Iri> = BTreeSet::new();
    let mut counts = BuildCounts::default();

    for patient in patients {
        let subject = mint_patient_iri(graph.config(), patient.patient_id.as_str())?;
        for (attr, value) in &patient.demographics {
            let predicate = mint_demographic_predicate(graph.config(), attr)?;
            if graph.insert(Triple {
                subject: subject.clone(),
                predicate,
                object: Term::literal(value.clone()),
            }) {
                counts.demographic_triples += 1;
                subjects.insert(subject.clone());
            }
        }
    }

    let mut drug_iris: BTreeMap<&str, Iri> = BTreeMap::new();
    let prescribed = graph.config().prescribed_predicate();
    for rx in prescriptions {
        let mention = rx.drug_name_raw.as_str();
        if !drug_decisions.contains_key(mention) {
            return Err(GraphError::MissingDrugDecision {
                mention: mention.to_owned(),
            });
        }
        let subject = mint_patient_iri(graph.config(), rx.patient_id.as_str())?;
        let object = match drug_iris.get(mention) {
            Some(iri) => iri.clone(),
            None => {
                let iri = mint_drug_iri(graph.config(), mention)?;
                drug_iris.insert(mention, iri.clone());
                iri
            }
        };
        if graph.insert(Triple {
            subject: subject.clone(),
            predicate: prescribed.clone(),
            object: Term::Iri(object),
        }) {
            counts.prescription_triples += 1;
            subjects.insert(subject);
        }
    }

    let mut disease_iris: BTreeMap<&str, (Iri, &DiseaseLink)> = BTreeMap::new();
    let diagnosed = graph.config().diagnosed_predicate();
    for dx in diagnoses {
        let code_raw = dx.icd9_code_raw.as_str();
        let (object, _) = match disease_iris.get(code_raw) {
            Some(entry) => entry.clone(),
            None => {
                let link = disease_decisions.get(code_raw).ok_or_else(|| {
                    GraphError::MissingDiseaseDecision {
                        code: code_raw.to_owned(),
                    }
                })?;
                let iri = mint_disease_iri(graph.config(), &link.code)?;
                disease_iris.insert(code_raw, (iri.clone(), link));
                (iri, link)
            }
        };
        let subject = mint_patient_iri(graph.config(), dx.patient_id.as_str())?;
        if graph.insert(Triple {
            subject: subject.clone(),
            predicate: diagnosed.clone(),
            object: Term::Iri(object),
        }) {
            counts.diagnosis_triples += 1;
            subjects.insert(subject);
        }
    }

    counts.patients = subjects.len();
    counts.drug_entities = drug_iris
        .values()
        .collect::<BTreeSet<_>>()
        .len();
    counts.disease_entities = disease_iris
        .values()
        .map(|(iri, _)| iri)
        .collect::<BTreeSet<_>>()
        .len();

    // sameAs bridges, only for observed entities with a linked decision.
    let same_as = graph.config().same_as_predicate();
    let mut sameas_subjects: BTreeSet<&Iri> = BTreeSet::new();
    for (mention, iri) in &drug_iris {
        let decision = &drug_decisions[*mention];
        if let Some(kb_id) = decision.linked_kb_id() {
            let object = Iri::new(format!(
                "{}{}",
                graph.config().drug_kb_iri_prefix,
                kb_id.as_str()
            ));
            if graph.insert(Triple {
                subject: iri.clone(),
                predicate: same_as.clone(),
                object: Term::Iri(object),
            }) {
                counts.drug_sameas_triples += 1;
            }
            sameas_subjects.insert(iri);
        }
    }
    for (iri, link) in disease_iris.values() {
        if link.linked && sameas_subjects.insert(iri) {
            let object = Iri::new(format!(
                "{}{}",
                graph.config().icd9_iri_prefix,
                link.code.dotted()
            ));
            if graph.insert(Triple {
                subject: iri.clone(),
                predicate: same_as.clone(),
                object: Term::Iri(object),
            }) {
                counts.disease_sameas_triples += 1;
            }
        }
    }

    Ok((graph, counts))
}
