//! End-to-end pipeline stages behind the CLI subcommands. Each stage
//! reads inputs named by the config, writes its artifacts into the
//! output directory under fixed file names, and returns what it wrote so
//! callers and tests can inspect results without re-reading files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use crate::config::{ConfigError, InputPaths, PipelineConfig};
use crate::enm::{load_table, save_table, train_em, EnmError, TrainingPair};
use crate::eval::{dataset_statistics, evaluate_links, DatasetStatistics, EvalError, EvalReport};
use crate::graph::ntriples::serialize_ntriples;
use crate::graph::{build_graph, BuildCounts, GraphError};
use crate::ingest::synth::{
    generate_synthetic_corpus, write_corpus, CorpusPaths, NoiseProfile,
};
use crate::ingest::{
    load_diagnoses, load_drug_kb, load_icd9_ontology, load_patients, load_prescriptions,
    DrugKb, IngestError, KbId, LoadOutcome, PatientId,
};
use crate::linker::{link_disease, link_drug, DiseaseLink, LinkDecision, LinkError, PatientContext};
use crate::normalize::{tokenize_name, NormalizeError};

pub const TABLE_FILE: &str = "enm_table.json";
pub const TRACE_FILE: &str = "likelihood_trace.csv";
pub const DECISIONS_FILE: &str = "link_decisions.jsonl";
pub const DISEASE_LINKS_FILE: &str = "disease_links.json";
pub const GRAPH_FILE: &str = "graph.nt";
pub const STATISTICS_JSON_FILE: &str = "statistics.json";
pub const STATISTICS_TEXT_FILE: &str = "statistics.txt";
pub const EVAL_JSON_FILE: &str = "eval_report.json";
pub const EVAL_TEXT_FILE: &str = "eval_report.txt";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Model(#[from] EnmError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Code(#[from] NormalizeError),
    #[error("artifact {} not found; {hint}", path.display())]
    MissingArtifact { path: PathBuf, hint: &'static str },
    #[error("artifact {path}: {reason}")]
    Artifact { path: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// 1 = usage/config error, 2 = data validation error, 3 = internal.
    pub fn exit_code(&self) -> i32 {
        fn model_code(e: &EnmError) -> i32 {
            match e {
                EnmError::InvalidConfig { .. } | EnmError::InvalidEpsilon { .. } => 1,
                EnmError::EmptyName { .. } => 3,
                _ => 2,
            }
        }
        match self {
            PipelineError::Config(_) | PipelineError::MissingArtifact { .. } => 1,
            PipelineError::Ingest(_)
            | PipelineError::Code(_)
            | PipelineError::Eval(_)
            | PipelineError::Artifact { .. } => 2,
            PipelineError::Model(e) => model_code(e),
            PipelineError::Link(e) => match e {
                LinkError::ZeroCandidateLimit => 1,
                LinkError::Score(inner) => model_code(inner),
                _ => 2,
            },
            PipelineError::Graph(e) => match e {
                GraphError::InvalidNamespace { .. } => 1,
                _ => 2,
            },
            PipelineError::Io { .. } => 3,
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_string(path: &Path, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_json_pretty<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Artifact {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    text.push('\n');
    write_string(path, &text)
}

fn ensure_output_dir(config: &PipelineConfig) -> Result<(), PipelineError> {
    std::fs::create_dir_all(&config.output_dir).map_err(|e| io_err(&config.output_dir, e))
}

fn require_artifact(path: PathBuf, hint: &'static str) -> Result<PathBuf, PipelineError> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(PipelineError::MissingArtifact { path, hint })
    }
}

fn log_rejects<T>(what: &str, outcome: &LoadOutcome<T>) {
    if !outcome.rejects.is_empty() {
        log::warn!(
            "{what}: accepted {} of {} rows, rejected {}",
            outcome.rows_accepted,
            outcome.rows_read,
            outcome.rejects.len()
        );
        for reject in &outcome.rejects {
            log::debug!("{what} row {}: {}", reject.row, reject.reason);
        }
    }
}

/// The training corpus pairs every KB name with itself and with each of
/// its aliases, so the model learns to keep shared words, drop alias-only
/// words to NULL, and convert alias words into name words.
pub fn training_pairs(kb: &DrugKb) -> Vec<TrainingPair> {
    let mut pairs = Vec::new();
    for entry in kb.entries() {
        let source = tokenize_name(&entry.name);
        pairs.push(TrainingPair {
            source: source.clone(),
            target: source.clone(),
        });
        for alias in &entry.aliases {
            pairs.push(TrainingPair {
                source: source.clone(),
                target: tokenize_name(alias),
            });
        }
    }
    pairs
}

#[derive(Debug, Clone)]
pub struct TrainArtifacts {
    pub table_path: PathBuf,
    pub trace_path: PathBuf,
    pub iterations: usize,
    pub final_log_likelihood: f64,
}

pub fn run_train(config: &PipelineConfig) -> Result<TrainArtifacts, PipelineError> {
    config.ensure_inputs_exist([config.inputs.drug_kb.as_path()])?;
    let kb = load_drug_kb(&config.inputs.drug_kb)?;
    let pairs = training_pairs(&kb);
    log::info!(
        "training on {} pairs from {} KB entries",
        pairs.len(),
        kb.len()
    );
    let (table, trace) = train_em(&pairs, &config.em)?;

    ensure_output_dir(config)?;
    let table_path = config.output_dir.join(TABLE_FILE);
    save_table(&table, &table_path)?;
    let trace_path = config.output_dir.join(TRACE_FILE);
    let mut csv_text = String::from("iteration,log_likelihood\n");
    for (i, ll) in trace.iter().enumerate() {
        csv_text.push_str(&format!("{},{}\n", i + 1, ll));
    }
    write_string(&trace_path, &csv_text)?;

    Ok(TrainArtifacts {
        table_path,
        trace_path,
        iterations: trace.len(),
        final_log_likelihood: *trace.last().expect("trace is never empty"),
    })
}

#[derive(Debug, Clone)]
pub struct LinkArtifacts {
    pub decisions_path: PathBuf,
    pub disease_links_path: PathBuf,
    pub decisions: BTreeMap<String, LinkDecision>,
    pub disease_links: BTreeMap<String, DiseaseLink>,
}

fn load_corpus(
    inputs: &InputPaths,
) -> Result<
    (
        Vec<crate::ingest::PatientRecord>,
        Vec<crate::ingest::PrescriptionRecord>,
        Vec<crate::ingest::DiagnosisRecord>,
    ),
    PipelineError,
> {
    let patients = load_patients(&inputs.patients)?;
    log_rejects("patients", &patients);
    let known: BTreeSet<PatientId> = patients
        .records
        .iter()
        .map(|p| p.patient_id.clone())
        .collect();
    let prescriptions = load_prescriptions(&inputs.prescriptions, &known)?;
    log_rejects("prescriptions", &prescriptions);
    let diagnoses = load_diagnoses(&inputs.diagnoses, &known)?;
    log_rejects("diagnoses", &diagnoses);
    Ok((patients.records, prescriptions.records, diagnoses.records))
}

pub fn run_link(config: &PipelineConfig) -> Result<LinkArtifacts, PipelineError> {
    config.ensure_inputs_exist([
        config.inputs.patients.as_path(),
        config.inputs.prescriptions.as_path(),
        config.inputs.diagnoses.as_path(),
        config.inputs.drug_kb.as_path(),
        config.inputs.icd9_ontology.as_path(),
    ])?;
    let table_path = require_artifact(
        config.output_dir.join(TABLE_FILE),
        "run the train step first",
    )?;
    let table = load_table(&table_path)?;
    let kb = load_drug_kb(&config.inputs.drug_kb)?;
    let ontology = load_icd9_ontology(&config.inputs.icd9_ontology)?;
    let (_, prescriptions, diagnoses) = load_corpus(&config.inputs)?;
    let ctx = PatientContext::build(&prescriptions, &diagnoses)?;

    let mentions: BTreeSet<&str> = prescriptions
        .iter()
        .map(|rx| rx.drug_name_raw.as_str())
        .collect();
    let mut decisions = BTreeMap::new();
    for mention in mentions {
        let decision = link_drug(
            mention,
            &kb,
            &table,
            config.em.epsilon,
            &ctx,
            &config.linker,
        )?;
        decisions.insert(mention.to_owned(), decision);
    }

    let codes: BTreeSet<&str> = diagnoses
        .iter()
        .map(|dx| dx.icd9_code_raw.as_str())
        .collect();
    let mut disease_links = BTreeMap::new();
    for code in codes {
        disease_links.insert(code.to_owned(), link_disease(code, &ontology)?);
    }

    let linked = decisions
        .values()
        .filter(|d| d.linked_kb_id().is_some())
        .count();
    log::info!(
        "linked {linked} of {} distinct mentions, {} of {} distinct codes",
        decisions.len(),
        disease_links.values().filter(|d| d.linked).count(),
        disease_links.len()
    );

    ensure_output_dir(config)?;
    let decisions_path = config.output_dir.join(DECISIONS_FILE);
    let mut jsonl = String::new();
    for decision in decisions.values() {
        let line = serde_json::to_string(decision).map_err(|e| PipelineError::Artifact {
            path: decisions_path.display().to_string(),
            reason: e.to_string(),
        })?;
        jsonl.push_str(&line);
        jsonl.push('\n');
    }
    write_string(&decisions_path, &jsonl)?;
    let disease_links_path = config.output_dir.join(DISEASE_LINKS_FILE);
    write_json_pretty(&disease_links_path, &disease_links)?;

    Ok(LinkArtifacts {
        decisions_path,
        disease_links_path,
        decisions,
        disease_links,
    })
}

pub fn read_link_decisions(path: &Path) -> Result<BTreeMap<String, LinkDecision>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut decisions = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let decision: LinkDecision =
            serde_json::from_str(line).map_err(|e| PipelineError::Artifact {
                path: path.display().to_string(),
                reason: format!("line {}: {}", idx + 1, e),
            })?;
        decisions.insert(decision.mention_raw.clone(), decision);
    }
    Ok(decisions)
}

pub fn read_disease_links(path: &Path) -> Result<BTreeMap<String, DiseaseLink>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Artifact {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

pub fn read_gold_links(path: &Path) -> Result<BTreeMap<String, Option<KbId>>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Artifact {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

#[derive(Debug, Clone)]
pub struct GraphArtifacts {
    pub graph_path: PathBuf,
    pub statistics_json_path: PathBuf,
    pub statistics_text_path: PathBuf,
    pub triple_count: usize,
    pub build_counts: BuildCounts,
    pub statistics: DatasetStatistics,
}

pub fn run_build_graph(config: &PipelineConfig) -> Result<GraphArtifacts, PipelineError> {
    config.ensure_inputs_exist([
        config.inputs.patients.as_path(),
        config.inputs.prescriptions.as_path(),
        config.inputs.diagnoses.as_path(),
    ])?;
    let decisions_path = require_artifact(
        config.output_dir.join(DECISIONS_FILE),
        "run the link step first",
    )?;
    let disease_links_path = require_artifact(
        config.output_dir.join(DISEASE_LINKS_FILE),
        "run the link step first",
    )?;
    let decisions = read_link_decisions(&decisions_path)?;
    let disease_links = read_disease_links(&disease_links_path)?;
    let (patients, prescriptions, diagnoses) = load_corpus(&config.inputs)?;

    let (graph, build_counts) = build_graph(
        &patients,
        &prescriptions,
        &diagnoses,
        &decisions,
        &disease_links,
        config.graph.clone(),
    )?;

    ensure_output_dir(config)?;
    let graph_path = config.output_dir.join(GRAPH_FILE);
    let triple_count = serialize_ntriples(&graph, &graph_path)?;
    let statistics = dataset_statistics(&graph);
    let statistics_json_path = config.output_dir.join(STATISTICS_JSON_FILE);
    write_json_pretty(&statistics_json_path, &statistics)?;
    let statistics_text_path = config.output_dir.join(STATISTICS_TEXT_FILE);
    write_string(&statistics_text_path, &statistics.render_text())?;
    log::info!("wrote {triple_count} triples");

    Ok(GraphArtifacts {
        graph_path,
        statistics_json_path,
        statistics_text_path,
        triple_count,
        build_counts,
        statistics,
    })
}

#[derive(Debug, Clone)]
pub struct EvalArtifacts {
    pub report_json_path: PathBuf,
    pub report_text_path: PathBuf,
    pub report: EvalReport,
}

pub fn run_eval(
    config: &PipelineConfig,
    gold_override: Option<&Path>,
) -> Result<EvalArtifacts, PipelineError> {
    let gold_path = match gold_override {
        Some(path) => path.to_path_buf(),
        None => config
            .inputs
            .gold_links
            .clone()
            .ok_or_else(|| ConfigError::Invalid {
                reason: "no gold_links path in the config and no --gold flag given".into(),
            })?,
    };
    config.ensure_inputs_exist([gold_path.as_path()])?;
    let decisions_path = require_artifact(
        config.output_dir.join(DECISIONS_FILE),
        "run the link step first",
    )?;
    let decisions = read_link_decisions(&decisions_path)?;
    let gold = read_gold_links(&gold_path)?;
    let report = evaluate_links(&decisions, &gold)?;

    ensure_output_dir(config)?;
    let report_json_path = config.output_dir.join(EVAL_JSON_FILE);
    write_json_pretty(&report_json_path, &report)?;
    let report_text_path = config.output_dir.join(EVAL_TEXT_FILE);
    write_string(&report_text_path, &report.render_text())?;

    Ok(EvalArtifacts {
        report_json_path,
        report_text_path,
        report,
    })
}

#[derive(Debug, Clone)]
pub struct SynthArtifacts {
    pub config_path: PathBuf,
    pub corpus_paths: CorpusPaths,
    pub patients: usize,
    pub prescriptions: usize,
    pub diagnoses: usize,
    pub kb_entries: usize,
}

/// Generates a corpus and drops a ready-to-run config next to it, so
/// `train`, `link`, `build-graph`, and `eval` can all point at the same
/// directory.
pub fn run_synth(
    out_dir: &Path,
    seed: u64,
    n_patients: usize,
    n_kb_drugs: usize,
    profile: NoiseProfile,
) -> Result<SynthArtifacts, PipelineError> {
    let corpus = generate_synthetic_corpus(seed, n_patients, n_kb_drugs, profile)?;
    let corpus_paths = write_corpus(&corpus, out_dir)?;
    let config = PipelineConfig {
        inputs: InputPaths {
            patients: "patients.csv".into(),
            prescriptions: "prescriptions.csv".into(),
            diagnoses: "diagnoses.csv".into(),
            drug_kb: "drug_kb.json".into(),
            icd9_ontology: "icd9_ontology.json".into(),
            gold_links: Some("gold_links.json".into()),
        },
        em: Default::default(),
        linker: Default::default(),
        graph: Default::default(),
        output_dir: ".".into(),
    };
    let config_path = out_dir.join(CONFIG_FILE);
    config.save(&config_path)?;
    log::info!(
        "wrote corpus with {} patients, {} prescriptions, {} diagnoses, {} KB entries",
        corpus.patients.len(),
        corpus.prescriptions.len(),
        corpus.diagnoses.len(),
        corpus.drug_kb.len()
    );
    Ok(SynthArtifacts {
        config_path,
        corpus_paths,
        patients: corpus.patients.len(),
        prescriptions: corpus.prescriptions.len(),
        diagnoses: corpus.diagnoses.len(),
        kb_entries: corpus.drug_kb.len(),
    })
}

/// Convenience for tests and embedders: train, link, and build the graph
/// in one process, returning every stage's artifacts.
pub fn run_full(
    config: &PipelineConfig,
) -> Result<(TrainArtifacts, LinkArtifacts, GraphArtifacts), PipelineError> {
    let train = run_train(config)?;
    let link = run_link(config)?;
    let graph = run_build_graph(config)?;
    Ok((train, link, graph))
}
