//! Full-pipeline runs over a corpus small enough to enumerate the
//! expected RDF output line by line, plus artifact determinism and
//! cross-artifact consistency checks.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use pdd_core::config::{ConfigError, PipelineConfig};
use pdd_core::graph::ntriples::parse_ntriples;
use pdd_core::graph::TriplePattern;
use pdd_core::pipeline::{
    read_link_decisions, run_build_graph, run_eval, run_full, run_link, run_train, PipelineError,
    DECISIONS_FILE,
};

use common::{recount_from_raw, RawRecount};

/// Two patients, two drugs, one diagnosis; hand-checkable end to end.
fn write_micro_corpus(dir: &Path) -> PathBuf {
    fs::write(
        dir.join("patients.csv"),
        "patient_id,gender,age\n18740,M,64\n274671,F,71\n",
    )
    .unwrap();
    fs::write(
        dir.join("prescriptions.csv"),
        "patient_id,drug_name,dosage_value,dosage_unit\n\
         18740,Aspirin,81,mg\n\
         274671,Dextrose 5%,,\n",
    )
    .unwrap();
    fs::write(
        dir.join("diagnoses.csv"),
        "patient_id,icd9_code\n274671,995.92\n",
    )
    .unwrap();
    fs::write(
        dir.join("drug_kb.json"),
        r#"[
  {"id": "DB00945", "name": "Aspirin",
   "dosages": [{"value": 81.0, "unit": "mg"}]},
  {"id": "DB09341", "name": "Dextrose",
   "aliases": ["Glucose", "Dextrose 5%"]}
]"#,
    )
    .unwrap();
    fs::write(
        dir.join("icd9_ontology.json"),
        r#"[{"code": "995.92", "label": "Severe sepsis"}]"#,
    )
    .unwrap();
    fs::write(
        dir.join("gold_links.json"),
        "{\"Aspirin\": \"DB00945\", \"Dextrose 5%\": \"DB09341\"}\n",
    )
    .unwrap();
    let config_path = dir.join("config.json");
    fs::write(
        &config_path,
        r#"{
  "inputs": {
    "patients": "patients.csv",
    "prescriptions": "prescriptions.csv",
    "diagnoses": "diagnoses.csv",
    "drug_kb": "drug_kb.json",
    "icd9_ontology": "icd9_ontology.json",
    "gold_links": "gold_links.json"
  },
  "output_dir": "out"
}"#,
    )
    .unwrap();
    config_path
}

#[test]
fn micro_corpus_produces_the_hand_enumerated_graph() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_micro_corpus(dir.path());
    let config = PipelineConfig::load(&config_path).unwrap();
    let (_, link, graph) = run_full(&config).unwrap();

    assert_eq!(
        link.decisions["Aspirin"].linked_kb_id().unwrap().as_str(),
        "DB00945"
    );
    assert_eq!(
        link.decisions["Dextrose 5%"].linked_kb_id().unwrap().as_str(),
        "DB09341"
    );
    assert!(link.disease_links["995.92"].linked);

    let ns = "http://kmap.xjtudlc.com/pdd_data/";
    let sameas = "http://www.w3.org/2002/07/owl#sameAs";
    let expected = format!(
        "<{ns}18740> <{ns}age> \"64\" .\n\
         <{ns}18740> <{ns}gender> \"M\" .\n\
         <{ns}18740> <{ns}prescribed> <{ns}aspirin> .\n\
         <{ns}274671> <{ns}age> \"71\" .\n\
         <{ns}274671> <{ns}diagnosed> <{ns}icd99592> .\n\
         <{ns}274671> <{ns}gender> \"F\" .\n\
         <{ns}274671> <{ns}prescribed> <{ns}dextrose%205%25> .\n\
         <{ns}aspirin> <{sameas}> <http://bio2rdf.org/drugbank:DB00945> .\n\
         <{ns}dextrose%205%25> <{sameas}> <http://bio2rdf.org/drugbank:DB09341> .\n\
         <{ns}icd99592> <{sameas}> <http://bio2rdf.org/icd9:995.92> .\n"
    );
    assert_eq!(fs::read_to_string(&graph.graph_path).unwrap(), expected);
    assert_eq!(graph.triple_count, 10);

    let stats = &graph.statistics;
    assert_eq!(
        (stats.patients, stats.drugs_total, stats.drugs_linked),
        (2, 2, 2)
    );
    assert_eq!((stats.diseases_total, stats.diseases_linked), (1, 1));
    assert_eq!(stats.demographic_triples, 4);
    assert_eq!(
        (stats.patient_drug_triples, stats.patient_drug_triples_linked),
        (2, 2)
    );
    assert_eq!(
        (
            stats.patient_disease_triples,
            stats.patient_disease_triples_linked
        ),
        (1, 1)
    );

    let eval = run_eval(&config, None).unwrap();
    assert_eq!(eval.report.true_positive, 2);
    assert_eq!(eval.report.precision, Some(1.0));
    assert_eq!(eval.report.recall, Some(1.0));
}

#[test]
fn rerunning_every_stage_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_micro_corpus(dir.path());
    let config = PipelineConfig::load(&config_path).unwrap();
    let (train, link, graph) = run_full(&config).unwrap();
    let eval = run_eval(&config, None).unwrap();

    let artifacts = [
        train.table_path.clone(),
        train.trace_path.clone(),
        link.decisions_path.clone(),
        link.disease_links_path.clone(),
        graph.graph_path.clone(),
        graph.statistics_json_path.clone(),
        graph.statistics_text_path.clone(),
        eval.report_json_path.clone(),
        eval.report_text_path.clone(),
    ];
    let before: Vec<Vec<u8>> = artifacts.iter().map(|p| fs::read(p).unwrap()).collect();
    run_full(&config).unwrap();
    run_eval(&config, None).unwrap();
    for (path, bytes) in artifacts.iter().zip(&before) {
        assert_eq!(
            &fs::read(path).unwrap(),
            bytes,
            "{} changed between runs",
            path.display()
        );
    }
}

/// The statistics artifact, the graph file, and the decision artifacts
/// all describe the same run: counts recomputed from any one of them
/// agree with the others.
#[test]
fn artifacts_stay_consistent_across_files() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_micro_corpus(dir.path());
    let config = PipelineConfig::load(&config_path).unwrap();
    let (_, link, graph) = run_full(&config).unwrap();

    let reread = read_link_decisions(&link.decisions_path).unwrap();
    assert_eq!(reread, link.decisions);

    let parsed = parse_ntriples(&graph.graph_path, config.graph.clone()).unwrap();
    assert_eq!(parsed.len(), graph.triple_count);
    let sameas_count = parsed
        .query(&TriplePattern {
            predicate: Some(config.graph.same_as_predicate()),
            ..TriplePattern::default()
        })
        .len();
    let linked_decisions = reread
        .values()
        .filter(|d| d.linked_kb_id().is_some())
        .count();
    let linked_codes = link.disease_links.values().filter(|l| l.linked).count();
    assert_eq!(sameas_count, linked_decisions + linked_codes);

    let counts = &graph.build_counts;
    assert_eq!(counts.prescription_triples, graph.statistics.patient_drug_triples);
    assert_eq!(counts.diagnosis_triples, graph.statistics.patient_disease_triples);
    assert_eq!(counts.demographic_triples, graph.statistics.demographic_triples);
    assert_eq!(counts.patients, graph.statistics.patients);
    assert_eq!(counts.drug_entities, graph.statistics.drugs_total);
    assert_eq!(counts.disease_entities, graph.statistics.diseases_total);
    assert_eq!(
        counts.drug_sameas_triples + counts.disease_sameas_triples,
        sameas_count
    );

    let linked_mentions: BTreeSet<String> = reread
        .iter()
        .filter(|(_, d)| d.linked_kb_id().is_some())
        .map(|(m, _)| m.clone())
        .collect();
    let linked_code_set: BTreeSet<String> = link
        .disease_links
        .iter()
        .filter(|(_, l)| l.linked)
        .map(|(raw, _)| raw.clone())
        .collect();
    let recount = recount_from_raw(
        &config.inputs.patients,
        &config.inputs.prescriptions,
        &config.inputs.diagnoses,
        &linked_mentions,
        &linked_code_set,
    );
    let stats = &graph.statistics;
    assert_eq!(
        recount,
        RawRecount {
            patients: stats.patients,
            drugs_total: stats.drugs_total,
            drugs_linked: stats.drugs_linked,
            diseases_total: stats.diseases_total,
            diseases_linked: stats.diseases_linked,
            demographic_triples: stats.demographic_triples,
            patient_drug_triples: stats.patient_drug_triples,
            patient_drug_triples_linked: stats.patient_drug_triples_linked,
            patient_disease_triples: stats.patient_disease_triples,
            patient_disease_triples_linked: stats.patient_disease_triples_linked,
        }
    );
}

#[test]
fn header_only_prescriptions_yield_an_empty_decision_file() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_micro_corpus(dir.path());
    fs::write(
        dir.path().join("prescriptions.csv"),
        "patient_id,drug_name,dosage_value,dosage_unit\n",
    )
    .unwrap();
    let config = PipelineConfig::load(&config_path).unwrap();
    run_train(&config).unwrap();
    let link = run_link(&config).unwrap();
    assert!(link.decisions.is_empty());
    assert_eq!(fs::read(&link.decisions_path).unwrap(), b"");
    assert!(link.decisions_path.ends_with(DECISIONS_FILE));

    // Downstream stages still run: a graph with no prescription facts.
    let graph = run_build_graph(&config).unwrap();
    assert_eq!(graph.statistics.patient_drug_triples, 0);
    assert_eq!(graph.statistics.patients, 2);
}

#[test]
fn missing_input_errors_name_the_file_and_exit_usage() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_micro_corpus(dir.path());
    fs::remove_file(dir.path().join("patients.csv")).unwrap();
    let config = PipelineConfig::load(&config_path).unwrap();
    run_train(&config).unwrap();
    let err = run_link(&config).unwrap_err();
    match &err {
        PipelineError::Config(ConfigError::MissingInput { path }) => {
            assert!(path.ends_with("patients.csv"), "named {}", path.display());
        }
        other => panic!("unexpected error {other:?}"),
    }
    assert_eq!(err.exit_code(), 1);
}
