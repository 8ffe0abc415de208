//! Links free-text EMR drug mentions to a drug knowledge base and ICD-9
//! diagnosis codes to a disease ontology, then materializes patient facts
//! as an RDF graph.
//!
//! The drug side uses a word-level translation model trained with EM on
//! (canonical name, alias) pairs; candidates are ranked by translation
//! probability and filtered by two consistency rules (shared indication,
//! plausible dosage). The disease side is exact code matching after
//! normalization. Everything downstream of ingestion is deterministic.

pub mod config;
pub mod enm;
pub mod eval;
pub mod graph;
pub mod ingest;
pub mod linker;
pub mod normalize;
pub mod pipeline;
