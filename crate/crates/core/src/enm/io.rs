//! Table persistence. The on-disk form is JSON with entries sorted by
//! (source, target) so diffs are stable and a save/load/save cycle is
//! byte-identical. Probabilities round-trip exactly: the serializer emits
//! the shortest decimal that parses back to the same float.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EnmError, TranslationTable};

#[derive(Serialize, Deserialize)]
struct TableFile {
    epsilon: f64,
    entries: Vec<TableEntry>,
}

#[derive(Serialize, Deserialize)]
struct TableEntry {
    source: String,
    target: String,
    prob: f64,
}

fn io_err(path: &Path, source: std::io::Error) -> EnmError {
    EnmError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn save_table(table: &TranslationTable, path: &Path) -> Result<(), EnmError> {
    let file = TableFile {
        epsilon: table.epsilon(),
        entries: table
            .entries()
            .map(|(source, target, prob)| TableEntry {
                source: source.to_owned(),
                target: target.to_owned(),
                prob,
            })
            .collect(),
    };
    let out = File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = BufWriter::new(out);
    serde_json::to_writer_pretty(&mut writer, &file).map_err(|e| EnmError::Parse {
        path: path.display().to_string(),
        source: e,
    })?;
    writer.write_all(b"\n").map_err(|e| io_err(path, e))?;
    writer.flush().map_err(|e| io_err(path, e))
}

/// Loads and validates a table file. Files whose rows do not form proper
/// distributions (or that lack the NULL row) are rejected.
pub fn load_table(path: &Path) -> Result<TranslationTable, EnmError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let parsed: TableFile =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| EnmError::Parse {
            path: path.display().to_string(),
            source: e,
        })?;
    if !parsed.epsilon.is_finite() || parsed.epsilon <= 0.0 {
        return Err(EnmError::InvalidEpsilon {
            value: parsed.epsilon,
        });
    }
    let table = TranslationTable::from_entries(
        parsed.epsilon,
        parsed
            .entries
            .into_iter()
            .map(|e| (e.source, e.target, e.prob)),
    );
    table.validate()?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::super::{train_em, EmConfig, TrainingPair};
    use super::*;
    use crate::normalize::tokenize_name;

    fn trained() -> TranslationTable {
        let pairs = vec![
            TrainingPair {
                source: tokenize_name("glucose"),
                target: tokenize_name("dextrose 5%"),
            },
            TrainingPair {
                source: tokenize_name("aspirin"),
                target: tokenize_name("aspirin"),
            },
        ];
        train_em(&pairs, &EmConfig::default()).unwrap().0
    }

    #[test]
    fn round_trip_preserves_every_probability_exactly() {
        let table = trained();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.json");
        save_table(&table, &path).unwrap();
        let loaded = load_table(&path).unwrap();
        assert_eq!(table, loaded);
    }

    #[test]
    fn resave_is_byte_identical() {
        let table = trained();
        let dir = tempfile::tempdir().unwrap();
        let first = dir.path().join("a.json");
        let second = dir.path().join("b.json");
        save_table(&table, &first).unwrap();
        save_table(&load_table(&first).unwrap(), &second).unwrap();
        assert_eq!(
            std::fs::read(&first).unwrap(),
            std::fs::read(&second).unwrap()
        );
    }

    #[test]
    fn load_rejects_denormalized_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{"epsilon": 1.0, "entries": [
                {"source": "a", "target": "x", "prob": 0.5},
                {"source": "<NULL>", "target": "x", "prob": 1.0}
            ]}"#,
        )
        .unwrap();
        assert!(matches!(
            load_table(&path),
            Err(EnmError::NormalizationViolated { .. })
        ));
    }

    #[test]
    fn load_rejects_garbage_and_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corrupt.json");
        std::fs::write(&path, "{ not json").unwrap();
        assert!(matches!(load_table(&path), Err(EnmError::Parse { .. })));
        assert!(matches!(
            load_table(&dir.path().join("absent.json")),
            Err(EnmError::Io { .. })
        ));
    }
}
