//! Run configuration. One JSON file describes a whole run: input paths,
//! the model and linker knobs, graph namespaces, and where artifacts go.
//! Relative paths are resolved against the config file's directory, so a
//! generated corpus directory is runnable from anywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enm::EmConfig;
use crate::graph::GraphConfig;
use crate::linker::LinkerConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid configuration: {reason}")]
    Invalid { reason: String },
    #[error("input file {} does not exist", path.display())]
    MissingInput { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub patients: PathBuf,
    pub prescriptions: PathBuf,
    pub diagnoses: PathBuf,
    pub drug_kb: PathBuf,
    pub icd9_ontology: PathBuf,
    /// Only evaluation needs gold labels, so the field is optional.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_links: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: InputPaths,
    #[serde(default)]
    pub em: EmConfig,
    #[serde(default)]
    pub linker: LinkerConfig,
    #[serde(default)]
    pub graph: GraphConfig,
    pub output_dir: PathBuf,
}

impl PipelineConfig {
    /// Reads, resolves relative paths against the file's directory, and
    /// range-checks every numeric field.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config: PipelineConfig =
            serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
                path: path.display().to_string(),
                source,
            })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve_relative(base);
        config.validate_values()?;
        Ok(config)
    }

    /// Writes the config as-is; paths are not rewritten, so a config
    /// built with paths relative to `path`'s directory stays portable.
    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        let mut text = serde_json::to_string_pretty(self).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })?;
        text.push('\n');
        std::fs::write(path, text).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn resolve_relative(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut self.inputs.patients);
        resolve(&mut self.inputs.prescriptions);
        resolve(&mut self.inputs.diagnoses);
        resolve(&mut self.inputs.drug_kb);
        resolve(&mut self.inputs.icd9_ontology);
        if let Some(gold) = &mut self.inputs.gold_links {
            resolve(gold);
        }
        resolve(&mut self.output_dir);
    }

    pub fn validate_values(&self) -> Result<(), ConfigError> {
        let invalid = |reason: String| ConfigError::Invalid { reason };
        self.em
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        if self.linker.candidate_limit == 0 {
            return Err(invalid("linker.candidate_limit must be at least 1".into()));
        }
        if !self.linker.score_floor.is_finite() || self.linker.score_floor < 0.0 {
            return Err(invalid(format!(
                "linker.score_floor must be finite and non-negative, got {}",
                self.linker.score_floor
            )));
        }
        if !self.linker.dosage_tolerance.is_finite() || self.linker.dosage_tolerance < 0.0 {
            return Err(invalid(format!(
                "linker.dosage_tolerance must be finite and non-negative, got {}",
                self.linker.dosage_tolerance
            )));
        }
        self.graph
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }

    /// Fails on the first required input that is not a readable file.
    pub fn ensure_inputs_exist<'a>(
        &self,
        required: impl IntoIterator<Item = &'a Path>,
    ) -> Result<(), ConfigError> {
        for path in required {
            if !path.is_file() {
                return Err(ConfigError::MissingInput {
                    path: path.to_path_buf(),
                });
            }
        }
        Ok(())
    }
}
