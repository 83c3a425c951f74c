//! Run configuration: one JSON document holding the model, the simulation
//! parameters, analysis options and the literal inputs of the one-shot
//! subcommands. Command-line file flags are merged into `inputs`, so the
//! manifest echo of a run is itself a complete config.

use std::fs;
use std::path::Path;

use graphon_dyn::{KernelConfig, ProcessConfig, SignedKernel, SimpleGraph, Graphon};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisConfig>,
    #[serde(default, skip_serializing_if = "Inputs::is_empty")]
    pub inputs: Inputs,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub process: ProcessConfig,
    pub kernel: KernelConfig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default, skip_serializing_if = "is_zero")]
    pub n_nodes: usize,
    #[serde(rename = "T", default, skip_serializing_if = "is_zero")]
    pub horizon: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub patterns: Vec<SimpleGraph>,
    /// 1-indexed; defaults to `1..=|V(F)|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub watched_nodes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    /// Index into `patterns` used by `ergodic` and `recurrence`.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub pattern_index: usize,
    /// Labeled rather than up-to-isomorphism matching in `recurrence`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub labeled: bool,
    /// Monte Carlo replicates for `density --graphon`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
    /// Smoothing iterations for `invariance`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing_steps: Option<usize>,
    /// Sinkhorn-balance the transition matrix before smoothing.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub sinkhorn: bool,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<SimpleGraph>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<SimpleGraph>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graphon: Option<Graphon>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other: Option<Graphon>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<SignedKernel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
}

impl Inputs {
    fn is_empty(&self) -> bool {
        self.pattern.is_none()
            && self.graph.is_none()
            && self.graphon.is_none()
            && self.other.is_none()
            && self.kernel.is_none()
            && self.transition.is_none()
    }
}

impl RunConfig {
    pub fn model(&self) -> CliResult<&ModelConfig> {
        self.model.as_ref().ok_or_else(|| missing("model"))
    }

    pub fn sim(&self) -> CliResult<&SimConfig> {
        self.sim.as_ref().ok_or_else(|| missing("sim"))
    }

    pub fn analysis(&self) -> AnalysisConfig {
        self.analysis.clone().unwrap_or_default()
    }

    pub fn analysis_mut(&mut self) -> &mut AnalysisConfig {
        self.analysis.get_or_insert_with(AnalysisConfig::default)
    }
}

pub fn missing(field: &str) -> CliError {
    CliError::Config(format!("missing field `{field}`"))
}

/// Reads a config file. A run manifest is accepted too; its `config` echo is used.
pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let value = read_json(path)?;
    match value {
        serde_json::Value::Object(mut map) if map.contains_key("outputs") && map.contains_key("config") => {
            parse_value(path, map.remove("config").expect("checked"))
        }
        other => parse_value(path, other),
    }
}

/// Reads one JSON literal (graph, graphon, matrix) from a file.
pub fn load_literal<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    parse_value(path, read_json(path)?)
}

fn read_json(path: &Path) -> CliResult<serde_json::Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn parse_value<T: DeserializeOwned>(path: &Path, value: serde_json::Value) -> CliResult<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let at = e.path().to_string();
        let at = if at == "." { String::new() } else { format!(" at `{at}`") };
        CliError::Config(format!("{}{at}: {}", path.display(), e.inner()))
    })
}
