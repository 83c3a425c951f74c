use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use graphon_dyn::EdgeKernel;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Written next to every output set. Feeding it back as `--config`
/// reproduces the outputs; `created_unix` is the only field that varies
/// between identical runs and is not covered by any checksum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Root of the seed tree, when the run is random.
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_used: Option<EdgeKernel>,
    pub config: RunConfig,
    pub outputs: Vec<OutputDigest>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub created_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

/// Everything a subcommand produces, held in memory until the run succeeds.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub stdout: String,
    pub files: Vec<(String, Vec<u8>)>,
    pub seed: Option<u64>,
    pub kernel_used: Option<EdgeKernel>,
    pub warnings: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes the output files and then the manifest into `dir`.
pub fn write_outputs(dir: &Path, subcommand: &str, config: RunConfig, out: &RunOutput) -> CliResult<RunManifest> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut outputs = Vec::with_capacity(out.files.len());
    for (name, bytes) in &out.files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        outputs.push(OutputDigest { file: name.clone(), sha256: sha256_hex(bytes) });
    }
    let manifest = RunManifest {
        tool: "graphon-dyn".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: subcommand.into(),
        seed: out.seed,
        kernel_used: out.kernel_used.clone(),
        config,
        outputs,
        warnings: out.warnings.clone(),
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(manifest)
}
