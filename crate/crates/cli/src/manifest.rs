//! Run manifests: content hashes of every input, the effective
//! configuration, and the tool version, written next to the primary output.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::commands::CliError;

#[derive(Serialize)]
struct InputHash {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool_version: &'static str,
    command: &'a str,
    config: &'a C,
    inputs: Vec<InputHash>,
    outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<serde_json::Value>,
}

pub fn manifest_path(primary_output: &Path) -> PathBuf {
    let mut name = primary_output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    primary_output.with_file_name(name)
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Serializes the manifest for a run whose primary output is `outputs[0]`.
pub fn render<C: Serialize>(
    command: &str,
    config: &C,
    inputs: &[&Path],
    outputs: &[&Path],
    summary: Option<serde_json::Value>,
) -> Result<Vec<u8>, CliError> {
    let inputs = inputs
        .iter()
        .map(|p| {
            Ok(InputHash {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let manifest = Manifest {
        tool_version: elex_core::model::TOOL_VERSION,
        command,
        config,
        inputs,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        summary,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    Ok(bytes)
}
