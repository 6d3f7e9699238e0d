use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::io::{sha256_file, Artifacts};

pub const MANIFEST_VERSION: &str = "v1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

/// Record of one run: what was asked for, what was read, what was
/// written. Contains no timestamps or thread counts, so identical runs
/// give identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest: String,
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config: Value,
    pub inputs: Vec<FileHash>,
    pub artifacts: Vec<FileHash>,
}

impl Manifest {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Hash `inputs` and every artifact written so far, then write the manifest.
pub fn finish(
    artifacts: &mut Artifacts,
    command: &str,
    seed: Option<u64>,
    config: Value,
    inputs: &[&Path],
) -> anyhow::Result<Manifest> {
    let inputs = inputs
        .iter()
        .map(|p| Ok(FileHash { path: p.display().to_string(), sha256: sha256_file(p)? }))
        .collect::<anyhow::Result<_>>()?;
    let outputs = artifacts
        .names()
        .iter()
        .filter(|n| *n != MANIFEST_FILE)
        .map(|n| Ok(FileHash { path: n.clone(), sha256: sha256_file(&artifacts.dir().join(n))? }))
        .collect::<anyhow::Result<_>>()?;
    let manifest = Manifest {
        manifest: MANIFEST_VERSION.into(),
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        config,
        inputs,
        artifacts: outputs,
    };
    artifacts.write_json(MANIFEST_FILE, &manifest)?;
    Ok(manifest)
}
