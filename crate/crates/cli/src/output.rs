use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

/// Write `bytes` to `path` through a temp file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// A named pass/fail outcome recorded in the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedCheck {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl NamedCheck {
    pub fn new(name: impl Into<String>, pass: bool) -> Self {
        NamedCheck {
            name: name.into(),
            pass,
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub checks: Vec<NamedCheck>,
    pub seed: Option<u64>,
}

impl RunOutput {
    pub fn check(&mut self, name: impl Into<String>, pass: bool) {
        self.checks.push(NamedCheck::new(name, pass));
    }

    pub fn failed(&self) -> Vec<&NamedCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_version: u64,
    pub inputs: serde_json::Value,
    pub seed: Option<u64>,
    pub threads: usize,
    pub outputs: Vec<String>,
    pub checks_total: usize,
    pub failed_checks: Vec<NamedCheck>,
    pub passed: bool,
}
