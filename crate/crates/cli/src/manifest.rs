//! Run directories and the manifest written next to every command's outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use peergroup_core::error::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL: &str = concat!("peergroup ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Everything needed to audit or re-run one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub command: String,
    /// The command's arguments after input paths were made absolute.
    pub config: serde_json::Value,
    pub run_dir: String,
    pub inputs: Vec<FileDigest>,
    pub seeds: BTreeMap<String, u64>,
    /// Paths relative to `run_dir`, sorted.
    pub outputs: Vec<FileDigest>,
    pub started_at: String,
    pub finished_at: String,
}

impl RunManifest {
    pub fn file_name(command: &str) -> String {
        format!("manifest-{command}.json")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| cannot_read(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            message: format!("{}: {e}", path.display()),
        })
    }
}

pub(crate) fn cannot_read(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidInput(format!("cannot read `{}`: {e}", path.display()))
}

pub fn digest(path: &Path, label: String) -> Result<FileDigest> {
    let bytes = fs::read(path).map_err(|e| cannot_read(path, e))?;
    Ok(FileDigest {
        path: label,
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

/// Output directory that remembers what was written to it.
pub struct RunDir {
    root: PathBuf,
    written: Vec<String>,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.canonicalize()?,
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `name` (slash-separated, relative to the root).
    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::File::create(&path)?.write_all(bytes.as_ref())?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    /// Collects whatever `fill` writes into a buffer, then stores it as `name`.
    pub fn write_with(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.write(name, buf)
    }
}

/// One pipeline command.
pub trait Step: Serialize + DeserializeOwned {
    const NAME: &'static str;

    /// Input files, so they can be made absolute and hashed.
    fn inputs(&mut self) -> Vec<&mut PathBuf>;

    fn seeds(&self) -> BTreeMap<String, u64> {
        BTreeMap::new()
    }

    fn execute(&self, run: &mut RunDir) -> Result<()>;
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Runs `step` into `out` and writes its manifest there.
pub fn perform<S: Step>(mut step: S, out: &Path) -> Result<RunManifest> {
    let started_at = now();
    let mut inputs = Vec::new();
    for path in step.inputs() {
        *path = path.canonicalize().map_err(|e| cannot_read(path, e))?;
        inputs.push(digest(path, path.display().to_string())?);
    }
    let mut run = RunDir::create(out)?;
    step.execute(&mut run)?;

    let mut names = run.written.clone();
    names.sort();
    let outputs = names
        .into_iter()
        .map(|name| digest(&run.root.join(&name), name))
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        tool: TOOL.into(),
        command: S::NAME.into(),
        config: serde_json::to_value(&step).map_err(|e| Error::Invariant(e.to_string()))?,
        run_dir: run.root.display().to_string(),
        inputs,
        seeds: step.seeds(),
        outputs,
        started_at,
        finished_at: now(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Invariant(e.to_string()))?;
    text.push('\n');
    fs::write(run.root.join(RunManifest::file_name(S::NAME)), text)?;
    Ok(manifest)
}

/// Re-runs a recorded step into `out` and checks that inputs are unchanged
/// and every output is reproduced byte for byte.
pub fn replay<S: Step>(recorded: &RunManifest, out: &Path) -> Result<RunManifest> {
    let step: S = serde_json::from_value(recorded.config.clone())
        .map_err(|e| Error::Config(format!("manifest config does not fit `{}`: {e}", S::NAME)))?;
    let fresh = perform(step, out)?;
    for (old, new) in recorded.inputs.iter().zip(&fresh.inputs) {
        if old.sha256 != new.sha256 {
            return Err(Error::Config(format!(
                "input `{}` changed since the recorded run",
                old.path
            )));
        }
    }
    let by_name = |m: &RunManifest| -> BTreeMap<String, String> {
        m.outputs.iter().map(|f| (f.path.clone(), f.sha256.clone())).collect()
    };
    let (want, got) = (by_name(recorded), by_name(&fresh));
    if want != got {
        let differing: Vec<&String> = want
            .keys()
            .chain(got.keys())
            .filter(|k| want.get(*k) != got.get(*k))
            .collect();
        return Err(Error::Invariant(format!(
            "replay of `{}` did not reproduce: {differing:?}",
            S::NAME
        )));
    }
    Ok(fresh)
}
