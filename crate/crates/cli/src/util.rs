use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use equifair::debias::EqualitySets;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult, WithPath};

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_string(path: &Path) -> CliResult<String> {
    let bytes = read_bytes(path)?;
    String::from_utf8(bytes).map_err(|_| CliError::new("format", format!("{}: not valid UTF-8", path.display())))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Renders into a buffer with a library writer.
pub fn render(f: impl FnOnce(&mut Vec<u8>) -> equifair::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

pub fn to_json<T: serde::Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value).map_err(equifair::Error::from)?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// `preset:<name>` or a JSON file holding a list of word lists.
pub fn load_sets(spec: &str) -> CliResult<EqualitySets> {
    if let Some(name) = spec.strip_prefix("preset:") {
        return EqualitySets::preset(name)
            .ok_or_else(|| CliError::usage(format!("unknown equality-set preset {name:?} (gender, race)")));
    }
    let path = Path::new(spec);
    EqualitySets::from_json(&read_string(path)?).at(path)
}

/// Subspace rank for a collection of sets: largest set size minus one.
pub fn default_rank(sets: &EqualitySets) -> usize {
    sets.iter().map(Vec::len).max().unwrap_or(2).saturating_sub(1).max(1)
}

/// Output directory that records the hash of every file written to it.
pub struct OutputDir {
    root: PathBuf,
    pub hashes: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn new(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir { root: root.to_path_buf(), hashes: BTreeMap::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        write_bytes(&self.path(name), bytes)?;
        self.hashes.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }
}
