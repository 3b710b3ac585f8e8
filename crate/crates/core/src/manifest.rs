//! Content hashes of written outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Result, SbcError};

/// Name of the per-directory manifest maintained by single-output commands.
pub const DIRECTORY_MANIFEST: &str = "sbc-manifest.txt";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// Tracks the files and directories a multi-file job creates so a failed
/// job can remove its partial output.
#[derive(Debug, Default)]
pub struct OutputTracker {
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
}

impl OutputTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates `dir` and any missing parents, remembering the new ones.
    pub fn create_dir_all(&mut self, dir: &Path) -> Result<()> {
        let mut missing = Vec::new();
        let mut cur = Some(dir);
        while let Some(d) = cur {
            if d.as_os_str().is_empty() || d.exists() {
                break;
            }
            missing.push(d.to_path_buf());
            cur = d.parent();
        }
        fs::create_dir_all(dir)?;
        missing.reverse();
        self.dirs.extend(missing);
        Ok(())
    }

    pub fn write(&mut self, path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
        if let Some(parent) = path.parent() {
            self.create_dir_all(parent)?;
        }
        fs::write(path, contents)?;
        self.files.push(path.to_path_buf());
        Ok(())
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    /// Best-effort removal of everything this tracker created.
    pub fn rollback(self) {
        for f in self.files.iter().rev() {
            let _ = fs::remove_file(f);
        }
        for d in self.dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
    }
}

/// Adds or replaces the entry for `output` in the manifest that lives in
/// its directory. Lines are `<sha256>  <file name>  <note>`, sorted by name.
pub fn record_in_directory_manifest(output: &Path, note: &str) -> Result<PathBuf> {
    let dir = match output.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = output
        .file_name()
        .ok_or_else(|| SbcError::validation(format!("{} has no file name", output.display())))?
        .to_string_lossy()
        .into_owned();
    let manifest_path = dir.join(DIRECTORY_MANIFEST);
    let mut entries: BTreeMap<String, (String, String)> = BTreeMap::new();
    if manifest_path.exists() {
        for line in fs::read_to_string(&manifest_path)?.lines() {
            let mut parts = line.splitn(3, "  ");
            if let (Some(hash), Some(file)) = (parts.next(), parts.next()) {
                entries.insert(file.to_owned(), (hash.to_owned(), parts.next().unwrap_or("").to_owned()));
            }
        }
    }
    entries.insert(name, (sha256_file(output)?, note.to_owned()));
    let mut text = String::new();
    for (file, (hash, note)) in &entries {
        text.push_str(&format!("{hash}  {file}  {note}\n"));
    }
    fs::write(&manifest_path, text)?;
    Ok(manifest_path)
}
