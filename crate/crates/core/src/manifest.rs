//! Run manifests and output writers.
//!
//! Every run hashes its configuration (sha256 of the canonical config
//! text) and embeds that hash in each emitted file; the manifest records a
//! content hash per output so tampering is detectable after the fact.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

/// Provenance record for one CLI run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub master_seed: u64,
    pub version: String,
    pub created_unix: u64,
    pub files: Vec<FileRecord>,
}

impl RunManifest {
    pub fn new(config_text: &str, master_seed: u64) -> Self {
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            config_hash: sha256_hex(config_text.as_bytes()),
            master_seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix,
            files: Vec::new(),
        }
    }

    /// Record (and hash) an already-written output file.
    pub fn record_file(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path)?;
        self.files.push(FileRecord {
            path: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Integrity(format!("manifest serialization: {e}")))?;
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn load(out_dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(out_dir.join("manifest.json"))?;
        serde_json::from_str(&text).map_err(|e| Error::Integrity(format!("manifest parse: {e}")))
    }

    /// Re-hash all recorded outputs and compare against the manifest.
    pub fn verify(&self, out_dir: &Path) -> Result<()> {
        for f in &self.files {
            let bytes = fs::read(out_dir.join(&f.path))?;
            let h = sha256_hex(&bytes);
            if h != f.sha256 {
                return Err(Error::Integrity(format!(
                    "{}: recorded {} but found {h}",
                    f.path, f.sha256
                )));
            }
        }
        Ok(())
    }
}

/// Write a comma-delimited UTF-8 table: one comment line embedding the
/// manifest hash, then a header row, then the data rows.
pub fn write_csv(
    path: &Path,
    manifest_hash: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# manifest_hash = {manifest_hash}\n"));
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Integrity(format!(
                "row width {} does not match header width {}",
                row.len(),
                header.len()
            )));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// JSON mirror of a serializable report, wrapped with the manifest hash.
pub fn write_json_report<T: Serialize>(
    path: &Path,
    manifest_hash: &str,
    report: &T,
) -> Result<()> {
    let value = serde_json::json!({
        "manifest_hash": manifest_hash,
        "report": report,
    });
    let text = serde_json::to_string_pretty(&value)
        .map_err(|e| Error::Integrity(format!("report serialization: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable() {
        let h = sha256_hex(b"abc");
        assert_eq!(h, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn manifest_roundtrip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new("config text", 42);
        let csv = dir.path().join("table.csv");
        write_csv(
            &csv,
            &m.config_hash,
            &["t", "value"],
            &[vec!["1".into(), "2.5".into()], vec!["2".into(), "3.5".into()]],
        )
        .unwrap();
        m.record_file(&csv).unwrap();
        m.write(dir.path()).unwrap();

        let loaded = RunManifest::load(dir.path()).unwrap();
        assert_eq!(loaded.config_hash, m.config_hash);
        loaded.verify(dir.path()).unwrap();

        let text = fs::read_to_string(&csv).unwrap();
        assert!(text.starts_with(&format!("# manifest_hash = {}\n", m.config_hash)));
        assert!(text.contains("t,value\n1,2.5\n"));

        fs::write(&csv, text.replace("2.5", "9.9")).unwrap();
        assert!(matches!(loaded.verify(dir.path()), Err(Error::Integrity(_))));
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let dir = tempfile::tempdir().unwrap();
        let err = write_csv(
            &dir.path().join("bad.csv"),
            "h",
            &["a", "b"],
            &[vec!["1".into()]],
        );
        assert!(err.is_err());
    }
}
