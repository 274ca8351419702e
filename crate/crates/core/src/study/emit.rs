//! Writes a study's report, tables and documents, plus a manifest of
//! content hashes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::Format;
use super::report::{StudyOutput, Table};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub report: ManifestEntry,
    pub data_files: Vec<ManifestEntry>,
}

pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.json";

fn write(dir: &Path, file: &str, bytes: &[u8]) -> Result<ManifestEntry> {
    let path = dir.join(file);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(ManifestEntry {
        file: file.to_string(),
        sha256: hex::encode(Sha256::digest(bytes)),
        bytes: bytes.len() as u64,
    })
}

fn csv_bytes(table: &Table) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Domain(format!("CSV encoding of {}: {e}", table.name));
    w.write_record(&table.header).map_err(to_err)?;
    for row in &table.rows {
        w.write_record(row).map_err(to_err)?;
    }
    w.into_inner()
        .map_err(|e| Error::Domain(format!("CSV encoding of {}: {e}", table.name)))
}

fn pretty(value: &impl Serialize) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes everything into `dir`, creating it if needed. Empty tables are
/// skipped. Returns the manifest, which is also written as `manifest.json`.
pub fn emit(output: &StudyOutput, dir: &Path, formats: &[Format]) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let report = write(dir, REPORT_FILE, &pretty(&output.report)?)?;
    let mut data_files = Vec::new();
    if formats.contains(&Format::Csv) {
        for table in output.tables.iter().filter(|t| !t.rows.is_empty()) {
            data_files.push(write(dir, &format!("{}.csv", table.name), &csv_bytes(table)?)?);
        }
    }
    if formats.contains(&Format::Json) {
        for (stem, doc) in &output.documents {
            data_files.push(write(dir, &format!("{stem}.json"), &pretty(doc)?)?);
        }
    }
    data_files.sort_by(|a, b| a.file.cmp(&b.file));
    let manifest = Manifest { report, data_files };
    write(dir, MANIFEST_FILE, &pretty(&manifest)?)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::config::Scenario;
    use crate::study::report::{FailureSummary, Provenance, StudyReport};
    use std::collections::BTreeMap;

    fn output(rows: usize) -> StudyOutput {
        let mut t = Table::new("paths", &["run_id", "path_id", "t", "value"]);
        for i in 0..rows {
            t.push(vec!["0".into(), i.to_string(), "0".into(), "1".into()]);
        }
        StudyOutput {
            report: StudyReport {
                scenario: Scenario::Population,
                n_paths: rows as u64,
                statistics: BTreeMap::new(),
                checks: Vec::new(),
                failures: FailureSummary::default(),
                provenance: Provenance {
                    config_hash: "x".into(),
                    master_seed: 1,
                    code_version: "0".into(),
                },
            },
            tables: vec![t],
            documents: Vec::new(),
        }
    }

    #[test]
    fn empty_tables_leave_no_data_files() {
        let dir = tempfile::tempdir().unwrap();
        let m = emit(&output(0), dir.path(), &[Format::Csv, Format::Json]).unwrap();
        assert!(m.data_files.is_empty());
        assert!(dir.path().join(MANIFEST_FILE).exists());
        assert!(dir.path().join(REPORT_FILE).exists());
    }

    #[test]
    fn hashes_match_contents_and_repeat() {
        let dir = tempfile::tempdir().unwrap();
        let a = emit(&output(3), dir.path(), &[Format::Csv]).unwrap();
        let b = emit(&output(3), dir.path(), &[Format::Csv]).unwrap();
        assert_eq!(a, b);
        let bytes = fs::read(dir.path().join("paths.csv")).unwrap();
        assert_eq!(a.data_files[0].sha256, hex::encode(Sha256::digest(&bytes)));
        assert_eq!(String::from_utf8(bytes).unwrap().lines().count(), 4);
    }

    #[test]
    fn unwritable_directory_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"").unwrap();
        match emit(&output(1), &blocker.join("sub"), &[Format::Csv]) {
            Err(Error::Io { path, .. }) => assert!(path.ends_with("sub")),
            other => panic!("expected an I/O error, got {other:?}"),
        }
    }
}
