use serde::{Deserialize, Serialize};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::batch::BatchReport;
use super::record::CorpusRecord;
use crate::profiles::{PatientProfile, ProfileError};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub files: Vec<String>,
    pub report: BatchReport,
}

/// Write pretty JSON through a temporary file and a rename, so readers
/// never see a partial file.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)
}

/// One file per record plus the manifest.
pub fn write_corpus(dir: &Path, records: &[CorpusRecord], config_hash: &str, report: &BatchReport) -> io::Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(records.len());
    for r in records {
        let name = format!("{}.json", r.record_id);
        write_json_atomic(&dir.join(&name), r)?;
        files.push(name);
    }
    let manifest = Manifest { config_hash: config_hash.to_string(), files, report: report.clone() };
    write_json_atomic(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// The manifest of a corpus directory, if present and readable.
pub fn read_manifest(dir: &Path) -> Option<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE)).ok()?;
    serde_json::from_str(&text).ok()
}

pub struct LoadedRecord {
    pub path: PathBuf,
    pub record: Result<CorpusRecord, String>,
}

fn json_files(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .filter(|p| p.file_name().is_some_and(|n| n != MANIFEST_FILE))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Every `*.json` record in `dir` (manifest excluded), in file-name order.
/// Unparseable files are returned as errors, not skipped.
pub fn read_corpus(dir: &Path) -> io::Result<Vec<LoadedRecord>> {
    let mut out = Vec::new();
    for path in json_files(dir)? {
        let record = fs::read_to_string(&path)
            .map_err(|e| e.to_string())
            .and_then(|t| serde_json::from_str::<CorpusRecord>(&t).map_err(|e| e.to_string()));
        out.push(LoadedRecord { path, record });
    }
    Ok(out)
}

/// Profiles from a file (one profile or an array) or a directory of files.
pub fn load_profiles(path: &Path) -> Result<Vec<PatientProfile>, ProfileError> {
    let io_err = |e: io::Error| ProfileError::Io(format!("{}: {e}", path.display()));
    let files = if path.is_dir() { json_files(path).map_err(io_err)? } else { vec![path.to_path_buf()] };
    let mut out = Vec::new();
    for f in files {
        let text = fs::read_to_string(&f).map_err(|e| ProfileError::Io(format!("{}: {e}", f.display())))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| ProfileError::Parse(format!("{}: {e}", f.display())))?;
        let list = match value {
            serde_json::Value::Array(items) => items,
            v => vec![v],
        };
        for v in list {
            let p: PatientProfile =
                serde_json::from_value(v).map_err(|e| ProfileError::Parse(format!("{}: {e}", f.display())))?;
            p.validate()?;
            out.push(p);
        }
    }
    Ok(out)
}
