use std::collections::BTreeMap;
use std::io::{Cursor, Read, Write};

use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use super::compile::AnnotatorTable;
use crate::error::{Error, Result};

fn corrupt(e: impl std::fmt::Display) -> Error {
    Error::CorruptArchive(e.to_string())
}

/// Reads every CSV in a ZIP archive as one annotator table named after the
/// file stem. Directories are flattened. Other entries, and files whose name
/// starts with `.` or `_` (such as the leftover pool), are skipped with a
/// warning.
pub fn unpack_archive(bytes: &[u8]) -> Result<(Vec<AnnotatorTable>, Vec<String>)> {
    let mut archive = ZipArchive::new(Cursor::new(bytes)).map_err(corrupt)?;
    let mut tables = Vec::new();
    let mut warnings = Vec::new();
    for i in 0..archive.len() {
        let mut entry = archive.by_index(i).map_err(corrupt)?;
        if entry.is_dir() {
            continue;
        }
        let path = entry.name().replace('\\', "/");
        let base = path.rsplit('/').next().unwrap_or_default().to_owned();
        let Some(stem) = base.strip_suffix(".csv").or_else(|| base.strip_suffix(".CSV")) else {
            warnings.push(format!("skipped non-CSV entry {path:?}"));
            continue;
        };
        if stem.is_empty() || stem.starts_with('.') || stem.starts_with('_') || path.contains("__MACOSX/") {
            warnings.push(format!("skipped {path:?}"));
            continue;
        }
        let mut data = Vec::new();
        entry.read_to_end(&mut data).map_err(corrupt)?;
        if tables.iter().any(|t: &AnnotatorTable| t.name == stem) {
            return Err(Error::AnnotatorCollision(stem.to_owned()));
        }
        tables.push(AnnotatorTable::from_csv_bytes(stem, &data)?);
    }
    if tables.is_empty() {
        return Err(Error::EmptyArchive);
    }
    Ok((tables, warnings))
}

/// Packs named files into a ZIP with fixed timestamps and permissions, so
/// equal inputs give equal bytes.
pub fn pack_archive(files: &BTreeMap<String, Vec<u8>>) -> Result<Vec<u8>> {
    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(DateTime::default())
        .unix_permissions(0o644);
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    for (name, data) in files {
        zip.start_file(name.as_str(), options).map_err(corrupt)?;
        zip.write_all(data)?;
    }
    Ok(zip.finish().map_err(corrupt)?.into_inner())
}
