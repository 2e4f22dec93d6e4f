use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::allocate::Allocation;
use crate::error::{Error, Result};
use crate::frame::AnnotationFrame;

/// Name of the leftover pool file. Leading underscore marks it as not
/// belonging to an annotator when an archive is compiled.
pub const LEFTOVER_FILE: &str = "_leftover.csv";
pub const REANNOTATION_FLAG: &str = "is_reannotation";

/// Splits the frame into one CSV per annotator plus the leftover pool.
///
/// An annotator file lists their samples in frame order with
/// `is_reannotation = 0`, followed by a second copy of each flagged sample
/// (`is_reannotation = 1`) in a seeded order. Output is byte-deterministic.
pub fn export_allocation(alloc: &Allocation, frame: &AnnotationFrame) -> Result<BTreeMap<String, Vec<u8>>> {
    let index: HashMap<&str, usize> = frame.row_index();
    let lookup = |id: &str| {
        index
            .get(id)
            .copied()
            .ok_or_else(|| Error::InvalidConfig(format!("allocated sample {id:?} not in frame")))
    };
    let mut header: Vec<&str> = frame.columns().iter().map(String::as_str).collect();
    header.push(REANNOTATION_FLAG);

    let mut files = BTreeMap::new();
    for (i, a) in alloc.assignments.iter().enumerate() {
        let mut rows = a.ids().map(lookup).collect::<Result<Vec<_>>>()?;
        rows.sort_unstable();
        let mut repeats = a.reannotate_ids.iter().map(|id| lookup(id)).collect::<Result<Vec<_>>>()?;
        repeats.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(alloc.seed.wrapping_add(i as u64 + 1));
        repeats.shuffle(&mut rng);

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header)?;
        for (rows, flag) in [(&rows, "0"), (&repeats, "1")] {
            for &r in rows {
                w.write_record(frame.row(r).iter().map(|c| c.as_deref().unwrap_or("")).chain([flag]))?;
            }
        }
        files.insert(format!("{}.csv", a.annotator), into_bytes(w)?);
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(frame.columns())?;
    for id in &alloc.leftover_ids {
        let r = lookup(id)?;
        w.write_record(frame.row(r).iter().map(|c| c.as_deref().unwrap_or("")))?;
    }
    files.insert(LEFTOVER_FILE.to_owned(), into_bytes(w)?);
    Ok(files)
}

fn into_bytes(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Writes named files into `dir`, creating it if needed.
pub fn write_files(dir: &Path, files: &BTreeMap<String, Vec<u8>>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, bytes)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{distribute, solve_resources, ResourceSpec};

    fn frame(rows: usize) -> AnnotationFrame {
        let mut csv = String::from("sample_id,text\n");
        for i in 0..rows {
            csv.push_str(&format!("s{i},\"doc, {i}\"\n"));
        }
        AnnotationFrame::from_csv_bytes(csv.as_bytes(), false).unwrap()
    }

    fn count_rows(bytes: &[u8]) -> usize {
        csv::Reader::from_reader(bytes).records().count()
    }

    #[test]
    fn flagged_rows_are_duplicated() {
        let plan = solve_resources(&ResourceSpec {
            annotators: Some(6.0),
            time: Some(1.0),
            rate: Some(110.0),
            samples: None,
            double: 0.5,
            re: 0.1,
        })
        .unwrap();
        let f = frame(450);
        let names: Vec<String> = (1..=6).map(|i| format!("a{i}")).collect();
        let (alloc, _) = distribute(&f, &names, &plan, 11, Default::default()).unwrap();
        let files = export_allocation(&alloc, &f).unwrap();
        assert_eq!(files.len(), 7);
        assert_eq!(count_rows(&files["a1.csv"]), 110);
        // everything assigned: leftover has only the header
        assert_eq!(files[LEFTOVER_FILE], b"sample_id,text\n");
        assert_eq!(files, export_allocation(&alloc, &f).unwrap());
    }
}
