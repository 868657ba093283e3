//! Reading and writing datasets, candidate lists and solutions.
//!
//! Datasets are CSV (numeric columns, optional header row, `#` comments) or
//! JSON `{"points": [[...], ...]}`. Every JSON document written here carries
//! `"schema": 1`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CenterSet, Clustering, Dataset};
use crate::listkmeans::Problem;
use crate::partition::{ConstraintFamily, Solution};
use crate::sampling::DistanceMode;
use crate::scalar::Real;

pub const SCHEMA_VERSION: u32 = 1;

const CACHE_MAGIC: &[u8; 4] = b"CKML";

/// Parses CSV rows of numbers. A first row that does not parse is taken as a
/// header; any later unparsable field is an error.
pub fn read_dataset_csv<T: Real, R: Read>(reader: R) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut first = true;
    for record in rdr.records() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(vals) => rows.push(vals.into_iter().map(T::from_f64_lossy).collect()),
            Err(_) if first => {}
            Err(e) => {
                let line = record.position().map_or(0, |p| p.line());
                return Err(Error::Parse(format!("line {line}: {e}")));
            }
        }
        first = false;
    }
    Dataset::from_rows(&rows)
}

#[derive(Serialize, Deserialize)]
struct PointsDoc<T> {
    points: Vec<Vec<T>>,
}

pub fn read_dataset_json<T: Real + DeserializeOwned, R: Read>(reader: R) -> Result<Dataset<T>> {
    let doc: PointsDoc<T> = serde_json::from_reader(reader)?;
    Dataset::from_rows(&doc.points)
}

/// Loads a dataset, choosing JSON for a `.json` extension and CSV otherwise.
pub fn load_dataset<T: Real + DeserializeOwned>(path: &Path) -> Result<Dataset<T>> {
    let file = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        read_dataset_json(file)
    } else {
        read_dataset_csv(file)
    }
}

/// Headerless CSV, values in shortest round-trip form.
pub fn write_dataset_csv<T: Real + std::fmt::Display, W: Write>(
    data: &Dataset<T>,
    writer: W,
) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for p in data.points() {
        wtr.write_record(p.iter().map(ToString::to_string))?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct Versioned<B> {
    schema: u32,
    #[serde(flatten)]
    body: B,
}

/// Writes `value` as pretty JSON with a leading `"schema": 1`.
pub fn write_json<B: Serialize, W: Write>(value: &B, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(
        &mut writer,
        &Versioned {
            schema: SCHEMA_VERSION,
            body: value,
        },
    )?;
    writer.write_all(b"\n")?;
    Ok(())
}

pub fn to_json_string<B: Serialize>(value: &B) -> Result<String> {
    let mut buf = Vec::new();
    write_json(value, &mut buf)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Reads a document written by [`write_json`], rejecting other schema versions.
pub fn read_json<B: DeserializeOwned, R: Read>(reader: R) -> Result<B> {
    let doc: Versioned<B> = serde_json::from_reader(reader)?;
    if doc.schema != SCHEMA_VERSION {
        return Err(Error::Parse(format!(
            "unsupported schema version {}",
            doc.schema
        )));
    }
    Ok(doc.body)
}

/// Serialized form of a [`Solution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc<T> {
    pub problem: Problem,
    pub objective: DistanceMode,
    pub constraint: ConstraintFamily,
    pub cost: T,
    pub centers: CenterSet<T>,
    /// 0-based cluster label per point.
    pub assignment: Vec<usize>,
    pub cluster_sizes: Vec<usize>,
}

impl<T: Real> SolutionDoc<T> {
    pub fn new(problem: Problem, solution: &Solution<T>) -> Self {
        Self {
            problem,
            objective: solution.objective,
            constraint: solution.constraint.clone(),
            cost: solution.cost,
            centers: solution.centers.clone(),
            assignment: solution.clustering.assignment().to_vec(),
            cluster_sizes: solution.clustering.sizes(),
        }
    }

    pub fn into_solution(self) -> Result<Solution<T>> {
        let clustering = Clustering::new(self.assignment, self.centers.len())?;
        Ok(Solution {
            centers: self.centers,
            clustering,
            cost: self.cost,
            constraint: self.constraint,
            objective: self.objective,
        })
    }
}

/// Compact binary form of list entries: magic, then `count`, `k`, `dim` as
/// little-endian `u64`, then all coordinates as little-endian `f64`.
pub fn write_list_cache<T: Real, W: Write>(entries: &[CenterSet<T>], writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    let k = entries.first().map_or(0, CenterSet::len);
    let dim = entries
        .first()
        .and_then(|c| c.iter().next().map(<[T]>::len))
        .unwrap_or(0);
    w.write_all(CACHE_MAGIC)?;
    for v in [entries.len(), k, dim] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    for c in entries {
        if c.len() != k || c.iter().any(|p| p.len() != dim) {
            return Err(Error::SizeMismatch("list entries differ in shape".into()));
        }
        for v in c.iter().flatten() {
            w.write_all(&v.to_f64_lossy().to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_list_cache<T: Real, R: Read>(reader: R) -> Result<Vec<CenterSet<T>>> {
    let mut r = BufReader::new(reader);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::Parse("not a candidate-list cache".into()));
    }
    let mut word = [0u8; 8];
    let mut header = [0usize; 3];
    for h in &mut header {
        r.read_exact(&mut word)?;
        *h = usize::try_from(u64::from_le_bytes(word))
            .map_err(|_| Error::Parse("cache header overflows".into()))?;
    }
    let [count, k, dim] = header;
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let mut centers = Vec::with_capacity(k);
        for _ in 0..k {
            let mut c = Vec::with_capacity(dim);
            for _ in 0..dim {
                r.read_exact(&mut word)?;
                c.push(T::from_f64_lossy(f64::from_le_bytes(word)));
            }
            centers.push(c);
        }
        out.push(CenterSet::new(centers)?);
    }
    Ok(out)
}
