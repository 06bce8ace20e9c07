use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::ModelParams;

/// First line of every records file.
pub const RECORDS_VERSION_LINE: &str = "# mnw-records v1";

/// One measured replicate. Missing measurements are empty CSV cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub d: u32,
    pub n: u32,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub zeta: f64,
    pub replicate: u32,
    pub seed: u64,
    pub vertex_count: u64,
    pub long_edges: u64,
    pub diameter: Option<u32>,
    pub diameter_exact: Option<bool>,
    pub t_mix: Option<u64>,
    pub t_mix_exact: Option<bool>,
    pub gap: Option<f64>,
    pub max_degree: Option<u32>,
    /// `r=count` pairs separated by `;`, count being the number of empty boxes.
    pub boxes: String,
    /// Skipped or downgraded measurements, `;`-separated.
    pub note: String,
    pub wall_ms: u64,
}

impl ScalingRecord {
    pub fn cell(&self) -> ModelParams {
        ModelParams {
            d: self.d,
            n: self.n,
            alpha: self.alpha,
            beta: self.beta,
            sigma: self.sigma,
            zeta: self.zeta,
            seed: 0,
        }
    }

    pub fn box_counts(&self) -> Vec<(f64, u64)> {
        self.boxes
            .split(';')
            .filter(|s| !s.is_empty())
            .filter_map(|s| {
                let (r, c) = s.split_once('=')?;
                Some((r.parse().ok()?, c.parse().ok()?))
            })
            .collect()
    }
}

pub(crate) fn same_cell(a: &ModelParams, b: &ModelParams) -> bool {
    a.d == b.d
        && a.n == b.n
        && a.alpha.to_bits() == b.alpha.to_bits()
        && a.beta.to_bits() == b.beta.to_bits()
        && a.sigma.to_bits() == b.sigma.to_bits()
        && a.zeta.to_bits() == b.zeta.to_bits()
}

fn csv_bytes(records: &[ScalingRecord], header: bool) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    if header && records.is_empty() {
        w.write_record([
            "d", "n", "alpha", "beta", "sigma", "zeta", "replicate", "seed", "vertex_count", "long_edges",
            "diameter", "diameter_exact", "t_mix", "t_mix_exact", "gap", "max_degree", "boxes", "note", "wall_ms",
        ])?;
    }
    w.into_inner().map_err(|e| Error::io("<memory>", e.into_error()))
}

/// Writes a complete records file: version line, CSV header and rows.
pub fn write_records<W: Write>(records: &[ScalingRecord], mut out: W) -> Result<()> {
    let body = csv_bytes(records, true)?;
    writeln!(out, "{RECORDS_VERSION_LINE}").and_then(|_| out.write_all(&body)).and_then(|_| out.flush())
        .map_err(|e| Error::io("<output>", e))
}

fn parse_records<R: Read>(reader: R, path: &Path) -> Result<Vec<ScalingRecord>> {
    let mut reader = BufReader::new(reader);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| Error::io(path, e))?;
    if first.trim_end() != RECORDS_VERSION_LINE {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected {RECORDS_VERSION_LINE:?}, got {:?}", first.trim_end()),
        });
    }
    let mut rows = Vec::new();
    for row in csv::Reader::from_reader(reader).deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

pub fn read_records(path: &Path) -> Result<Vec<ScalingRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_records(file, path)
}

/// Appends whole cells to a records file.
pub struct RecordWriter {
    path: PathBuf,
    file: File,
}

impl RecordWriter {
    /// Opens `path` for appending, writing the version line and CSV header if
    /// the file is new or empty. Returns the records already present.
    pub fn open(path: &Path) -> Result<(RecordWriter, Vec<ScalingRecord>)> {
        let existing = match std::fs::metadata(path) {
            Ok(m) if m.len() > 0 => read_records(path)?,
            _ => {
                let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
                write_records(&[], &mut f)?;
                Vec::new()
            }
        };
        let file = OpenOptions::new().append(true).open(path).map_err(|e| Error::io(path, e))?;
        Ok((
            RecordWriter {
                path: path.to_path_buf(),
                file,
            },
            existing,
        ))
    }

    /// All rows of one cell in a single write.
    pub fn append_cell(&mut self, records: &[ScalingRecord]) -> Result<()> {
        let bytes = csv_bytes(records, false)?;
        self.file.write_all(&bytes).map_err(|e| Error::io(&self.path, e))?;
        self.file.sync_data().map_err(|e| Error::io(&self.path, e))
    }
}
