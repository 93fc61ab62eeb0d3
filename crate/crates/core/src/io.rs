//! File formats: headerless matrix CSV, ground-truth JSON sidecar, facet dumps.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::synth::{GroundTruth, InstanceParams};

/// Serializes `f64` values allowing `+∞` (written as the string `"inf"`).
pub mod maybe_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => t.parse::<f64>().map_err(serde::de::Error::custom),
        }
    }
}

/// Formats a float with 17 significant digits (round-trip exact).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_matrix_csv<W: Write>(m: &DenseMatrix, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|&v| fmt_f64(v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a headerless numeric CSV into a matrix (one CSV row per matrix row).
pub fn read_matrix_csv<R: Read>(input: R) -> Result<DenseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let row: Vec<f64> = rec
            .iter()
            .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("{v:?}: {e}"))))
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty matrix file".into()));
    }
    let m = DenseMatrix::from_rows(&rows).map_err(|_| Error::Parse("ragged matrix rows".into()))?;
    m.ensure_finite("matrix file")?;
    Ok(m)
}

pub fn save_matrix_csv(m: &DenseMatrix, path: &Path) -> Result<()> {
    write_matrix_csv(m, File::create(path)?)
}

pub fn load_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    read_matrix_csv(File::open(path)?)
}

/// Row-major dense block as stored in JSON files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DenseMatrix> for MatrixJson {
    fn from(m: &DenseMatrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: m.as_slice().to_vec(),
        }
    }
}

impl TryFrom<MatrixJson> for DenseMatrix {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<Self> {
        DenseMatrix::new(m.rows, m.cols, m.data)
    }
}

/// Ground-truth sidecar written next to a generated data matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthFile {
    #[serde(rename = "A")]
    pub a: MatrixJson,
    #[serde(rename = "S")]
    pub s: MatrixJson,
    pub params: InstanceParams,
}

impl TruthFile {
    pub fn new(truth: &GroundTruth, params: InstanceParams) -> Self {
        Self {
            a: (&truth.a).into(),
            s: (&truth.s).into(),
            params,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(File::open(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn endmembers(&self) -> Result<DenseMatrix> {
        self.a.clone().try_into()
    }
}
