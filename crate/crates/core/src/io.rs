//! File formats.
//!
//! * Binary statistic files: magic `CSKL`, version byte `1`, element-type
//!   byte `0` (64-bit IEEE-754 little-endian), rank byte (1, 2 or 4),
//!   `rank` dimensions as little-endian `u64`, then the row-major payload.
//!   Round-trips are bit-exact.
//! * Sketch files: a JSON document carrying the operator fingerprint, the
//!   sample count, the model that produced the sketch, and the `m` values
//!   encoded as hexadecimal IEEE-754 bit patterns so no precision is lost in
//!   text form.
//! * Data files: headerless RFC-4180-style CSV, one sample per row.
//! * Sidecars: whitener and ground-truth documents as JSON; hypotheses as a
//!   structured text document (`key=value` lines plus row-major matrices).

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{IcaHypothesis, PcaHypothesis, SubspaceHypothesis};
use crate::sketch::{OperatorFingerprint, OperatorKind, SketchVector};
use crate::statistics::{DataBatch, Whitener};
use crate::tensor::Tensor4;

const MAGIC: &[u8; 4] = b"CSKL";
const FORMAT_VERSION: u8 = 1;
const ELEM_F64_LE: u8 = 0;

/// Payload of a binary statistic file.
#[derive(Debug, Clone)]
pub enum MatrixPayload {
    Vector(DVector<f64>),
    Matrix(DMatrix<f64>),
    Tensor(Tensor4),
}

impl MatrixPayload {
    fn rank(&self) -> u8 {
        match self {
            MatrixPayload::Vector(_) => 1,
            MatrixPayload::Matrix(_) => 2,
            MatrixPayload::Tensor(_) => 4,
        }
    }

    fn dims(&self) -> Vec<u64> {
        match self {
            MatrixPayload::Vector(v) => vec![v.len() as u64],
            MatrixPayload::Matrix(m) => vec![m.nrows() as u64, m.ncols() as u64],
            MatrixPayload::Tensor(t) => vec![t.dim() as u64; 4],
        }
    }

    /// Row-major element stream.
    fn write_elements(&self, out: &mut impl Write) -> Result<()> {
        match self {
            MatrixPayload::Vector(v) => {
                for x in v.iter() {
                    out.write_all(&x.to_le_bytes())?;
                }
            }
            MatrixPayload::Matrix(m) => {
                for r in 0..m.nrows() {
                    for c in 0..m.ncols() {
                        out.write_all(&m[(r, c)].to_le_bytes())?;
                    }
                }
            }
            MatrixPayload::Tensor(t) => {
                for x in t.as_slice() {
                    out.write_all(&x.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }
}

pub fn write_matrix_file(path: &Path, payload: &MatrixPayload) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&[FORMAT_VERSION, ELEM_F64_LE, payload.rank()])?;
    for d in payload.dims() {
        out.write_all(&d.to_le_bytes())?;
    }
    payload.write_elements(&mut out)?;
    out.flush()?;
    Ok(())
}

pub fn read_matrix_file(path: &Path) -> Result<MatrixPayload> {
    let mut raw = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut raw)?;
    let mut cursor = 0usize;
    let take = |cursor: &mut usize, len: usize| -> Result<&[u8]> {
        if *cursor + len > raw.len() {
            return Err(Error::Format(format!(
                "truncated file: wanted {len} bytes at offset {cursor}",
                cursor = *cursor
            )));
        }
        let s = &raw[*cursor..*cursor + len];
        *cursor += len;
        Ok(s)
    };
    if take(&mut cursor, 4)? != MAGIC {
        return Err(Error::Format("bad magic, not a CSKL file".into()));
    }
    let header = take(&mut cursor, 3)?;
    if header[0] != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {}", header[0])));
    }
    if header[1] != ELEM_F64_LE {
        return Err(Error::Format(format!(
            "unsupported element type {}",
            header[1]
        )));
    }
    let rank = header[2];
    if ![1, 2, 4].contains(&rank) {
        return Err(Error::Format(format!("unsupported rank {rank}")));
    }
    let mut dims = Vec::with_capacity(rank as usize);
    for _ in 0..rank {
        let bytes: [u8; 8] = take(&mut cursor, 8)?.try_into().expect("8 bytes");
        dims.push(u64::from_le_bytes(bytes) as usize);
    }
    let count: usize = dims.iter().product();
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let bytes: [u8; 8] = take(&mut cursor, 8)?.try_into().expect("8 bytes");
        values.push(f64::from_le_bytes(bytes));
    }
    if cursor != raw.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            raw.len() - cursor
        )));
    }
    match rank {
        1 => Ok(MatrixPayload::Vector(DVector::from_vec(values))),
        2 => Ok(MatrixPayload::Matrix(DMatrix::from_row_slice(
            dims[0], dims[1], &values,
        ))),
        4 => {
            if !(dims[0] == dims[1] && dims[1] == dims[2] && dims[2] == dims[3]) {
                return Err(Error::Format(format!("tensor dims must agree, got {dims:?}")));
            }
            Ok(MatrixPayload::Tensor(Tensor4::from_vec(dims[0], values)?))
        }
        _ => unreachable!(),
    }
}

// ---------------------------------------------------------------------------
// sketch files
// ---------------------------------------------------------------------------

/// Serialized form of a sketch; the fingerprint fields regenerate the
/// operator exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SketchFile {
    pub format_version: u32,
    pub kind: String,
    pub seed: u64,
    pub m: usize,
    pub ambient: usize,
    /// Which pipeline produced the sketch: `ica`, `gpca`, `pca` or `raw`.
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    pub n_samples: u64,
    /// IEEE-754 bit patterns, 16 hex digits each.
    pub values_hex: Vec<String>,
}

impl SketchFile {
    pub fn from_sketch(sketch: &SketchVector, model: &str, degree: Option<usize>) -> Self {
        SketchFile {
            format_version: 1,
            kind: sketch.fingerprint.kind.as_str().to_string(),
            seed: sketch.fingerprint.seed,
            m: sketch.fingerprint.m,
            ambient: sketch.fingerprint.ambient,
            model: model.to_string(),
            degree,
            n_samples: sketch.n_samples,
            values_hex: sketch
                .values
                .iter()
                .map(|v| format!("{:016x}", v.to_bits()))
                .collect(),
        }
    }

    pub fn to_sketch(&self) -> Result<SketchVector> {
        if self.values_hex.len() != self.m {
            return Err(Error::Format(format!(
                "sketch file claims m={} but carries {} values",
                self.m,
                self.values_hex.len()
            )));
        }
        let mut values = Vec::with_capacity(self.m);
        for hex in &self.values_hex {
            let bits = u64::from_str_radix(hex, 16)
                .map_err(|e| Error::Format(format!("bad value bit pattern `{hex}`: {e}")))?;
            values.push(f64::from_bits(bits));
        }
        Ok(SketchVector {
            values,
            fingerprint: OperatorFingerprint {
                kind: OperatorKind::parse(&self.kind)?,
                seed: self.seed,
                m: self.m,
                ambient: self.ambient,
            },
            n_samples: self.n_samples,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("sketch serialization failed: {e}")))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        serde_json::from_str(&raw).map_err(|e| Error::Format(format!("bad sketch file: {e}")))
    }
}

// ---------------------------------------------------------------------------
// CSV data
// ---------------------------------------------------------------------------

/// Reads a batch from headerless CSV (one sample per row); `skip_header`
/// drops the first record.
pub fn read_csv_batch(path: &Path, skip_header: bool) -> Result<DataBatch> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(skip_header)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Format(format!("cannot open csv: {e}")))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Format(format!("bad csv record: {e}")))?;
        let row: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.parse::<f64>()).collect();
        rows.push(row.map_err(|e| Error::Format(format!("bad csv number: {e}")))?);
    }
    DataBatch::from_rows(&rows)
}

/// Writes a batch as headerless CSV with shortest-round-trip floats.
pub fn write_csv_batch(path: &Path, data: &DataBatch) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for i in 0..data.n_samples() {
        let mut line = String::new();
        for j in 0..data.dim() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{}", data.samples()[(i, j)]));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// sidecar documents
// ---------------------------------------------------------------------------

/// Whitener sidecar (JSON; serde_json floats round-trip f64 exactly).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WhitenerFile {
    pub format_version: u32,
    pub mean: Vec<f64>,
    /// Row-major `d × d` transform.
    pub transform: Vec<Vec<f64>>,
}

impl WhitenerFile {
    pub fn from_whitener(w: &Whitener) -> Self {
        let d = w.dim();
        WhitenerFile {
            format_version: 1,
            mean: w.mean().iter().copied().collect(),
            transform: (0..d)
                .map(|r| (0..d).map(|c| w.transform()[(r, c)]).collect())
                .collect(),
        }
    }

    pub fn to_whitener(&self) -> Result<Whitener> {
        let d = self.mean.len();
        if self.transform.len() != d || self.transform.iter().any(|r| r.len() != d) {
            return Err(Error::Format("whitener transform is not d×d".into()));
        }
        let mut t = DMatrix::zeros(d, d);
        for (r, row) in self.transform.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                t[(r, c)] = *v;
            }
        }
        Whitener::from_parts(DVector::from_vec(self.mean.clone()), t)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("whitener serialization failed: {e}")))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        serde_json::from_str(&raw).map_err(|e| Error::Format(format!("bad whitener file: {e}")))
    }
}

/// Ground-truth sidecar written next to generated datasets.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum GroundTruthFile {
    #[serde(rename = "ica")]
    Ica {
        seed: u64,
        d: usize,
        n: usize,
        sources: Vec<String>,
        /// Row-major mixing matrix.
        mixing: Vec<Vec<f64>>,
        kappa: Vec<f64>,
    },
    #[serde(rename = "subspaces")]
    Subspaces {
        seed: u64,
        d: usize,
        n: usize,
        dims: Vec<usize>,
        weights: Vec<f64>,
        noise: f64,
        /// One row-major `d × d_i` basis per subspace.
        bases: Vec<Vec<Vec<f64>>>,
        labels: Vec<usize>,
    },
    #[serde(rename = "gaussian")]
    Gaussian { seed: u64, d: usize, n: usize },
}

impl GroundTruthFile {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("ground truth serialization failed: {e}")))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        serde_json::from_str(&raw)
            .map_err(|e| Error::Format(format!("bad ground truth file: {e}")))
    }
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

// ---------------------------------------------------------------------------
// hypothesis documents
// ---------------------------------------------------------------------------

fn push_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    out.push_str(&format!("{name} rows={} cols={}\n", m.nrows(), m.ncols()));
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{}", m[(r, c)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

/// Structured text document for an ICA hypothesis. `config` lines are echoed
/// verbatim as comments so outputs carry their provenance.
pub fn ica_hypothesis_document(hyp: &IcaHypothesis, config: &[(String, String)]) -> String {
    let mut out = String::from("cskl-hypothesis version=1 model=ica\n");
    for (k, v) in config {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(&format!("identifiable={}\n", hyp.identifiable));
    let kappa: Vec<String> = hyp.kappa.iter().map(|v| format!("{v}")).collect();
    out.push_str(&format!("kappa {}\n", kappa.join(" ")));
    push_matrix(&mut out, "unmixing", &hyp.unmixing);
    out
}

pub fn subspace_hypothesis_document(
    hyp: &SubspaceHypothesis,
    config: &[(String, String)],
) -> String {
    let mut out = String::from("cskl-hypothesis version=1 model=gpca\n");
    for (k, v) in config {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(&format!("polynomials={}\n", hyp.polynomials.len()));
    for (i, p) in hyp.polynomials.iter().enumerate() {
        let coeffs: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
        out.push_str(&format!("polynomial {i} {}\n", coeffs.join(" ")));
    }
    out.push_str(&format!("subspaces={}\n", hyp.bases.len()));
    for (i, b) in hyp.bases.iter().enumerate() {
        push_matrix(&mut out, &format!("basis {i}"), b);
    }
    let labels: Vec<String> = hyp.labels.iter().map(|l| l.to_string()).collect();
    out.push_str(&format!("labels {}\n", labels.join(" ")));
    out
}

pub fn pca_hypothesis_document(hyp: &PcaHypothesis, config: &[(String, String)]) -> String {
    let mut out = String::from("cskl-hypothesis version=1 model=pca\n");
    for (k, v) in config {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(&format!("degenerate={}\n", hyp.degenerate));
    push_matrix(&mut out, "basis", &hyp.basis);
    out
}
