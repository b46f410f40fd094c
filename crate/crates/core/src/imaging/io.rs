//! Frame and metadata files: 16-bit binary PGM (P5), CSV matrices and the
//! JSON sidecar carrying detuning and pixel pitch. Row-major, origin top-left.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use image::codecs::pnm::{PnmDecoder, PnmSubtype, SampleEncoding};
use image::DynamicImage;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ImagePair, ImagingError, Result};

fn io_err(path: &Path, source: std::io::Error) -> ImagingError {
    ImagingError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> ImagingError {
    ImagingError::Format {
        path: path.display().to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameMetadata {
    pub detuning_hz: f64,
    pub pixel_pitch_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub exposure: BTreeMap<String, String>,
}

pub fn read_sidecar(path: &Path) -> Result<FrameMetadata> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| format_err(path, e.to_string()))
}

pub fn read_pgm(path: &Path) -> Result<Array2<f64>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let decoder =
        PnmDecoder::new(BufReader::new(file)).map_err(|e| format_err(path, e.to_string()))?;
    if decoder.subtype() != PnmSubtype::Graymap(SampleEncoding::Binary) {
        return Err(format_err(path, "expected a binary graymap (P5)"));
    }
    let img = DynamicImage::from_decoder(decoder).map_err(|e| format_err(path, e.to_string()))?;
    let gray = img.into_luma16();
    let (w, h) = gray.dimensions();
    let data: Vec<f64> = gray.into_raw().into_iter().map(f64::from).collect();
    Array2::from_shape_vec((h as usize, w as usize), data).map_err(|e| format_err(path, e.to_string()))
}

/// Writes a 16-bit P5 graymap (big-endian samples); values are rounded and
/// clamped to `[0, 65535]`.
pub fn write_pgm(path: &Path, frame: &Array2<f64>) -> Result<()> {
    let (h, w) = frame.dim();
    let mut bytes = Vec::with_capacity(2 * w * h + 32);
    bytes.extend_from_slice(format!("P5\n{w} {h}\n65535\n").as_bytes());
    for v in frame.iter() {
        let q = v.round().clamp(0.0, 65535.0) as u16;
        bytes.extend_from_slice(&q.to_be_bytes());
    }
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(&bytes)
        .and_then(|_| out.flush())
        .map_err(|e| io_err(path, e))
}

pub fn read_csv_matrix(path: &Path) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format_err(path, e.to_string()))?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format_err(path, e.to_string()))?;
        let row: Vec<f64> = record
            .iter()
            .enumerate()
            .map(|(j, s)| {
                s.parse::<f64>()
                    .map_err(|_| format_err(path, format!("row {}, column {}: `{s}` is not a number", i + 1, j + 1)))
            })
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(format_err(path, format!("row {} has {} columns, expected {c}", i + 1, row.len())))
            }
            _ => {}
        }
        data.extend(row);
        rows += 1;
    }
    let cols = cols.ok_or_else(|| format_err(path, "empty matrix"))?;
    Array2::from_shape_vec((rows, cols), data).map_err(|e| format_err(path, e.to_string()))
}

/// Writes a matrix as CSV; NaN entries are written as `nan`.
pub fn write_csv_matrix<W: Write>(out: W, matrix: &Array2<f64>) -> std::io::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in matrix.rows() {
        writer.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    writer.flush()
}

/// Reads a frame by extension: `.pgm` as binary graymap, anything else as CSV.
pub fn read_frame(path: &Path) -> Result<Array2<f64>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("pgm") => read_pgm(path),
        _ => read_csv_matrix(path),
    }
}

/// Loads both frames plus the sidecar metadata.
pub fn load_pair(transmitted: &Path, reference: &Path, sidecar: &Path) -> Result<ImagePair> {
    let meta = read_sidecar(sidecar)?;
    let mut metadata = meta.exposure.clone();
    if let Some(ts) = &meta.timestamp {
        metadata.insert("timestamp".into(), ts.clone());
    }
    let pair = ImagePair {
        transmitted: read_frame(transmitted)?,
        reference: read_frame(reference)?,
        pixel_pitch_m: meta.pixel_pitch_m,
        detuning_hz: meta.detuning_hz,
        metadata,
    };
    pair.validate()?;
    Ok(pair)
}
