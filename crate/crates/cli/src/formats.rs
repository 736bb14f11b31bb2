//! File formats: CSV and JSON writers plus the matching readers.
//!
//! Every file the pipeline emits can be re-read by the reader in this module;
//! floats are written in Rust's shortest round-trip form so re-parsing is
//! exact and output is byte-deterministic.
//!
//! Formats (all documented in the README):
//! - SD records CSV: `cell_id,sd_volts,bias,converged,iterations`
//! - SD records JSON: array of objects with the same fields
//! - start-up counts CSV: `cell_id,n_ones,n_trials`
//! - start-up bitmap: header `rows cols trials`, one 0/1 line per cell
//! - spatial map CSV: rows lines of cols comma-separated SUP1 values
//! - histogram CSV: `bin_left,bin_right,count,relative_frequency`
//! - exceedance CSV: `threshold_volts,fraction`
//! - transfer model JSON: `{type, a?, k?, m?, k1?, k2?, residual}`
//! - thresholds CSV: `probability,sd_threshold_volts,cell_fraction`
//! - responses CSV: `chip_id,bits` with bits as a 0/1 string

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use sepsim_core::dynamics::StateLabel;
use sepsim_core::metrics::PufResponse;
use sepsim_core::separatrix::SdRecord;
use sepsim_core::startup::{DatasetSource, StartupDataset, StartupRecord};
use sepsim_core::transfer::{DoubleLogistic, FitResult, SingleLogistic, TransferModel};
use sepsim_core::variation::Histogram;

use crate::error::CliError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.display().to_string(), source: e }
}

fn malformed(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Malformed { path: path.display().to_string(), line, message: message.into() }
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn parse_label(s: &str) -> Option<StateLabel> {
    match s {
        "S0" => Some(StateLabel::S0),
        "S1" => Some(StateLabel::S1),
        "UNSETTLED" => Some(StateLabel::Unsettled),
        _ => None,
    }
}

// ---------------------------------------------------------------- SD records

pub const SD_CSV_HEADER: &str = "cell_id,sd_volts,bias,converged,iterations";

pub fn write_sd_csv(path: &Path, records: &[SdRecord]) -> Result<(), CliError> {
    let mut out = String::with_capacity(records.len() * 32 + 64);
    out.push_str(SD_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.cell_id,
            r.sd,
            r.bias.as_str(),
            r.converged,
            r.iterations
        ));
    }
    write_atomic(path, &out)
}

pub fn read_sd_csv(path: &Path) -> Result<Vec<SdRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == SD_CSV_HEADER => {}
        Some((_, other)) => return Err(malformed(path, 1, format!("expected header '{SD_CSV_HEADER}', found '{other}'"))),
        None => return Err(malformed(path, 1, "empty file")),
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(malformed(path, line_no, "expected 5 comma-separated fields"));
        }
        let cell_id: u64 =
            fields[0].parse().map_err(|_| malformed(path, line_no, "bad cell_id"))?;
        let sd: f64 = fields[1].parse().map_err(|_| malformed(path, line_no, "bad sd_volts"))?;
        let bias = parse_label(fields[2])
            .ok_or_else(|| malformed(path, line_no, "bias must be S0, S1 or UNSETTLED"))?;
        let converged: bool =
            fields[3].parse().map_err(|_| malformed(path, line_no, "bad converged flag"))?;
        let iterations: u32 =
            fields[4].parse().map_err(|_| malformed(path, line_no, "bad iterations"))?;
        records.push(SdRecord { cell_id, sd, bias, flip_voltage: sd.abs(), iterations, converged });
    }
    Ok(records)
}

#[derive(Serialize, Deserialize)]
struct SdRow {
    cell_id: u64,
    sd_volts: f64,
    bias: String,
    converged: bool,
    iterations: u32,
}

pub fn write_sd_json(path: &Path, records: &[SdRecord]) -> Result<(), CliError> {
    let rows: Vec<SdRow> = records
        .iter()
        .map(|r| SdRow {
            cell_id: r.cell_id,
            sd_volts: r.sd,
            bias: r.bias.as_str().to_string(),
            converged: r.converged,
            iterations: r.iterations,
        })
        .collect();
    write_atomic(path, &(serde_json::to_string_pretty(&rows).expect("serializable") + "\n"))
}

pub fn read_sd_json(path: &Path) -> Result<Vec<SdRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let rows: Vec<SdRow> = serde_json::from_str(&text).map_err(|e| CliError::Malformed {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    rows.into_iter()
        .map(|r| {
            let bias = parse_label(&r.bias)
                .ok_or_else(|| malformed(path, 1, "bias must be S0, S1 or UNSETTLED"))?;
            Ok(SdRecord {
                cell_id: r.cell_id,
                sd: r.sd_volts,
                bias,
                flip_voltage: r.sd_volts.abs(),
                iterations: r.iterations,
                converged: r.converged,
            })
        })
        .collect()
}

// ------------------------------------------------------------ start-up data

pub const COUNTS_CSV_HEADER: &str = "cell_id,n_ones,n_trials";

pub fn write_counts_csv(path: &Path, dataset: &StartupDataset) -> Result<(), CliError> {
    let mut out = String::with_capacity(dataset.records.len() * 16 + 32);
    out.push_str(COUNTS_CSV_HEADER);
    out.push('\n');
    for r in &dataset.records {
        out.push_str(&format!("{},{},{}\n", r.cell_id, r.n_ones, r.n_trials));
    }
    write_atomic(path, &out)
}

/// Parse a counts CSV into a dataset with the given geometry.
pub fn read_counts_csv(path: &Path, rows: usize, cols: usize) -> Result<StartupDataset, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_counts(&text, path, rows, cols)
}

fn parse_counts(text: &str, path: &Path, rows: usize, cols: usize) -> Result<StartupDataset, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == COUNTS_CSV_HEADER => {}
        Some((_, other)) => {
            return Err(malformed(path, 1, format!("expected header '{COUNTS_CSV_HEADER}', found '{other}'")))
        }
        None => return Err(malformed(path, 1, "empty file")),
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(malformed(path, line_no, "expected 3 comma-separated fields"));
        }
        let cell_id: u64 =
            fields[0].parse().map_err(|_| malformed(path, line_no, "bad cell_id"))?;
        let n_ones: u32 = fields[1].parse().map_err(|_| malformed(path, line_no, "bad n_ones"))?;
        let n_trials: u32 =
            fields[2].parse().map_err(|_| malformed(path, line_no, "bad n_trials"))?;
        let record = StartupRecord::from_counts(cell_id, n_ones, n_trials)
            .map_err(|e| malformed(path, line_no, e.to_string()))?;
        records.push(record);
    }
    StartupDataset::new(rows, cols, records, DatasetSource::Measured)
        .map_err(|e| malformed(path, 1, e.to_string()))
}

/// Write the per-trial bitmap format: header `rows cols trials`, then one
/// line of '0'/'1' characters per cell. Only datasets with a uniform trial
/// count can be written this way.
pub fn write_bitmap(path: &Path, dataset: &StartupDataset, bits: &[Vec<bool>]) -> Result<(), CliError> {
    let trials = dataset.records.first().map(|r| r.n_trials).unwrap_or(0) as usize;
    let mut out = String::with_capacity(bits.len() * (trials + 1) + 32);
    out.push_str(&format!("{} {} {}\n", dataset.rows, dataset.cols, trials));
    for cell_bits in bits {
        for &b in cell_bits {
            out.push(if b { '1' } else { '0' });
        }
        out.push('\n');
    }
    write_atomic(path, &out)
}

fn parse_bitmap(text: &str, path: &Path) -> Result<StartupDataset, CliError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| malformed(path, 1, "empty file"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 3 {
        return Err(malformed(path, 1, "bitmap header must be 'rows cols trials'"));
    }
    let rows: usize = dims[0].parse().map_err(|_| malformed(path, 1, "bad row count"))?;
    let cols: usize = dims[1].parse().map_err(|_| malformed(path, 1, "bad column count"))?;
    let trials: usize = dims[2].parse().map_err(|_| malformed(path, 1, "bad trial count"))?;
    if trials == 0 {
        return Err(malformed(path, 1, "trial count must be positive"));
    }
    let mut records = Vec::with_capacity(rows * cols);
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        if line.len() != trials {
            return Err(malformed(
                path,
                line_no,
                format!("expected {trials} trial bits, found {}", line.len()),
            ));
        }
        let mut ones = 0u32;
        for c in line.chars() {
            match c {
                '1' => ones += 1,
                '0' => {}
                other => return Err(malformed(path, line_no, format!("invalid bit '{other}'"))),
            }
        }
        let cell_id = records.len() as u64;
        records.push(StartupRecord::from_counts(cell_id, ones, trials as u32).expect("ones <= trials"));
    }
    StartupDataset::new(rows, cols, records, DatasetSource::Measured)
        .map_err(|e| malformed(path, 1, e.to_string()))
}

/// Ingest a measured start-up dataset, sniffing the format: a `rows cols
/// trials` header selects the bitmap parser, a counts header the CSV parser.
pub fn ingest_dataset(path: &Path) -> Result<StartupDataset, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let first = text.lines().next().unwrap_or("");
    if first == COUNTS_CSV_HEADER {
        // geometry from the row count: a single row of cells
        let n = text.lines().skip(1).filter(|l| !l.is_empty()).count();
        if n == 0 {
            return Err(malformed(path, 1, "no records"));
        }
        parse_counts(&text, path, 1, n)
    } else if first.split_whitespace().count() == 3
        && first.split_whitespace().all(|f| f.chars().all(|c| c.is_ascii_digit()))
    {
        parse_bitmap(&text, path)
    } else {
        Err(malformed(path, 1, "unrecognized start-up dataset format"))
    }
}

/// Counts ingestion with an explicit geometry (for files that represent a
/// full memory rather than a flat list).
pub fn ingest_counts_with_geometry(
    path: &Path,
    rows: usize,
    cols: usize,
) -> Result<StartupDataset, CliError> {
    read_counts_csv(path, rows, cols)
}

// ------------------------------------------------------------- spatial map

/// Write the rows x cols matrix of SUP1 values, one memory row per line.
pub fn write_spatial_map(path: &Path, dataset: &StartupDataset) -> Result<(), CliError> {
    let mut out = String::new();
    for row in 0..dataset.rows {
        let mut line = String::new();
        for col in 0..dataset.cols {
            if col > 0 {
                line.push(',');
            }
            line.push_str(&format!("{}", dataset.records[row * dataset.cols + col].sup1()));
        }
        out.push_str(&line);
        out.push('\n');
    }
    write_atomic(path, &out)
}

pub fn read_spatial_map(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|f| f.parse::<f64>()).collect();
        rows.push(row.map_err(|_| malformed(path, idx + 1, "bad SUP1 value"))?);
    }
    Ok(rows)
}

// -------------------------------------------------------------- histograms

pub const HISTOGRAM_CSV_HEADER: &str = "bin_left,bin_right,count,relative_frequency";

pub fn write_histogram_csv(path: &Path, histogram: &Histogram) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(HISTOGRAM_CSV_HEADER);
    out.push('\n');
    for i in 0..histogram.counts.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            histogram.bin_edges[i],
            histogram.bin_edges[i + 1],
            histogram.counts[i],
            histogram.relative_frequency(i)
        ));
    }
    write_atomic(path, &out)
}

pub fn read_histogram_csv(path: &Path) -> Result<Vec<(f64, f64, u64, f64)>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HISTOGRAM_CSV_HEADER => {}
        _ => return Err(malformed(path, 1, format!("expected header '{HISTOGRAM_CSV_HEADER}'"))),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(malformed(path, idx + 1, "expected 4 fields"));
        }
        let parse_f = |s: &str| s.parse::<f64>().map_err(|_| malformed(path, idx + 1, "bad number"));
        rows.push((
            parse_f(f[0])?,
            parse_f(f[1])?,
            f[2].parse::<u64>().map_err(|_| malformed(path, idx + 1, "bad count"))?,
            parse_f(f[3])?,
        ));
    }
    Ok(rows)
}

// -------------------------------------------------------------- exceedance

pub const EXCEEDANCE_CSV_HEADER: &str = "threshold_volts,fraction";

pub fn write_exceedance_csv(path: &Path, points: &[(f64, f64)]) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(EXCEEDANCE_CSV_HEADER);
    out.push('\n');
    for (threshold, fraction) in points {
        out.push_str(&format!("{threshold},{fraction}\n"));
    }
    write_atomic(path, &out)
}

fn read_two_column_csv(path: &Path, header: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == header => {}
        _ => return Err(malformed(path, 1, format!("expected header '{header}'"))),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let Some((a, b)) = line.split_once(',') else {
            return Err(malformed(path, idx + 1, "expected 2 fields"));
        };
        let a: f64 = a.parse().map_err(|_| malformed(path, idx + 1, "bad number"))?;
        let b: f64 = b.parse().map_err(|_| malformed(path, idx + 1, "bad number"))?;
        rows.push((a, b));
    }
    Ok(rows)
}

pub fn read_exceedance_csv(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    read_two_column_csv(path, EXCEEDANCE_CSV_HEADER)
}

// ------------------------------------------------------------ fitted models

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k2: Option<f64>,
    pub residual: f64,
    #[serde(default)]
    pub iterations: Option<u64>,
    #[serde(default)]
    pub converged: Option<bool>,
}

pub fn write_model_json(path: &Path, fit: &FitResult) -> Result<(), CliError> {
    let row = match fit.model {
        TransferModel::Single(m) => ModelJson {
            kind: "single".into(),
            a: Some(m.a),
            k: Some(m.k),
            m: None,
            k1: None,
            k2: None,
            residual: fit.residual,
            iterations: Some(fit.iterations as u64),
            converged: Some(fit.converged),
        },
        TransferModel::Double(m) => ModelJson {
            kind: "double".into(),
            a: None,
            k: None,
            m: Some(m.m),
            k1: Some(m.k1),
            k2: Some(m.k2),
            residual: fit.residual,
            iterations: Some(fit.iterations as u64),
            converged: Some(fit.converged),
        },
    };
    write_atomic(path, &(serde_json::to_string_pretty(&row).expect("serializable") + "\n"))
}

pub fn read_model_json(path: &Path) -> Result<TransferModel, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let row: ModelJson = serde_json::from_str(&text).map_err(|e| CliError::Malformed {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    match row.kind.as_str() {
        "single" => {
            let (Some(a), Some(k)) = (row.a, row.k) else {
                return Err(malformed(path, 1, "single model needs fields a and k"));
            };
            Ok(TransferModel::Single(SingleLogistic { a, k }))
        }
        "double" => {
            let (Some(m), Some(k1), Some(k2)) = (row.m, row.k1, row.k2) else {
                return Err(malformed(path, 1, "double model needs fields m, k1 and k2"));
            };
            Ok(TransferModel::Double(DoubleLogistic { m, k1, k2 }))
        }
        other => Err(malformed(path, 1, format!("unknown model type '{other}'"))),
    }
}

// --------------------------------------------------------------- thresholds

pub const THRESHOLDS_CSV_HEADER: &str = "probability,sd_threshold_volts,cell_fraction";

pub fn write_thresholds_csv(path: &Path, rows: &[(f64, f64, f64)]) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(THRESHOLDS_CSV_HEADER);
    out.push('\n');
    for (p, sd_th, fraction) in rows {
        out.push_str(&format!("{p},{sd_th},{fraction}\n"));
    }
    write_atomic(path, &out)
}

pub fn read_thresholds_csv(path: &Path) -> Result<Vec<(f64, f64, f64)>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == THRESHOLDS_CSV_HEADER => {}
        _ => return Err(malformed(path, 1, format!("expected header '{THRESHOLDS_CSV_HEADER}'"))),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(malformed(path, idx + 1, "expected 3 fields"));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|_| malformed(path, idx + 1, "bad number"));
        rows.push((parse(fields[0])?, parse(fields[1])?, parse(fields[2])?));
    }
    Ok(rows)
}

// --------------------------------------------------------------- cell masks

pub const MASK_CSV_HEADER: &str = "cell_id,selected";

pub fn write_mask_csv(path: &Path, mask: &sepsim_core::metrics::CellMask) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(MASK_CSV_HEADER);
    out.push('\n');
    for (i, &selected) in mask.bits.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", u8::from(selected)));
    }
    write_atomic(path, &out)
}

pub fn read_mask_csv(path: &Path) -> Result<sepsim_core::metrics::CellMask, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == MASK_CSV_HEADER => {}
        _ => return Err(malformed(path, 1, format!("expected header '{MASK_CSV_HEADER}'"))),
    }
    let mut bits = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let Some((id, flag)) = line.split_once(',') else {
            return Err(malformed(path, idx + 1, "expected 'cell_id,selected'"));
        };
        let id: usize = id.parse().map_err(|_| malformed(path, idx + 1, "bad cell_id"))?;
        if id != bits.len() {
            return Err(malformed(path, idx + 1, "cell ids must be contiguous"));
        }
        match flag {
            "0" => bits.push(false),
            "1" => bits.push(true),
            _ => return Err(malformed(path, idx + 1, "selected must be 0 or 1")),
        }
    }
    Ok(sepsim_core::metrics::CellMask { bits })
}

// ---------------------------------------------------------------- responses

pub const RESPONSES_CSV_HEADER: &str = "chip_id,bits";

pub fn write_responses_csv(path: &Path, responses: &[PufResponse]) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(RESPONSES_CSV_HEADER);
    out.push('\n');
    for r in responses {
        out.push_str(&r.chip_id);
        out.push(',');
        for &b in &r.bits {
            out.push(if b { '1' } else { '0' });
        }
        out.push('\n');
    }
    write_atomic(path, &out)
}

pub fn read_responses_csv(path: &Path) -> Result<Vec<PufResponse>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == RESPONSES_CSV_HEADER => {}
        _ => return Err(malformed(path, 1, format!("expected header '{RESPONSES_CSV_HEADER}'"))),
    }
    let mut responses = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let Some((chip_id, bits_str)) = line.split_once(',') else {
            return Err(malformed(path, line_no, "expected 'chip_id,bits'"));
        };
        let mut bits = Vec::with_capacity(bits_str.len());
        for c in bits_str.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => return Err(malformed(path, line_no, format!("invalid bit '{other}'"))),
            }
        }
        let response = PufResponse::new(chip_id, bits)
            .map_err(|e| malformed(path, line_no, e.to_string()))?;
        responses.push(response);
    }
    Ok(responses)
}

// ------------------------------------------------------------------- tests

#[cfg(test)]
mod tests {
    use super::*;
    use sepsim_core::dynamics::StateLabel;

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn sd_csv_roundtrip() {
        let dir = tmpdir();
        let path = dir.path().join("sd.csv");
        let records = vec![
            SdRecord { cell_id: 0, sd: 0.0123, bias: StateLabel::S1, flip_voltage: 0.0123, iterations: 15, converged: true },
            SdRecord { cell_id: 1, sd: -0.0456, bias: StateLabel::S0, flip_voltage: 0.0456, iterations: 15, converged: true },
            SdRecord { cell_id: 2, sd: 0.0, bias: StateLabel::Unsettled, flip_voltage: 0.0, iterations: 0, converged: true },
        ];
        write_sd_csv(&path, &records).unwrap();
        let back = read_sd_csv(&path).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn counts_roundtrip_and_validation() {
        let dir = tmpdir();
        let path = dir.path().join("counts.csv");
        std::fs::write(&path, "cell_id,n_ones,n_trials\n0,990,1000\n1,10,1000\n").unwrap();
        let ds = read_counts_csv(&path, 1, 2).unwrap();
        assert_eq!(ds.records[0].sup1(), 0.99);
        write_counts_csv(&path, &ds).unwrap();
        let again = read_counts_csv(&path, 1, 2).unwrap();
        assert_eq!(again.records, ds.records);

        // invariant violation carries the line number
        std::fs::write(&path, "cell_id,n_ones,n_trials\n0,1001,1000\n").unwrap();
        let err = read_counts_csv(&path, 1, 1).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn bitmap_parsing() {
        let dir = tmpdir();
        let path = dir.path().join("trials.bitmap");
        std::fs::write(&path, "1 2 2\n01\n11\n").unwrap();
        let ds = ingest_dataset(&path).unwrap();
        assert_eq!(ds.records[0].n_ones, 1);
        assert_eq!(ds.records[0].sup1(), 0.5);
        assert_eq!(ds.records[1].sup1(), 1.0);

        std::fs::write(&path, "1 2 2\n01\n1\n").unwrap();
        let err = ingest_dataset(&path).unwrap_err();
        assert!(err.to_string().contains(":3:"), "{err}");
    }

    #[test]
    fn ingest_sniffs_counts_format() {
        let dir = tmpdir();
        let path = dir.path().join("measured.csv");
        std::fs::write(&path, "cell_id,n_ones,n_trials\n0,990,1000\n1,500,1000\n2,0,1000\n").unwrap();
        let ds = ingest_dataset(&path).unwrap();
        assert_eq!((ds.rows, ds.cols), (1, 3));
        std::fs::write(&path, "what,is,this\n1,2,3\n").unwrap();
        assert!(ingest_dataset(&path).is_err());
    }

    #[test]
    fn spatial_map_roundtrip() {
        let dir = tmpdir();
        let path = dir.path().join("map.csv");
        let records = vec![
            StartupRecord::from_counts(0, 1000, 1000).unwrap(),
            StartupRecord::from_counts(1, 0, 1000).unwrap(),
            StartupRecord::from_counts(2, 500, 1000).unwrap(),
            StartupRecord::from_counts(3, 250, 1000).unwrap(),
        ];
        let ds = StartupDataset::new(2, 2, records, DatasetSource::Simulated).unwrap();
        write_spatial_map(&path, &ds).unwrap();
        let grid = read_spatial_map(&path).unwrap();
        assert_eq!(grid.len(), 2);
        assert_eq!(grid[0], vec![1.0, 0.0]);
        assert_eq!(grid[1], vec![0.5, 0.25]);
    }

    #[test]
    fn model_json_roundtrip() {
        let dir = tmpdir();
        let path = dir.path().join("model.json");
        let fit = FitResult {
            model: TransferModel::Double(DoubleLogistic { m: 0.158, k1: 101.2, k2: 2348.0 }),
            residual: 1.5e-7,
            iterations: 310,
            converged: true,
        };
        write_model_json(&path, &fit).unwrap();
        let TransferModel::Double(m) = read_model_json(&path).unwrap() else {
            panic!("wrong arity");
        };
        assert_eq!(m.m, 0.158);
        assert_eq!(m.k2, 2348.0);
    }

    #[test]
    fn responses_roundtrip() {
        let dir = tmpdir();
        let path = dir.path().join("responses.csv");
        let responses = vec![
            PufResponse::new("chip0", vec![true, false, true]).unwrap(),
            PufResponse::new("chip1", vec![false, false, true]).unwrap(),
        ];
        write_responses_csv(&path, &responses).unwrap();
        assert_eq!(read_responses_csv(&path).unwrap(), responses);

        std::fs::write(&path, "chip_id,bits\nc0,01x\n").unwrap();
        let err = read_responses_csv(&path).unwrap_err();
        assert!(err.to_string().contains("invalid bit"));
    }

    #[test]
    fn histogram_csv_roundtrip() {
        let dir = tmpdir();
        let path = dir.path().join("hist.csv");
        let h = sepsim_core::variation::make_histogram(&[0.1, 0.2, 0.25, 0.9], 4, (0.0, 1.0)).unwrap();
        write_histogram_csv(&path, &h).unwrap();
        let rows = read_histogram_csv(&path).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].2, 2);
        assert_eq!(rows[3].2, 1);
        assert!((rows[0].3 - 0.5).abs() < 1e-15);
    }
}
