//! Backend calibration CSV parsing and qubit ranking.
//!
//! Only four columns matter: the qubit id, the `sx` gate error, T1 and T2.
//! Header names are matched after trimming whitespace; other columns are ignored.

use std::collections::HashSet;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("calibration CSV has no {0:?} column")]
    MissingColumn(&'static str),
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("need {requested} qubits but the calibration lists {available}")]
    NotEnoughQubits { requested: usize, available: usize },
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitCalRow {
    pub qubit: u32,
    pub sx_error: f64,
    pub t1_us: f64,
    pub t2_us: f64,
}

const QUBIT: &str = "Qubit";
const SX_ERROR: &str = "\u{221a}x (sx) error";
const T1: &str = "T1 (us)";
const T2: &str = "T2 (us)";

fn column(headers: &[String], name: &'static str) -> Result<usize, CalibrationError> {
    let matches = |h: &str| {
        if name == SX_ERROR {
            // exports differ in how the radical is written
            h == SX_ERROR || h.ends_with("(sx) error")
        } else {
            h == name
        }
    };
    headers.iter().position(|h| matches(h)).ok_or(CalibrationError::MissingColumn(name))
}

pub fn parse_calibration_csv(text: &str) -> Result<Vec<QubitCalRow>, CalibrationError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CalibrationError::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let cols = [column(&headers, QUBIT)?, column(&headers, SX_ERROR)?, column(&headers, T1)?, column(&headers, T2)?];
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        // header is line 1
        let row = i + 2;
        let record = record.map_err(|e| CalibrationError::MalformedRow { row, reason: e.to_string() })?;
        let field = |c: usize| {
            record
                .get(c)
                .map(str::trim)
                .ok_or_else(|| CalibrationError::MalformedRow { row, reason: format!("missing field {c}") })
        };
        let real = |c: usize, what: &str| -> Result<f64, CalibrationError> {
            let raw = field(c)?;
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CalibrationError::MalformedRow { row, reason: format!("bad {what} {raw:?}") })
        };
        let raw_id = field(cols[0])?;
        let qubit = raw_id
            .parse::<u32>()
            .map_err(|_| CalibrationError::MalformedRow { row, reason: format!("bad qubit id {raw_id:?}") })?;
        let sx_error = real(cols[1], "sx error")?;
        let t1_us = real(cols[2], "T1")?;
        let t2_us = real(cols[3], "T2")?;
        if sx_error < 0.0 || t1_us <= 0.0 || t2_us <= 0.0 {
            return Err(CalibrationError::MalformedRow { row, reason: "out-of-range metric".into() });
        }
        if !seen.insert(qubit) {
            return Err(CalibrationError::MalformedRow { row, reason: format!("duplicate qubit {qubit}") });
        }
        rows.push(QubitCalRow { qubit, sx_error, t1_us, t2_us });
    }
    Ok(rows)
}

/// Best `n` qubits: lowest sx error, then longest T1, then longest T2, then lowest id.
pub fn rank_qubits(rows: &[QubitCalRow], n: usize) -> Result<Vec<u32>, CalibrationError> {
    if n > rows.len() {
        return Err(CalibrationError::NotEnoughQubits { requested: n, available: rows.len() });
    }
    let mut sorted: Vec<&QubitCalRow> = rows.iter().collect();
    sorted.sort_by(|x, y| {
        x.sx_error
            .total_cmp(&y.sx_error)
            .then(y.t1_us.total_cmp(&x.t1_us))
            .then(y.t2_us.total_cmp(&x.t2_us))
            .then(x.qubit.cmp(&y.qubit))
    });
    Ok(sorted.into_iter().take(n).map(|r| r.qubit).collect())
}
