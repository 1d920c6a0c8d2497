//! Text format for codes and JSON format for transmission records.
//!
//! A code file starts with the header `K N C L modulation regularity A`
//! followed by one line `k μ sign` per non-zero entry (0-based indices,
//! sign `+` or `-`). The amplitude is written with Rust's shortest
//! round-trip float formatting, so reading a written code reproduces it
//! exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cdmalab_core::ensemble::Entry;
use cdmalab_core::{EnsembleSpec, Modulation, Regularity, SparseCode, TransmissionRecord};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn code_to_string(code: &SparseCode) -> String {
    let spec = code.spec();
    let mut out = format!(
        "{} {} {} {} {} {} {}\n",
        spec.users,
        spec.chips,
        spec.user_degree,
        spec.chip_degree,
        spec.modulation.as_str(),
        spec.regularity.as_str(),
        code.amplitude()
    );
    for e in code.entries() {
        let sign = if e.value < 0.0 { '-' } else { '+' };
        writeln!(out, "{} {} {}", e.user, e.chip, sign).expect("writing to a String");
    }
    out
}

/// Parses the code text format; `origin` only labels error messages.
pub fn code_from_str(text: &str, origin: &Path) -> Result<SparseCode> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty code file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 7 {
        return Err(parse_err(
            hline,
            format!(
                "header needs 7 fields `K N C L modulation regularity A`, found {}",
                fields.len()
            ),
        ));
    }
    let int = |i: usize, name: &str| {
        fields[i]
            .parse::<usize>()
            .map_err(|_| parse_err(hline, format!("{name} `{}` is not a count", fields[i])))
    };
    let modulation = Modulation::parse(fields[4])
        .ok_or_else(|| parse_err(hline, format!("unknown modulation `{}`", fields[4])))?;
    let regularity = Regularity::parse(fields[5])
        .ok_or_else(|| parse_err(hline, format!("unknown regularity `{}`", fields[5])))?;
    let amplitude: f64 = fields[6]
        .parse()
        .map_err(|_| parse_err(hline, format!("amplitude `{}` is not a number", fields[6])))?;
    if !(amplitude > 0.0) || !amplitude.is_finite() {
        return Err(parse_err(
            hline,
            format!("amplitude {amplitude} must be positive"),
        ));
    }
    let spec = EnsembleSpec {
        users: int(0, "K")?,
        chips: int(1, "N")?,
        user_degree: int(2, "C")?,
        chip_degree: int(3, "L")?,
        modulation,
        regularity,
    };

    let mut entries = Vec::new();
    for (no, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [k, mu, sign] = parts[..] else {
            return Err(parse_err(no, "entry lines are `k μ sign`".into()));
        };
        let user = k
            .parse()
            .map_err(|_| parse_err(no, format!("user `{k}` is not an index")))?;
        let chip = mu
            .parse()
            .map_err(|_| parse_err(no, format!("chip `{mu}` is not an index")))?;
        let value = match sign {
            "+" => amplitude,
            "-" => -amplitude,
            _ => return Err(parse_err(no, format!("sign `{sign}` must be + or -"))),
        };
        entries.push(Entry { user, chip, value });
    }
    Ok(SparseCode::from_entries(spec, amplitude, entries)?)
}

pub fn write_code(path: &Path, code: &SparseCode) -> Result<()> {
    fs::write(path, code_to_string(code)).map_err(|e| Error::io(path, e))
}

pub fn read_code(path: &Path) -> Result<SparseCode> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    code_from_str(&text, path)
}

/// Where the code of a record came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// JSON form of a [`TransmissionRecord`]. `Q` is written for readers but
/// recomputed from `sigma0` when loading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordFile {
    pub bits: Vec<i8>,
    pub noise: Vec<f64>,
    pub received: Vec<f64>,
    pub sigma0: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(default)]
    pub code: CodeRef,
}

impl RecordFile {
    pub fn new(record: &TransmissionRecord, code: CodeRef) -> Self {
        RecordFile {
            bits: record.bits().to_vec(),
            noise: record.noise().to_vec(),
            received: record.received().to_vec(),
            sigma0: record.sigma0(),
            q: record.q(),
            code,
        }
    }

    pub fn into_record(self) -> Result<TransmissionRecord> {
        let record =
            TransmissionRecord::from_parts(self.bits, self.noise, self.received, self.sigma0)?;
        if (record.q() - self.q).abs() > 1e-12 * record.q() {
            return Err(Error::Core(cdmalab_core::Error::Domain(format!(
                "Q = {} is inconsistent with sigma0 = {} (expected {})",
                self.q,
                self.sigma0,
                record.q()
            ))));
        }
        Ok(record)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn write_record(path: &Path, record: &TransmissionRecord, code: CodeRef) -> Result<()> {
    write_json(path, &RecordFile::new(record, code))
}

pub fn read_record(path: &Path) -> Result<(TransmissionRecord, CodeRef)> {
    let file: RecordFile = read_json(path)?;
    let code = file.code.clone();
    Ok((file.into_record()?, code))
}
