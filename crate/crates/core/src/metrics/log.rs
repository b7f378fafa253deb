//! Run logs and their CSV encoding (schema v1).
//!
//! ```text
//! #padbench,v1,run_id=<id>,condition=<name>,device=<trackpad|pad>,profile=<name|none>,seed=<u64>
//! trial_idx,id_bits,amplitude_px,width_px,mt_ms,error,strokes,keypresses,clicks,previews,cycles,discards,pointer_travel_px,saved_px
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "v1";
pub const COLUMNS: [&str; 14] = [
    "trial_idx",
    "id_bits",
    "amplitude_px",
    "width_px",
    "mt_ms",
    "error",
    "strokes",
    "keypresses",
    "clicks",
    "previews",
    "cycles",
    "discards",
    "pointer_travel_px",
    "saved_px",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Device {
    Trackpad,
    Pad,
}

impl Device {
    pub fn as_str(self) -> &'static str {
        match self {
            Device::Trackpad => "trackpad",
            Device::Pad => "pad",
        }
    }
}

impl std::fmt::Display for Device {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Device {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trackpad" => Ok(Device::Trackpad),
            "pad" => Ok(Device::Pad),
            other => Err(format!(
                "unknown device `{other}` (expected trackpad or pad)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunHeader {
    pub run_id: String,
    pub condition: String,
    pub device: Device,
    /// `None` for trackpad runs.
    pub profile: Option<String>,
    pub seed: u64,
}

/// One ISO 9241-9 selection.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_idx: u32,
    pub id_bits: f64,
    pub amplitude_px: f64,
    pub width_px: f64,
    pub mt_ms: f64,
    pub error: bool,
    pub strokes: u32,
    pub keypresses: u32,
    pub clicks: u32,
    pub previews: u32,
    pub cycles: u32,
    pub discards: u32,
    pub pointer_travel_px: f64,
    pub saved_px: f64,
}

impl TrialRecord {
    /// Bits per second for this trial.
    pub fn throughput(&self) -> f64 {
        self.id_bits / (self.mt_ms / 1000.0)
    }

    /// Previews that ended in an accept (every preview ends in exactly one
    /// accept or discard).
    pub fn accepts(&self) -> u32 {
        self.previews.saturating_sub(self.discards)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub header: RunHeader,
    pub records: Vec<TrialRecord>,
    /// Number of leading trials dropped by [`RunLog::exclude_warmup`]; `None`
    /// while the log still contains its warm-up.
    #[serde(skip)]
    pub warmup_excluded: Option<u32>,
    #[serde(skip)]
    pub warning: Option<String>,
}

impl RunLog {
    pub fn new(header: RunHeader, records: Vec<TrialRecord>) -> Self {
        RunLog {
            header,
            records,
            warmup_excluded: None,
            warning: None,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Copy without trials 1..=k. Excluding everything yields an empty log
    /// with a warning attached.
    pub fn exclude_warmup(&self, k: u32) -> RunLog {
        let records: Vec<TrialRecord> = self
            .records
            .iter()
            .filter(|r| r.trial_idx > k)
            .cloned()
            .collect();
        let warning = (records.is_empty() && !self.records.is_empty()).then(|| {
            format!(
                "warm-up exclusion of {k} trials removed all {} trials of run {}",
                self.records.len(),
                self.header.run_id
            )
        });
        RunLog {
            header: self.header.clone(),
            records,
            warmup_excluded: Some(self.warmup_excluded.unwrap_or(0).max(k)),
            warning: warning.or_else(|| self.warning.clone()),
        }
    }
}

/// Formats with at most six significant digits in plain decimal notation,
/// trailing zeros trimmed. Re-formatting a parsed output reproduces it.
pub fn format_float(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() {
            "0".into()
        } else {
            format!("{x}")
        };
    }
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    let exp = rounded.abs().log10().floor() as i32;
    let decimals = (5 - exp).max(0) as usize;
    let mut s = format!("{rounded:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn validate_token(name: &str, value: &str) -> Result<(), CsvError> {
    if value.is_empty() || value.contains([',', '=', '\n', '\r']) {
        return Err(CsvError::new(
            1,
            CsvErrorKind::BadMetadata(format!(
                "{name} `{value}` is empty or contains , = or a newline"
            )),
        ));
    }
    Ok(())
}

pub fn export_csv(log: &RunLog) -> Result<String, CsvError> {
    let h = &log.header;
    validate_token("run_id", &h.run_id)?;
    validate_token("condition", &h.condition)?;
    let profile = h.profile.as_deref().unwrap_or("none");
    validate_token("profile", profile)?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "#padbench,{SCHEMA_VERSION},run_id={},condition={},device={},profile={},seed={}",
        h.run_id, h.condition, h.device, profile, h.seed
    );
    out.push_str(&COLUMNS.join(","));
    out.push('\n');
    for r in &log.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.trial_idx,
            format_float(r.id_bits),
            format_float(r.amplitude_px),
            format_float(r.width_px),
            format_float(r.mt_ms),
            u8::from(r.error),
            r.strokes,
            r.keypresses,
            r.clicks,
            r.previews,
            r.cycles,
            r.discards,
            format_float(r.pointer_travel_px),
            format_float(r.saved_px),
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct CsvError {
    pub line: usize,
    pub kind: CsvErrorKind,
}

impl CsvError {
    fn new(line: usize, kind: CsvErrorKind) -> Self {
        CsvError { line, kind }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CsvErrorKind {
    #[error("empty document")]
    Empty,
    #[error("not a padbench log (header must start with `#padbench`)")]
    NotPadbench,
    #[error("unknown schema version `{0}`")]
    UnknownVersion(String),
    #[error("bad metadata: {0}")]
    BadMetadata(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unexpected column `{0}`")]
    UnexpectedColumn(String),
    #[error("columns out of order, expected `{}`", COLUMNS.join(","))]
    ColumnOrder,
    #[error("expected {expected} fields, found {found}")]
    FieldCount { expected: usize, found: usize },
    #[error("column `{column}`: `{value}` is not a valid {kind}")]
    BadValue {
        column: &'static str,
        value: String,
        kind: &'static str,
    },
    #[error("trial_idx {idx} does not increase (previous {prev})")]
    TrialOrder { idx: u32, prev: u32 },
}

fn parse_header(line: &str) -> Result<RunHeader, CsvErrorKind> {
    let mut parts = line.split(',');
    if parts.next() != Some("#padbench") {
        return Err(CsvErrorKind::NotPadbench);
    }
    let version = parts.next().unwrap_or_default();
    if version != SCHEMA_VERSION {
        return Err(CsvErrorKind::UnknownVersion(version.to_string()));
    }
    const KEYS: [&str; 5] = ["run_id", "condition", "device", "profile", "seed"];
    let mut values = [""; 5];
    let fields: Vec<&str> = parts.collect();
    if fields.len() != KEYS.len() {
        return Err(CsvErrorKind::BadMetadata(format!(
            "expected {} key=value fields, found {}",
            KEYS.len(),
            fields.len()
        )));
    }
    for (slot, (field, key)) in values.iter_mut().zip(fields.iter().zip(KEYS)) {
        *slot = field
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .filter(|v| !v.is_empty())
            .ok_or_else(|| {
                CsvErrorKind::BadMetadata(format!("expected `{key}=<value>`, found `{field}`"))
            })?;
    }
    let device = values[2].parse().map_err(CsvErrorKind::BadMetadata)?;
    let profile = (values[3] != "none").then(|| values[3].to_string());
    let seed = if values[4].bytes().all(|b| b.is_ascii_digit()) {
        values[4].parse().ok()
    } else {
        None
    }
    .ok_or_else(|| CsvErrorKind::BadMetadata(format!("seed `{}` is not a u64", values[4])))?;
    Ok(RunHeader {
        run_id: values[0].to_string(),
        condition: values[1].to_string(),
        device,
        profile,
        seed,
    })
}

fn check_columns(line: &str) -> Result<(), CsvErrorKind> {
    let found: Vec<&str> = line.split(',').collect();
    if found == COLUMNS {
        return Ok(());
    }
    if let Some(missing) = COLUMNS.iter().find(|c| !found.contains(c)) {
        return Err(CsvErrorKind::MissingColumn(missing.to_string()));
    }
    if let Some(extra) = found.iter().find(|c| !COLUMNS.contains(c)) {
        return Err(CsvErrorKind::UnexpectedColumn(extra.to_string()));
    }
    Err(CsvErrorKind::ColumnOrder)
}

fn num<T: FromStr>(
    column: &'static str,
    value: &str,
    kind: &'static str,
) -> Result<T, CsvErrorKind> {
    let bad = || CsvErrorKind::BadValue {
        column,
        value: value.to_string(),
        kind,
    };
    if value.is_empty() || value.contains(char::is_whitespace) {
        return Err(bad());
    }
    value.parse().map_err(|_| bad())
}

fn float(column: &'static str, value: &str) -> Result<f64, CsvErrorKind> {
    let v: f64 = num(column, value, "number")?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CsvErrorKind::BadValue {
            column,
            value: value.to_string(),
            kind: "finite number",
        })
    }
}

fn parse_row(line: &str) -> Result<TrialRecord, CsvErrorKind> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != COLUMNS.len() {
        return Err(CsvErrorKind::FieldCount {
            expected: COLUMNS.len(),
            found: f.len(),
        });
    }
    let error = match f[5] {
        "0" => false,
        "1" => true,
        other => {
            return Err(CsvErrorKind::BadValue {
                column: "error",
                value: other.to_string(),
                kind: "boolean (0/1)",
            })
        }
    };
    Ok(TrialRecord {
        trial_idx: num("trial_idx", f[0], "integer")?,
        id_bits: float("id_bits", f[1])?,
        amplitude_px: float("amplitude_px", f[2])?,
        width_px: float("width_px", f[3])?,
        mt_ms: float("mt_ms", f[4])?,
        error,
        strokes: num("strokes", f[6], "integer")?,
        keypresses: num("keypresses", f[7], "integer")?,
        clicks: num("clicks", f[8], "integer")?,
        previews: num("previews", f[9], "integer")?,
        cycles: num("cycles", f[10], "integer")?,
        discards: num("discards", f[11], "integer")?,
        pointer_travel_px: float("pointer_travel_px", f[12])?,
        saved_px: float("saved_px", f[13])?,
    })
}

pub fn parse_csv(text: &str) -> Result<RunLog, CsvError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Err(CsvError::new(1, CsvErrorKind::Empty));
    }
    let mut lines = body.split('\n');
    let header = parse_header(lines.next().unwrap_or_default()).map_err(|k| CsvError::new(1, k))?;
    let columns = lines
        .next()
        .ok_or_else(|| CsvError::new(2, CsvErrorKind::MissingColumn(COLUMNS[0].into())))?;
    check_columns(columns).map_err(|k| CsvError::new(2, k))?;

    let mut records = Vec::new();
    let mut prev = 0u32;
    for (i, line) in lines.enumerate() {
        let line_no = i + 3;
        let record = parse_row(line).map_err(|k| CsvError::new(line_no, k))?;
        if record.trial_idx <= prev {
            return Err(CsvError::new(
                line_no,
                CsvErrorKind::TrialOrder {
                    idx: record.trial_idx,
                    prev,
                },
            ));
        }
        prev = record.trial_idx;
        records.push(record);
    }
    Ok(RunLog::new(header, records))
}
