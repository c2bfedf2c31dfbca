//! Measurement data model for clock-offset series.
//!
//! A [`MeasurementSeries`] holds CSAC-minus-GPST offsets sampled on a
//! relative time axis together with the receiver's visible-satellite count
//! and TDOP at each epoch. Series are validated on construction and are
//! immutable afterwards.
//!
//! The CSV interchange format is fixed:
//!
//! ```text
//! t_rel_s,offset_ns,n_vis,tdop
//! 0,4000.000,7,1.1
//! 2,4000.100,7,
//! ```
//!
//! An empty `tdop` field marks an epoch without a timing solution.

use std::fmt::Write as _;
use std::io::Read;

use chrono::{DateTime, Utc};
use thiserror::Error;

/// Exact header line of the measurement CSV format.
pub const CSV_HEADER: &str = "t_rel_s,offset_ns,n_vis,tdop";

/// Default sampling period of the measurement protocol, in seconds.
pub const DEFAULT_CADENCE_S: f64 = 2.0;

/// Tolerance used when checking that epochs sit on the declared cadence.
pub const CADENCE_TOLERANCE_S: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum TimeseriesError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: t_rel {t_rel_s} does not increase past previous epoch {prev_s}")]
    Ordering { line: usize, t_rel_s: f64, prev_s: f64 },
    #[error("line {line}: step {step_s} s does not match declared cadence {cadence_s} s")]
    Cadence { line: usize, step_s: f64, cadence_s: f64 },
    #[error("sample {index}: {message}")]
    InvalidSample { index: usize, message: String },
    #[error("series is empty")]
    Empty,
    #[error("split index {n_fit} out of range for series of length {len}")]
    Bounds { n_fit: usize, len: usize },
    #[error("invalid cadence {0} s")]
    InvalidCadence(f64),
    #[error("i/o error: {0}")]
    Io(String),
}

/// A point on the series time axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epoch {
    /// Seconds since the start of the series.
    pub t_rel_s: f64,
    /// Optional calendar timestamp; not carried by the CSV format.
    pub t_abs: Option<DateTime<Utc>>,
}

impl Epoch {
    pub fn relative(t_rel_s: f64) -> Self {
        Self { t_rel_s, t_abs: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub epoch: Epoch,
    /// CSAC minus GPST, nanoseconds.
    pub offset_ns: f64,
    /// Number of satellites used in the receiver's solution.
    pub n_vis: u32,
    /// Time dilution of precision; `None` when no solution was available.
    pub tdop: Option<f64>,
}

impl Sample {
    pub fn new(t_rel_s: f64, offset_ns: f64, n_vis: u32, tdop: Option<f64>) -> Self {
        Self { epoch: Epoch::relative(t_rel_s), offset_ns, n_vis, tdop }
    }

    pub fn t_rel_s(&self) -> f64 {
        self.epoch.t_rel_s
    }

    fn check(&self) -> Result<(), String> {
        if !self.epoch.t_rel_s.is_finite() || self.epoch.t_rel_s < 0.0 {
            return Err(format!("t_rel must be finite and non-negative, got {}", self.epoch.t_rel_s));
        }
        if !self.offset_ns.is_finite() {
            return Err(format!("offset must be finite, got {}", self.offset_ns));
        }
        if let Some(tdop) = self.tdop {
            if !(tdop.is_finite() && tdop > 0.0) {
                return Err(format!("tdop must be positive and finite, got {tdop}"));
            }
            if self.n_vis < 4 {
                return Err(format!("tdop present with only {} visible satellites", self.n_vis));
            }
        }
        Ok(())
    }
}

/// Validated, ordered sequence of clock-offset samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSeries {
    samples: Vec<Sample>,
    cadence_s: Option<f64>,
    label: String,
}

impl MeasurementSeries {
    /// Builds a series, checking sample invariants, strict ordering and (when
    /// declared) uniform cadence.
    pub fn new(
        samples: Vec<Sample>,
        cadence_s: Option<f64>,
        label: impl Into<String>,
    ) -> Result<Self, TimeseriesError> {
        if samples.is_empty() {
            return Err(TimeseriesError::Empty);
        }
        if let Some(c) = cadence_s {
            if !(c.is_finite() && c > 0.0) {
                return Err(TimeseriesError::InvalidCadence(c));
            }
        }
        for (index, s) in samples.iter().enumerate() {
            s.check().map_err(|message| TimeseriesError::InvalidSample { index, message })?;
        }
        // Data rows start on line 2 of the CSV form; report lines that way.
        for (i, pair) in samples.windows(2).enumerate() {
            let (prev, cur) = (pair[0].t_rel_s(), pair[1].t_rel_s());
            check_step(prev, cur, cadence_s, i + 3)?;
        }
        Ok(Self { samples, cadence_s, label: label.into() })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false for a constructed series; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn cadence_s(&self) -> Option<f64> {
        self.cadence_s
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        &self.samples[self.samples.len() - 1]
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t_rel_s())
    }

    pub fn offsets(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.offset_ns)
    }

    /// Splits into a fit window `[0, n_fit)` and a coast window `[n_fit, len)`.
    pub fn split_at(&self, n_fit: usize) -> Result<(MeasurementSeries, MeasurementSeries), TimeseriesError> {
        if n_fit == 0 || n_fit >= self.samples.len() {
            return Err(TimeseriesError::Bounds { n_fit, len: self.samples.len() });
        }
        let (fit, coast) = self.samples.split_at(n_fit);
        Ok((
            Self { samples: fit.to_vec(), cadence_s: self.cadence_s, label: self.label.clone() },
            Self { samples: coast.to_vec(), cadence_s: self.cadence_s, label: self.label.clone() },
        ))
    }
}

fn check_step(prev: f64, cur: f64, cadence_s: Option<f64>, line: usize) -> Result<(), TimeseriesError> {
    if cur <= prev {
        return Err(TimeseriesError::Ordering { line, t_rel_s: cur, prev_s: prev });
    }
    if let Some(c) = cadence_s {
        let step = cur - prev;
        if (step - c).abs() > CADENCE_TOLERANCE_S {
            return Err(TimeseriesError::Cadence { line, step_s: step, cadence_s: c });
        }
    }
    Ok(())
}

/// Parses the measurement CSV format. Line numbers in errors are 1-based and
/// count the header as line 1.
pub fn parse_series<R: Read>(input: R, cadence_s: Option<f64>) -> Result<MeasurementSeries, TimeseriesError> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::None).from_reader(input);

    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_error(e, 1))?,
        None => return Err(TimeseriesError::Empty),
    };
    let header_line: Vec<&str> = header.iter().collect();
    if header_line.join(",") != CSV_HEADER {
        return Err(TimeseriesError::Malformed {
            line: 1,
            message: format!("expected header `{CSV_HEADER}`, found `{}`", header_line.join(",")),
        });
    }

    let mut samples: Vec<Sample> = Vec::new();
    for (row, record) in records.enumerate() {
        let fallback_line = row + 2;
        let record = record.map_err(|e| csv_error(e, fallback_line))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(fallback_line);
        if record.len() != 4 {
            return Err(TimeseriesError::Malformed {
                line,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let malformed = |message: String| TimeseriesError::Malformed { line, message };
        let t_rel_s: f64 = parse_field(&record[0], "t_rel_s").map_err(malformed)?;
        let offset_ns: f64 = parse_field(&record[1], "offset_ns").map_err(malformed)?;
        let n_vis: u32 = record[2]
            .parse()
            .map_err(|_| malformed(format!("n_vis: cannot parse `{}` as a non-negative integer", &record[2])))?;
        let tdop = match &record[3] {
            "" => None,
            s => Some(parse_field(s, "tdop").map_err(malformed)?),
        };
        let sample = Sample::new(t_rel_s, offset_ns, n_vis, tdop);
        sample.check().map_err(malformed)?;
        if let Some(prev) = samples.last() {
            check_step(prev.t_rel_s(), t_rel_s, cadence_s, line)?;
        }
        samples.push(sample);
    }
    MeasurementSeries::new(samples, cadence_s, "")
}

fn parse_field(raw: &str, name: &str) -> Result<f64, String> {
    let v: f64 = raw.parse().map_err(|_| format!("{name}: cannot parse `{raw}` as a number"))?;
    if !v.is_finite() {
        return Err(format!("{name}: non-finite value `{raw}`"));
    }
    Ok(v)
}

fn csv_error(e: csv::Error, fallback_line: usize) -> TimeseriesError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(fallback_line);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => TimeseriesError::Io(io.to_string()),
        kind => TimeseriesError::Malformed { line, message: format!("{kind:?}") },
    }
}

/// Renders a float with the shortest exact representation, padded to at
/// least `min_decimals` fractional digits.
pub(crate) fn format_min_decimals(v: f64, min_decimals: usize) -> String {
    let mut s = format!("{v}");
    let decimals = s.find('.').map(|p| s.len() - p - 1);
    match decimals {
        None => {
            s.push('.');
            s.extend(std::iter::repeat_n('0', min_decimals));
        }
        Some(d) if d < min_decimals => s.extend(std::iter::repeat_n('0', min_decimals - d)),
        _ => {}
    }
    s
}

/// Emits the series in the CSV format read by [`parse_series`].
pub fn emit_series(series: &MeasurementSeries) -> String {
    let mut out = String::with_capacity(32 * (series.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in series.samples() {
        let _ = write!(out, "{},{},{},", s.t_rel_s(), format_min_decimals(s.offset_ns, 3), s.n_vis);
        if let Some(tdop) = s.tdop {
            let _ = write!(out, "{tdop}");
        }
        out.push('\n');
    }
    out
}
