//! Parsing and validation of per-channel sensor CSVs.
//!
//! Each channel arrives as a two-column CSV (`timestamp,value`) at its own
//! native sampling rate. Parsing keeps missing value cells as explicit gaps
//! so the alignment stage can interpolate them; validation checks the
//! monotonicity and range invariants and infers the native interval as the
//! modal timestamp gap.

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// One sensor channel kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    Energy,
    Occupancy,
    Temperature,
    Humidity,
    Calendar,
}

impl Channel {
    /// Canonical unit string for the channel.
    pub fn unit(self) -> &'static str {
        match self {
            Channel::Energy => "Wh",
            Channel::Occupancy => "count",
            Channel::Temperature => "degC",
            Channel::Humidity => "relative",
            Channel::Calendar => "binary",
        }
    }

    pub fn all() -> [Channel; 5] {
        [
            Channel::Energy,
            Channel::Occupancy,
            Channel::Temperature,
            Channel::Humidity,
            Channel::Calendar,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Energy => "energy",
            Channel::Occupancy => "occupancy",
            Channel::Temperature => "temperature",
            Channel::Humidity => "humidity",
            Channel::Calendar => "calendar",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A point on a series: UTC timestamp in unix seconds, value possibly missing.
pub type Point = (i64, Option<f64>);

/// One sensor channel as parsed from disk, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSeries {
    pub channel: Channel,
    pub unit: String,
    pub points: Vec<Point>,
}

impl RawSeries {
    pub fn new(channel: Channel, points: Vec<Point>) -> Self {
        RawSeries {
            channel,
            unit: channel.unit().to_string(),
            points,
        }
    }
}

/// A series whose invariants have been checked. The native sampling interval
/// is the modal gap between consecutive timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedSeries {
    pub channel: Channel,
    pub unit: String,
    pub interval_native: i64,
    pub points: Vec<Point>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("malformed timestamp at line {0}")]
    MalformedTimestamp(usize),
    #[error("non-numeric value at line {0}")]
    NonNumericValue(usize),
    #[error("empty file")]
    EmptyFile,
    #[error("missing `timestamp,value` header")]
    MissingHeader,
}

#[derive(Debug, Error, PartialEq)]
pub enum ValidateError {
    #[error("timestamps not strictly increasing at index {0}")]
    NonMonotonicTimestamps(usize),
    #[error("negative value at index {0} for channel {1}")]
    NegativeValue(usize, Channel),
    #[error("calendar value not in {{0,1}} at index {0}")]
    CalendarNotBinary(usize),
    #[error("series has fewer than two points; cannot infer interval")]
    TooShort,
}

fn parse_timestamp(text: &str, fixed_offset_secs: i64) -> Option<i64> {
    let text = text.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Some(dt.with_timezone(&Utc).timestamp());
    }
    // Naive local timestamps are read with a configurable fixed offset.
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(text, fmt) {
            return Some(naive.and_utc().timestamp() - fixed_offset_secs);
        }
    }
    None
}

/// Parse a channel CSV, treating naive timestamps as local time at the given
/// fixed UTC offset (seconds east).
pub fn parse_series_with_offset(
    text: &str,
    channel: Channel,
    fixed_offset_secs: i64,
) -> Result<RawSeries, ParseError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l,
            None => return Err(ParseError::EmptyFile),
        }
    };
    if header.trim() != "timestamp,value" {
        return Err(ParseError::MissingHeader);
    }

    let mut points = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (ts_text, val_text) = line
            .split_once(',')
            .ok_or(ParseError::NonNumericValue(line_no))?;
        let ts = parse_timestamp(ts_text, fixed_offset_secs)
            .ok_or(ParseError::MalformedTimestamp(line_no))?;
        let val_text = val_text.trim();
        let value = if val_text.is_empty() {
            None
        } else {
            Some(
                val_text
                    .parse::<f64>()
                    .map_err(|_| ParseError::NonNumericValue(line_no))?,
            )
        };
        points.push((ts, value));
    }
    if points.is_empty() {
        return Err(ParseError::EmptyFile);
    }
    Ok(RawSeries::new(channel, points))
}

/// Parse a channel CSV with timestamps interpreted as UTC.
pub fn parse_series(text: &str, channel: Channel) -> Result<RawSeries, ParseError> {
    parse_series_with_offset(text, channel, 0)
}

/// Serialize a series back to the channel CSV schema.
pub fn serialize_series(s: &RawSeries) -> String {
    let mut out = String::from("timestamp,value\n");
    for &(ts, v) in &s.points {
        let dt = DateTime::<Utc>::from_timestamp(ts, 0).expect("valid timestamp");
        out.push_str(&dt.format("%Y-%m-%dT%H:%M:%SZ").to_string());
        out.push(',');
        if let Some(v) = v {
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

/// Check monotonicity and per-channel range invariants; infer the native
/// interval as the modal gap between consecutive timestamps.
pub fn validate_series(s: &RawSeries) -> Result<ValidatedSeries, ValidateError> {
    for (i, w) in s.points.windows(2).enumerate() {
        if w[1].0 <= w[0].0 {
            return Err(ValidateError::NonMonotonicTimestamps(i + 1));
        }
    }
    for (i, &(_, v)) in s.points.iter().enumerate() {
        let Some(v) = v else { continue };
        match s.channel {
            Channel::Energy | Channel::Occupancy => {
                if v < 0.0 {
                    return Err(ValidateError::NegativeValue(i, s.channel));
                }
            }
            Channel::Calendar => {
                if v != 0.0 && v != 1.0 {
                    return Err(ValidateError::CalendarNotBinary(i));
                }
            }
            _ => {}
        }
    }
    let interval = modal_gap(&s.points).ok_or(ValidateError::TooShort)?;
    Ok(ValidatedSeries {
        channel: s.channel,
        unit: s.unit.clone(),
        interval_native: interval,
        points: s.points.clone(),
    })
}

fn modal_gap(points: &[Point]) -> Option<i64> {
    if points.len() < 2 {
        return None;
    }
    let mut counts: HashMap<i64, usize> = HashMap::new();
    for w in points.windows(2) {
        *counts.entry(w[1].0 - w[0].0).or_insert(0) += 1;
    }
    // Tie-break on the smaller gap for determinism.
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(gap, _)| gap)
}
