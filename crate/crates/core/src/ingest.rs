//! World Bank indicator CSV parsing and single-country extraction.
//!
//! The bulk download (`API_<indicator>_DS2_en_csv_v2_*.csv`) is a wide file:
//! a few metadata lines, a header row starting with `Country Name`, then one
//! row per country or aggregate with one cell per year. Every line carries a
//! trailing comma, which shows up as an empty last header column.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dataset::{DataError, Dataset};

pub const DEFAULT_FIRST_YEAR: i32 = 1960;
pub const DEFAULT_LAST_YEAR: i32 = 2018;

const IDENTITY_COLUMNS: [&str; 4] = [
    "Country Name",
    "Country Code",
    "Indicator Name",
    "Indicator Code",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("input is not valid UTF-8")]
    Encoding,
    #[error("missing header: no line starts with \"Country Name\"")]
    MissingHeader,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("ragged row at line {line}: expected {expected} cells, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("csv error: {0}")]
    Csv(String),
    #[error("unknown country code `{0}`")]
    UnknownCountry(String),
    #[error("country code `{0}` appears on more than one row")]
    DuplicateCountry(String),
    #[error("year range {lo}..={hi} is not within the file's years {first}..={last}")]
    YearRange {
        lo: i32,
        hi: i32,
        first: i32,
        last: i32,
    },
    #[error("no numeric values for `{code}` in {lo}..={hi}")]
    EmptySeries { code: String, lo: i32, hi: i32 },
    #[error("series file: {0}")]
    SeriesFormat(String),
}

/// One country (or aggregate) row of the wide file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorRow {
    pub country_name: String,
    pub country_code: String,
    pub indicator_name: String,
    pub indicator_code: String,
    /// Raw cell text, one per entry of [`RawIndicatorFile::years`].
    pub cells: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawIndicatorFile {
    /// Lines before the header, verbatim (without line terminators).
    pub metadata_lines: Vec<String>,
    pub header: Vec<String>,
    pub years: Vec<i32>,
    pub rows: Vec<IndicatorRow>,
}

impl RawIndicatorFile {
    pub fn find(&self, country_code: &str) -> Option<&IndicatorRow> {
        self.rows.iter().find(|r| r.country_code == country_code)
    }
}

/// First CSV cell of a line, unquoted.
fn first_cell(line: &str) -> String {
    let line = line.trim_start_matches('\u{feff}');
    if let Some(rest) = line.strip_prefix('"') {
        let mut out = String::new();
        let mut chars = rest.chars().peekable();
        while let Some(c) = chars.next() {
            if c == '"' {
                if chars.peek() == Some(&'"') {
                    out.push('"');
                    chars.next();
                } else {
                    break;
                }
            } else {
                out.push(c);
            }
        }
        out
    } else {
        line.split(',').next().unwrap_or("").trim().to_string()
    }
}

fn parse_year(cell: &str) -> Option<i32> {
    let cell = cell.trim();
    if cell.len() == 4 && cell.bytes().all(|b| b.is_ascii_digit()) {
        cell.parse().ok()
    } else {
        None
    }
}

/// Parse a World Bank wide-format indicator CSV.
///
/// Accepts LF or CRLF line endings and an optional UTF-8 byte-order mark.
/// Lines before the `Country Name` header are kept verbatim in
/// `metadata_lines`. The year columns are whatever the header lists.
pub fn parse_worldbank_csv(bytes: &[u8]) -> Result<RawIndicatorFile, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|_| IngestError::Encoding)?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);

    let mut offset = 0usize;
    let mut header_line_no = None;
    let mut metadata_lines = Vec::new();
    for (i, raw) in text.split_inclusive('\n').enumerate() {
        let line = raw.trim_end_matches(['\n', '\r']);
        if first_cell(line) == IDENTITY_COLUMNS[0] {
            header_line_no = Some(i as u64 + 1);
            break;
        }
        metadata_lines.push(line.to_string());
        offset += raw.len();
    }
    let header_line_no = header_line_no.ok_or(IngestError::MissingHeader)?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(&text.as_bytes()[offset..]);
    let mut records = reader.records();

    let header_record = records
        .next()
        .ok_or(IngestError::MissingHeader)?
        .map_err(|e| IngestError::Csv(e.to_string()))?;
    let header: Vec<String> = header_record.iter().map(str::to_string).collect();
    let years = validate_header(&header)?;

    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| IngestError::Csv(e.to_string()))?;
        // csv positions are 1-based within the slice that starts at the header
        let line = header_line_no - 1 + record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(IngestError::RaggedRow {
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        let cell = |i: usize| record.get(i).unwrap_or("").to_string();
        rows.push(IndicatorRow {
            country_name: cell(0),
            country_code: cell(1),
            indicator_name: cell(2),
            indicator_code: cell(3),
            cells: (4..4 + years.len()).map(cell).collect(),
        });
    }

    Ok(RawIndicatorFile {
        metadata_lines,
        header,
        years,
        rows,
    })
}

fn validate_header(header: &[String]) -> Result<Vec<i32>, IngestError> {
    for (i, expected) in IDENTITY_COLUMNS.iter().enumerate() {
        match header.get(i) {
            Some(h) if h.trim() == *expected => {}
            Some(h) => {
                return Err(IngestError::MalformedHeader(format!(
                    "column {} is `{h}`, expected `{expected}`",
                    i + 1
                )))
            }
            None => {
                return Err(IngestError::MalformedHeader(format!(
                    "missing `{expected}` column"
                )))
            }
        }
    }
    let mut years: Vec<i32> = Vec::new();
    let mut trailing = false;
    for h in &header[4..] {
        if trailing {
            if !h.trim().is_empty() {
                return Err(IngestError::MalformedHeader(format!(
                    "column `{h}` after the trailing empty column"
                )));
            }
            continue;
        }
        match parse_year(h) {
            Some(y) => {
                if years.last().is_some_and(|&prev| y <= prev) {
                    return Err(IngestError::MalformedHeader(format!(
                        "year {y} does not increase"
                    )));
                }
                years.push(y);
            }
            None if h.trim().is_empty() => trailing = true,
            None => {
                return Err(IngestError::MalformedHeader(format!(
                    "`{h}` is not a 4-digit year"
                )))
            }
        }
    }
    Ok(years)
}

/// One country's yearly values in metric tons per capita.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionSeries {
    pub country_name: String,
    pub country_code: String,
    pub indicator_code: String,
    /// Strictly ascending by year; values finite and nonnegative.
    pub points: Vec<(i32, f64)>,
    /// Years in the requested window whose cells were empty, non-numeric,
    /// non-finite or negative.
    pub dropped_years: Vec<i32>,
}

impl EmissionSeries {
    pub fn first_year(&self) -> Option<i32> {
        self.points.first().map(|p| p.0)
    }

    pub fn last_year(&self) -> Option<i32> {
        self.points.last().map(|p| p.0)
    }

    pub fn to_dataset(&self) -> Result<Dataset, DataError> {
        Dataset::from_pairs(self.points.iter().map(|&(y, v)| (f64::from(y), v)))
    }
}

fn parse_value(cell: &str) -> Option<f64> {
    let v: f64 = cell.trim().parse().ok()?;
    (v.is_finite() && v >= 0.0).then_some(v)
}

/// Pull one country's values for `year_lo..=year_hi` out of the wide file.
pub fn extract_series(
    file: &RawIndicatorFile,
    country_code: &str,
    year_lo: i32,
    year_hi: i32,
) -> Result<EmissionSeries, IngestError> {
    let (first, last) = match (file.years.first(), file.years.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => {
            return Err(IngestError::MalformedHeader(
                "header has no year columns".into(),
            ))
        }
    };
    if year_lo > year_hi || year_lo < first || year_hi > last {
        return Err(IngestError::YearRange {
            lo: year_lo,
            hi: year_hi,
            first,
            last,
        });
    }

    let mut matches = file.rows.iter().filter(|r| r.country_code == country_code);
    let row = matches
        .next()
        .ok_or_else(|| IngestError::UnknownCountry(country_code.to_string()))?;
    if matches.next().is_some() {
        return Err(IngestError::DuplicateCountry(country_code.to_string()));
    }

    let mut points = Vec::new();
    let mut dropped_years = Vec::new();
    for year in year_lo..=year_hi {
        // header years need not be contiguous; a missing column counts as dropped
        let value = file
            .years
            .binary_search(&year)
            .ok()
            .and_then(|col| parse_value(&row.cells[col]));
        match value {
            Some(v) => points.push((year, v)),
            None => dropped_years.push(year),
        }
    }
    if points.is_empty() {
        return Err(IngestError::EmptySeries {
            code: country_code.to_string(),
            lo: year_lo,
            hi: year_hi,
        });
    }

    Ok(EmissionSeries {
        country_name: row.country_name.clone(),
        country_code: row.country_code.clone(),
        indicator_code: row.indicator_code.clone(),
        points,
        dropped_years,
    })
}

/// Serialize the points as `year,value` CSV with LF endings.
///
/// Values use the shortest representation that parses back to the same
/// `f64`, so [`read_series_csv`] restores them exactly.
pub fn write_series_csv(series: &EmissionSeries) -> String {
    let mut out = String::from("year,value\n");
    for (year, value) in &series.points {
        let _ = writeln!(out, "{year},{value}");
    }
    out
}

/// Read a `year,value` series file.
///
/// The file carries no identity columns, so `country_code` is supplied by the
/// caller. Years between the first and last point that have no row are
/// reported as dropped.
pub fn read_series_csv(text: &str, country_code: &str) -> Result<EmissionSeries, IngestError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next().map(str::trim) {
        Some("year,value") => {}
        Some(other) => {
            return Err(IngestError::SeriesFormat(format!(
                "expected header `year,value`, found `{other}`"
            )))
        }
        None => return Err(IngestError::SeriesFormat("empty file".into())),
    }

    let mut points: Vec<(i32, f64)> = Vec::new();
    for line in lines {
        let (y, v) = line
            .split_once(',')
            .ok_or_else(|| IngestError::SeriesFormat(format!("bad row `{line}`")))?;
        let year: i32 = y
            .trim()
            .parse()
            .map_err(|_| IngestError::SeriesFormat(format!("bad year `{y}`")))?;
        let value = parse_value(v)
            .ok_or_else(|| IngestError::SeriesFormat(format!("bad value `{v}` for {year}")))?;
        if points.last().is_some_and(|&(prev, _)| year <= prev) {
            return Err(IngestError::SeriesFormat(format!(
                "year {year} is not ascending"
            )));
        }
        points.push((year, value));
    }
    let (first, last) = match (points.first(), points.last()) {
        (Some(f), Some(l)) => (f.0, l.0),
        _ => return Err(IngestError::SeriesFormat("no data rows".into())),
    };
    let dropped_years = (first..=last)
        .filter(|y| points.binary_search_by_key(y, |p| p.0).is_err())
        .collect();

    Ok(EmissionSeries {
        country_name: String::new(),
        country_code: country_code.to_string(),
        indicator_code: String::new(),
        points,
        dropped_years,
    })
}

/// True when `bytes` look like a World Bank wide file rather than a series file.
pub fn looks_like_worldbank(bytes: &[u8]) -> bool {
    std::str::from_utf8(bytes).is_ok_and(|t| {
        t.lines()
            .take(50)
            .any(|l| first_cell(l) == IDENTITY_COLUMNS[0])
    })
}
