//! Loading and validation of stage records, monthly climate indices and
//! station metadata.
//!
//! Both inputs use long-format CSV, one observation per row:
//!
//! * stage records: header `year,stage_m`
//! * monthly index: header `year,month,value`
//!
//! An aligned dataset is stored as one JSON document with the fields
//! `meta`, `years`, `stage_m` and `covariate`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default minimum number of annual maxima for a usable record.
pub const MIN_SERIES_LEN: usize = 10;

pub const STAGE_HEADER: [&str; 2] = ["year", "stage_m"];
pub const INDEX_HEADER: [&str; 3] = ["year", "month", "value"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationMeta {
    pub station_id: String,
    pub name: String,
    pub river_basin: String,
    pub latitude: f64,
    pub longitude: f64,
    /// km²
    pub basin_area: f64,
    pub record_start_year: i32,
    pub record_end_year: i32,
}

impl StationMeta {
    pub fn validate(&self) -> Result<()> {
        if self.record_start_year > self.record_end_year {
            return Err(Error::Validation(format!(
                "station {}: record start {} after record end {}",
                self.station_id, self.record_start_year, self.record_end_year
            )));
        }
        if !(self.basin_area > 0.0) || !self.basin_area.is_finite() {
            return Err(Error::Validation(format!(
                "station {}: basin area must be positive, got {}",
                self.station_id, self.basin_area
            )));
        }
        if !(-90.0..=90.0).contains(&self.latitude) {
            return Err(Error::Validation(format!(
                "station {}: latitude {} outside [-90, 90]",
                self.station_id, self.latitude
            )));
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return Err(Error::Validation(format!(
                "station {}: longitude {} outside [-180, 180]",
                self.station_id, self.longitude
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let meta: StationMeta = serde_json::from_str(&text)?;
        meta.validate()?;
        Ok(meta)
    }
}

/// One station's annual maximum stage, in meters, for consecutive years.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnualMaximaSeries {
    years: Vec<i32>,
    values: Vec<f64>,
    meta: Option<StationMeta>,
}

impl AnnualMaximaSeries {
    pub fn new(years: Vec<i32>, values: Vec<f64>, meta: Option<StationMeta>) -> Result<Self> {
        Self::with_min_length(years, values, meta, MIN_SERIES_LEN)
    }

    pub fn with_min_length(
        years: Vec<i32>,
        values: Vec<f64>,
        meta: Option<StationMeta>,
        min_length: usize,
    ) -> Result<Self> {
        if years.len() != values.len() {
            return Err(Error::Validation(format!(
                "{} years but {} stage values",
                years.len(),
                values.len()
            )));
        }
        if years.len() < min_length.max(1) {
            return Err(Error::InsufficientData {
                needed: min_length.max(1),
                got: years.len(),
            });
        }
        for w in years.windows(2) {
            if w[1] != w[0] + 1 {
                return Err(if w[1] > w[0] + 1 {
                    Error::Validation(format!("missing year {} in stage record", w[0] + 1))
                } else {
                    Error::Validation(format!(
                        "years must be strictly increasing: {} follows {}",
                        w[1], w[0]
                    ))
                });
            }
        }
        for (y, v) in years.iter().zip(&values) {
            if !v.is_finite() || *v <= 0.0 {
                return Err(Error::Validation(format!(
                    "stage for year {y} must be finite and positive, got {v}"
                )));
            }
        }
        if let Some(m) = &meta {
            m.validate()?;
            let (first, last) = (years[0], years[years.len() - 1]);
            if first < m.record_start_year || last > m.record_end_year {
                return Err(Error::Validation(format!(
                    "stage years {first}-{last} fall outside station {} record {}-{}",
                    m.station_id, m.record_start_year, m.record_end_year
                )));
            }
        }
        Ok(Self { years, values, meta })
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meta(&self) -> Option<&StationMeta> {
        self.meta.as_ref()
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn with_meta(mut self, meta: Option<StationMeta>) -> Result<Self> {
        if meta.is_some() {
            let min = self.len();
            return Self::with_min_length(self.years, self.values, meta, min);
        }
        self.meta = None;
        Ok(self)
    }

    /// Writes the canonical `year,stage_m` CSV. Values use the shortest
    /// representation that parses back to the same `f64`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Validation(format!("csv write: {e}"));
        w.write_record(STAGE_HEADER).map_err(io)?;
        for (y, v) in self.years.iter().zip(&self.values) {
            w.write_record([y.to_string(), v.to_string()]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthlyValue {
    pub year: i32,
    pub month: u8,
    pub value: f64,
}

/// Monthly climate index values, sorted by (year, month), no duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyIndexSeries {
    entries: Vec<MonthlyValue>,
}

impl MonthlyIndexSeries {
    pub fn new(mut entries: Vec<MonthlyValue>) -> Result<Self> {
        for e in &entries {
            if !(1..=12).contains(&e.month) {
                return Err(Error::Validation(format!(
                    "month {} outside 1-12 (year {})",
                    e.month, e.year
                )));
            }
            if !e.value.is_finite() {
                return Err(Error::Validation(format!(
                    "non-finite index value at {}-{:02}",
                    e.year, e.month
                )));
            }
        }
        entries.sort_by_key(|e| (e.year, e.month));
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].year, w[0].month) == (w[1].year, w[1].month))
        {
            return Err(Error::Validation(format!(
                "duplicate index entry for {}-{:02}",
                w[0].year, w[0].month
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[MonthlyValue] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Per-year covariate values.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateSeries {
    years: Vec<i32>,
    values: Vec<f64>,
}

impl CovariateSeries {
    pub fn new(years: Vec<i32>, values: Vec<f64>) -> Result<Self> {
        if years.len() != values.len() {
            return Err(Error::Validation(format!(
                "{} covariate years but {} values",
                years.len(),
                values.len()
            )));
        }
        if years.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("covariate years must be strictly increasing".into()));
        }
        if let Some((y, v)) = years.iter().zip(&values).find(|(_, v)| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite covariate {v} for year {y}")));
        }
        Ok(Self { years, values })
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    pub fn get(&self, year: i32) -> Option<f64> {
        self.years.binary_search(&year).ok().map(|i| self.values[i])
    }
}

/// A year dropped from the seasonal covariate because of missing months.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedYear {
    pub year: i32,
    pub missing_months: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalCovariate {
    pub covariate: CovariateSeries,
    pub skipped: Vec<SkippedYear>,
}

/// Mean of each year's index over the inclusive month window.
///
/// Years missing any month of the window are dropped and reported in
/// `skipped`; nothing is imputed. Windows that wrap into the next year are
/// not supported.
pub fn seasonal_mean_covariate(
    monthly: &MonthlyIndexSeries,
    start_month: u8,
    end_month: u8,
) -> Result<SeasonalCovariate> {
    if !(1..=12).contains(&start_month) || !(1..=12).contains(&end_month) {
        return Err(Error::Validation(format!(
            "month window {start_month}:{end_month} outside 1-12"
        )));
    }
    if start_month > end_month {
        return Err(Error::Unsupported(format!(
            "cross-year month window {start_month}:{end_month}"
        )));
    }

    let mut by_year: BTreeMap<i32, [Option<f64>; 12]> = BTreeMap::new();
    for e in monthly.entries() {
        by_year.entry(e.year).or_insert([None; 12])[usize::from(e.month - 1)] = Some(e.value);
    }

    let window = usize::from(start_month - 1)..usize::from(end_month);
    let mut years = Vec::new();
    let mut values = Vec::new();
    let mut skipped = Vec::new();
    for (year, months) in by_year {
        let missing: Vec<u8> = window
            .clone()
            .filter(|&m| months[m].is_none())
            .map(|m| m as u8 + 1)
            .collect();
        if !missing.is_empty() {
            warn!("dropping covariate year {year}: missing months {missing:?}");
            skipped.push(SkippedYear {
                year,
                missing_months: missing,
            });
            continue;
        }
        let sum: f64 = window.clone().map(|m| months[m].unwrap_or_default()).sum();
        years.push(year);
        values.push(sum / window.len() as f64);
    }
    if years.is_empty() {
        return Err(Error::Validation(format!(
            "no year has a complete {start_month}:{end_month} month window"
        )));
    }
    Ok(SeasonalCovariate {
        covariate: CovariateSeries::new(years, values)?,
        skipped,
    })
}

/// Stage series paired with the covariate value of each of its years.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDataset {
    series: AnnualMaximaSeries,
    covariate: CovariateSeries,
    covariate_months: Option<(u8, u8)>,
}

impl AlignedDataset {
    pub fn series(&self) -> &AnnualMaximaSeries {
        &self.series
    }

    pub fn covariate(&self) -> &CovariateSeries {
        &self.covariate
    }

    pub fn years(&self) -> &[i32] {
        self.series.years()
    }

    pub fn stage(&self) -> &[f64] {
        self.series.values()
    }

    pub fn covariate_values(&self) -> &[f64] {
        self.covariate.values()
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    /// Month window the covariate was averaged over, when known.
    pub fn covariate_months(&self) -> Option<(u8, u8)> {
        self.covariate_months
    }

    pub fn with_covariate_months(mut self, window: Option<(u8, u8)>) -> Self {
        self.covariate_months = window;
        self
    }

    pub fn check_aligned(&self) -> Result<()> {
        if self.series.years() != self.covariate.years() {
            let year = self
                .series
                .years()
                .iter()
                .zip(self.covariate.years())
                .find(|(a, b)| a != b)
                .map(|(a, _)| *a)
                .unwrap_or_else(|| *self.series.years().last().unwrap_or(&0));
            return Err(Error::Alignment { year });
        }
        Ok(())
    }

    pub fn last_covariate(&self) -> f64 {
        *self.covariate.values().last().expect("aligned dataset is nonempty")
    }

    pub fn mean_covariate(&self) -> f64 {
        let v = self.covariate.values();
        v.iter().sum::<f64>() / v.len() as f64
    }

    pub fn to_json(&self) -> Result<String> {
        let file = DatasetFile {
            meta: self.series.meta().cloned(),
            years: self.years().to_vec(),
            stage_m: self.stage().to_vec(),
            covariate: self.covariate_values().to_vec(),
            covariate_months: self.covariate_months.map(|(a, b)| [a, b]),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_with_min_length(text, MIN_SERIES_LEN)
    }

    pub fn from_json_with_min_length(text: &str, min_length: usize) -> Result<Self> {
        let file: DatasetFile = serde_json::from_str(text)?;
        let series =
            AnnualMaximaSeries::with_min_length(file.years.clone(), file.stage_m, file.meta, min_length)?;
        let covariate = CovariateSeries::new(file.years, file.covariate)?;
        let window = file.covariate_months.map(|[a, b]| (a, b));
        Ok(align(&series, &covariate)?.with_covariate_months(window))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    meta: Option<StationMeta>,
    years: Vec<i32>,
    stage_m: Vec<f64>,
    covariate: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    covariate_months: Option<[u8; 2]>,
}

/// Restricts the covariate to the stage years.
pub fn align(series: &AnnualMaximaSeries, covariate: &CovariateSeries) -> Result<AlignedDataset> {
    let values = series
        .years()
        .iter()
        .map(|&y| covariate.get(y).ok_or(Error::Alignment { year: y }))
        .collect::<Result<Vec<_>>>()?;
    Ok(AlignedDataset {
        series: series.clone(),
        covariate: CovariateSeries::new(series.years().to_vec(), values)?,
        covariate_months: None,
    })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn check_header(headers: &csv::StringRecord, expected: &[&str], source: &str) -> Result<()> {
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Format {
            path: source.to_string(),
            line: 1,
            message: format!("expected header `{}`, got `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn csv_format_error(source: &str, e: &csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Format {
        path: source.to_string(),
        line,
        message: e.to_string(),
    }
}

fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    name: &str,
    source: &str,
) -> Result<T> {
    let line = record.position().map(|p| p.line()).unwrap_or(0);
    let raw = record.get(idx).map(str::trim).ok_or_else(|| Error::Format {
        path: source.to_string(),
        line,
        message: format!("missing field `{name}`"),
    })?;
    raw.parse().map_err(|_| Error::Format {
        path: source.to_string(),
        line,
        message: format!("cannot parse `{raw}` as {name}"),
    })
}

/// Parses the stage CSV from any reader; `source` names it in errors.
pub fn read_annual_maxima<R: Read>(reader: R, source: &str, min_length: usize) -> Result<AnnualMaximaSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_format_error(source, &e))?.clone();
    if headers.is_empty() {
        return Err(Error::InsufficientData {
            needed: min_length,
            got: 0,
        });
    }
    check_header(&headers, &STAGE_HEADER, source)?;

    let mut years = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_format_error(source, &e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let year: i32 = parse_field(&record, 0, "year", source)?;
        let stage: f64 = parse_field(&record, 1, "stage_m", source)?;
        if !stage.is_finite() || stage <= 0.0 {
            return Err(Error::Validation(format!(
                "{source}: line {line}: stage for year {year} must be finite and positive, got {stage}"
            )));
        }
        if let Some(&prev) = years.last() {
            if year != prev + 1 {
                let msg = if year > prev + 1 {
                    format!("{source}: line {line}: missing year {} in stage record", prev + 1)
                } else {
                    format!("{source}: line {line}: year {year} does not follow {prev}")
                };
                return Err(Error::Validation(msg));
            }
        }
        years.push(year);
        values.push(stage);
    }
    AnnualMaximaSeries::with_min_length(years, values, None, min_length)
}

pub fn load_annual_maxima(path: impl AsRef<Path>) -> Result<AnnualMaximaSeries> {
    let path = path.as_ref();
    read_annual_maxima(open(path)?, &path.display().to_string(), MIN_SERIES_LEN)
}

pub fn read_monthly_index<R: Read>(reader: R, source: &str) -> Result<MonthlyIndexSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_format_error(source, &e))?.clone();
    check_header(&headers, &INDEX_HEADER, source)?;

    let mut entries = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_format_error(source, &e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let year: i32 = parse_field(&record, 0, "year", source)?;
        let month: i64 = parse_field(&record, 1, "month", source)?;
        let value: f64 = parse_field(&record, 2, "value", source)?;
        if !(1..=12).contains(&month) {
            return Err(Error::Validation(format!(
                "{source}: line {line}: month {month} outside 1-12"
            )));
        }
        entries.push(MonthlyValue {
            year,
            month: month as u8,
            value,
        });
    }
    MonthlyIndexSeries::new(entries).map_err(|e| match e {
        Error::Validation(m) => Error::Validation(format!("{source}: {m}")),
        other => other,
    })
}

pub fn load_monthly_index(path: impl AsRef<Path>) -> Result<MonthlyIndexSeries> {
    let path = path.as_ref();
    read_monthly_index(open(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stage_csv(rows: &[(i32, f64)]) -> String {
        let mut s = String::from("year,stage_m\n");
        for (y, v) in rows {
            s.push_str(&format!("{y},{v}\n"));
        }
        s
    }

    #[test]
    fn loads_47_year_record() {
        let rows: Vec<(i32, f64)> = (1969..=2015)
            .map(|y| {
                let v = match y {
                    1969 => 4.1,
                    2015 => 7.2,
                    _ => 4.0 + 0.05 * f64::from((y * 7) % 13),
                };
                (y, v)
            })
            .collect();
        let s = read_annual_maxima(stage_csv(&rows).as_bytes(), "mem", MIN_SERIES_LEN).unwrap();
        assert_eq!(s.len(), 47);
        assert_eq!(s.max(), 7.2);
    }

    #[test]
    fn gap_is_rejected() {
        let err = read_annual_maxima(stage_csv(&[(2000, 3.0), (2002, 3.1)]).as_bytes(), "mem", 1)
            .unwrap_err();
        assert!(err.to_string().contains("missing year 2001"), "{err}");
    }

    #[test]
    fn empty_file_is_too_short() {
        let err = read_annual_maxima("".as_bytes(), "mem", MIN_SERIES_LEN).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { got: 0, .. }), "{err}");
        let err = read_annual_maxima("year,stage_m\n".as_bytes(), "mem", MIN_SERIES_LEN).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { got: 0, .. }), "{err}");
    }

    #[test]
    fn bad_rows_report_line_numbers() {
        let err = read_annual_maxima("year,stage_m\n2000,3.0\n2001,abc\n".as_bytes(), "s.csv", 1)
            .unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
        let err = read_annual_maxima("year,stage_m\n2000,3.0\n2001,-1\n".as_bytes(), "s.csv", 1)
            .unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = read_annual_maxima("yr,stage\n2000,3.0\n".as_bytes(), "s.csv", 1).unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }));
    }

    #[test]
    fn meta_bounds_checked() {
        let meta = StationMeta {
            station_id: "445".into(),
            name: "Arughat".into(),
            river_basin: "Budhi Gandaki".into(),
            latitude: 28.04,
            longitude: 84.81,
            basin_area: 3960.0,
            record_start_year: 1969,
            record_end_year: 2015,
        };
        let years: Vec<i32> = (1969..=2015).collect();
        let vals = vec![4.5; years.len()];
        assert!(AnnualMaximaSeries::new(years.clone(), vals.clone(), Some(meta.clone())).is_ok());
        let years2: Vec<i32> = (1970..=2016).collect();
        assert!(AnnualMaximaSeries::new(years2, vals, Some(meta.clone())).is_err());
        let mut bad = meta;
        bad.latitude = 95.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn monthly_index_load_and_errors() {
        let mut s = String::from("year,month,value\n");
        for m in 1..=12 {
            s.push_str(&format!("1990,{m},{}\n", f64::from(m) / 10.0));
        }
        assert_eq!(read_monthly_index(s.as_bytes(), "mem").unwrap().len(), 12);

        let err = read_monthly_index("year,month,value\n1990,13,0.5\n".as_bytes(), "mem").unwrap_err();
        assert!(err.to_string().contains("month 13"));
        let err = read_monthly_index(
            "year,month,value\n1990,6,0.1\n1990,6,0.2\n".as_bytes(),
            "mem",
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    fn monthly(rows: &[(i32, u8, f64)]) -> MonthlyIndexSeries {
        MonthlyIndexSeries::new(
            rows.iter()
                .map(|&(year, month, value)| MonthlyValue { year, month, value })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn seasonal_mean_examples() {
        let constant: Vec<_> = (6..=11).map(|m| (1990, m, 0.4)).collect();
        let c = seasonal_mean_covariate(&monthly(&constant), 6, 11).unwrap();
        assert!((c.covariate.get(1990).unwrap() - 0.4).abs() < 1e-15);

        let ramp: Vec<_> = (6..=11).map(|m| (1990, m, f64::from(m - 6) / 10.0)).collect();
        let c = seasonal_mean_covariate(&monthly(&ramp), 6, 11).unwrap();
        assert!((c.covariate.get(1990).unwrap() - 0.25).abs() < 1e-15);

        let mut gappy: Vec<_> = (6..=11).map(|m| (1991, m, 0.1)).collect();
        gappy.extend((6..=11).filter(|&m| m != 7).map(|m| (1992, m, 0.1)));
        let c = seasonal_mean_covariate(&monthly(&gappy), 6, 11).unwrap();
        assert_eq!(c.covariate.years(), &[1991]);
        assert_eq!(
            c.skipped,
            vec![SkippedYear {
                year: 1992,
                missing_months: vec![7]
            }]
        );
    }

    #[test]
    fn seasonal_mean_errors() {
        let m = monthly(&[(1990, 1, 0.1)]);
        assert!(matches!(seasonal_mean_covariate(&m, 6, 11), Err(Error::Validation(_))));
        assert!(matches!(seasonal_mean_covariate(&m, 11, 2), Err(Error::Unsupported(_))));
    }

    #[test]
    fn align_examples() {
        let years: Vec<i32> = (1973..=2014).collect();
        let series = AnnualMaximaSeries::new(years.clone(), vec![5.0; years.len()], None).unwrap();
        let cy: Vec<i32> = (1950..=2020).collect();
        let cv: Vec<f64> = cy.iter().map(|&y| f64::from(y) / 1000.0).collect();
        let cov = CovariateSeries::new(cy.clone(), cv.clone()).unwrap();
        let d = align(&series, &cov).unwrap();
        assert_eq!(d.covariate().years(), years.as_slice());
        assert_eq!(d.covariate_values()[0], 1.973);

        // identity on identical year sets
        let same = CovariateSeries::new(years.clone(), vec![0.5; years.len()]).unwrap();
        assert_eq!(align(&series, &same).unwrap().covariate(), &same);

        let (hy, hv): (Vec<i32>, Vec<f64>) =
            cy.iter().zip(&cv).filter(|(y, _)| **y != 1980).map(|(y, v)| (*y, *v)).unzip();
        let holey = CovariateSeries::new(hy, hv).unwrap();
        let err = align(&series, &holey).unwrap_err();
        assert!(matches!(err, Error::Alignment { year: 1980 }));
        assert!(err.to_string().contains("1980"));
    }

    #[test]
    fn dataset_json_round_trip() {
        let years: Vec<i32> = (2000..2012).collect();
        let stage: Vec<f64> = years.iter().map(|&y| 3.0 + f64::from(y - 2000) * 0.1 + 1e-13).collect();
        let series = AnnualMaximaSeries::new(years.clone(), stage, None).unwrap();
        let cov = CovariateSeries::new(years, (0..12).map(|i| f64::from(i) / 7.0).collect()).unwrap();
        let d = align(&series, &cov).unwrap().with_covariate_months(Some((6, 11)));
        let back = AlignedDataset::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(back, d);
    }

    proptest! {
        #[test]
        fn seasonal_mean_ignores_row_order(
            vals in proptest::collection::vec(-3.0f64..3.0, 24),
            seed in any::<u64>(),
        ) {
            let rows: Vec<MonthlyValue> = vals.iter().enumerate().map(|(i, &v)| MonthlyValue {
                year: 2000 + (i / 12) as i32, month: (i % 12) as u8 + 1, value: v,
            }).collect();
            let mut shuffled = rows.clone();
            // deterministic Fisher-Yates driven by the seed
            let mut state = seed;
            for i in (1..shuffled.len()).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (state >> 33) as usize % (i + 1);
                shuffled.swap(i, j);
            }
            let a = seasonal_mean_covariate(&MonthlyIndexSeries::new(rows).unwrap(), 6, 11).unwrap();
            let b = seasonal_mean_covariate(&MonthlyIndexSeries::new(shuffled).unwrap(), 6, 11).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn stage_csv_round_trips_exactly(
            start in 1800i32..2100,
            vals in proptest::collection::vec(1e-3f64..1e3, 10..60),
        ) {
            let years: Vec<i32> = (start..start + vals.len() as i32).collect();
            let s = AnnualMaximaSeries::new(years, vals, None).unwrap();
            let mut buf = Vec::new();
            s.write_csv(&mut buf).unwrap();
            let back = read_annual_maxima(buf.as_slice(), "mem", MIN_SERIES_LEN).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn align_is_idempotent(offset in 0i32..5, extra in 0i32..5, n in 10usize..30) {
            let years: Vec<i32> = (1990..1990 + n as i32).collect();
            let series = AnnualMaximaSeries::new(years, vec![2.0; n], None).unwrap();
            let cy: Vec<i32> = (1990 - offset..1990 + n as i32 + extra).collect();
            let cv: Vec<f64> = cy.iter().map(|&y| f64::from(y % 17) / 3.0).collect();
            let once = align(&series, &CovariateSeries::new(cy, cv).unwrap()).unwrap();
            let twice = align(once.series(), once.covariate()).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
