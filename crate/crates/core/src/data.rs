//! Censored survival records and their counting-process views.

use std::cmp::Ordering;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{FicError, Result};

/// One individual: follow-up time, event indicator and covariate vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub time: f64,
    #[serde(rename = "status", with = "status_flag")]
    pub event: bool,
    #[serde(rename = "x")]
    pub covariates: Vec<f64>,
}

mod status_flag {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(*v as u8)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(D::Error::custom(format!("status must be 0 or 1, got {other}"))),
        }
    }
}

/// Validated, immutable collection of records sharing one covariate dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Dataset {
    records: Vec<SurvivalRecord>,
    #[serde(skip)]
    r: usize,
}

impl<'de> Deserialize<'de> for Dataset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let records = Vec::<SurvivalRecord>::deserialize(d)?;
        Dataset::new(records).map_err(serde::de::Error::custom)
    }
}

/// Distinct observed event times, strictly increasing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventGrid {
    pub times: Vec<f64>,
}

impl EventGrid {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index range of grid times in the half-open window (t1, t2].
    pub fn window(&self, t1: f64, t2: f64) -> std::ops::Range<usize> {
        let lo = self.times.partition_point(|&u| u <= t1);
        let hi = self.times.partition_point(|&u| u <= t2);
        lo..hi.max(lo)
    }
}

impl Dataset {
    pub fn new(records: Vec<SurvivalRecord>) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| FicError::Validation("dataset has no records".into()))?;
        let r = first.covariates.len();
        if r == 0 {
            return Err(FicError::Validation("covariate dimension must be at least 1".into()));
        }
        for (i, rec) in records.iter().enumerate() {
            if !rec.time.is_finite() || rec.time < 0.0 {
                return Err(FicError::Validation(format!(
                    "row {}: time must be finite and nonnegative, got {}",
                    i + 1,
                    rec.time
                )));
            }
            if rec.covariates.len() != r {
                return Err(FicError::Validation(format!(
                    "row {}: expected {} covariates, got {}",
                    i + 1,
                    r,
                    rec.covariates.len()
                )));
            }
            if rec.covariates.iter().any(|v| !v.is_finite()) {
                return Err(FicError::Validation(format!("row {}: non-finite covariate", i + 1)));
            }
        }
        Ok(Dataset { records, r })
    }

    pub fn records(&self) -> &[SurvivalRecord] {
        &self.records
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Largest observed event time, or 0 when every record is censored.
    pub fn max_event_time(&self) -> f64 {
        self.records
            .iter()
            .filter(|rec| rec.event)
            .map(|rec| rec.time)
            .fold(0.0, f64::max)
    }

    pub fn event_grid(&self, tau: f64) -> EventGrid {
        let mut times: Vec<f64> = self
            .records
            .iter()
            .filter(|rec| rec.event && rec.time <= tau)
            .map(|rec| rec.time)
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        EventGrid { times }
    }

    /// `Y_i(u) = 1{T_i >= u}` for every record, in input order.
    pub fn at_risk(&self, u: f64) -> Vec<bool> {
        self.records.iter().map(|rec| rec.time >= u).collect()
    }

    /// Record indices in canonical order: time, then event flag, then covariates
    /// (total order), then input position. Records identical in all fields are
    /// interchangeable, so sums taken in this order do not depend on input order.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.n()).collect();
        idx.sort_by(|&a, &b| {
            let (ra, rb) = (&self.records[a], &self.records[b]);
            ra.time
                .total_cmp(&rb.time)
                .then(ra.event.cmp(&rb.event))
                .then_with(|| {
                    ra.covariates
                        .iter()
                        .zip(&rb.covariates)
                        .map(|(p, q)| p.total_cmp(q))
                        .find(|o| *o != Ordering::Equal)
                        .unwrap_or(Ordering::Equal)
                })
                .then(a.cmp(&b))
        });
        idx
    }

    /// Keep only the listed (0-based) covariate columns.
    pub fn project(&self, columns: &[usize]) -> Result<Dataset> {
        let records = self
            .records
            .iter()
            .map(|rec| SurvivalRecord {
                time: rec.time,
                event: rec.event,
                covariates: columns.iter().map(|&j| rec.covariates[j]).collect(),
            })
            .collect();
        Dataset::new(records)
    }

    /// Writes the `time,status,x1,...,xr` CSV form. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = ["time".to_string(), "status".to_string()]
            .into_iter()
            .chain((1..=self.r).map(|j| format!("x{j}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for rec in &self.records {
            write!(w, "{},{}", rec.time, rec.event as u8)?;
            for v in &rec.covariates {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }
}

/// Parses `time,status,x1,...,xr` CSV text. Lines starting with `#` are ignored.
pub fn load_dataset<R: Read>(source: R) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader
        .headers()
        .map_err(|e| FicError::Parse { row: 0, message: e.to_string() })?
        .clone();
    let r = check_header(&header)?;
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| FicError::Parse { row: row_no, message: e.to_string() })?;
        if row.len() != r + 2 {
            return Err(FicError::Parse {
                row: row_no,
                message: format!("expected {} fields, got {}", r + 2, row.len()),
            });
        }
        let mut values = Vec::with_capacity(row.len());
        for (col, field) in row.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| FicError::Parse {
                row: row_no,
                message: format!("field {} ({:?}) is not numeric", col + 1, field),
            })?;
            values.push(v);
        }
        let event = match values[1] {
            0.0 => false,
            1.0 => true,
            s => {
                return Err(FicError::Parse {
                    row: row_no,
                    message: format!("status must be 0 or 1, got {s}"),
                })
            }
        };
        records.push(SurvivalRecord { time: values[0], event, covariates: values[2..].to_vec() });
    }
    Dataset::new(records)
}

fn check_header(header: &csv::StringRecord) -> Result<usize> {
    let bad = |message: String| FicError::Parse { row: 0, message };
    if header.len() < 2 || &header[0] != "time" || &header[1] != "status" {
        return Err(bad(format!("header must start with `time,status`, got {:?}", header)));
    }
    let r = header.len() - 2;
    if r == 0 {
        return Err(FicError::Validation("no covariate columns".into()));
    }
    for (j, name) in header.iter().skip(2).enumerate() {
        if name != format!("x{}", j + 1) {
            return Err(bad(format!("covariate column {} must be named x{}, got {name:?}", j + 1, j + 1)));
        }
    }
    Ok(r)
}
