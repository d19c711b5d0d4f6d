//! Year-indexed scalar series with a unit tag.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::calendar::YearSpan;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "W")]
    Watt,
    #[serde(rename = "MW")]
    Megawatt,
    #[serde(rename = "m2")]
    SquareMetre,
    #[serde(rename = "count")]
    Count,
    #[serde(rename = "W/m2")]
    WattPerSquareMetre,
    #[serde(rename = "1")]
    Dimensionless,
    #[serde(rename = "%")]
    Percent,
}

impl Unit {
    pub fn symbol(&self) -> &'static str {
        match self {
            Unit::Watt => "W",
            Unit::Megawatt => "MW",
            Unit::SquareMetre => "m2",
            Unit::Count => "count",
            Unit::WattPerSquareMetre => "W/m2",
            Unit::Dimensionless => "1",
            Unit::Percent => "%",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Unit> {
        Some(match s {
            "W" => Unit::Watt,
            "MW" => Unit::Megawatt,
            "m2" | "m²" => Unit::SquareMetre,
            "count" => Unit::Count,
            "W/m2" | "W/m²" => Unit::WattPerSquareMetre,
            "1" | "dimensionless" => Unit::Dimensionless,
            "%" => Unit::Percent,
            _ => return None,
        })
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Consecutive annual values starting at `start_year`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualSeries {
    start_year: i32,
    values: Vec<f64>,
    unit: Unit,
}

impl AnnualSeries {
    pub fn new(start_year: i32, values: Vec<f64>, unit: Unit) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("annual series must not be empty"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite value in series at year {}",
                start_year + i as i32
            )));
        }
        Ok(Self {
            start_year,
            values,
            unit,
        })
    }

    /// Builds a series by evaluating `f` for every year of `span`.
    pub fn from_fn(span: YearSpan, unit: Unit, f: impl FnMut(i32) -> f64) -> Result<Self> {
        Self::new(span.start, span.years().map(f).collect(), unit)
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.values.len() as i32 - 1
    }

    pub fn span(&self) -> YearSpan {
        YearSpan {
            start: self.start_year,
            end: self.end_year(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.values.len()).map(move |i| self.start_year + i as i32)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.years().zip(self.values.iter().copied())
    }

    pub fn get(&self, year: i32) -> Option<f64> {
        let i = year.checked_sub(self.start_year)?;
        usize::try_from(i)
            .ok()
            .and_then(|i| self.values.get(i).copied())
    }

    pub fn with_unit(mut self, unit: Unit) -> Self {
        self.unit = unit;
        self
    }

    /// Element-wise map keeping the year axis.
    pub fn map(&self, unit: Unit, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.start_year,
            self.values.iter().map(|&v| f(v)).collect(),
            unit,
        )
    }

    pub fn ensure_aligned(&self, other: &AnnualSeries, what: &str) -> Result<()> {
        if self.start_year != other.start_year || self.len() != other.len() {
            return Err(Error::Misaligned(format!(
                "{what}: {}-{} vs {}-{}",
                self.start_year,
                self.end_year(),
                other.start_year,
                other.end_year()
            )));
        }
        Ok(())
    }

    /// Writes `year,value,unit` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["year", "value", "unit"])?;
        for (year, value) in self.iter() {
            w.write_record([year.to_string(), value.to_string(), self.unit.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Reads the `year,value,unit` layout written by [`AnnualSeries::write_csv`].
    /// Years must be consecutive and the unit identical on every row.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut start = None;
        let mut values = Vec::new();
        let mut unit = None;
        for (i, rec) in r.records().enumerate() {
            let row = i + 1;
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::parse(row, "expected 3 columns"));
            }
            let year: i32 = rec[0]
                .parse()
                .map_err(|_| Error::parse(row, "invalid year"))?;
            let value: f64 = rec[1]
                .parse()
                .map_err(|_| Error::parse(row, "invalid value"))?;
            let u = Unit::from_symbol(&rec[2])
                .ok_or_else(|| Error::parse(row, format!("unknown unit `{}`", &rec[2])))?;
            match (start, unit) {
                (None, _) => {
                    start = Some(year);
                    unit = Some(u);
                }
                (Some(s), Some(prev)) => {
                    if year != s + values.len() as i32 {
                        return Err(Error::parse(row, "years not consecutive"));
                    }
                    if prev != u {
                        return Err(Error::parse(row, "unit changes within series"));
                    }
                }
                _ => unreachable!(),
            }
            values.push(value);
        }
        let start = start.ok_or_else(|| Error::domain("empty series file"))?;
        Self::new(start, values, unit.expect("set with start"))
    }
}
