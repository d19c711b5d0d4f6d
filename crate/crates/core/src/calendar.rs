//! UTC calendar helpers: hour counts and period boundaries.

use std::fmt;
use std::ops::RangeInclusive;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inclusive span of calendar years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearSpan {
    pub start: i32,
    pub end: i32,
}

impl YearSpan {
    pub fn new(start: i32, end: i32) -> Result<Self> {
        if start > end {
            return Err(Error::domain(format!(
                "year span start {start} after end {end}"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.start..=self.end).contains(&year)
    }

    pub fn years(&self) -> RangeInclusive<i32> {
        self.start..=self.end
    }

    pub fn months(&self) -> impl Iterator<Item = (i32, u32)> {
        self.years().flat_map(|y| (1..=12).map(move |m| (y, m)))
    }
}

impl fmt::Display for YearSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

/// A period over which power is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Period {
    Year(i32),
    Month(i32, u32),
}

impl Period {
    pub fn year(&self) -> i32 {
        match *self {
            Period::Year(y) | Period::Month(y, _) => y,
        }
    }

    /// Half-open `[start, end)` bounds in Unix seconds.
    pub fn bounds(&self) -> (i64, i64) {
        match *self {
            Period::Year(y) => (year_start(y), year_start(y + 1)),
            Period::Month(y, m) => {
                let (ny, nm) = if m == 12 { (y + 1, 1) } else { (y, m + 1) };
                (month_start(y, m), month_start(ny, nm))
            }
        }
    }

    pub fn hours(&self) -> f64 {
        let (a, b) = self.bounds();
        ((b - a) / 3600) as f64
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Year(y) => write!(f, "{y}"),
            Period::Month(y, m) => write!(f, "{y}-{m:02}"),
        }
    }
}

pub fn month_start(year: i32, month: u32) -> i64 {
    NaiveDate::from_ymd_opt(year, month, 1)
        .expect("valid calendar month")
        .and_hms_opt(0, 0, 0)
        .expect("midnight")
        .and_utc()
        .timestamp()
}

pub fn year_start(year: i32) -> i64 {
    month_start(year, 1)
}

pub fn hours_in_month(year: i32, month: u32) -> f64 {
    Period::Month(year, month).hours()
}

pub fn hours_in_year(year: i32) -> f64 {
    Period::Year(year).hours()
}

/// Hours in a span of whole years.
pub fn hours_in_span(span: YearSpan) -> f64 {
    span.years().map(hours_in_year).sum()
}
