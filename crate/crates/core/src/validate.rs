//! Cross-checks against an independent capacity/generation source and
//! sensitivity scenarios for decommissioning, lifetime and imputation.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::calendar::YearSpan;
use crate::error::{Error, Result};
use crate::fleet::{annual_capacity, Field, Fleet, TurbineRecord};
use crate::series::{AnnualSeries, Unit};

/// Lifetimes evaluated when none are configured, years.
pub const DEFAULT_LIFETIMES: [u32; 4] = [15, 20, 25, 30];

/// Years before this are reported but flagged as low confidence.
pub const CONFIDENT_FROM_YEAR: i32 = 2010;

/// Assumptions for one capacity scenario. The default keeps every turbine for
/// ever and imputes missing capacities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub drop_decommissioned_flagged: bool,
    pub lifetime_years: Option<u32>,
    pub impute_capacity: bool,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            drop_decommissioned_flagged: false,
            lifetime_years: None,
            impute_capacity: true,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lifetime_years == Some(0) {
            return Err(Error::domain("lifetime must be positive"));
        }
        Ok(())
    }

    pub fn with_lifetime(lifetime: u32) -> Self {
        Self {
            lifetime_years: Some(lifetime),
            ..Self::default()
        }
    }

    pub fn dropping_decommissioned() -> Self {
        Self {
            drop_decommissioned_flagged: true,
            ..Self::default()
        }
    }

    pub fn discarding_missing_capacity(mut self) -> Self {
        self.impute_capacity = false;
        self
    }

    /// Stable label used in tables, e.g. `lifetime_20_discard`.
    pub fn label(&self) -> String {
        let mut s = String::new();
        if self.drop_decommissioned_flagged {
            s.push_str("drop_decommissioned");
        }
        if let Some(l) = self.lifetime_years {
            if !s.is_empty() {
                s.push('_');
            }
            let _ = write!(s, "lifetime_{l}");
        }
        if s.is_empty() {
            s.push_str("all_turbines");
        }
        if !self.impute_capacity {
            s.push_str("_discard");
        }
        s
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// The standard scenario set: all turbines, flagged turbines dropped, and one
/// per lifetime, each with imputed and with discarded missing capacities.
pub fn standard_scenarios(lifetimes: &[u32]) -> Vec<ScenarioSpec> {
    let mut base = vec![
        ScenarioSpec::default(),
        ScenarioSpec::dropping_decommissioned(),
    ];
    base.extend(lifetimes.iter().map(|&l| ScenarioSpec::with_lifetime(l)));
    let discard: Vec<_> = base
        .iter()
        .map(|s| s.discarding_missing_capacity())
        .collect();
    base.extend(discard);
    base
}

/// Installed capacity (MW) under a scenario.
pub fn scenario_capacity(
    fleet: &Fleet,
    years: YearSpan,
    spec: &ScenarioSpec,
) -> Result<AnnualSeries> {
    annual_capacity(fleet, years, spec)
}

/// Reference data by year. Either column may be absent for a given year.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferenceData {
    /// MW.
    pub capacity_mw: BTreeMap<i32, f64>,
    /// GWh.
    pub generation_gwh: BTreeMap<i32, f64>,
}

impl ReferenceData {
    /// Capacity over the years present in both the span and the data, as a
    /// contiguous series; `None` if there is no contiguous overlap.
    pub fn capacity_series(&self, years: YearSpan) -> Option<AnnualSeries> {
        contiguous(&self.capacity_mw, years, Unit::Megawatt)
    }

    /// Generation converted to average power in W.
    pub fn generation_power_series(&self, years: YearSpan) -> Option<AnnualSeries> {
        let watts: BTreeMap<i32, f64> = self
            .generation_gwh
            .iter()
            .map(|(&y, &gwh)| (y, gwh * 1e9 / crate::calendar::hours_in_year(y)))
            .collect();
        contiguous(&watts, years, Unit::Watt)
    }
}

fn contiguous(map: &BTreeMap<i32, f64>, years: YearSpan, unit: Unit) -> Option<AnnualSeries> {
    let mut start = None;
    let mut values = Vec::new();
    for y in years.years() {
        match (map.get(&y), start) {
            (Some(&v), _) => {
                start.get_or_insert(y);
                values.push(v);
            }
            (None, Some(_)) => break,
            (None, None) => {}
        }
    }
    AnnualSeries::new(start?, values, unit).ok()
}

/// Reads `year,installed_capacity_mw,generation_gwh`.
pub fn parse_reference_csv<R: Read>(input: R) -> Result<ReferenceData> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let headers = r.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::NoReferenceData);
    }
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (cy, cc, cg) = (
        col("year")?,
        col("installed_capacity_mw")?,
        col("generation_gwh")?,
    );
    let mut out = ReferenceData::default();
    let mut seen = std::collections::BTreeSet::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let get = |c: usize| rec.get(c).unwrap_or("");
        let year: i32 = get(cy)
            .parse()
            .map_err(|_| Error::parse(row, "invalid year"))?;
        if !seen.insert(year) {
            return Err(Error::parse(row, format!("duplicate year {year}")));
        }
        let opt = |s: &str, name: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| Error::parse(row, format!("invalid {name}")))
        };
        if let Some(v) = opt(get(cc), "installed_capacity_mw")? {
            out.capacity_mw.insert(year, v);
        }
        if let Some(v) = opt(get(cg), "generation_gwh")? {
            out.generation_gwh.insert(year, v);
        }
    }
    if seen.is_empty() {
        return Err(Error::NoReferenceData);
    }
    Ok(out)
}

/// `100 · (a − b) / b` per year; positive when `a` reports more.
pub fn relative_difference(a: &AnnualSeries, b: &AnnualSeries) -> Result<AnnualSeries> {
    a.ensure_aligned(b, "relative difference")?;
    let values = a
        .iter()
        .zip(b.values())
        .map(|((year, x), &y)| {
            if y == 0.0 {
                Err(Error::domain(format!("reference value is zero in {year}")))
            } else {
                Ok(100.0 * (x - y) / y)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    AnnualSeries::new(a.start_year(), values, Unit::Percent)
}

/// Share of turbines commissioned in or before each year whose field was
/// missing in the source data. Decommissioning is ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingnessRow {
    pub year: i32,
    pub turbines: usize,
    pub hub_height: f64,
    pub rotor_diameter: f64,
    pub capacity: f64,
    pub low_confidence: bool,
}

impl MissingnessRow {
    pub fn share(&self, field: Field) -> f64 {
        match field {
            Field::HubHeight => self.hub_height,
            Field::RotorDiameter => self.rotor_diameter,
            Field::Capacity => self.capacity,
        }
    }
}

/// Cumulative missing shares from the earliest commissioning year to the last.
/// Imputed fields count as missing.
pub fn missingness_report(records: &[TurbineRecord]) -> Vec<MissingnessRow> {
    let mut per_year: BTreeMap<i32, (usize, [usize; 3])> = BTreeMap::new();
    for r in records {
        let Some(y) = r.commissioning_year else {
            continue;
        };
        let e = per_year.entry(y).or_default();
        e.0 += 1;
        for (i, f) in Field::ALL.into_iter().enumerate() {
            if r.originally_missing(f) {
                e.1[i] += 1;
            }
        }
    }
    let (Some(&first), Some(&last)) = (per_year.keys().next(), per_year.keys().next_back()) else {
        return Vec::new();
    };
    let mut total = 0usize;
    let mut missing = [0usize; 3];
    (first..=last)
        .map(|year| {
            if let Some((n, m)) = per_year.get(&year) {
                total += n;
                for i in 0..3 {
                    missing[i] += m[i];
                }
            }
            let share = |i: usize| missing[i] as f64 / total as f64;
            MissingnessRow {
                year,
                turbines: total,
                hub_height: share(0),
                rotor_diameter: share(1),
                capacity: share(2),
                low_confidence: year < CONFIDENT_FROM_YEAR,
            }
        })
        .collect()
}

pub fn missingness_csv(rows: &[MissingnessRow]) -> String {
    let mut s = String::from("year,turbines,hub_height,rotor_diameter,capacity,low_confidence\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.year, r.turbines, r.hub_height, r.rotor_diameter, r.capacity, r.low_confidence
        );
    }
    s
}

/// Capacity of one scenario plus its difference to the reference source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: String,
    pub spec: ScenarioSpec,
    pub capacity_mw: AnnualSeries,
    pub relative_difference: Option<AnnualSeries>,
}

/// Evaluates each scenario side by side.
pub fn run_scenarios(
    fleet: &Fleet,
    years: YearSpan,
    specs: &[ScenarioSpec],
    reference: Option<&ReferenceData>,
) -> Result<Vec<ScenarioResult>> {
    let reference_capacity = reference.and_then(|r| r.capacity_series(years));
    specs
        .iter()
        .map(|spec| {
            let cap = scenario_capacity(fleet, years, spec)?;
            let diff = match &reference_capacity {
                Some(rc) => {
                    let sub = restrict(&cap, rc.span())?;
                    Some(relative_difference(&sub, rc)?)
                }
                None => None,
            };
            Ok(ScenarioResult {
                scenario: spec.label(),
                spec: *spec,
                capacity_mw: cap,
                relative_difference: diff,
            })
        })
        .collect()
}

/// Sub-series over `span`, which must lie inside the series.
pub fn restrict(series: &AnnualSeries, span: YearSpan) -> Result<AnnualSeries> {
    let values = span
        .years()
        .map(|y| {
            series
                .get(y)
                .ok_or_else(|| Error::Misaligned(format!("year {y} outside series")))
        })
        .collect::<Result<Vec<_>>>()?;
    AnnualSeries::new(span.start, values, series.unit())
}

/// Tidy `scenario,year,capacity_mw` rows.
pub fn scenarios_csv(results: &[ScenarioResult]) -> String {
    let mut s = String::from("scenario,year,capacity_mw\n");
    for r in results {
        for (y, v) in r.capacity_mw.iter() {
            let _ = writeln!(s, "{},{y},{v}", r.scenario);
        }
    }
    s
}
