//! Turbine registry ingestion, cleaning, imputation and annual fleet aggregates.
//!
//! Annual aggregates count a turbine with weight 0.5 in its commissioning year
//! and 1.0 in every later year. Commissioning dates are only known to the year,
//! so half a year of operation is the expected contribution of a new turbine.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::f64::consts::PI;
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::calendar::YearSpan;
use crate::error::{Error, Result};
use crate::series::{AnnualSeries, Unit};
use crate::sum::NeumaierSum;
use crate::validate::ScenarioSpec;

/// Column names of the turbine registry CSV, in canonical order.
pub const TURBINE_COLUMNS: [&str; 9] = [
    "case_id",
    "xlong",
    "ylat",
    "p_year",
    "t_hh",
    "t_rd",
    "t_cap",
    "is_decommissioned",
    "d_year",
];

/// Turbine meta parameters that may be missing and imputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    HubHeight,
    RotorDiameter,
    Capacity,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::HubHeight, Field::RotorDiameter, Field::Capacity];

    pub fn name(&self) -> &'static str {
        match self {
            Field::HubHeight => "hub_height",
            Field::RotorDiameter => "rotor_diameter",
            Field::Capacity => "capacity",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One row of the turbine registry. Optional fields are `None` when the source
/// left them empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurbineRecord {
    pub id: String,
    pub lon: f64,
    pub lat: f64,
    pub commissioning_year: Option<i32>,
    /// Meters.
    pub hub_height: Option<f64>,
    /// Meters.
    pub rotor_diameter: Option<f64>,
    /// Kilowatts.
    pub capacity: Option<f64>,
    pub decommissioned: bool,
    pub decommissioning_year: Option<i32>,
    pub imputed: BTreeSet<Field>,
}

impl TurbineRecord {
    /// A record with only an id and a location; everything else absent.
    pub fn new(id: impl Into<String>, lon: f64, lat: f64) -> Self {
        Self {
            id: id.into(),
            lon,
            lat,
            commissioning_year: None,
            hub_height: None,
            rotor_diameter: None,
            capacity: None,
            decommissioned: false,
            decommissioning_year: None,
            imputed: BTreeSet::new(),
        }
    }

    pub fn commissioned(mut self, year: i32) -> Self {
        self.commissioning_year = Some(year);
        self
    }

    pub fn with_dimensions(
        mut self,
        hub_height: f64,
        rotor_diameter: f64,
        capacity_kw: f64,
    ) -> Self {
        self.hub_height = Some(hub_height);
        self.rotor_diameter = Some(rotor_diameter);
        self.capacity = Some(capacity_kw);
        self
    }

    pub fn get(&self, field: Field) -> Option<f64> {
        match field {
            Field::HubHeight => self.hub_height,
            Field::RotorDiameter => self.rotor_diameter,
            Field::Capacity => self.capacity,
        }
    }

    fn set(&mut self, field: Field, value: f64) {
        let slot = match field {
            Field::HubHeight => &mut self.hub_height,
            Field::RotorDiameter => &mut self.rotor_diameter,
            Field::Capacity => &mut self.capacity,
        };
        *slot = Some(value);
    }

    /// Value as reported by the source, ignoring anything filled by imputation.
    pub fn observed(&self, field: Field) -> Option<f64> {
        if self.imputed.contains(&field) {
            None
        } else {
            self.get(field)
        }
    }

    pub fn originally_missing(&self, field: Field) -> bool {
        self.observed(field).is_none()
    }
}

/// Parses the registry CSV. Unknown extra columns are ignored; row numbers in
/// errors are 1-based data rows.
pub fn parse_turbine_csv<R: Read>(input: R) -> Result<Vec<TurbineRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let mut idx = [0usize; 9];
    for (slot, name) in idx.iter_mut().zip(TURBINE_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let width = headers.len();

    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        if rec.len() != width {
            return Err(Error::parse(
                row,
                format!("expected {width} columns, found {}", rec.len()),
            ));
        }
        let field = |k: usize| &rec[idx[k]];

        let id = field(0).to_string();
        if id.is_empty() {
            return Err(Error::parse(row, "empty case_id"));
        }
        let lon = required_f64(field(1), "xlong", row)?;
        let lat = required_f64(field(2), "ylat", row)?;
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::parse(row, "lon out of range"));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::parse(row, "lat out of range"));
        }
        out.push(TurbineRecord {
            id,
            lon,
            lat,
            commissioning_year: optional_year(field(3), "p_year", row)?,
            hub_height: optional_positive(field(4), "t_hh", row)?,
            rotor_diameter: optional_positive(field(5), "t_rd", row)?,
            capacity: optional_positive(field(6), "t_cap", row)?,
            decommissioned: parse_flag(field(7), row)?,
            decommissioning_year: optional_year(field(8), "d_year", row)?,
            imputed: BTreeSet::new(),
        });
    }
    Ok(out)
}

fn required_f64(s: &str, name: &str, row: usize) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::parse(row, format!("missing {name}")));
    }
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::parse(row, format!("non-numeric {name} `{s}`")))
}

fn optional_positive(s: &str, name: &str, row: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    let v = required_f64(s, name, row)?;
    if v <= 0.0 {
        return Err(Error::parse(row, format!("{name} must be positive")));
    }
    Ok(Some(v))
}

fn optional_year(s: &str, name: &str, row: usize) -> Result<Option<i32>> {
    if s.is_empty() {
        return Ok(None);
    }
    // Some exports write years as floats ("2012.0").
    let v = required_f64(s, name, row)?;
    if v.fract() != 0.0 || v <= 0.0 || v > 9999.0 {
        return Err(Error::parse(row, format!("invalid {name} `{s}`")));
    }
    Ok(Some(v as i32))
}

fn parse_flag(s: &str, row: usize) -> Result<bool> {
    match s.to_ascii_lowercase().as_str() {
        "" | "false" | "0" | "no" | "f" => Ok(false),
        "true" | "1" | "yes" | "t" => Ok(true),
        _ => Err(Error::parse(
            row,
            format!("invalid is_decommissioned `{s}`"),
        )),
    }
}

/// Newline-separated ids; blank lines and `#` comments are skipped.
pub fn parse_exclusions(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeReport {
    /// Extension records whose id was not in the base set.
    pub added: usize,
    /// Base records that took decommissioning data from the extension.
    pub filled: usize,
}

/// Union of the registry and its decommissioned-turbine extension.
///
/// On duplicate ids the base record wins, except that a base record without
/// decommissioning information takes the flag and year from the extension.
pub fn merge_extension(
    base: Vec<TurbineRecord>,
    ext: Vec<TurbineRecord>,
) -> (Vec<TurbineRecord>, MergeReport) {
    let mut report = MergeReport::default();
    let mut by_id: HashMap<String, usize> = HashMap::with_capacity(base.len());
    for (i, r) in base.iter().enumerate() {
        by_id.entry(r.id.clone()).or_insert(i);
    }
    let mut merged = base;
    for e in ext {
        match by_id.get(&e.id) {
            Some(&i) => {
                let b = &mut merged[i];
                let mut changed = false;
                if !b.decommissioned && e.decommissioned {
                    b.decommissioned = true;
                    changed = true;
                }
                if b.decommissioning_year.is_none() && e.decommissioning_year.is_some() {
                    b.decommissioning_year = e.decommissioning_year;
                    changed = true;
                }
                if changed {
                    report.filled += 1;
                }
            }
            None => {
                by_id.insert(e.id.clone(), merged.len());
                merged.push(e);
                report.added += 1;
            }
        }
    }
    (merged, report)
}

/// Per-year counts of turbines and of missing meta parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct YearMissing {
    pub turbines: usize,
    pub missing_hub_height: usize,
    pub missing_rotor_diameter: usize,
    pub missing_capacity: usize,
}

impl YearMissing {
    pub fn missing(&self, field: Field) -> usize {
        match field {
            Field::HubHeight => self.missing_hub_height,
            Field::RotorDiameter => self.missing_rotor_diameter,
            Field::Capacity => self.missing_capacity,
        }
    }

    fn bump(&mut self, field: Field) {
        match field {
            Field::HubHeight => self.missing_hub_height += 1,
            Field::RotorDiameter => self.missing_rotor_diameter += 1,
            Field::Capacity => self.missing_capacity += 1,
        }
    }

    /// Missing share in `[0, 1]`; 0 for a year without turbines.
    pub fn share(&self, field: Field) -> f64 {
        if self.turbines == 0 {
            0.0
        } else {
            self.missing(field) as f64 / self.turbines as f64
        }
    }
}

/// Missing shares by commissioning year, plus the values used for filling.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImputationReport {
    pub by_year: BTreeMap<i32, YearMissing>,
    /// Commissioning years where a field had no observed value and the
    /// all-years mean was used instead.
    pub global_fallbacks: Vec<(i32, Field)>,
}

#[derive(Debug, Clone, Copy, Default)]
struct FieldStats {
    sum: NeumaierSum,
    count: usize,
    min: f64,
    max: f64,
}

impl FieldStats {
    fn push(&mut self, v: f64) {
        if self.count == 0 {
            self.min = v;
            self.max = v;
        } else {
            self.min = self.min.min(v);
            self.max = self.max.max(v);
        }
        self.sum.add(v);
        self.count += 1;
    }

    fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum.value() / self.count as f64)
    }

    fn range(&self) -> Option<(f64, f64)> {
        (self.count > 0).then_some((self.min, self.max))
    }
}

/// Statistics of observed values per commissioning year and overall.
struct ObservedStats {
    by_year: BTreeMap<i32, [FieldStats; 3]>,
    global: [FieldStats; 3],
}

impl ObservedStats {
    fn collect<'a>(records: impl IntoIterator<Item = &'a TurbineRecord>) -> Result<Self> {
        let mut by_year: BTreeMap<i32, [FieldStats; 3]> = BTreeMap::new();
        let mut global = [FieldStats::default(); 3];
        for r in records {
            let year = r.commissioning_year.ok_or_else(|| {
                Error::domain(format!("turbine {} has no commissioning year", r.id))
            })?;
            let entry = by_year.entry(year).or_default();
            for f in Field::ALL {
                if let Some(v) = r.observed(f) {
                    entry[f.index()].push(v);
                    global[f.index()].push(v);
                }
            }
        }
        Ok(Self { by_year, global })
    }

    fn year(&self, year: i32, field: Field) -> Option<&FieldStats> {
        self.by_year
            .get(&year)
            .map(|s| &s[field.index()])
            .filter(|s| s.count > 0)
    }

    fn global(&self, field: Field) -> Result<&FieldStats> {
        let g = &self.global[field.index()];
        if g.count == 0 {
            Err(Error::FieldNeverObserved(field.name()))
        } else {
            Ok(g)
        }
    }
}

/// Fills absent hub height, rotor diameter and capacity with the mean of the
/// observed values of turbines commissioned in the same year. Years without
/// any observation of a field fall back to the all-years mean.
pub fn impute_missing(
    mut records: Vec<TurbineRecord>,
) -> Result<(Vec<TurbineRecord>, ImputationReport)> {
    let stats = ObservedStats::collect(&records)?;
    let mut report = ImputationReport::default();

    for r in &records {
        let year = r.commissioning_year.expect("checked by collect");
        let entry = report.by_year.entry(year).or_default();
        entry.turbines += 1;
        for f in Field::ALL {
            if r.originally_missing(f) {
                entry.bump(f);
            }
        }
    }

    let mut fill: HashMap<(i32, Field), f64> = HashMap::new();
    for (&year, missing) in &report.by_year {
        for f in Field::ALL {
            if missing.missing(f) == 0 {
                continue;
            }
            let value = match stats.year(year, f) {
                Some(s) => s.mean().expect("nonempty"),
                None => {
                    report.global_fallbacks.push((year, f));
                    stats.global(f)?.mean().expect("nonempty")
                }
            };
            fill.insert((year, f), value);
        }
    }

    for r in &mut records {
        let year = r.commissioning_year.expect("checked by collect");
        for f in Field::ALL {
            if r.get(f).is_none() {
                r.set(f, fill[&(year, f)]);
                r.imputed.insert(f);
            }
        }
    }
    Ok((records, report))
}

/// Counts of records dropped during preprocessing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub input_records: usize,
    pub missing_commissioning_year: usize,
    pub excluded: usize,
    pub duplicate_id: usize,
}

/// A turbine with every meta parameter known (observed or imputed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turbine {
    pub id: String,
    pub lon: f64,
    pub lat: f64,
    pub commissioning_year: i32,
    pub hub_height: f64,
    pub rotor_diameter: f64,
    /// Kilowatts.
    pub capacity: f64,
    pub decommissioned: bool,
    pub decommissioning_year: Option<i32>,
    pub imputed: BTreeSet<Field>,
}

impl Turbine {
    pub fn swept_area(&self) -> f64 {
        PI * self.rotor_diameter * self.rotor_diameter / 4.0
    }

    /// Capacity in watts.
    pub fn capacity_w(&self) -> f64 {
        self.capacity * 1e3
    }

    fn from_record(r: TurbineRecord) -> Result<Self> {
        let missing =
            |f: Field| Error::Invariant(format!("turbine {} lacks {} after imputation", r.id, f));
        Ok(Turbine {
            commissioning_year: r
                .commissioning_year
                .ok_or_else(|| Error::Invariant(format!("turbine {} lacks p_year", r.id)))?,
            hub_height: r.hub_height.ok_or_else(|| missing(Field::HubHeight))?,
            rotor_diameter: r
                .rotor_diameter
                .ok_or_else(|| missing(Field::RotorDiameter))?,
            capacity: r.capacity.ok_or_else(|| missing(Field::Capacity))?,
            decommissioned: r.decommissioned,
            decommissioning_year: r.decommissioning_year,
            lon: r.lon,
            lat: r.lat,
            imputed: r.imputed,
            id: r.id,
        })
    }

    /// Back to the record form, with imputed fields cleared.
    pub fn original_record(&self) -> TurbineRecord {
        let keep = |f: Field, v: f64| (!self.imputed.contains(&f)).then_some(v);
        TurbineRecord {
            id: self.id.clone(),
            lon: self.lon,
            lat: self.lat,
            commissioning_year: Some(self.commissioning_year),
            hub_height: keep(Field::HubHeight, self.hub_height),
            rotor_diameter: keep(Field::RotorDiameter, self.rotor_diameter),
            capacity: keep(Field::Capacity, self.capacity),
            decommissioned: self.decommissioned,
            decommissioning_year: self.decommissioning_year,
            imputed: BTreeSet::new(),
        }
    }
}

/// The cleaned, fully imputed turbine set. Immutable after construction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fleet {
    turbines: Vec<Turbine>,
    provenance: Provenance,
}

impl Fleet {
    /// Builds a fleet from imputed records; every record must carry all fields.
    pub fn from_records(records: Vec<TurbineRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        let turbines = records
            .into_iter()
            .map(|r| {
                if !seen.insert(r.id.clone()) {
                    return Err(Error::Invariant(format!("duplicate turbine id {}", r.id)));
                }
                Turbine::from_record(r)
            })
            .collect::<Result<Vec<_>>>()?;
        let provenance = Provenance {
            input_records: turbines.len(),
            ..Provenance::default()
        };
        Ok(Self {
            turbines,
            provenance,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn turbines(&self) -> &[Turbine] {
        &self.turbines
    }

    pub fn len(&self) -> usize {
        self.turbines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turbines.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// The records as they were before imputation.
    pub fn original_records(&self) -> Vec<TurbineRecord> {
        self.turbines.iter().map(Turbine::original_record).collect()
    }
}

/// Drops records without a commissioning year, excluded ids and repeated ids
/// (first occurrence wins), then imputes missing meta parameters.
pub fn preprocess(
    records: Vec<TurbineRecord>,
    exclusion_ids: &BTreeSet<String>,
) -> Result<(Fleet, ImputationReport)> {
    let mut prov = Provenance {
        input_records: records.len(),
        ..Provenance::default()
    };
    let mut seen = HashSet::new();
    let kept: Vec<TurbineRecord> = records
        .into_iter()
        .filter(|r| {
            if r.commissioning_year.is_none() {
                prov.missing_commissioning_year += 1;
                false
            } else if exclusion_ids.contains(&r.id) {
                prov.excluded += 1;
                false
            } else if !seen.insert(r.id.clone()) {
                prov.duplicate_id += 1;
                false
            } else {
                true
            }
        })
        .collect();
    if kept.is_empty() {
        return Err(Error::NoUsableTurbines);
    }
    let (imputed, report) = impute_missing(kept)?;
    let mut fleet = Fleet::from_records(imputed)?;
    fleet.provenance = prov;
    Ok((fleet, report))
}

pub fn rotor_swept_area(diameter: f64) -> Result<f64> {
    if !(diameter > 0.0) || !diameter.is_finite() {
        return Err(Error::domain(format!(
            "rotor diameter must be positive, got {diameter}"
        )));
    }
    Ok(PI * diameter * diameter / 4.0)
}

/// Swept-area totals of the turbines commissioned in `year` when missing
/// rotor diameters are filled with that year's smallest (`low`) and largest
/// (`high`) observed diameter. Years with no observed diameter use the
/// all-years extremes.
pub fn imputation_bounds(records: &[TurbineRecord], year: i32) -> Result<(f64, f64)> {
    let stats = ObservedStats::collect(records)?;
    let (lo, hi) = diameter_range(&stats, year)?;
    let mut low = NeumaierSum::new();
    let mut high = NeumaierSum::new();
    for r in records
        .iter()
        .filter(|r| r.commissioning_year == Some(year))
    {
        match r.observed(Field::RotorDiameter) {
            Some(d) => {
                let a = rotor_swept_area(d)?;
                low.add(a);
                high.add(a);
            }
            None => {
                low.add(rotor_swept_area(lo)?);
                high.add(rotor_swept_area(hi)?);
            }
        }
    }
    Ok((low.value(), high.value()))
}

fn diameter_range(stats: &ObservedStats, year: i32) -> Result<(f64, f64)> {
    match stats.year(year, Field::RotorDiameter) {
        Some(s) => Ok(s.range().expect("nonempty")),
        None => Ok(stats
            .global(Field::RotorDiameter)?
            .range()
            .expect("nonempty")),
    }
}

/// Low/high bounds of [`annual_swept_area`] over a span, filling each
/// originally missing diameter with its commissioning year's min/max.
pub fn swept_area_bounds(fleet: &Fleet, years: YearSpan) -> Result<(AnnualSeries, AnnualSeries)> {
    let records = fleet.original_records();
    let stats = ObservedStats::collect(&records)?;
    let mut per_turbine = Vec::with_capacity(records.len());
    for r in &records {
        let year = r.commissioning_year.expect("fleet turbines have years");
        let (lo, hi) = match r.observed(Field::RotorDiameter) {
            Some(d) => (d, d),
            None => diameter_range(&stats, year)?,
        };
        per_turbine.push((year, rotor_swept_area(lo)?, rotor_swept_area(hi)?));
    }
    let series = |pick: fn(&(i32, f64, f64)) -> f64| {
        AnnualSeries::from_fn(years, Unit::SquareMetre, |t| {
            per_turbine
                .iter()
                .map(|p| operating_weight(p.0, t) * pick(p))
                .collect::<NeumaierSum>()
                .value()
        })
    };
    Ok((series(|p| p.1)?, series(|p| p.2)?))
}

/// Weight of a turbine commissioned in `commissioned` in the aggregate of `year`.
#[inline]
pub fn operating_weight(commissioned: i32, year: i32) -> f64 {
    match year.cmp(&commissioned) {
        std::cmp::Ordering::Less => 0.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Greater => 1.0,
    }
}

/// Operating weight under a validation scenario.
pub fn scenario_weight(t: &Turbine, year: i32, scenario: &ScenarioSpec) -> f64 {
    if scenario.drop_decommissioned_flagged && t.decommissioned {
        return 0.0;
    }
    if let Some(life) = scenario.lifetime_years {
        if year >= t.commissioning_year + life as i32 {
            return 0.0;
        }
    }
    operating_weight(t.commissioning_year, year)
}

fn weighted_sum(fleet: &Fleet, year: i32, value: impl Fn(&Turbine) -> f64) -> f64 {
    fleet
        .turbines
        .iter()
        .map(|t| operating_weight(t.commissioning_year, year) * value(t))
        .collect::<NeumaierSum>()
        .value()
}

/// Number of operating turbines N(t).
pub fn annual_counts(fleet: &Fleet, years: YearSpan) -> Result<AnnualSeries> {
    AnnualSeries::from_fn(years, Unit::Count, |y| weighted_sum(fleet, y, |_| 1.0))
}

/// Total rotor swept area A(t) in m².
pub fn annual_swept_area(fleet: &Fleet, years: YearSpan) -> Result<AnnualSeries> {
    AnnualSeries::from_fn(years, Unit::SquareMetre, |y| {
        weighted_sum(fleet, y, Turbine::swept_area)
    })
}

/// Installed capacity in MW under a scenario.
pub fn annual_capacity(
    fleet: &Fleet,
    years: YearSpan,
    scenario: &ScenarioSpec,
) -> Result<AnnualSeries> {
    scenario.validate()?;
    AnnualSeries::from_fn(years, Unit::Megawatt, |y| {
        fleet
            .turbines
            .iter()
            .filter(|t| scenario.impute_capacity || !t.imputed.contains(&Field::Capacity))
            .map(|t| scenario_weight(t, y, scenario) * t.capacity)
            .collect::<NeumaierSum>()
            .value()
            / 1e3
    })
}

/// Nameplate capacity per swept area, W/m².
pub fn specific_power(capacity_w: f64, area: f64) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::domain(format!("area must be positive, got {area}")));
    }
    Ok(capacity_w / area)
}
