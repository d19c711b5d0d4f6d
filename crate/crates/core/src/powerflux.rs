//! Kinetic input power at turbine locations, generated output power, and the
//! ratios built from them.
//!
//! Internally power is in W, energy in Wh and area in m².

use std::collections::BTreeMap;
use std::io::Read;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calendar::{hours_in_month, Period, YearSpan};
use crate::error::{Error, Result};
use crate::fleet::{operating_weight, Fleet};
use crate::series::{AnnualSeries, Unit};
use crate::sum::NeumaierSum;
use crate::windgrid::{speed_at_hub, Stencil, WindGrid};

/// Air density, kg/m³.
pub const AIR_DENSITY: f64 = 1.225;
/// Upper bound of the power coefficient of a single rotor.
pub const BETZ_LIMIT: f64 = 16.0 / 27.0;
/// Fixed height used for the location effect, m.
pub const DEFAULT_REFERENCE_HEIGHT: f64 = 76.0;

/// Turbines per parallel work item. Fixed so results never depend on the
/// worker count.
const TURBINE_CHUNK: usize = 32;

/// `½ ρ A v³` in watts.
pub fn kinetic_power(v: f64, area: f64) -> Result<f64> {
    if !(v >= 0.0) || !(area >= 0.0) {
        return Err(Error::domain(format!(
            "kinetic power needs v >= 0 and area >= 0, got v={v}, area={area}"
        )));
    }
    Ok(0.5 * AIR_DENSITY * area * v * v * v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeightMode {
    /// Each turbine's own hub height.
    Hub,
    /// The same height for every turbine, m.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClimateMode {
    /// Hour-by-hour wind of the period itself.
    Actual,
    /// Per-location mean of v³ over the whole study span.
    LongTermAverage,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinOptions {
    /// Years over which long-term averages are taken.
    pub study: YearSpan,
    pub workers: usize,
}

/// Per-turbine monthly sums of v³ at hub height and at the reference height.
#[derive(Debug, Clone)]
struct TurbineClimate {
    hub: Vec<f64>,
    reference: Vec<f64>,
    calm_hours: u64,
}

/// Precomputed wind statistics for one fleet on one grid.
///
/// One pass over the grid yields, per turbine and month, Σ v³ at the hub
/// height and at the reference height. Every P_in variant is then a weighted
/// sum of those.
#[derive(Debug, Clone)]
pub struct PinEngine {
    span: YearSpan,
    reference_height: f64,
    /// Grid steps per month of `span`.
    month_steps: Vec<usize>,
    turbines: Vec<TurbineClimate>,
    /// (commissioning year, ½ρA) per turbine.
    factors: Vec<(i32, f64)>,
}

impl PinEngine {
    pub fn new(
        grid: &WindGrid,
        fleet: &Fleet,
        span: YearSpan,
        reference_height: f64,
        workers: usize,
    ) -> Result<Self> {
        if !(reference_height > 0.0) {
            return Err(Error::domain(format!(
                "reference height must be positive, got {reference_height}"
            )));
        }
        let mut outside = Vec::new();
        let mut stencils = Vec::with_capacity(fleet.len());
        for t in fleet.turbines() {
            match grid.locate(t.lon, t.lat) {
                Ok(s) => stencils.push(s),
                Err(_) => outside.push(t.id.clone()),
            }
        }
        if !outside.is_empty() {
            return Err(Error::TurbinesOutsideGrid(outside));
        }

        let mut month_ranges = Vec::with_capacity(span.len() * 12);
        for (y, m) in span.months() {
            let (a, b) = Period::Month(y, m).bounds();
            let r = grid
                .steps_covering(a, b)
                .ok_or_else(|| Error::PeriodNotCovered(Period::Month(y, m).to_string()))?;
            month_ranges.push(r);
        }

        let hubs: Vec<f64> = fleet.turbines().iter().map(|t| t.hub_height).collect();
        let work = |chunk: usize| -> Vec<TurbineClimate> {
            let lo = chunk * TURBINE_CHUNK;
            let hi = (lo + TURBINE_CHUNK).min(stencils.len());
            accumulate_chunk(
                grid,
                &stencils[lo..hi],
                &hubs[lo..hi],
                reference_height,
                &month_ranges,
            )
        };
        let n_chunks = stencils.len().div_ceil(TURBINE_CHUNK);
        let chunks: Vec<Vec<TurbineClimate>> = if workers <= 1 {
            (0..n_chunks).map(work).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
            pool.install(|| (0..n_chunks).into_par_iter().map(work).collect())
        };

        Ok(Self {
            span,
            reference_height,
            month_steps: month_ranges.iter().map(|r| r.len()).collect(),
            turbines: chunks.into_iter().flatten().collect(),
            factors: fleet
                .turbines()
                .iter()
                .map(|t| (t.commissioning_year, 0.5 * AIR_DENSITY * t.swept_area()))
                .collect(),
        })
    }

    pub fn span(&self) -> YearSpan {
        self.span
    }

    pub fn reference_height(&self) -> f64 {
        self.reference_height
    }

    /// Hours where a zero reference speed made the shear exponent undefined
    /// and zero shear was assumed, summed over turbines.
    pub fn calm_hours(&self) -> u64 {
        self.turbines.iter().map(|t| t.calm_hours).sum()
    }

    fn month_index(&self, year: i32, month: u32) -> usize {
        (year - self.span.start) as usize * 12 + (month as usize - 1)
    }

    fn months_of(&self, period: Period) -> Result<std::ops::Range<usize>> {
        if !self.span.contains(period.year()) {
            return Err(Error::PeriodNotCovered(period.to_string()));
        }
        Ok(match period {
            Period::Year(y) => {
                let a = self.month_index(y, 1);
                a..a + 12
            }
            Period::Month(y, m) => {
                let a = self.month_index(y, m);
                a..a + 1
            }
        })
    }

    /// Mean v³ over the given months for one turbine and height.
    fn mean_cube(&self, turbine: usize, months: std::ops::Range<usize>, height: HeightMode) -> f64 {
        let sums = match height {
            HeightMode::Hub => &self.turbines[turbine].hub,
            HeightMode::Fixed(_) => &self.turbines[turbine].reference,
        };
        let total: NeumaierSum = sums[months.clone()].iter().copied().collect();
        let steps: usize = self.month_steps[months].iter().sum();
        total.value() / steps as f64
    }

    /// Average input power over `period`, W.
    ///
    /// `HeightMode::Fixed` must match the engine's reference height.
    pub fn pin(&self, period: Period, height: HeightMode, climate: ClimateMode) -> Result<f64> {
        if let HeightMode::Fixed(h) = height {
            if h != self.reference_height {
                return Err(Error::domain(format!(
                    "engine was built for reference height {}, asked for {h}",
                    self.reference_height
                )));
            }
        }
        let months = match climate {
            ClimateMode::Actual => self.months_of(period)?,
            ClimateMode::LongTermAverage => 0..self.month_steps.len(),
        };
        let year = period.year();
        if climate == ClimateMode::LongTermAverage && !self.span.contains(year) {
            return Err(Error::PeriodNotCovered(period.to_string()));
        }
        let mut acc = NeumaierSum::new();
        for (i, &(commissioned, half_rho_a)) in self.factors.iter().enumerate() {
            let w = operating_weight(commissioned, year);
            if w == 0.0 {
                continue;
            }
            acc.add(w * half_rho_a * self.mean_cube(i, months.clone(), height));
        }
        Ok(acc.value())
    }

    pub fn annual(
        &self,
        years: YearSpan,
        height: HeightMode,
        climate: ClimateMode,
    ) -> Result<AnnualSeries> {
        let values = years
            .years()
            .map(|y| self.pin(Period::Year(y), height, climate))
            .collect::<Result<Vec<_>>>()?;
        AnnualSeries::new(years.start, values, Unit::Watt)
    }
}

fn accumulate_chunk(
    grid: &WindGrid,
    stencils: &[Stencil],
    hubs: &[f64],
    reference_height: f64,
    months: &[std::ops::Range<usize>],
) -> Vec<TurbineClimate> {
    let mut out: Vec<TurbineClimate> = stencils
        .iter()
        .map(|_| TurbineClimate {
            hub: Vec::with_capacity(months.len()),
            reference: Vec::with_capacity(months.len()),
            calm_hours: 0,
        })
        .collect();
    for steps in months {
        for ((stencil, &hub), acc) in stencils.iter().zip(hubs).zip(out.iter_mut()) {
            let mut s_hub = NeumaierSum::new();
            let mut s_ref = NeumaierSum::new();
            for t in steps.clone() {
                let (v10, v100) = stencil.speeds(grid, t);
                let (vh, calm) = speed_at_hub(v10, v100, hub);
                let (vr, _) = speed_at_hub(v10, v100, reference_height);
                s_hub.add(vh * vh * vh);
                s_ref.add(vr * vr * vr);
                acc.calm_hours += calm as u64;
            }
            acc.hub.push(s_hub.value());
            acc.reference.push(s_ref.value());
        }
    }
    out
}

/// Average kinetic input power of the fleet over `period`.
///
/// Long-term-average climate uses the mean of v³ over `opts.study`; the grid
/// must cover that whole span as well as the period.
pub fn aggregate_pin(
    grid: &WindGrid,
    fleet: &Fleet,
    period: Period,
    height: HeightMode,
    climate: ClimateMode,
    opts: &PinOptions,
) -> Result<f64> {
    let reference = match height {
        HeightMode::Fixed(h) => h,
        HeightMode::Hub => DEFAULT_REFERENCE_HEIGHT,
    };
    let span = match climate {
        ClimateMode::Actual => YearSpan::new(period.year(), period.year())?,
        ClimateMode::LongTermAverage => {
            if !opts.study.contains(period.year()) {
                return Err(Error::PeriodNotCovered(period.to_string()));
            }
            opts.study
        }
    };
    let engine = PinEngine::new(grid, fleet, span, reference, opts.workers)?;
    engine.pin(period, height, climate)
}

/// Monthly generated energy, stored in Wh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyEnergy {
    start: (i32, u32),
    wh: Vec<f64>,
}

impl MonthlyEnergy {
    pub fn new(start: (i32, u32), wh: Vec<f64>) -> Result<Self> {
        if wh.is_empty() {
            return Err(Error::NoGenerationData);
        }
        if !(1..=12).contains(&start.1) {
            return Err(Error::domain(format!("invalid month {}", start.1)));
        }
        Ok(Self { start, wh })
    }

    pub fn len(&self) -> usize {
        self.wh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wh.is_empty()
    }

    pub fn start(&self) -> (i32, u32) {
        self.start
    }

    fn offset(&self, year: i32, month: u32) -> i64 {
        (year as i64 * 12 + month as i64 - 1) - (self.start.0 as i64 * 12 + self.start.1 as i64 - 1)
    }

    /// Energy of one month in Wh.
    pub fn get(&self, year: i32, month: u32) -> Option<f64> {
        let i = self.offset(year, month);
        usize::try_from(i)
            .ok()
            .and_then(|i| self.wh.get(i).copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = ((i32, u32), f64)> + '_ {
        self.wh.iter().enumerate().map(move |(i, &v)| {
            let k = self.start.0 as i64 * 12 + self.start.1 as i64 - 1 + i as i64;
            (((k / 12) as i32, (k % 12) as u32 + 1), v)
        })
    }

    /// Writes the `year,month,net_generation_mwh` layout.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("year,month,net_generation_mwh\n");
        for ((y, m), wh) in self.iter() {
            s.push_str(&format!("{y},{m},{}\n", wh / 1e6));
        }
        s
    }
}

/// Reads `year,month,net_generation_mwh`. Rows may come in any order but must
/// form a gap-free run of months without duplicates.
pub fn parse_generation_csv<R: Read>(input: R) -> Result<MonthlyEnergy> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (cy, cm, ce) = match (col("year"), col("month"), col("net_generation_mwh")) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        _ if headers.is_empty() => return Err(Error::NoGenerationData),
        (a, b, c) => {
            a?;
            b?;
            c?;
            unreachable!()
        }
    };
    let mut rows: BTreeMap<(i32, u32), f64> = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let get = |c: usize| rec.get(c).unwrap_or("");
        let year: i32 = get(cy)
            .parse()
            .map_err(|_| Error::parse(row, "invalid year"))?;
        let month: u32 = get(cm)
            .parse()
            .map_err(|_| Error::parse(row, "invalid month"))?;
        if !(1..=12).contains(&month) {
            return Err(Error::parse(row, "month out of range"));
        }
        let mwh: f64 = get(ce)
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::parse(row, "invalid net_generation_mwh"))?;
        if rows.insert((year, month), mwh * 1e6).is_some() {
            return Err(Error::parse(
                row,
                format!("duplicate month {year}-{month:02}"),
            ));
        }
    }
    let first = *rows.keys().next().ok_or(Error::NoGenerationData)?;
    let mut expected = first;
    let mut wh = Vec::with_capacity(rows.len());
    for (&(y, m), &v) in &rows {
        if (y, m) != expected {
            return Err(Error::domain(format!(
                "missing generation month {}-{:02}",
                expected.0, expected.1
            )));
        }
        wh.push(v);
        expected = if m == 12 { (y + 1, 1) } else { (y, m + 1) };
    }
    MonthlyEnergy::new(first, wh)
}

/// Average output power over `period`, W.
pub fn pout_series(energy: &MonthlyEnergy, period: Period) -> Result<f64> {
    let months: Vec<(i32, u32)> = match period {
        Period::Year(y) => (1..=12).map(|m| (y, m)).collect(),
        Period::Month(y, m) => vec![(y, m)],
    };
    let mut total = NeumaierSum::new();
    for (y, m) in months {
        let e = energy
            .get(y, m)
            .ok_or_else(|| Error::domain(format!("missing generation month {y}-{m:02}")))?;
        total.add(e);
    }
    Ok(total.value() / period.hours())
}

pub fn pout_annual(energy: &MonthlyEnergy, years: YearSpan) -> Result<AnnualSeries> {
    let values = years
        .years()
        .map(|y| pout_series(energy, Period::Year(y)))
        .collect::<Result<Vec<_>>>()?;
    AnnualSeries::new(years.start, values, Unit::Watt)
}

fn density(p: f64, area: f64) -> Result<f64> {
    if !(area > 0.0) {
        return Err(Error::domain(format!("area must be positive, got {area}")));
    }
    Ok(p / area)
}

/// P_in / A, W/m².
pub fn input_power_density(p_in: f64, area: f64) -> Result<f64> {
    density(p_in, area)
}

/// P_out / A, W/m².
pub fn output_power_density(p_out: f64, area: f64) -> Result<f64> {
    density(p_out, area)
}

/// P_out / P_in. Values above the Betz limit are logged as a sign of
/// inconsistent inputs but still returned.
pub fn system_efficiency(p_out: f64, p_in: f64) -> Result<f64> {
    if !(p_in > 0.0) {
        return Err(Error::domain(format!(
            "power input must be positive, got {p_in}"
        )));
    }
    let e = p_out / p_in;
    if exceeds_betz(e) {
        warn!("system efficiency {e:.4} exceeds the Betz limit {BETZ_LIMIT:.4}");
    }
    Ok(e)
}

pub fn exceeds_betz(efficiency: f64) -> bool {
    efficiency > BETZ_LIMIT
}

/// Average output over installed capacity.
pub fn capacity_factor(p_out: f64, capacity: f64) -> Result<f64> {
    if !(capacity > 0.0) {
        return Err(Error::domain(format!(
            "capacity must be positive, got {capacity}"
        )));
    }
    Ok(p_out / capacity)
}

/// Applies a binary ratio year by year, naming the failing year on error.
pub fn ratio_series(
    num: &AnnualSeries,
    den: &AnnualSeries,
    unit: Unit,
    f: impl Fn(f64, f64) -> Result<f64>,
) -> Result<AnnualSeries> {
    num.ensure_aligned(den, "ratio")?;
    let values = num
        .iter()
        .zip(den.values())
        .map(|((year, a), &b)| f(a, b).map_err(|e| Error::domain(format!("year {year}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    AnnualSeries::new(num.start_year(), values, unit)
}

/// Monthly P_in (hub height, actual climate) over a span.
pub fn monthly_pin(engine: &PinEngine, years: YearSpan) -> Result<Vec<((i32, u32), f64)>> {
    years
        .months()
        .map(|(y, m)| {
            Ok((
                (y, m),
                engine.pin(Period::Month(y, m), HeightMode::Hub, ClimateMode::Actual)?,
            ))
        })
        .collect()
}

/// Monthly P_out over a span, W.
pub fn monthly_pout(energy: &MonthlyEnergy, years: YearSpan) -> Result<Vec<((i32, u32), f64)>> {
    years
        .months()
        .map(|(y, m)| Ok(((y, m), pout_series(energy, Period::Month(y, m))?)))
        .collect()
}

/// Hours in the calendar month, for converting monthly powers to energy.
pub fn month_hours(year: i32, month: u32) -> f64 {
    hours_in_month(year, month)
}

/// Annual aggregates feeding the decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAggregates {
    pub years: YearSpan,
    /// Actual climate at hub height.
    pub p_in: AnnualSeries,
    /// Long-term-average climate at hub height.
    pub p_in_avg: AnnualSeries,
    /// Long-term-average climate at the reference height.
    pub p_in_ref_avg: AnnualSeries,
    pub p_out: AnnualSeries,
    pub area: AnnualSeries,
    pub n: AnnualSeries,
    /// Installed capacity, W.
    pub capacity: AnnualSeries,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinetic_power_values() {
        assert_eq!(kinetic_power(1.0, 1.0).unwrap(), 0.6125);
        let p = kinetic_power(10.0, 7853.98).unwrap();
        assert!((p - 4_810_562.75).abs() < 1e-6, "{p}");
        assert_eq!(kinetic_power(0.0, 5.0).unwrap(), 0.0);
        assert!(kinetic_power(-1.0, 1.0).is_err());
        assert!(kinetic_power(1.0, -1.0).is_err());
    }

    #[test]
    fn kinetic_power_is_cubic() {
        for &(v, c) in &[(3.0, 2.0), (7.5, 0.5), (1.1, 3.3)] {
            let a = kinetic_power(c * v, 10.0).unwrap();
            let b = c * c * c * kinetic_power(v, 10.0).unwrap();
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn generation_parsing() {
        let e = parse_generation_csv(
            "year,month,net_generation_mwh\n2010,1,9000\n2010,2,8000\n".as_bytes(),
        )
        .unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e.get(2010, 1), Some(9000e6));
        assert_eq!(e.get(2010, 3), None);

        let dup = "year,month,net_generation_mwh\n2010,1,9000\n2010,1,8000\n";
        assert!(parse_generation_csv(dup.as_bytes()).is_err());
        let gap = "year,month,net_generation_mwh\n2010,1,9000\n2010,3,8000\n";
        assert!(parse_generation_csv(gap.as_bytes()).is_err());
        assert!(matches!(
            parse_generation_csv("".as_bytes()),
            Err(Error::NoGenerationData)
        ));
        assert!(matches!(
            parse_generation_csv("year,month,net_generation_mwh\n".as_bytes()),
            Err(Error::NoGenerationData)
        ));
    }

    #[test]
    fn generation_csv_round_trip() {
        let text = "year,month,net_generation_mwh\n2011,11,1.5\n2011,12,2\n2012,1,0.25\n";
        let e = parse_generation_csv(text.as_bytes()).unwrap();
        assert_eq!(e.to_csv_string(), text);
        let keys: Vec<_> = e.iter().map(|(k, _)| k).collect();
        assert_eq!(keys, [(2011, 11), (2011, 12), (2012, 1)]);
    }

    fn flat_year(year: i32, mwh_total: f64) -> MonthlyEnergy {
        let hours: Vec<f64> = (1..=12).map(|m| hours_in_month(year, m)).collect();
        let total: f64 = hours.iter().sum();
        MonthlyEnergy::new(
            (year, 1),
            hours.iter().map(|h| mwh_total * 1e6 * h / total).collect(),
        )
        .unwrap()
    }

    #[test]
    fn pout_uses_actual_hours() {
        let p = pout_series(&flat_year(2010, 8760.0), Period::Year(2010)).unwrap();
        assert!((p - 1e6).abs() < 1e-6);
        let p = pout_series(&flat_year(2012, 8784.0), Period::Year(2012)).unwrap();
        assert!((p - 1e6).abs() < 1e-6);
        let jan = MonthlyEnergy::new((2010, 1), vec![744e6]).unwrap();
        assert_eq!(pout_series(&jan, Period::Month(2010, 1)).unwrap(), 1e6);
        assert!(pout_series(&jan, Period::Year(2010)).is_err());
    }

    #[test]
    fn densities_and_ratios() {
        assert_eq!(input_power_density(313.6, 1.0).unwrap(), 313.6);
        assert_eq!(
            output_power_density(2.0 * 313.6, 2.0).unwrap(),
            output_power_density(313.6, 1.0).unwrap()
        );
        assert!(input_power_density(1.0, 0.0).is_err());
        assert_eq!(system_efficiency(100.0, 1000.0).unwrap(), 0.1);
        let e = system_efficiency(5.0, 5.0).unwrap();
        assert_eq!(e, 1.0);
        assert!(exceeds_betz(e));
        assert!(!exceeds_betz(0.5));
        assert!(system_efficiency(1.0, 0.0).is_err());
        assert_eq!(capacity_factor(50e6, 200e6).unwrap(), 0.25);
        assert_eq!(capacity_factor(0.0, 200e6).unwrap(), 0.0);
        assert!(capacity_factor(1.0, 0.0).is_err());
    }

    #[test]
    fn efficiency_equals_density_ratio() {
        for &(dout, din, a) in &[(12.5, 310.0, 4.0e7), (0.3, 90.0, 1.0), (77.0, 401.0, 3.3)] {
            let e = system_efficiency(dout * a, din * a).unwrap();
            assert!((e - dout / din).abs() <= 1e-15 * (dout / din));
        }
    }
}
