//! Synthetic fleets, wind grids and generation series with known ground
//! truth, and a deliberately naive P_in oracle.
//!
//! Randomness comes from [`SplitMix64`], a fixed 64-bit add/xor-shift/multiply
//! recurrence, so fixtures are identical on every platform:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! out = z ^ (z >> 31)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calendar::{hours_in_month, year_start, Period, YearSpan};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fleet::{annual_capacity, operating_weight, parse_turbine_csv, preprocess, Fleet};
use crate::pipeline::write_outputs;
use crate::powerflux::{
    kinetic_power, ClimateMode, HeightMode, PinEngine, DEFAULT_REFERENCE_HEIGHT,
};
use crate::validate::{standard_scenarios, ScenarioSpec, DEFAULT_LIFETIMES};
use crate::windgrid::{hub_height_speed, WindGrid};

/// Point-evaluation budget of [`brute_force_pin`].
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box-Muller (one draw per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridShape {
    pub n_lat: usize,
    pub n_lon: usize,
    pub lon_min: f64,
    pub lon_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
}

impl GridShape {
    fn axis(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn lons(&self) -> Vec<f64> {
        Self::axis(self.n_lon, self.lon_min, self.lon_max)
    }

    pub fn lats(&self) -> Vec<f64> {
        Self::axis(self.n_lat, self.lat_min, self.lat_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum WindModel {
    /// Fixed speeds at 10 m and 100 m, blowing from the west (v = 0).
    Constant { v10: f64, v100: f64 },
    /// 100 m speed `mean + amplitude · sin(2π t / period_hours)`; the 10 m
    /// speed follows from the power law with exponent `shear`.
    Sinusoidal {
        mean: f64,
        amplitude: f64,
        period_hours: f64,
        shear: f64,
    },
    /// Independent normal 100 m speed per cell and hour (clipped at 0) with a
    /// uniform random direction; 10 m speed via `shear`.
    SeededNoise { mean: f64, sd: f64, shear: f64 },
}

/// A quantity that changes linearly with commissioning year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub start: f64,
    pub per_year: f64,
}

impl Trend {
    pub fn at(&self, offset_years: i32) -> f64 {
        self.start + self.per_year * offset_years as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum EfficiencyModel {
    Constant {
        value: f64,
    },
    /// Linear from `first` in the first year to `last` in the last year.
    Linear {
        first: f64,
        last: f64,
    },
}

impl EfficiencyModel {
    pub fn at(&self, years: YearSpan, year: i32) -> f64 {
        match *self {
            EfficiencyModel::Constant { value } => value,
            EfficiencyModel::Linear { first, last } => {
                if years.len() == 1 {
                    first
                } else {
                    first + (last - first) * (year - years.start) as f64 / (years.len() - 1) as f64
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_turbines: usize,
    pub years: YearSpan,
    pub grid: GridShape,
    pub wind: WindModel,
    /// Speeds are scaled by `1 + spatial_gradient · (lat − lat_min) / (lat_max − lat_min)`.
    pub spatial_gradient: f64,
    pub hub_height: Trend,
    pub rotor_diameter: Trend,
    /// Capacity per swept area of every generated turbine, W/m².
    pub specific_power: f64,
    /// Probability that each meta parameter of a turbine is left empty.
    pub missing_share: f64,
    /// Probability that a turbine carries the decommissioned flag.
    #[serde(default)]
    pub decommissioned_share: f64,
    pub true_efficiency: EfficiencyModel,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_turbines: 40,
            years: YearSpan {
                start: 2010,
                end: 2012,
            },
            grid: GridShape {
                n_lat: 3,
                n_lon: 3,
                lon_min: -101.0,
                lon_max: -99.0,
                lat_min: 39.0,
                lat_max: 41.0,
            },
            wind: WindModel::Sinusoidal {
                mean: 8.0,
                amplitude: 2.5,
                period_hours: 24.0 * 9.5,
                shear: 0.14,
            },
            spatial_gradient: 0.2,
            hub_height: Trend {
                start: 80.0,
                per_year: 2.0,
            },
            rotor_diameter: Trend {
                start: 90.0,
                per_year: 3.0,
            },
            specific_power: 300.0,
            missing_share: 0.1,
            decommissioned_share: 0.05,
            true_efficiency: EfficiencyModel::Linear {
                first: 0.32,
                last: 0.30,
            },
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        let bad = |m: &str| Err(Error::domain(format!("synth spec: {m}")));
        if self.n_turbines == 0 || g.n_lat == 0 || g.n_lon == 0 {
            return bad("counts must be positive");
        }
        if !(g.lon_min <= g.lon_max && g.lat_min <= g.lat_max)
            || (g.n_lon > 1 && g.lon_min == g.lon_max)
            || (g.n_lat > 1 && g.lat_min == g.lat_max)
            || g.lon_min < -180.0
            || g.lon_max > 180.0
            || g.lat_min < -90.0
            || g.lat_max > 90.0
        {
            return bad("invalid bounding box");
        }
        let speeds_ok = match self.wind {
            WindModel::Constant { v10, v100 } => v10 >= 0.0 && v100 >= 0.0,
            WindModel::Sinusoidal {
                mean,
                amplitude,
                period_hours,
                ..
            } => mean >= 0.0 && amplitude >= 0.0 && period_hours > 0.0,
            WindModel::SeededNoise { mean, sd, .. } => mean >= 0.0 && sd >= 0.0,
        };
        if !speeds_ok || self.spatial_gradient < -1.0 {
            return bad("wind speeds must be non-negative");
        }
        for y in self.years.years() {
            let off = y - self.years.start;
            if !(self.hub_height.at(off) > 0.0 && self.rotor_diameter.at(off) > 0.0) {
                return bad("hub height and rotor diameter must stay positive");
            }
        }
        if !(0.0..1.0).contains(&self.missing_share)
            || !(0.0..=1.0).contains(&self.decommissioned_share)
            || !(self.specific_power > 0.0)
        {
            return bad("shares must be in [0, 1) and specific power positive");
        }
        Ok(())
    }

    fn spatial_factor(&self, lat: f64) -> f64 {
        let g = &self.grid;
        if g.lat_max == g.lat_min {
            1.0
        } else {
            1.0 + self.spatial_gradient * (lat - g.lat_min) / (g.lat_max - g.lat_min)
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Turbine registry CSV: `n_turbines` spread evenly over the years (earlier
/// years take the remainder), uniformly placed in the grid box.
pub fn generate_fleet(spec: &SynthSpec, seed: u64) -> Result<String> {
    spec.validate()?;
    let mut rng = SplitMix64::new(seed);
    let years = spec.years.len();
    let g = &spec.grid;
    let mut out =
        String::from("case_id,xlong,ylat,p_year,t_hh,t_rd,t_cap,is_decommissioned,d_year\n");
    let mut id = 0usize;
    for (i, year) in spec.years.years().enumerate() {
        let count = spec.n_turbines / years + usize::from(i < spec.n_turbines % years);
        let off = year - spec.years.start;
        let hub = spec.hub_height.at(off);
        let rotor = spec.rotor_diameter.at(off);
        let cap_kw = spec.specific_power * PI * rotor * rotor / 4.0 / 1e3;
        for _ in 0..count {
            id += 1;
            let lon = rng.uniform(g.lon_min, g.lon_max);
            let lat = rng.uniform(g.lat_min, g.lat_max);
            let mut keep = |v: f64| (rng.next_f64() >= spec.missing_share).then_some(v);
            let (h, d, c) = (keep(hub), keep(rotor), keep(cap_kw));
            let flagged = rng.next_f64() < spec.decommissioned_share;
            let _ = writeln!(
                out,
                "S{id:05},{lon},{lat},{year},{},{},{},{flagged},",
                cell(h),
                cell(d),
                cell(c)
            );
        }
    }
    Ok(out)
}

/// Hourly grid covering every year of the spec.
pub fn generate_windgrid(spec: &SynthSpec, seed: u64) -> Result<WindGrid> {
    spec.validate()?;
    let mut rng = SplitMix64::new(seed ^ 0x5752_4744);
    let lons = spec.grid.lons();
    let lats = spec.grid.lats();
    let t0 = year_start(spec.years.start);
    let n_time = ((year_start(spec.years.end + 1) - t0) / 3600) as usize;
    let cells = lats.len() * lons.len();
    let n = n_time * cells;
    let (mut u10, mut v10, mut u100, mut v100) =
        (vec![0f32; n], vec![0f32; n], vec![0f32; n], vec![0f32; n]);
    for t in 0..n_time {
        for (j, &lat) in lats.iter().enumerate() {
            let scale = spec.spatial_factor(lat);
            for i in 0..lons.len() {
                let k = t * cells + j * lons.len() + i;
                let (s10, s100, dir) = match spec.wind {
                    WindModel::Constant { v10, v100 } => (v10, v100, None),
                    WindModel::Sinusoidal {
                        mean,
                        amplitude,
                        period_hours,
                        shear,
                    } => {
                        let s = (mean + amplitude * (2.0 * PI * t as f64 / period_hours).sin())
                            .max(0.0);
                        (s * 0.1f64.powf(shear), s, None)
                    }
                    WindModel::SeededNoise { mean, sd, shear } => {
                        let s = (mean + sd * rng.normal()).max(0.0);
                        let theta = 2.0 * PI * rng.next_f64();
                        (s * 0.1f64.powf(shear), s, Some(theta))
                    }
                };
                let (s10, s100) = (s10 * scale, s100 * scale);
                match dir {
                    None => {
                        u10[k] = s10 as f32;
                        u100[k] = s100 as f32;
                    }
                    Some(th) => {
                        let (sin, cos) = th.sin_cos();
                        u10[k] = (s10 * cos) as f32;
                        v10[k] = (s10 * sin) as f32;
                        u100[k] = (s100 * cos) as f32;
                        v100[k] = (s100 * sin) as f32;
                    }
                }
            }
        }
    }
    WindGrid::new(lons, lats, t0, 3600, n_time, u10, v10, u100, v100)
}

/// Monthly generation CSV whose system efficiency is `efficiency` of each year:
/// energy = efficiency(year) · P_in(month) · hours(month).
pub fn generate_generation(
    fleet: &Fleet,
    grid: &WindGrid,
    efficiency: &EfficiencyModel,
    years: YearSpan,
    workers: usize,
) -> Result<String> {
    let engine = PinEngine::new(grid, fleet, years, DEFAULT_REFERENCE_HEIGHT, workers)?;
    let mut out = String::from("year,month,net_generation_mwh\n");
    for (y, m) in years.months() {
        let p = engine.pin(Period::Month(y, m), HeightMode::Hub, ClimateMode::Actual)?;
        let mwh = efficiency.at(years, y) * p * hours_in_month(y, m) / 1e6;
        let _ = writeln!(out, "{y},{m},{mwh}");
    }
    Ok(out)
}

/// Reference-source CSV derived from the synthetic fleet: capacity 2 % below
/// the all-turbines scenario and generation 1 % above the generated series.
pub fn generate_reference(fleet: &Fleet, years: YearSpan, generation_csv: &str) -> Result<String> {
    let cap = annual_capacity(fleet, years, &ScenarioSpec::default())?;
    let energy = crate::powerflux::parse_generation_csv(generation_csv.as_bytes())?;
    let mut out = String::from("year,installed_capacity_mw,generation_gwh\n");
    for (y, c) in cap.iter() {
        let wh: f64 = (1..=12).filter_map(|m| energy.get(y, m)).sum();
        let _ = writeln!(out, "{y},{},{}", c * 0.98, wh / 1e9 * 1.01);
    }
    Ok(out)
}

/// File names inside a bundle written by [`write_bundle`].
pub const BUNDLE_FILES: [&str; 6] = [
    "turbines.csv",
    "windgrid.wgrd",
    "generation.csv",
    "reference.csv",
    "spec.json",
    "run.conf",
];

/// Writes a complete synthetic input set under `dir` and returns the run
/// configuration for it (outputs go to `dir/report`). `run.conf` holds the
/// same configuration in file form.
pub fn write_bundle(spec: &SynthSpec, seed: u64, dir: &Path) -> Result<RunConfig> {
    let fleet_csv = generate_fleet(spec, seed)?;
    let grid = generate_windgrid(spec, seed)?;
    let (fleet, _) = preprocess(parse_turbine_csv(fleet_csv.as_bytes())?, &BTreeSet::new())?;
    let generation = generate_generation(&fleet, &grid, &spec.true_efficiency, spec.years, 1)?;
    let reference = generate_reference(&fleet, spec.years, &generation)?;
    let config = RunConfig {
        turbines: dir.join("turbines.csv"),
        extension: None,
        exclusions: None,
        windgrid: dir.join("windgrid.wgrd"),
        generation: dir.join("generation.csv"),
        reference: Some(dir.join("reference.csv")),
        study: spec.years,
        reference_height: DEFAULT_REFERENCE_HEIGHT,
        base_year: spec.years.start,
        scenarios: standard_scenarios(&DEFAULT_LIFETIMES),
        out: dir.join("report"),
        workers: 1,
    };
    let mut spec_json = serde_json::to_string_pretty(spec)?;
    spec_json.push('\n');
    let contents = [
        fleet_csv.into_bytes(),
        grid.to_bytes(),
        generation.into_bytes(),
        reference.into_bytes(),
        spec_json.into_bytes(),
        config.to_config_string(dir).into_bytes(),
    ];
    let files: BTreeMap<String, Vec<u8>> = BUNDLE_FILES
        .iter()
        .map(|s| s.to_string())
        .zip(contents)
        .collect();
    write_outputs(dir, &files)?;
    Ok(config)
}

/// Straightforward P_in: loop over hours, then turbines, interpolating every
/// variable from scratch and summing without compensation.
pub fn brute_force_pin(
    grid: &WindGrid,
    fleet: &Fleet,
    period: Period,
    height: HeightMode,
    climate: ClimateMode,
    study: YearSpan,
) -> Result<f64> {
    let height_of = |hub: f64| match height {
        HeightMode::Hub => hub,
        HeightMode::Fixed(h) => h,
    };
    let (a, b) = period.bounds();
    let period_steps = grid
        .steps_covering(a, b)
        .ok_or_else(|| Error::PeriodNotCovered(period.to_string()))?;
    let year = period.year();
    match climate {
        ClimateMode::Actual => {
            let evals = period_steps.len() as u64 * fleet.len() as u64;
            if evals > BRUTE_FORCE_LIMIT {
                return Err(Error::TooLarge {
                    evaluations: evals,
                    limit: BRUTE_FORCE_LIMIT,
                });
            }
            let mut total = 0.0;
            for t in period_steps.clone() {
                for turbine in fleet.turbines() {
                    let w = operating_weight(turbine.commissioning_year, year);
                    let v = hub_height_speed(
                        grid,
                        turbine.lon,
                        turbine.lat,
                        t,
                        height_of(turbine.hub_height),
                    )?;
                    total += w * kinetic_power(v, turbine.swept_area())?;
                }
            }
            Ok(total / period_steps.len() as f64)
        }
        ClimateMode::LongTermAverage => {
            let study_steps = grid
                .steps_covering(year_start(study.start), year_start(study.end + 1))
                .ok_or_else(|| Error::PeriodNotCovered(study.to_string()))?;
            let evals = study_steps.len() as u64 * fleet.len() as u64;
            if evals > BRUTE_FORCE_LIMIT {
                return Err(Error::TooLarge {
                    evaluations: evals,
                    limit: BRUTE_FORCE_LIMIT,
                });
            }
            let mut total = 0.0;
            for turbine in fleet.turbines() {
                let w = operating_weight(turbine.commissioning_year, year);
                let mut mean = 0.0;
                for t in study_steps.clone() {
                    let v = hub_height_speed(
                        grid,
                        turbine.lon,
                        turbine.lat,
                        t,
                        height_of(turbine.hub_height),
                    )?;
                    mean += kinetic_power(v, turbine.swept_area())?;
                }
                total += w * mean / study_steps.len() as f64;
            }
            Ok(total)
        }
    }
}
