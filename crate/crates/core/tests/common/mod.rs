#![allow(dead_code)]

use std::path::Path;

use windfleet::calendar::YearSpan;
use windfleet::config::RunConfig;
use windfleet::synth::{write_bundle, EfficiencyModel, GridShape, SynthSpec, Trend, WindModel};

/// Seed of the checked-in golden fixture.
pub const FIXTURE_SEED: u64 = 2024;

/// Small but non-trivial fixture: five years, noisy wind, missing values
/// and a declining efficiency.
pub fn fixture_spec() -> SynthSpec {
    SynthSpec {
        n_turbines: 30,
        years: YearSpan::new(2010, 2014).unwrap(),
        grid: GridShape {
            n_lat: 3,
            n_lon: 4,
            lon_min: 5.0,
            lon_max: 8.0,
            lat_min: 50.0,
            lat_max: 52.0,
        },
        wind: WindModel::SeededNoise {
            mean: 7.5,
            sd: 2.5,
            shear: 0.15,
        },
        spatial_gradient: 0.25,
        hub_height: Trend {
            start: 80.0,
            per_year: 3.0,
        },
        rotor_diameter: Trend {
            start: 85.0,
            per_year: 4.0,
        },
        specific_power: 320.0,
        missing_share: 0.15,
        decommissioned_share: 0.1,
        true_efficiency: EfficiencyModel::Linear {
            first: 0.33,
            last: 0.29,
        },
    }
}

pub fn fixture_bundle(dir: &Path) -> RunConfig {
    write_bundle(&fixture_spec(), FIXTURE_SEED, dir).expect("fixture bundle")
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
