use std::collections::BTreeSet;

use proptest::prelude::*;

use windfleet::calendar::{Period, YearSpan};
use windfleet::decomp::{additive_pin_decomposition, index_relative};
use windfleet::fleet::{
    annual_counts, annual_swept_area, imputation_bounds, preprocess, Field, Fleet, TurbineRecord,
};
use windfleet::powerflux::{aggregate_pin, kinetic_power, ClimateMode, HeightMode, PinOptions};
use windfleet::series::{AnnualSeries, Unit};
use windfleet::synth::{generate_fleet, generate_windgrid, GridShape, SynthSpec, Trend, WindModel};
use windfleet::validate::{
    missingness_report, relative_difference, scenario_capacity, ScenarioSpec,
};
use windfleet::windgrid::WindGrid;

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

type Row = (i32, Option<f64>, Option<f64>, Option<f64>, bool);

fn row() -> impl Strategy<Value = Row> {
    (
        2000i32..2012,
        proptest::option::weighted(0.8, 50.0f64..150.0),
        proptest::option::weighted(0.8, 40.0f64..160.0),
        proptest::option::weighted(0.8, 500.0f64..5000.0),
        proptest::bool::weighted(0.2),
    )
}

/// Records with every field observed at least once (the first record).
fn records() -> impl Strategy<Value = Vec<TurbineRecord>> {
    prop::collection::vec(row(), 1..40).prop_map(|rows| {
        let mut out = vec![TurbineRecord::new("r0", 0.5, 0.5)
            .commissioned(2005)
            .with_dimensions(90.0, 100.0, 2000.0)];
        for (i, (year, hub, rd, cap, decom)) in rows.into_iter().enumerate() {
            let mut r = TurbineRecord::new(format!("r{}", i + 1), 0.5, 0.5).commissioned(year);
            r.hub_height = hub;
            r.rotor_diameter = rd;
            r.capacity = cap;
            r.decommissioned = decom;
            out.push(r);
        }
        out
    })
}

fn fleet_of(records: Vec<TurbineRecord>) -> Fleet {
    preprocess(records, &BTreeSet::new()).unwrap().0
}

const YEARS: (i32, i32) = (1998, 2014);

fn years() -> YearSpan {
    YearSpan::new(YEARS.0, YEARS.1).unwrap()
}

fn annual(values: Vec<f64>, unit: Unit) -> AnnualSeries {
    AnnualSeries::new(2010, values, unit).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn imputed_fleet_is_complete(recs in records()) {
        let fleet = fleet_of(recs);
        for t in fleet.turbines() {
            prop_assert!(t.hub_height > 0.0 && t.rotor_diameter > 0.0 && t.capacity > 0.0);
            prop_assert!(t.imputed.iter().all(|f| Field::ALL.contains(f)));
        }
    }

    #[test]
    fn imputation_bounds_bracket_the_mean_fill(recs in records()) {
        let fleet = fleet_of(recs.clone());
        let complete = recs.iter().all(|r| r.rotor_diameter.is_some());
        for year in 2000..2012 {
            let (lo, hi) = imputation_bounds(&recs, year).unwrap();
            let mid: f64 = fleet
                .turbines()
                .iter()
                .filter(|t| t.commissioning_year == year)
                .map(|t| t.swept_area())
                .sum();
            let tol = 1e-12 * hi.max(1.0);
            prop_assert!(lo <= mid + tol && mid <= hi + tol, "{year}: {lo} {mid} {hi}");
            if complete {
                prop_assert!(rel(lo, hi) <= 1e-15 && rel(lo, mid) <= 1e-12);
            }
        }
    }

    #[test]
    fn counts_and_area_add_over_disjoint_fleets(recs in records(), split in 0usize..40) {
        let fleet = fleet_of(recs);
        let split = split.min(fleet.len());
        let ts = fleet.original_records();
        let (a, b) = ts.split_at(split);
        let whole_n = annual_counts(&fleet, years()).unwrap();
        let whole_a = annual_swept_area(&fleet, years()).unwrap();
        let part = |rs: &[TurbineRecord]| {
            if rs.is_empty() {
                return (vec![0.0; years().len()], vec![0.0; years().len()]);
            }
            // Parts keep the whole fleet's imputed values.
            let imputed: Vec<TurbineRecord> = rs
                .iter()
                .map(|r| {
                    let t = fleet.turbines().iter().find(|t| t.id == r.id).unwrap();
                    TurbineRecord::new(&t.id, t.lon, t.lat)
                        .commissioned(t.commissioning_year)
                        .with_dimensions(t.hub_height, t.rotor_diameter, t.capacity)
                })
                .collect();
            let f = Fleet::from_records(imputed).unwrap();
            (
                annual_counts(&f, years()).unwrap().values().to_vec(),
                annual_swept_area(&f, years()).unwrap().values().to_vec(),
            )
        };
        let (na, aa) = part(a);
        let (nb, ab) = part(b);
        for i in 0..years().len() {
            prop_assert_eq!(na[i] + nb[i], whole_n.values()[i]);
            prop_assert!(rel(aa[i] + ab[i], whole_a.values()[i]) <= 1e-12);
        }
    }

    #[test]
    fn commissioning_year_counts_half(year in 2000i32..2012) {
        let fleet = Fleet::from_records(vec![TurbineRecord::new("x", 0.0, 0.0)
            .commissioned(year)
            .with_dimensions(80.0, 90.0, 2000.0)])
        .unwrap();
        let n = annual_counts(&fleet, years()).unwrap();
        for (y, v) in n.iter() {
            let expected = if y < year { 0.0 } else if y == year { 0.5 } else { 1.0 };
            prop_assert_eq!(v, expected);
        }
    }

    #[test]
    fn scenarios_only_remove_capacity(recs in records(), l1 in 1u32..30, dl in 1u32..10) {
        let fleet = fleet_of(recs);
        let cap = |s: ScenarioSpec| scenario_capacity(&fleet, years(), &s).unwrap();
        let all = cap(ScenarioSpec::default());
        let long = cap(ScenarioSpec::with_lifetime(l1 + dl));
        let short = cap(ScenarioSpec::with_lifetime(l1));
        let dropped = cap(ScenarioSpec::dropping_decommissioned());
        let discard = cap(ScenarioSpec::default().discarding_missing_capacity());
        for i in 0..years().len() {
            let v = all.values()[i];
            prop_assert!(short.values()[i] <= long.values()[i]);
            prop_assert!(long.values()[i] <= v);
            prop_assert!(dropped.values()[i] <= v);
            prop_assert!(discard.values()[i] <= v);
        }
    }

    #[test]
    fn missingness_ignores_imputation(recs in records()) {
        let fleet = fleet_of(recs.clone());
        let before = missingness_report(&recs);
        let after = missingness_report(&fleet.original_records());
        prop_assert_eq!(&before, &after);
        for row in &before {
            for f in Field::ALL {
                prop_assert!((0.0..=1.0).contains(&row.share(f)));
            }
        }
    }

    #[test]
    fn relative_difference_of_a_series_with_itself_is_zero(
        v in prop::collection::vec(1e-3f64..1e9, 1..20)
    ) {
        let a = annual(v, Unit::Megawatt);
        let d = relative_difference(&a, &a).unwrap();
        prop_assert!(d.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn kinetic_power_is_cubic(v in 0.0f64..40.0, c in 0.0f64..5.0, area in 1.0f64..2e4) {
        let a = kinetic_power(c * v, area).unwrap();
        let b = c * c * c * kinetic_power(v, area).unwrap();
        prop_assert!(rel(a, b) <= 1e-12);
    }

    #[test]
    fn base_year_origin(
        v in prop::collection::vec(1e3f64..1e9, 1..12),
        base in 0usize..12,
    ) {
        let s = annual(v, Unit::Watt);
        let base = 2010 + (base % s.len()) as i32;
        let idx = index_relative(&s, base).unwrap();
        prop_assert_eq!(idx.get(base), Some(100.0));
        let area = s.map(Unit::SquareMetre, |x| x / 300.0).unwrap();
        let e = additive_pin_decomposition(&s, &s, &s, &area, base).unwrap();
        prop_assert_eq!(e.new_locations.get(base), Some(0.0));
    }
}

fn small_spec(wind: WindModel) -> SynthSpec {
    SynthSpec {
        n_turbines: 12,
        years: YearSpan::new(2010, 2011).unwrap(),
        grid: GridShape {
            n_lat: 3,
            n_lon: 3,
            lon_min: 0.0,
            lon_max: 2.0,
            lat_min: 40.0,
            lat_max: 42.0,
        },
        wind,
        hub_height: Trend {
            start: 70.0,
            per_year: 10.0,
        },
        ..SynthSpec::default()
    }
}

fn pin(grid: &WindGrid, fleet: &Fleet, height: HeightMode, climate: ClimateMode) -> f64 {
    let opts = PinOptions {
        study: YearSpan::new(2010, 2011).unwrap(),
        workers: 3,
    };
    aggregate_pin(grid, fleet, Period::Year(2011), height, climate, &opts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn pin_is_additive_and_order_free(seed in any::<u64>(), split in 1usize..11) {
        let spec = small_spec(WindModel::SeededNoise { mean: 7.0, sd: 2.0, shear: 0.15 });
        let grid = generate_windgrid(&spec, seed).unwrap();
        let csv = generate_fleet(&spec, seed).unwrap();
        let fleet = fleet_of(windfleet::fleet::parse_turbine_csv(csv.as_bytes()).unwrap());
        let ts: Vec<TurbineRecord> = fleet
            .turbines()
            .iter()
            .map(|t| {
                TurbineRecord::new(&t.id, t.lon, t.lat)
                    .commissioned(t.commissioning_year)
                    .with_dimensions(t.hub_height, t.rotor_diameter, t.capacity)
            })
            .collect();
        let split = split.min(ts.len() - 1);
        let whole = Fleet::from_records(ts.clone()).unwrap();
        let a = Fleet::from_records(ts[..split].to_vec()).unwrap();
        let b = Fleet::from_records(ts[split..].to_vec()).unwrap();
        let reversed = Fleet::from_records(ts.iter().rev().cloned().collect()).unwrap();
        for height in [HeightMode::Hub, HeightMode::Fixed(76.0)] {
            for climate in [ClimateMode::Actual, ClimateMode::LongTermAverage] {
                let w = pin(&grid, &whole, height, climate);
                let parts = pin(&grid, &a, height, climate) + pin(&grid, &b, height, climate);
                prop_assert!(rel(w, parts) <= 1e-12);
                prop_assert!(rel(w, pin(&grid, &reversed, height, climate)) <= 1e-12);
            }
        }
    }

    #[test]
    fn steady_wind_has_no_annual_variation(v10 in 2.0f64..12.0, ratio in 1.0f64..1.6) {
        let spec = small_spec(WindModel::Constant { v10, v100: v10 * ratio });
        let grid = generate_windgrid(&spec, 0).unwrap();
        let csv = generate_fleet(&spec, 0).unwrap();
        let fleet = fleet_of(windfleet::fleet::parse_turbine_csv(csv.as_bytes()).unwrap());
        for height in [HeightMode::Hub, HeightMode::Fixed(76.0)] {
            let actual = pin(&grid, &fleet, height, ClimateMode::Actual);
            let avg = pin(&grid, &fleet, height, ClimateMode::LongTermAverage);
            prop_assert!(rel(actual, avg) <= 1e-12, "{actual} vs {avg}");
        }
    }

    #[test]
    fn generators_are_deterministic(seed in any::<u64>()) {
        let spec = small_spec(WindModel::SeededNoise { mean: 6.0, sd: 3.0, shear: 0.1 });
        prop_assert_eq!(generate_fleet(&spec, seed).unwrap(), generate_fleet(&spec, seed).unwrap());
        let g1 = generate_windgrid(&spec, seed).unwrap().to_bytes();
        let g2 = generate_windgrid(&spec, seed).unwrap().to_bytes();
        prop_assert!(g1 == g2);
        let back = WindGrid::from_bytes(&g1).unwrap().to_bytes();
        prop_assert!(back == g1);
    }
}
