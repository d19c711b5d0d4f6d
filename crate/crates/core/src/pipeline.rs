//! End-to-end run: fleet → wind grid → input/output power → decomposition →
//! trends → validation, written as `report.json`, tidy CSVs and SVG figures.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::calendar::YearSpan;
use crate::config::RunConfig;
use crate::decomp::{
    additive_pin_decomposition, index_relative, multiplicative_decomposition, tidy_csv, waterfall,
    waterfall_csv, DecompositionResult,
};
use crate::error::{Error, Result};
use crate::fleet::{
    annual_capacity, annual_counts, annual_swept_area, merge_extension, parse_exclusions,
    parse_turbine_csv, preprocess, specific_power, swept_area_bounds, Fleet, ImputationReport,
    MergeReport, Provenance, TurbineRecord,
};
use crate::plots::{slope_label, Bar, BarMode, Chart, Layer};
use crate::powerflux::{
    capacity_factor, input_power_density, monthly_pin, monthly_pout, output_power_density,
    parse_generation_csv, pout_annual, ratio_series, system_efficiency, ClimateMode, HeightMode,
    MonthlyEnergy, PinEngine, PowerAggregates,
};
use crate::series::{AnnualSeries, Unit};
use crate::trends::{
    counterfactual_efficiency, mean_of_ratios, pearson, ratio_of_sums, trend_fit, Counterfactual,
    OlsFit,
};
use crate::validate::{
    missingness_csv, missingness_report, parse_reference_csv, relative_difference, restrict,
    run_scenarios, scenarios_csv, MissingnessRow, ReferenceData, ScenarioResult, ScenarioSpec,
};
use crate::windgrid::{load_windgrid, WindGrid};

pub const SCHEMA_VERSION: u32 = 1;

/// Pipeline step an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Fleet,
    Windgrid,
    Generation,
    Reference,
    Powerflux,
    Decomp,
    Trends,
    Validate,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Fleet => "fleet",
            Stage::Windgrid => "windgrid",
            Stage::Generation => "generation",
            Stage::Reference => "reference",
            Stage::Powerflux => "powerflux",
            Stage::Decomp => "decomp",
            Stage::Trends => "trends",
            Stage::Validate => "validate",
            Stage::Output => "output",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage}: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }
}

pub trait StageContext<T> {
    fn stage(self, stage: Stage) -> std::result::Result<T, PipelineError>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: Stage) -> std::result::Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

/// Reads a whole file, reporting a missing path as [`Error::NotFound`].
pub fn read_input(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

/// Preprocessed fleet plus what was needed to get there.
#[derive(Debug, Clone)]
pub struct FleetInputs {
    pub fleet: Fleet,
    pub imputation: ImputationReport,
    pub merge: Option<MergeReport>,
    /// Records after merging, before exclusions and imputation.
    pub records: Vec<TurbineRecord>,
}

pub fn load_fleet(
    turbines: &Path,
    extension: Option<&Path>,
    exclusions: Option<&Path>,
) -> Result<FleetInputs> {
    let mut records = parse_turbine_csv(read_input(turbines)?.as_slice())?;
    let mut merge = None;
    if let Some(p) = extension {
        let ext = parse_turbine_csv(read_input(p)?.as_slice())?;
        let (merged, report) = merge_extension(records, ext);
        records = merged;
        merge = Some(report);
    }
    let excluded: BTreeSet<String> = match exclusions {
        Some(p) => parse_exclusions(&String::from_utf8_lossy(&read_input(p)?)),
        None => BTreeSet::new(),
    };
    let (fleet, imputation) = preprocess(records.clone(), &excluded)?;
    Ok(FleetInputs {
        fleet,
        imputation,
        merge,
        records,
    })
}

pub fn load_generation(path: &Path) -> Result<MonthlyEnergy> {
    parse_generation_csv(read_input(path)?.as_slice())
}

pub fn load_reference(path: &Path) -> Result<ReferenceData> {
    parse_reference_csv(read_input(path)?.as_slice())
}

/// P_in at hub height (actual and long-term climate) and at the reference height.
pub fn input_aggregates(
    engine: &PinEngine,
    study: YearSpan,
) -> Result<(AnnualSeries, AnnualSeries, AnnualSeries)> {
    let h = HeightMode::Fixed(engine.reference_height());
    let p_in = engine.annual(study, HeightMode::Hub, ClimateMode::Actual)?;
    let p_in_avg = engine.annual(study, HeightMode::Hub, ClimateMode::LongTermAverage)?;
    let p_in_ref_avg = engine.annual(study, h, ClimateMode::LongTermAverage)?;
    Ok((p_in, p_in_avg, p_in_ref_avg))
}

pub fn power_aggregates(
    engine: &PinEngine,
    fleet: &Fleet,
    energy: &MonthlyEnergy,
    study: YearSpan,
) -> Result<PowerAggregates> {
    let (p_in, p_in_avg, p_in_ref_avg) = input_aggregates(engine, study)?;
    let capacity_mw = annual_capacity(fleet, study, &ScenarioSpec::default())?;
    Ok(PowerAggregates {
        years: study,
        p_in,
        p_in_avg,
        p_in_ref_avg,
        p_out: pout_annual(energy, study)?,
        area: annual_swept_area(fleet, study)?,
        n: annual_counts(fleet, study)?,
        capacity: capacity_mw.map(Unit::Watt, |v| v * 1e6)?,
    })
}

pub fn decompose(agg: &PowerAggregates, base_year: i32) -> Result<DecompositionResult> {
    let factors = multiplicative_decomposition(&agg.n, &agg.area, &agg.p_in, &agg.p_out)?;
    let indexed = factors.indexed(base_year)?;
    let additive = additive_pin_decomposition(
        &agg.p_in,
        &agg.p_in_avg,
        &agg.p_in_ref_avg,
        &agg.area,
        base_year,
    )?;
    Ok(DecompositionResult {
        factors,
        indexed,
        additive,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FleetSummary {
    pub turbines: usize,
    pub provenance: Provenance,
    pub merge: Option<MergeReport>,
    pub imputation: ImputationReport,
    /// Turbine-hours where zero reference wind forced zero shear.
    pub calm_hours: u64,
    /// Swept area with missing rotor diameters set to the cohort minimum / maximum.
    pub swept_area_low: AnnualSeries,
    pub swept_area_high: AnnualSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonthlyRow {
    pub year: i32,
    pub month: u32,
    pub p_in: f64,
    pub p_out: f64,
    pub input_power_density: f64,
    /// `None` where P_in is zero.
    pub system_efficiency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendSummary {
    /// Fits against calendar year; absent for single-year runs.
    pub output_power_density: Option<OlsFit>,
    pub input_power_density: Option<OlsFit>,
    pub system_efficiency: Option<OlsFit>,
    /// Efficiency at constant input power density; needs three years.
    pub counterfactual: Option<Counterfactual>,
    pub counterfactual_trend: Option<OlsFit>,
    /// Pearson R of monthly efficiency against monthly input power density.
    pub monthly_correlation: Option<f64>,
    /// Σ P_out / Σ P_in over the study years.
    pub efficiency_ratio_of_sums: f64,
    /// Unweighted mean of the annual efficiencies.
    pub efficiency_mean_of_ratios: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationSummary {
    pub scenarios: Vec<ScenarioResult>,
    /// P_out against the reference generation, %.
    pub generation_relative_difference: Option<AnnualSeries>,
    pub missingness: Vec<MissingnessRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub study: YearSpan,
    pub base_year: i32,
    pub reference_height: f64,
    pub fleet: FleetSummary,
    pub series: BTreeMap<String, AnnualSeries>,
    pub decomposition: DecompositionResult,
    pub trends: TrendSummary,
    pub validation: ValidationSummary,
    pub monthly: Vec<MonthlyRow>,
}

fn optional_fit(series: &AnnualSeries) -> Result<Option<OlsFit>> {
    if series.len() < 2 {
        return Ok(None);
    }
    trend_fit(series).map(Some)
}

fn monthly_rows(
    engine: &PinEngine,
    energy: &MonthlyEnergy,
    agg: &PowerAggregates,
) -> Result<Vec<MonthlyRow>> {
    let pin = monthly_pin(engine, agg.years)?;
    let pout = monthly_pout(energy, agg.years)?;
    pin.into_iter()
        .zip(pout)
        .map(|(((year, month), p_in), (_, p_out))| {
            let area = agg.area.get(year).expect("aligned");
            Ok(MonthlyRow {
                year,
                month,
                p_in,
                p_out,
                input_power_density: input_power_density(p_in, area)?,
                system_efficiency: (p_in > 0.0).then(|| p_out / p_in),
            })
        })
        .collect()
}

fn trend_summary(
    factors_density: &AnnualSeries,
    output_density: &AnnualSeries,
    efficiency: &AnnualSeries,
    agg: &PowerAggregates,
    monthly: &[MonthlyRow],
) -> Result<TrendSummary> {
    let counterfactual = if efficiency.len() >= 3 {
        Some(counterfactual_efficiency(efficiency, factors_density)?)
    } else {
        None
    };
    let counterfactual_trend = match &counterfactual {
        Some(c) => optional_fit(&c.efficiency)?,
        None => None,
    };
    let (xs, ys): (Vec<f64>, Vec<f64>) = monthly
        .iter()
        .filter_map(|m| m.system_efficiency.map(|e| (m.input_power_density, e)))
        .unzip();
    let monthly_correlation = pearson(&xs, &ys).ok();
    Ok(TrendSummary {
        output_power_density: optional_fit(output_density)?,
        input_power_density: optional_fit(factors_density)?,
        system_efficiency: optional_fit(efficiency)?,
        counterfactual,
        counterfactual_trend,
        monthly_correlation,
        efficiency_ratio_of_sums: ratio_of_sums(agg.p_out.values(), agg.p_in.values())?,
        efficiency_mean_of_ratios: mean_of_ratios(agg.p_out.values(), agg.p_in.values())?,
    })
}

/// Everything a run produces, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    /// Relative path → contents, in write order.
    pub files: BTreeMap<String, Vec<u8>>,
}

/// Runs all stages and renders the output files in memory.
pub fn compute(config: &RunConfig) -> std::result::Result<RunOutput, PipelineError> {
    let inputs = load_fleet(
        &config.turbines,
        config.extension.as_deref(),
        config.exclusions.as_deref(),
    )
    .stage(Stage::Fleet)?;
    let grid: WindGrid = load_windgrid(&config.windgrid).stage(Stage::Windgrid)?;
    let energy = load_generation(&config.generation).stage(Stage::Generation)?;
    let reference = config
        .reference
        .as_deref()
        .map(load_reference)
        .transpose()
        .stage(Stage::Reference)?;
    let report = analyse(&inputs, &grid, &energy, reference.as_ref(), config)?;
    let files = render(&report).stage(Stage::Output)?;
    Ok(RunOutput { report, files })
}

/// Analysis on already loaded inputs.
pub fn analyse(
    inputs: &FleetInputs,
    grid: &WindGrid,
    energy: &MonthlyEnergy,
    reference: Option<&ReferenceData>,
    config: &RunConfig,
) -> std::result::Result<Report, PipelineError> {
    let fleet = &inputs.fleet;
    let study = config.study;
    let engine = PinEngine::new(grid, fleet, study, config.reference_height, config.workers)
        .stage(Stage::Powerflux)?;
    let agg = power_aggregates(&engine, fleet, energy, study).stage(Stage::Powerflux)?;
    let monthly = monthly_rows(&engine, energy, &agg).stage(Stage::Powerflux)?;

    let decomposition = decompose(&agg, config.base_year).stage(Stage::Decomp)?;
    let f = &decomposition.factors;
    let w_m2 = Unit::WattPerSquareMetre;
    let output_density =
        ratio_series(&agg.p_out, &agg.area, w_m2, output_power_density).stage(Stage::Powerflux)?;
    let input_density =
        ratio_series(&agg.p_in, &agg.area, w_m2, input_power_density).stage(Stage::Powerflux)?;
    let efficiency = ratio_series(
        &agg.p_out,
        &agg.p_in,
        Unit::Dimensionless,
        system_efficiency,
    )
    .stage(Stage::Powerflux)?;
    let cf = ratio_series(
        &agg.p_out,
        &agg.capacity,
        Unit::Dimensionless,
        capacity_factor,
    )
    .stage(Stage::Powerflux)?;
    let sp = ratio_series(
        &agg.capacity,
        &agg.area,
        Unit::WattPerSquareMetre,
        specific_power,
    )
    .stage(Stage::Powerflux)?;
    let rel = f
        .identity_max_rel_error
        .max(decomposition.additive.identity_max_rel_error);
    if rel > crate::decomp::IDENTITY_TOLERANCE {
        return Err(Error::Invariant(format!(
            "decomposition identity off by {rel:e}"
        )))
        .stage(Stage::Decomp);
    }

    let trends = trend_summary(
        &f.input_density,
        &output_density,
        &efficiency,
        &agg,
        &monthly,
    )
    .stage(Stage::Trends)?;

    let scenarios =
        run_scenarios(fleet, study, &config.scenarios, reference).stage(Stage::Validate)?;
    let generation_relative_difference =
        match reference.and_then(|r| r.generation_power_series(study)) {
            Some(g) => Some(
                restrict(&agg.p_out, g.span())
                    .and_then(|p| relative_difference(&p, &g))
                    .stage(Stage::Validate)?,
            ),
            None => None,
        };
    let (swept_area_low, swept_area_high) =
        swept_area_bounds(fleet, study).stage(Stage::Validate)?;

    let mut series = BTreeMap::new();
    for (name, s) in [
        ("p_in", &agg.p_in),
        ("p_in_avg", &agg.p_in_avg),
        ("p_in_ref_avg", &agg.p_in_ref_avg),
        ("p_out", &agg.p_out),
        ("swept_area", &agg.area),
        ("turbines", &agg.n),
        ("capacity", &agg.capacity),
        ("output_power_density", &output_density),
        ("input_power_density", &input_density),
        ("system_efficiency", &efficiency),
        ("capacity_factor", &cf),
        ("specific_power", &sp),
    ] {
        series.insert(name.to_string(), s.clone());
    }
    if let Some(c) = &trends.counterfactual {
        series.insert(
            "counterfactual_efficiency".to_string(),
            c.efficiency.clone(),
        );
    }

    Ok(Report {
        schema_version: SCHEMA_VERSION,
        study,
        base_year: config.base_year,
        reference_height: config.reference_height,
        fleet: FleetSummary {
            turbines: fleet.len(),
            provenance: *fleet.provenance(),
            merge: inputs.merge,
            imputation: inputs.imputation.clone(),
            calm_hours: engine.calm_hours(),
            swept_area_low,
            swept_area_high,
        },
        series,
        decomposition,
        trends,
        validation: ValidationSummary {
            scenarios,
            generation_relative_difference,
            missingness: missingness_report(&inputs.records),
        },
        monthly,
    })
}

pub fn monthly_csv(rows: &[MonthlyRow]) -> String {
    let mut s =
        String::from("year,month,p_in_w,p_out_w,input_power_density_w_m2,system_efficiency\n");
    for r in rows {
        let e = r
            .system_efficiency
            .map(|e| e.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{e}",
            r.year, r.month, r.p_in, r.p_out, r.input_power_density
        );
    }
    s
}

/// `scenario,year,value` rows of relative differences in %.
pub fn relative_difference_csv(v: &ValidationSummary) -> String {
    let mut s = String::from("scenario,year,value\n");
    for r in &v.scenarios {
        if let Some(d) = &r.relative_difference {
            for (y, x) in d.iter() {
                let _ = writeln!(s, "{},{y},{x}", r.scenario);
            }
        }
    }
    if let Some(d) = &v.generation_relative_difference {
        for (y, x) in d.iter() {
            let _ = writeln!(s, "generation,{y},{x}");
        }
    }
    s
}

/// All output files for a report.
pub fn render(report: &Report) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut files = BTreeMap::new();
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    files.insert("report.json".to_string(), json.into_bytes());
    let mut trends = serde_json::to_string_pretty(&report.trends)?;
    trends.push('\n');
    files.insert("trends.json".to_string(), trends.into_bytes());
    for (name, s) in &report.series {
        files.insert(format!("series/{name}.csv"), s.to_csv_string().into_bytes());
    }
    let d = &report.decomposition;
    files.insert("decomposition.csv".to_string(), tidy_csv(d).into_bytes());
    files.insert(
        "waterfall.csv".to_string(),
        waterfall_csv(&waterfall(&d.additive)).into_bytes(),
    );
    files.insert(
        "scenarios.csv".to_string(),
        scenarios_csv(&report.validation.scenarios).into_bytes(),
    );
    files.insert(
        "relative_difference.csv".to_string(),
        relative_difference_csv(&report.validation).into_bytes(),
    );
    files.insert(
        "missingness.csv".to_string(),
        missingness_csv(&report.validation.missingness).into_bytes(),
    );
    files.insert(
        "monthly.csv".to_string(),
        monthly_csv(&report.monthly).into_bytes(),
    );
    for (name, chart) in emit_plots(report)? {
        files.insert(format!("figures/{name}.svg"), chart.to_svg().into_bytes());
    }
    Ok(files)
}

fn points(s: &AnnualSeries) -> Vec<(f64, f64)> {
    s.iter().map(|(y, v)| (y as f64, v)).collect()
}

fn trend_line(s: &AnnualSeries, fit: &OlsFit) -> Vec<(f64, f64)> {
    [s.start_year(), s.end_year()]
        .iter()
        .map(|&y| (y as f64, fit.predict(y as f64)))
        .collect()
}

/// One chart per figure, keyed by file stem.
pub fn emit_plots(report: &Report) -> Result<Vec<(String, Chart)>> {
    let d = &report.decomposition;
    let t = &report.trends;
    let series = |k: &str| report.series.get(k).expect("series present");
    let mut out = Vec::new();

    let od = series("output_power_density");
    let mut c = Chart::new("Output power density", "year", "W/m2")
        .layer(Layer::line("P_out / A", points(od)));
    if let Some(fit) = &t.output_power_density {
        c = c
            .layer(Layer::dashed("linear trend", trend_line(od, fit)))
            .note(format!("trend {}", slope_label(fit.slope)));
    }
    out.push(("output_power_density".to_string(), c));

    let mut c = Chart::new(
        format!("Driving factors, {} = 100", d.indexed.base_year),
        "year",
        "%",
    );
    for (name, s) in [
        ("turbines", &d.indexed.n),
        ("area per turbine", &d.indexed.area_per_turbine),
        ("input power density", &d.indexed.input_density),
        ("system efficiency", &d.indexed.efficiency),
    ] {
        c = c.layer(Layer::line(name, points(s)));
    }
    c = c.layer(Layer::dashed(
        "power output",
        points(&index_relative(series("p_out"), d.indexed.base_year)?),
    ));
    out.push(("factors_indexed".to_string(), c));

    let e = series("system_efficiency");
    let mut c = Chart::new("System efficiency", "year", "P_out / P_in")
        .layer(Layer::line("system efficiency", points(e)));
    if let Some(fit) = &t.system_efficiency {
        c = c.note(format!("trend {}", slope_label(fit.slope)));
    }
    if let Some(cf) = &t.counterfactual {
        c = c.layer(Layer::dashed(
            "constant input density",
            points(&cf.efficiency),
        ));
    }
    if let Some(fit) = &t.counterfactual_trend {
        c = c.note(format!("counterfactual {}", slope_label(fit.slope)));
    }
    out.push(("system_efficiency".to_string(), c));

    let a = &d.additive;
    let bars = |s: &AnnualSeries| {
        s.iter()
            .map(|(y, v)| Bar {
                x: y as f64,
                bottom: 0.0,
                top: v,
            })
            .collect()
    };
    let mut c = Chart::new("Input power density effects", "year", "W/m2");
    for (name, s) in [
        ("new locations", &a.new_locations),
        ("hub height", &a.hub_height),
        ("annual variation", &a.annual_variation),
    ] {
        c = c.layer(Layer::Bars {
            name: name.to_string(),
            bars: bars(s),
        });
    }
    c.zero_line = true;
    out.push(("input_density_effects".to_string(), c));

    let segments = waterfall(a);
    let mut c = Chart::new("Input power density build-up", "year", "W/m2");
    for name in [
        "baseline",
        "new_locations",
        "hub_height",
        "annual_variation",
    ] {
        c = c.layer(Layer::Bars {
            name: name.replace('_', " "),
            bars: segments
                .iter()
                .filter(|s| s.segment == name)
                .map(|s| Bar {
                    x: s.year as f64,
                    bottom: s.bottom,
                    top: s.top,
                })
                .collect(),
        });
    }
    c.bar_mode = BarMode::Overlay;
    out.push(("waterfall".to_string(), c));

    let v = &report.validation;
    let mut c = Chart::new("Difference to reference source", "year", "%");
    for r in &v.scenarios {
        if let Some(s) = &r.relative_difference {
            c = c.layer(Layer::line(r.scenario.replace('_', " "), points(s)));
        }
    }
    if let Some(s) = &v.generation_relative_difference {
        c = c.layer(Layer::dashed("generation", points(s)));
    }
    c.zero_line = true;
    out.push(("relative_difference".to_string(), c));

    let mut c = Chart::new(
        "Missing meta parameters",
        "year",
        "share of operating turbines",
    );
    for (name, get) in [
        (
            "hub height",
            (|r: &MissingnessRow| r.hub_height) as fn(&MissingnessRow) -> f64,
        ),
        ("rotor diameter", |r| r.rotor_diameter),
        ("capacity", |r| r.capacity),
    ] {
        c = c.layer(Layer::line(
            name,
            v.missingness
                .iter()
                .map(|r| (r.year as f64, get(r)))
                .collect(),
        ));
    }
    out.push(("missingness".to_string(), c));

    let mut c = Chart::new(
        "Monthly efficiency against input power density",
        "input power density (W/m2)",
        "system efficiency",
    )
    .layer(Layer::Points {
        name: "month".to_string(),
        points: report
            .monthly
            .iter()
            .filter_map(|m| m.system_efficiency.map(|e| (m.input_power_density, e)))
            .collect(),
    });
    if let Some(r) = t.monthly_correlation {
        c = c.note(format!("R = {r:.3}"));
    }
    out.push(("efficiency_vs_density".to_string(), c));

    let c = Chart::new("Capacity factor", "year", "P_out / capacity").layer(Layer::line(
        "capacity factor",
        points(series("capacity_factor")),
    ));
    out.push(("capacity_factor".to_string(), c));
    Ok(out)
}

/// Writes files under `dir`. On failure, files written so far are removed,
/// along with directories this call created.
pub fn write_outputs(dir: &Path, files: &BTreeMap<String, Vec<u8>>) -> Result<()> {
    let mut created_dirs: Vec<PathBuf> = Vec::new();
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| -> Result<()> {
        for (rel, bytes) in files {
            let path = dir.join(rel);
            let mut missing = Vec::new();
            let mut p = path.parent();
            while let Some(d) = p {
                if d.as_os_str().is_empty() || d.exists() {
                    break;
                }
                missing.push(d.to_path_buf());
                p = d.parent();
            }
            for d in missing.into_iter().rev() {
                std::fs::create_dir(&d)?;
                created_dirs.push(d);
            }
            std::fs::write(&path, bytes)?;
            written.push(path);
        }
        Ok(())
    })();
    if result.is_err() {
        for p in &written {
            let _ = std::fs::remove_file(p);
        }
        for d in created_dirs.iter().rev() {
            let _ = std::fs::remove_dir(d);
        }
    }
    result
}

/// Full run: compute, then write everything under `config.out`.
pub fn run_pipeline(config: &RunConfig) -> std::result::Result<Report, PipelineError> {
    let out = compute(config)?;
    write_outputs(&config.out, &out.files).stage(Stage::Output)?;
    log::info!(
        "wrote {} files to {}",
        out.files.len(),
        config.out.display()
    );
    Ok(out.report)
}
