use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use windfleet::calendar::YearSpan;
use windfleet::config::{parse_lifetimes, PartialConfig, RunConfig};
use windfleet::decomp::{tidy_csv, waterfall, waterfall_csv};
use windfleet::error::Error;
use windfleet::fleet::{annual_counts, annual_swept_area};
use windfleet::pipeline::{
    decompose, input_aggregates, load_fleet, load_generation, load_reference, read_input,
    relative_difference_csv, run_pipeline, write_outputs, PipelineError, Stage, StageContext,
    ValidationSummary,
};
use windfleet::powerflux::{monthly_pin, pout_annual, PinEngine, PowerAggregates};
use windfleet::series::{AnnualSeries, Unit};
use windfleet::synth::{write_bundle, EfficiencyModel, SynthSpec, WindModel};
use windfleet::trends::{counterfactual_efficiency, trend_fit};
use windfleet::validate::{missingness_csv, missingness_report, run_scenarios, scenarios_csv};
use windfleet::windgrid::{grid_from_csv, load_windgrid};

/// Wind fleet output decomposition.
#[derive(Parser)]
#[command(name = "windfleet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic input bundle (fleet, grid, generation, reference, config).
    Synth(SynthArgs),
    /// Convert a grid CSV into a WGRD file.
    ConvertGrid(ConvertArgs),
    /// Annual input power series for a fleet on a wind grid.
    Pin(RunFlags),
    /// Decompose output power from series written by `pin`.
    Decompose(DecomposeArgs),
    /// Linear trend of one series, optionally with a counterfactual.
    Trends(TrendsArgs),
    /// Capacity scenarios, reference comparison and missingness.
    Validate(RunFlags),
    /// Full pipeline.
    Report(RunFlags),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// JSON spec; flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    turbines: Option<usize>,
    #[arg(long)]
    start: Option<i32>,
    #[arg(long)]
    end: Option<i32>,
    /// `constant:V10:V100`, `sinusoidal:MEAN:AMPLITUDE:PERIOD_H:SHEAR` or `noise:MEAN:SD:SHEAR`.
    #[arg(long)]
    wind: Option<String>,
    /// `constant:E` or `linear:FIRST:LAST`.
    #[arg(long)]
    efficiency: Option<String>,
    #[arg(long)]
    missing_share: Option<f64>,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Unix seconds of time index 0.
    #[arg(long, default_value_t = 0)]
    t0: i64,
    /// Seconds between time indices.
    #[arg(long, default_value_t = 3600)]
    step: i64,
}

#[derive(Args, Default)]
struct RunFlags {
    /// Key-value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    turbines: Option<PathBuf>,
    #[arg(long)]
    extension: Option<PathBuf>,
    #[arg(long)]
    exclusions: Option<PathBuf>,
    #[arg(long)]
    windgrid: Option<PathBuf>,
    #[arg(long)]
    generation: Option<PathBuf>,
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    start: Option<i32>,
    #[arg(long)]
    end: Option<i32>,
    #[arg(long)]
    reference_height: Option<f64>,
    #[arg(long)]
    base_year: Option<i32>,
    /// Comma list, e.g. `15,20,25,30`.
    #[arg(long)]
    lifetimes: Option<String>,
    /// `standard` or a comma list of scenario labels.
    #[arg(long)]
    scenarios: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Directory holding p_in, p_in_avg, p_in_ref_avg, swept_area and turbines CSVs.
    #[arg(long)]
    series: PathBuf,
    #[arg(long)]
    generation: PathBuf,
    #[arg(long)]
    base_year: Option<i32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrendsArgs {
    /// `year,value,unit` CSV.
    #[arg(long)]
    series: PathBuf,
    /// Input power density series; adds the constant-density counterfactual.
    #[arg(long)]
    against: Option<PathBuf>,
    /// Output JSON file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

type CmdResult = Result<(), PipelineError>;

fn config_err(e: impl std::fmt::Display) -> PipelineError {
    PipelineError {
        stage: Stage::Config,
        source: Error::Config(e.to_string()),
    }
}

impl RunFlags {
    fn partial(&self) -> Result<PartialConfig, PipelineError> {
        let file = match &self.config {
            Some(p) => PartialConfig::from_file(p).stage(Stage::Config)?,
            None => PartialConfig::default(),
        };
        let flags = PartialConfig {
            turbines: self.turbines.clone(),
            extension: self.extension.clone(),
            exclusions: self.exclusions.clone(),
            windgrid: self.windgrid.clone(),
            generation: self.generation.clone(),
            reference: self.reference.clone(),
            start_year: self.start,
            end_year: self.end,
            reference_height: self.reference_height,
            base_year: self.base_year,
            lifetimes: self
                .lifetimes
                .as_deref()
                .map(parse_lifetimes)
                .transpose()
                .stage(Stage::Config)?,
            scenarios: self.scenarios.clone(),
            out: self.out.clone(),
            workers: self.workers,
        };
        Ok(file.merge(flags))
    }

    /// Full configuration, with placeholders for paths a subcommand does not read.
    fn run_config(&self, unused: &[&str]) -> Result<RunConfig, PipelineError> {
        let mut p = self.partial()?;
        let placeholder = || Some(PathBuf::from("-"));
        for key in unused {
            match *key {
                "windgrid" => p.windgrid = p.windgrid.or_else(placeholder),
                "generation" => p.generation = p.generation.or_else(placeholder),
                _ => {}
            }
        }
        p.finish().stage(Stage::Config)
    }
}

fn parse_numbers(spec: &str, what: &str, n: usize) -> Result<Vec<f64>, PipelineError> {
    let parts: Vec<&str> = spec.split(':').skip(1).collect();
    if parts.len() != n {
        return Err(config_err(format!("{what} `{spec}` needs {n} numbers")));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| config_err(format!("invalid number `{p}` in {what}")))
        })
        .collect()
}

fn parse_wind(spec: &str) -> Result<WindModel, PipelineError> {
    match spec.split(':').next().unwrap_or("") {
        "constant" => {
            let v = parse_numbers(spec, "wind", 2)?;
            Ok(WindModel::Constant {
                v10: v[0],
                v100: v[1],
            })
        }
        "sinusoidal" => {
            let v = parse_numbers(spec, "wind", 4)?;
            Ok(WindModel::Sinusoidal {
                mean: v[0],
                amplitude: v[1],
                period_hours: v[2],
                shear: v[3],
            })
        }
        "noise" => {
            let v = parse_numbers(spec, "wind", 3)?;
            Ok(WindModel::SeededNoise {
                mean: v[0],
                sd: v[1],
                shear: v[2],
            })
        }
        _ => Err(config_err(format!("unknown wind model `{spec}`"))),
    }
}

fn parse_efficiency(spec: &str) -> Result<EfficiencyModel, PipelineError> {
    match spec.split(':').next().unwrap_or("") {
        "constant" => Ok(EfficiencyModel::Constant {
            value: parse_numbers(spec, "efficiency", 1)?[0],
        }),
        "linear" => {
            let v = parse_numbers(spec, "efficiency", 2)?;
            Ok(EfficiencyModel::Linear {
                first: v[0],
                last: v[1],
            })
        }
        _ => Err(config_err(format!("unknown efficiency model `{spec}`"))),
    }
}

fn files(entries: impl IntoIterator<Item = (String, Vec<u8>)>) -> BTreeMap<String, Vec<u8>> {
    entries.into_iter().collect()
}

fn json_bytes(v: &impl serde::Serialize) -> Result<Vec<u8>, PipelineError> {
    let mut s = serde_json::to_string_pretty(v)
        .map_err(Error::from)
        .stage(Stage::Output)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn synth(a: &SynthArgs) -> CmdResult {
    let mut spec = match &a.spec {
        Some(p) => {
            let bytes = read_input(p).stage(Stage::Config)?;
            serde_json::from_slice(&bytes).map_err(config_err)?
        }
        None => SynthSpec::default(),
    };
    if let Some(n) = a.turbines {
        spec.n_turbines = n;
    }
    if a.start.is_some() || a.end.is_some() {
        let start = a.start.unwrap_or(spec.years.start);
        let end = a.end.unwrap_or(spec.years.end);
        spec.years = YearSpan::new(start, end).map_err(config_err)?;
    }
    if let Some(w) = &a.wind {
        spec.wind = parse_wind(w)?;
    }
    if let Some(e) = &a.efficiency {
        spec.true_efficiency = parse_efficiency(e)?;
    }
    if let Some(m) = a.missing_share {
        spec.missing_share = m;
    }
    spec.validate().map_err(config_err)?;

    write_bundle(&spec, a.seed, &a.out).stage(Stage::Output)?;
    Ok(())
}

fn convert_grid(a: &ConvertArgs) -> CmdResult {
    let bytes = read_input(&a.input).stage(Stage::Windgrid)?;
    let grid = grid_from_csv(bytes.as_slice(), a.t0, a.step).stage(Stage::Windgrid)?;
    std::fs::write(&a.output, grid.to_bytes())
        .map_err(Error::from)
        .stage(Stage::Output)
}

fn pin(f: &RunFlags) -> CmdResult {
    let c = f.run_config(&["generation"])?;
    let inputs = load_fleet(&c.turbines, c.extension.as_deref(), c.exclusions.as_deref())
        .stage(Stage::Fleet)?;
    let grid = load_windgrid(&c.windgrid).stage(Stage::Windgrid)?;
    let engine = PinEngine::new(&grid, &inputs.fleet, c.study, c.reference_height, c.workers)
        .stage(Stage::Powerflux)?;
    let (p_in, p_in_avg, p_in_ref_avg) =
        input_aggregates(&engine, c.study).stage(Stage::Powerflux)?;
    let area = annual_swept_area(&inputs.fleet, c.study).stage(Stage::Powerflux)?;
    let n = annual_counts(&inputs.fleet, c.study).stage(Stage::Powerflux)?;
    let mut monthly = String::from("year,month,p_in_w\n");
    for ((y, m), p) in monthly_pin(&engine, c.study).stage(Stage::Powerflux)? {
        monthly.push_str(&format!("{y},{m},{p}\n"));
    }
    let out = files([
        ("p_in.csv".to_string(), p_in.to_csv_string().into_bytes()),
        (
            "p_in_avg.csv".to_string(),
            p_in_avg.to_csv_string().into_bytes(),
        ),
        (
            "p_in_ref_avg.csv".to_string(),
            p_in_ref_avg.to_csv_string().into_bytes(),
        ),
        (
            "swept_area.csv".to_string(),
            area.to_csv_string().into_bytes(),
        ),
        ("turbines.csv".to_string(), n.to_csv_string().into_bytes()),
        ("monthly_pin.csv".to_string(), monthly.into_bytes()),
    ]);
    write_outputs(&c.out, &out).stage(Stage::Output)
}

fn read_series(path: &Path) -> windfleet::Result<AnnualSeries> {
    AnnualSeries::read_csv(read_input(path)?.as_slice())
}

fn decompose_cmd(a: &DecomposeArgs) -> CmdResult {
    let load = |name: &str| read_series(&a.series.join(format!("{name}.csv"))).stage(Stage::Decomp);
    let p_in = load("p_in")?;
    let study = p_in.span();
    let energy = load_generation(&a.generation).stage(Stage::Generation)?;
    let agg = PowerAggregates {
        years: study,
        p_in,
        p_in_avg: load("p_in_avg")?,
        p_in_ref_avg: load("p_in_ref_avg")?,
        p_out: pout_annual(&energy, study).stage(Stage::Generation)?,
        area: load("swept_area")?,
        n: load("turbines")?,
        capacity: AnnualSeries::from_fn(study, Unit::Watt, |_| 0.0).stage(Stage::Decomp)?,
    };
    let d = decompose(&agg, a.base_year.unwrap_or(study.start)).stage(Stage::Decomp)?;
    let out = files([
        ("decomposition.csv".to_string(), tidy_csv(&d).into_bytes()),
        (
            "waterfall.csv".to_string(),
            waterfall_csv(&waterfall(&d.additive)).into_bytes(),
        ),
        (
            "p_out.csv".to_string(),
            agg.p_out.to_csv_string().into_bytes(),
        ),
        ("decomposition.json".to_string(), json_bytes(&d)?),
    ]);
    write_outputs(&a.out, &out).stage(Stage::Output)
}

fn trends(a: &TrendsArgs) -> CmdResult {
    let series = read_series(&a.series).stage(Stage::Trends)?;
    let fit = trend_fit(&series).stage(Stage::Trends)?;
    let counterfactual = match &a.against {
        Some(p) => {
            let d = read_series(p).stage(Stage::Trends)?;
            Some(counterfactual_efficiency(&series, &d).stage(Stage::Trends)?)
        }
        None => None,
    };
    let bytes = json_bytes(&json!({ "fit": fit, "counterfactual": counterfactual }))?;
    match &a.out {
        Some(p) => std::fs::write(p, bytes)
            .map_err(Error::from)
            .stage(Stage::Output),
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(Error::from)
            .stage(Stage::Output),
    }
}

fn validate_cmd(f: &RunFlags) -> CmdResult {
    let c = f.run_config(&["windgrid", "generation"])?;
    let inputs = load_fleet(&c.turbines, c.extension.as_deref(), c.exclusions.as_deref())
        .stage(Stage::Fleet)?;
    let reference = c
        .reference
        .as_deref()
        .map(load_reference)
        .transpose()
        .stage(Stage::Reference)?;
    let scenarios = run_scenarios(&inputs.fleet, c.study, &c.scenarios, reference.as_ref())
        .stage(Stage::Validate)?;
    let summary = ValidationSummary {
        scenarios,
        generation_relative_difference: None,
        missingness: missingness_report(&inputs.records),
    };
    let out = files([
        (
            "scenarios.csv".to_string(),
            scenarios_csv(&summary.scenarios).into_bytes(),
        ),
        (
            "relative_difference.csv".to_string(),
            relative_difference_csv(&summary).into_bytes(),
        ),
        (
            "missingness.csv".to_string(),
            missingness_csv(&summary.missingness).into_bytes(),
        ),
        ("validation.json".to_string(), json_bytes(&summary)?),
    ]);
    write_outputs(&c.out, &out).stage(Stage::Output)
}

fn report(f: &RunFlags) -> CmdResult {
    let c = f.run_config(&[])?;
    run_pipeline(&c).map(|_| ())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => synth(a),
        Command::ConvertGrid(a) => convert_grid(a),
        Command::Pin(f) => pin(f),
        Command::Decompose(a) => decompose_cmd(a),
        Command::Trends(a) => trends(a),
        Command::Validate(f) => validate_cmd(f),
        Command::Report(f) => report(f),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
