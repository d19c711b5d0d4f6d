//! Run configuration: a plain `key = value` file, overridden by flags.
//!
//! ```text
//! # paths are relative to the file's directory
//! turbines = turbines.csv
//! windgrid = wind.wgrd
//! generation = generation.csv
//! start_year = 2010
//! end_year = 2019
//! lifetimes = 15, 20, 25, 30
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::calendar::YearSpan;
use crate::error::{Error, Result};
use crate::powerflux::DEFAULT_REFERENCE_HEIGHT;
use crate::validate::{standard_scenarios, ScenarioSpec, DEFAULT_LIFETIMES};

/// Keys accepted in configuration files.
pub const CONFIG_KEYS: [&str; 14] = [
    "turbines",
    "extension",
    "exclusions",
    "windgrid",
    "generation",
    "reference",
    "start_year",
    "end_year",
    "reference_height",
    "base_year",
    "lifetimes",
    "scenarios",
    "out",
    "workers",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub turbines: PathBuf,
    pub extension: Option<PathBuf>,
    pub exclusions: Option<PathBuf>,
    pub windgrid: PathBuf,
    pub generation: PathBuf,
    pub reference: Option<PathBuf>,
    pub study: YearSpan,
    /// Fixed height for the location effect, m.
    pub reference_height: f64,
    pub base_year: i32,
    pub scenarios: Vec<ScenarioSpec>,
    pub out: PathBuf,
    pub workers: usize,
}

/// Every field optional; several layers are merged before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialConfig {
    pub turbines: Option<PathBuf>,
    pub extension: Option<PathBuf>,
    pub exclusions: Option<PathBuf>,
    pub windgrid: Option<PathBuf>,
    pub generation: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub start_year: Option<i32>,
    pub end_year: Option<i32>,
    pub reference_height: Option<f64>,
    pub base_year: Option<i32>,
    pub lifetimes: Option<Vec<u32>>,
    /// `standard` or a comma list of scenario labels.
    pub scenarios: Option<String>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("line {line}: invalid value for {key}: `{value}`")))
}

/// Parses a comma-separated list of positive lifetimes.
pub fn parse_lifetimes(value: &str) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.parse::<u32>() {
            Ok(l) if l > 0 => out.push(l),
            _ => return Err(Error::config(format!("invalid lifetime `{part}`"))),
        }
    }
    Ok(out)
}

/// Resolves a scenario label as produced by [`ScenarioSpec::label`].
pub fn parse_scenario(label: &str) -> Result<ScenarioSpec> {
    let (body, impute) = match label.strip_suffix("_discard") {
        Some(b) => (b, false),
        None => (label, true),
    };
    let unknown = || Error::config(format!("unknown scenario `{label}`"));
    let (drop, rest) = match body.strip_prefix("drop_decommissioned") {
        Some(r) => (true, r.strip_prefix('_').unwrap_or(r)),
        None => (false, body),
    };
    let lifetime_years = match rest {
        "" if drop => None,
        "all_turbines" if !drop => None,
        _ => Some(
            rest.strip_prefix("lifetime_")
                .and_then(|l| l.parse::<u32>().ok())
                .filter(|&l| l > 0)
                .ok_or_else(unknown)?,
        ),
    };
    Ok(ScenarioSpec {
        drop_decommissioned_flagged: drop,
        lifetime_years,
        impute_capacity: impute,
    })
}

impl PartialConfig {
    /// Parses `key = value` lines. Blank lines and `#` comments are skipped;
    /// relative paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut c = PartialConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {line_no}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            let path = || base_dir.join(value);
            match key {
                "turbines" => c.turbines = Some(path()),
                "extension" => c.extension = Some(path()),
                "exclusions" => c.exclusions = Some(path()),
                "windgrid" => c.windgrid = Some(path()),
                "generation" => c.generation = Some(path()),
                "reference" => c.reference = Some(path()),
                "out" => c.out = Some(path()),
                "start_year" => c.start_year = Some(parse_value(key, value, line_no)?),
                "end_year" => c.end_year = Some(parse_value(key, value, line_no)?),
                "reference_height" => c.reference_height = Some(parse_value(key, value, line_no)?),
                "base_year" => c.base_year = Some(parse_value(key, value, line_no)?),
                "workers" => c.workers = Some(parse_value(key, value, line_no)?),
                "lifetimes" => c.lifetimes = Some(parse_lifetimes(value)?),
                "scenarios" => c.scenarios = Some(value.to_string()),
                _ => {
                    return Err(Error::config(format!(
                        "line {line_no}: unknown key `{key}`"
                    )))
                }
            }
        }
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merge(self, over: PartialConfig) -> PartialConfig {
        PartialConfig {
            turbines: over.turbines.or(self.turbines),
            extension: over.extension.or(self.extension),
            exclusions: over.exclusions.or(self.exclusions),
            windgrid: over.windgrid.or(self.windgrid),
            generation: over.generation.or(self.generation),
            reference: over.reference.or(self.reference),
            start_year: over.start_year.or(self.start_year),
            end_year: over.end_year.or(self.end_year),
            reference_height: over.reference_height.or(self.reference_height),
            base_year: over.base_year.or(self.base_year),
            lifetimes: over.lifetimes.or(self.lifetimes),
            scenarios: over.scenarios.or(self.scenarios),
            out: over.out.or(self.out),
            workers: over.workers.or(self.workers),
        }
    }

    fn scenario_list(&self) -> Result<Vec<ScenarioSpec>> {
        let lifetimes = self
            .lifetimes
            .clone()
            .unwrap_or_else(|| DEFAULT_LIFETIMES.to_vec());
        match self.scenarios.as_deref().map(str::trim) {
            None | Some("standard") => Ok(standard_scenarios(&lifetimes)),
            Some(list) => list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(parse_scenario)
                .collect(),
        }
    }

    /// Checks required fields and ranges. Paths are checked when read.
    pub fn finish(self) -> Result<RunConfig> {
        let need = |v: Option<PathBuf>, key: &str| {
            v.ok_or_else(|| Error::config(format!("missing required setting `{key}`")))
        };
        let start = self
            .start_year
            .ok_or_else(|| Error::config("missing required setting `start_year`"))?;
        let end = self
            .end_year
            .ok_or_else(|| Error::config("missing required setting `end_year`"))?;
        if start > end {
            return Err(Error::config(format!(
                "start_year {start} after end_year {end}"
            )));
        }
        let study = YearSpan { start, end };
        let base_year = self.base_year.unwrap_or(start);
        if !study.contains(base_year) {
            return Err(Error::config(format!(
                "base_year {base_year} outside {study}"
            )));
        }
        let reference_height = self.reference_height.unwrap_or(DEFAULT_REFERENCE_HEIGHT);
        if !(reference_height > 0.0 && reference_height.is_finite()) {
            return Err(Error::config("reference_height must be positive"));
        }
        let workers = self.workers.unwrap_or(1);
        if workers == 0 {
            return Err(Error::config("workers must be at least 1"));
        }
        let scenarios = self.scenario_list()?;
        Ok(RunConfig {
            turbines: need(self.turbines, "turbines")?,
            extension: self.extension,
            exclusions: self.exclusions,
            windgrid: need(self.windgrid, "windgrid")?,
            generation: need(self.generation, "generation")?,
            reference: self.reference,
            study,
            reference_height,
            base_year,
            scenarios,
            out: need(self.out, "out")?,
            workers,
        })
    }
}

impl RunConfig {
    /// Configuration file text; paths are written relative to `base_dir`
    /// when they lie below it.
    pub fn to_config_string(&self, base_dir: &Path) -> String {
        let rel = |p: &Path| p.strip_prefix(base_dir).unwrap_or(p).display().to_string();
        let mut s = String::new();
        let _ = writeln!(s, "turbines = {}", rel(&self.turbines));
        for (key, p) in [
            ("extension", &self.extension),
            ("exclusions", &self.exclusions),
        ] {
            if let Some(p) = p {
                let _ = writeln!(s, "{key} = {}", rel(p));
            }
        }
        let _ = writeln!(s, "windgrid = {}", rel(&self.windgrid));
        let _ = writeln!(s, "generation = {}", rel(&self.generation));
        if let Some(p) = &self.reference {
            let _ = writeln!(s, "reference = {}", rel(p));
        }
        let _ = writeln!(s, "start_year = {}", self.study.start);
        let _ = writeln!(s, "end_year = {}", self.study.end);
        let _ = writeln!(s, "reference_height = {}", self.reference_height);
        let _ = writeln!(s, "base_year = {}", self.base_year);
        let labels: Vec<String> = self.scenarios.iter().map(ScenarioSpec::label).collect();
        let _ = writeln!(s, "scenarios = {}", labels.join(", "));
        let _ = writeln!(s, "out = {}", rel(&self.out));
        let _ = writeln!(s, "workers = {}", self.workers);
        s
    }
}
