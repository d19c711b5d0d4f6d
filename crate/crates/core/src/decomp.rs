//! Multiplicative decomposition of power output and additive decomposition of
//! input power density.
//!
//! ```text
//! P_out = N · (A/N) · (P_in/A) · (P_out/P_in)
//!
//! P_in/A = baseline
//!        + (P_in,ref,avg/A − baseline)       new locations
//!        + (P_in,avg − P_in,ref,avg)/A       hub height change
//!        + (P_in − P_in,avg)/A               annual variation
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{AnnualSeries, Unit};

/// Relative tolerance of both decomposition identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

/// Reported alongside the additive effects.
pub const NON_ORTHOGONALITY_NOTE: &str = "the annual-variation effect is not independent of the \
hub-height effect: taller turbines see larger absolute swings around their long-term mean";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factors {
    pub n: AnnualSeries,
    pub area_per_turbine: AnnualSeries,
    pub input_density: AnnualSeries,
    pub efficiency: AnnualSeries,
    /// Largest relative deviation of N·(A/N)·(P_in/A)·(P_out/P_in) from P_out.
    pub identity_max_rel_error: f64,
}

impl Factors {
    pub fn product(&self, year: i32) -> Option<f64> {
        Some(
            self.n.get(year)?
                * self.area_per_turbine.get(year)?
                * self.input_density.get(year)?
                * self.efficiency.get(year)?,
        )
    }

    /// Each factor relative to its base-year value, in %.
    pub fn indexed(&self, base_year: i32) -> Result<IndexedFactors> {
        Ok(IndexedFactors {
            base_year,
            n: index_relative(&self.n, base_year)?,
            area_per_turbine: index_relative(&self.area_per_turbine, base_year)?,
            input_density: index_relative(&self.input_density, base_year)?,
            efficiency: index_relative(&self.efficiency, base_year)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedFactors {
    pub base_year: i32,
    pub n: AnnualSeries,
    pub area_per_turbine: AnnualSeries,
    pub input_density: AnnualSeries,
    pub efficiency: AnnualSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveEffects {
    pub base_year: i32,
    /// W/m², constant over the years.
    pub baseline: f64,
    pub new_locations: AnnualSeries,
    pub hub_height: AnnualSeries,
    pub annual_variation: AnnualSeries,
    /// P_in/A, the quantity being decomposed.
    pub input_density: AnnualSeries,
    pub identity_max_rel_error: f64,
    pub note: String,
}

impl AdditiveEffects {
    /// Baseline plus the three effects for one year.
    pub fn total(&self, year: i32) -> Option<f64> {
        Some(
            self.baseline
                + self.new_locations.get(year)?
                + self.hub_height.get(year)?
                + self.annual_variation.get(year)?,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub factors: Factors,
    pub indexed: IndexedFactors,
    pub additive: AdditiveEffects,
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Splits P_out into turbine count, area per turbine, input power density and
/// system efficiency.
pub fn multiplicative_decomposition(
    n: &AnnualSeries,
    area: &AnnualSeries,
    p_in: &AnnualSeries,
    p_out: &AnnualSeries,
) -> Result<Factors> {
    n.ensure_aligned(area, "N vs A")?;
    n.ensure_aligned(p_in, "N vs P_in")?;
    n.ensure_aligned(p_out, "N vs P_out")?;
    let len = n.len();
    let mut f = [
        Vec::with_capacity(len),
        Vec::with_capacity(len),
        Vec::with_capacity(len),
        Vec::with_capacity(len),
    ];
    let mut worst = 0.0f64;
    for (i, year) in n.years().enumerate() {
        let (nv, av, pin, pout) = (
            n.values()[i],
            area.values()[i],
            p_in.values()[i],
            p_out.values()[i],
        );
        for (name, v) in [("N", nv), ("A", av), ("P_in", pin)] {
            if !(v > 0.0) {
                return Err(Error::domain(format!(
                    "{name} must be positive in {year}, got {v}"
                )));
            }
        }
        let parts = [nv, av / nv, pin / av, pout / pin];
        worst = worst.max(rel_err(parts.iter().product(), pout));
        for (dst, v) in f.iter_mut().zip(parts) {
            dst.push(v);
        }
    }
    let start = n.start_year();
    let [fn_, fa, fd, fe] = f;
    Ok(Factors {
        n: AnnualSeries::new(start, fn_, Unit::Count)?,
        area_per_turbine: AnnualSeries::new(start, fa, Unit::SquareMetre)?,
        input_density: AnnualSeries::new(start, fd, Unit::WattPerSquareMetre)?,
        efficiency: AnnualSeries::new(start, fe, Unit::Dimensionless)?,
        identity_max_rel_error: worst,
    })
}

/// `100 · value(t) / value(base_year)`.
pub fn index_relative(series: &AnnualSeries, base_year: i32) -> Result<AnnualSeries> {
    let base = series
        .get(base_year)
        .ok_or_else(|| Error::domain(format!("base year {base_year} not in series")))?;
    if base == 0.0 {
        return Err(Error::domain(format!("base value in {base_year} is zero")));
    }
    series.map(Unit::Percent, |v| {
        if v == base {
            100.0
        } else {
            100.0 * v / base
        }
    })
}

/// Splits P_in/A into a constant baseline and the effects of new locations,
/// hub height change and annual climate variation.
///
/// `p_in_ref_avg` is P_in at the fixed reference height under long-term
/// average climate; the baseline is its base-year density, so the location
/// effect is zero in the base year.
pub fn additive_pin_decomposition(
    p_in: &AnnualSeries,
    p_in_avg: &AnnualSeries,
    p_in_ref_avg: &AnnualSeries,
    area: &AnnualSeries,
    base_year: i32,
) -> Result<AdditiveEffects> {
    p_in.ensure_aligned(p_in_avg, "P_in vs P_in,avg")?;
    p_in.ensure_aligned(p_in_ref_avg, "P_in vs P_in,ref,avg")?;
    p_in.ensure_aligned(area, "P_in vs A")?;
    let density = |p: &AnnualSeries, year: i32, i: usize| -> Result<f64> {
        let a = area.values()[i];
        if !(a > 0.0) {
            return Err(Error::domain(format!(
                "area must be positive in {year}, got {a}"
            )));
        }
        Ok(p.values()[i] / a)
    };
    let bi = p_in
        .years()
        .position(|y| y == base_year)
        .ok_or_else(|| Error::domain(format!("base year {base_year} not in series")))?;
    let baseline = density(p_in_ref_avg, base_year, bi)?;

    let mut loc = Vec::with_capacity(p_in.len());
    let mut hub = Vec::with_capacity(p_in.len());
    let mut var = Vec::with_capacity(p_in.len());
    let mut total = Vec::with_capacity(p_in.len());
    let mut worst = 0.0f64;
    for (i, year) in p_in.years().enumerate() {
        let d_ref = density(p_in_ref_avg, year, i)?;
        let d_avg = density(p_in_avg, year, i)?;
        let d_in = density(p_in, year, i)?;
        let effects = [d_ref - baseline, d_avg - d_ref, d_in - d_avg];
        let sum = baseline + effects[0] + effects[1] + effects[2];
        worst = worst.max(rel_err(sum, d_in));
        loc.push(effects[0]);
        hub.push(effects[1]);
        var.push(effects[2]);
        total.push(d_in);
    }
    let start = p_in.start_year();
    let w = Unit::WattPerSquareMetre;
    Ok(AdditiveEffects {
        base_year,
        baseline,
        new_locations: AnnualSeries::new(start, loc, w)?,
        hub_height: AnnualSeries::new(start, hub, w)?,
        annual_variation: AnnualSeries::new(start, var, w)?,
        input_density: AnnualSeries::new(start, total, w)?,
        identity_max_rel_error: worst,
        note: NON_ORTHOGONALITY_NOTE.to_string(),
    })
}

/// Tidy `year,component,value,unit` rows for factors, indexed factors and effects.
pub fn tidy_csv(result: &DecompositionResult) -> String {
    let mut s = String::from("year,component,value,unit\n");
    let mut rows = |name: &str, series: &AnnualSeries| {
        for (y, v) in series.iter() {
            let _ = writeln!(s, "{y},{name},{v},{}", series.unit());
        }
    };
    let f = &result.factors;
    rows("n", &f.n);
    rows("area_per_turbine", &f.area_per_turbine);
    rows("input_density", &f.input_density);
    rows("efficiency", &f.efficiency);
    let ix = &result.indexed;
    rows("n_indexed", &ix.n);
    rows("area_per_turbine_indexed", &ix.area_per_turbine);
    rows("input_density_indexed", &ix.input_density);
    rows("efficiency_indexed", &ix.efficiency);
    let a = &result.additive;
    rows("effect_new_locations", &a.new_locations);
    rows("effect_hub_height", &a.hub_height);
    rows("effect_annual_variation", &a.annual_variation);
    for y in a.input_density.years() {
        let _ = writeln!(s, "{y},baseline,{},W/m2", a.baseline);
    }
    s
}

/// One bar segment of the waterfall view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaterfallSegment {
    pub year: i32,
    pub segment: &'static str,
    pub bottom: f64,
    pub top: f64,
}

impl WaterfallSegment {
    pub fn value(&self) -> f64 {
        self.top - self.bottom
    }
}

/// Stacked segments per year: baseline, then each effect starting where the
/// previous one ended. The last top equals P_in/A.
pub fn waterfall(effects: &AdditiveEffects) -> Vec<WaterfallSegment> {
    let mut out = Vec::with_capacity(4 * effects.input_density.len());
    for (i, year) in effects.input_density.years().enumerate() {
        let mut level = effects.baseline;
        out.push(WaterfallSegment {
            year,
            segment: "baseline",
            bottom: 0.0,
            top: level,
        });
        for (name, s) in [
            ("new_locations", &effects.new_locations),
            ("hub_height", &effects.hub_height),
            ("annual_variation", &effects.annual_variation),
        ] {
            let next = level + s.values()[i];
            out.push(WaterfallSegment {
                year,
                segment: name,
                bottom: level,
                top: next,
            });
            level = next;
        }
    }
    out
}

pub fn waterfall_csv(segments: &[WaterfallSegment]) -> String {
    let mut s = String::from("year,segment,bottom,top,value\n");
    for seg in segments {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            seg.year,
            seg.segment,
            seg.bottom,
            seg.top,
            seg.value()
        );
    }
    s
}
