//! Least-squares trends, the constant-input-density counterfactual, Pearson
//! correlation, and ratio-of-averages helpers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{AnnualSeries, Unit};
use crate::sum::{self, NeumaierSum};

/// Straight-line least-squares fit `y = slope · x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    /// 0 when `y` has no variance.
    pub r_squared: f64,
}

impl OlsFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// True if every value equals the first within a relative 1e-12.
fn is_constant(values: &[f64]) -> bool {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    hi - lo <= 1e-12 * scale
}

pub fn ols_fit(xs: &[f64], ys: &[f64]) -> Result<OlsFit> {
    if xs.len() != ys.len() {
        return Err(Error::Misaligned(format!(
            "{} x values vs {} y values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 || is_constant(xs) {
        return Err(Error::Degenerate(
            "need at least two distinct x values".into(),
        ));
    }
    let x_mean = sum::mean(xs).expect("nonempty");
    let y_mean = sum::mean(ys).expect("nonempty");
    let mut sxy = NeumaierSum::new();
    let mut sxx = NeumaierSum::new();
    let mut syy = NeumaierSum::new();
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - x_mean;
        let dy = y - y_mean;
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    let slope = sxy.value() / sxx.value();
    let intercept = y_mean - slope * x_mean;
    // Residuals from centred coordinates keep them orthogonal to x even when x ~ 2010.
    let residuals: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (y - y_mean) - slope * (x - x_mean))
        .collect();
    let r_squared = if is_constant(ys) {
        0.0
    } else {
        let ss_res: NeumaierSum = residuals.iter().map(|r| r * r).collect();
        (1.0 - ss_res.value() / syy.value()).clamp(0.0, 1.0)
    };
    Ok(OlsFit {
        slope,
        intercept,
        residuals,
        r_squared,
    })
}

/// Fit of the series against calendar year.
pub fn trend_fit(series: &AnnualSeries) -> Result<OlsFit> {
    let xs: Vec<f64> = series.years().map(f64::from).collect();
    ols_fit(&xs, series.values())
}

/// Slope per year, in units of the series.
pub fn trend_slope(series: &AnnualSeries) -> Result<f64> {
    Ok(trend_fit(series)?.slope)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterfactual {
    /// Efficiency with input power density held at its mean.
    pub efficiency: AnnualSeries,
    /// Fit of efficiency on input power density; `None` if it was degenerate.
    pub fit: Option<OlsFit>,
    /// Set when input power density was constant and the observed series was
    /// returned unchanged.
    pub fallback: bool,
}

/// Efficiency under constant input power density:
/// `Ê(t) = E(t) − α₁ · (D_in(t) − mean(D_in))`, where `α₁` is the slope of
/// the regression of E on D_in. Observed residuals are kept.
pub fn counterfactual_efficiency(e: &AnnualSeries, d_in: &AnnualSeries) -> Result<Counterfactual> {
    e.ensure_aligned(d_in, "efficiency vs input density")?;
    if e.len() < 3 {
        return Err(Error::Degenerate(format!(
            "counterfactual needs at least 3 years, got {}",
            e.len()
        )));
    }
    let fit = match ols_fit(d_in.values(), e.values()) {
        Ok(fit) => fit,
        Err(Error::Degenerate(_)) => {
            return Ok(Counterfactual {
                efficiency: e.clone(),
                fit: None,
                fallback: true,
            })
        }
        Err(other) => return Err(other),
    };
    let d_mean = sum::mean(d_in.values()).expect("nonempty");
    let adjusted = e
        .values()
        .iter()
        .zip(d_in.values())
        .map(|(&ev, &dv)| ev - fit.slope * (dv - d_mean))
        .collect();
    Ok(Counterfactual {
        efficiency: AnnualSeries::new(e.start_year(), adjusted, e.unit())?,
        fit: Some(fit),
        fallback: false,
    })
}

/// Pearson correlation coefficient, clamped to `[-1, 1]`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Misaligned(format!(
            "{} vs {} values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Degenerate(
            "correlation needs at least two points".into(),
        ));
    }
    if is_constant(x) || is_constant(y) {
        return Err(Error::Degenerate(
            "correlation undefined for zero variance".into(),
        ));
    }
    let mx = sum::mean(x).expect("nonempty");
    let my = sum::mean(y).expect("nonempty");
    let mut sxy = NeumaierSum::new();
    let mut sxx = NeumaierSum::new();
    let mut syy = NeumaierSum::new();
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy.add(da * db);
        sxx.add(da * da);
        syy.add(db * db);
    }
    Ok((sxy.value() / (sxx.value().sqrt() * syy.value().sqrt())).clamp(-1.0, 1.0))
}

/// `Σa / Σb`, the aggregate efficiency measure.
pub fn ratio_of_sums(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pairs(a, b)?;
    let den = sum::sum(b);
    if den == 0.0 {
        return Err(Error::domain("denominator sums to zero"));
    }
    Ok(sum::sum(a) / den)
}

/// `Σ (b_i / Σb) · (a_i / b_i)`: each ratio weighted by its denominator.
pub fn denominator_weighted_mean_of_ratios(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pairs(a, b)?;
    if b.contains(&0.0) {
        return Err(Error::domain("ratio with zero denominator"));
    }
    let total = sum::sum(b);
    Ok(a.iter()
        .zip(b)
        .map(|(&ai, &bi)| (bi / total) * (ai / bi))
        .collect::<NeumaierSum>()
        .value())
}

/// Plain mean of `a_i / b_i`.
pub fn mean_of_ratios(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pairs(a, b)?;
    if b.contains(&0.0) {
        return Err(Error::domain("ratio with zero denominator"));
    }
    let ratios: Vec<f64> = a.iter().zip(b).map(|(x, y)| x / y).collect();
    Ok(sum::mean(&ratios).expect("nonempty"))
}

fn check_pairs(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Misaligned(format!(
            "{} vs {} values",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Converts an annual series of fractions to percentage points.
pub fn as_percent(series: &AnnualSeries) -> Result<AnnualSeries> {
    series.map(Unit::Percent, |v| 100.0 * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn annual(v: &[f64]) -> AnnualSeries {
        AnnualSeries::new(2010, v.to_vec(), Unit::Dimensionless).unwrap()
    }

    #[test]
    fn exact_line() {
        let f = ols_fit(&[2010.0, 2011.0, 2012.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!((f.intercept + 2009.0).abs() < 1e-9);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_target() {
        let f = ols_fit(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(f.intercept, 4.0);
        assert_eq!(f.r_squared, 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(ols_fit(&[1.0], &[1.0]), Err(Error::Degenerate(_))));
        assert!(matches!(
            ols_fit(&[2.0, 2.0], &[1.0, 3.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            ols_fit(&[1.0, 2.0], &[1.0]),
            Err(Error::Misaligned(_))
        ));
    }

    #[test]
    fn slopes() {
        let down = annual(&[1.0, 0.9, 0.8, 0.7]);
        assert!((trend_slope(&down).unwrap() + 0.1).abs() < 1e-12);
        assert_eq!(trend_slope(&annual(&[5.0; 4])).unwrap(), 0.0);
        let up: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
        assert!((trend_slope(&annual(&up)).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn counterfactual_constant_density_is_identity() {
        let e = annual(&[0.3, 0.28, 0.29, 0.27]);
        let d = annual(&[300.0; 4]);
        let c = counterfactual_efficiency(&e, &d).unwrap();
        assert!(c.fallback);
        assert_eq!(c.efficiency, e);
    }

    #[test]
    fn counterfactual_fully_explained() {
        let d = annual(&[280.0, 300.0, 330.0, 310.0, 290.0]);
        let e = d.map(Unit::Dimensionless, |x| 0.5 - 0.0007 * x).unwrap();
        let c = counterfactual_efficiency(&e, &d).unwrap();
        let mean_e = sum::mean(e.values()).unwrap();
        for &v in c.efficiency.values() {
            assert!((v - mean_e).abs() < 1e-12);
        }
    }

    #[test]
    fn counterfactual_needs_three_years() {
        let e = annual(&[0.3, 0.2]);
        assert!(counterfactual_efficiency(&e, &e).is_err());
    }

    #[test]
    fn pearson_cases() {
        let x = [1.0, 2.0, 4.0, 7.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!(pearson(&x, &[3.0; 4]).is_err());
    }

    #[test]
    fn ratio_of_averages_fixture() {
        let (a, b) = ([1.0, 4.0], [1.0, 2.0]);
        let r = ratio_of_sums(&a, &b).unwrap();
        assert!((r - 5.0 / 3.0).abs() < 1e-15);
        assert!((denominator_weighted_mean_of_ratios(&a, &b).unwrap() - r).abs() < 1e-15);
        assert_eq!(mean_of_ratios(&a, &b).unwrap(), 1.5);
    }

    proptest! {
        #[test]
        fn residuals_orthogonal_and_centred(
            ys in prop::collection::vec(-1e3f64..1e3, 3..15)
        ) {
            let xs: Vec<f64> = (0..ys.len()).map(|i| 2010.0 + i as f64).collect();
            let f = ols_fit(&xs, &ys).unwrap();
            let scale = ys.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let rsum: f64 = f.residuals.iter().sum();
            let xm = xs.iter().sum::<f64>() / xs.len() as f64;
            let dot: f64 = f.residuals.iter().zip(&xs).map(|(r, x)| r * (x - xm)).sum();
            prop_assert!(rsum.abs() <= 1e-10 * scale);
            prop_assert!(dot.abs() <= 1e-10 * scale * xs.len() as f64);
            prop_assert!((0.0..=1.0).contains(&f.r_squared));
        }

        #[test]
        fn counterfactual_preserves_mean(
            e in prop::collection::vec(0.1f64..0.5, 4..12),
            seed in prop::collection::vec(200.0f64..450.0, 12)
        ) {
            let d = annual(&seed[..e.len()]);
            let e = annual(&e);
            let c = counterfactual_efficiency(&e, &d).unwrap();
            let m0 = sum::mean(e.values()).unwrap();
            let m1 = sum::mean(c.efficiency.values()).unwrap();
            prop_assert!(((m1 - m0) / m0).abs() <= 1e-12);
        }

        #[test]
        fn pearson_affine_invariance(
            x in prop::collection::vec(-10.0f64..10.0, 4..10),
            y_raw in prop::collection::vec(-10.0f64..10.0, 10),
            a in 0.1f64..5.0, b in -3.0f64..3.0,
        ) {
            let y = &y_raw[..x.len()];
            prop_assume!(!is_constant(&x) && !is_constant(y));
            let r = pearson(&x, y).unwrap();
            let xt: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let yn: Vec<f64> = y.iter().map(|v| -v).collect();
            prop_assert!((pearson(&xt, y).unwrap() - r).abs() < 1e-9);
            prop_assert!((pearson(&x, &yn).unwrap() + r).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&r));
        }

        #[test]
        fn indexed_trend_keeps_sign(
            v in prop::collection::vec(1.0f64..100.0, 3..10)
        ) {
            let s = annual(&v);
            let idx = crate::decomp::index_relative(&s, 2010).unwrap();
            let a = trend_slope(&s).unwrap();
            let b = trend_slope(&idx).unwrap();
            prop_assert!(a.signum() == b.signum() || (a.abs() < 1e-12 && b.abs() < 1e-9));
        }
    }
}
