//! Least-squares power-law fits for the scaling experiments.

use crate::error::{Error, Result};
use serde::Serialize;

/// Ordinary least squares `y = intercept + slope * x`; returns
/// `(slope, intercept, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::TooFewSamples { need: 2, got: xs.len().min(ys.len()) });
    }
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - xm) * (x - xm);
        sxy += (x - xm) * (y - ym);
        syy += (y - ym) * (y - ym);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("degenerate fit: all abscissae equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok((slope, intercept, r2))
}

/// A fitted power law `value ~ scale^exponent` over a decreasing scale ladder.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    /// `(scale, value)` pairs, scales strictly decreasing.
    pub samples: Vec<(f64, f64)>,
    pub fitted_exponent: f64,
    pub r_squared: f64,
}

impl ScalingFit {
    /// Fit `log value` against `log scale`. Requires at least three samples
    /// with strictly decreasing positive scales and positive values.
    pub fn from_samples(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::TooFewSamples { need: 3, got: samples.len() });
        }
        for w in samples.windows(2) {
            if !(w[1].0 < w[0].0) {
                return Err(Error::InvalidParameter("scales must be strictly decreasing".into()));
            }
        }
        if samples.iter().any(|&(s, v)| s <= 0.0 || v <= 0.0) {
            return Err(Error::InvalidParameter("scales and values must be positive for a log-log fit".into()));
        }
        let xs: Vec<f64> = samples.iter().map(|(s, _)| s.ln()).collect();
        let ys: Vec<f64> = samples.iter().map(|(_, v)| v.ln()).collect();
        let (slope, _, r2) = linear_fit(&xs, &ys)?;
        Ok(Self { samples, fitted_exponent: slope, r_squared: r2 })
    }

    /// Fit `log value` against `log log (1/scale)` (critical-regime log laws).
    pub fn from_samples_loglog(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::TooFewSamples { need: 3, got: samples.len() });
        }
        if samples.iter().any(|&(s, v)| s <= 0.0 || s >= 1.0 || v <= 0.0) {
            return Err(Error::InvalidParameter(
                "log-log-law fits need scales in (0, 1) and positive values".into(),
            ));
        }
        let xs: Vec<f64> = samples.iter().map(|(s, _)| (1.0 / s).ln().ln()).collect();
        let ys: Vec<f64> = samples.iter().map(|(_, v)| v.ln()).collect();
        let (slope, _, r2) = linear_fit(&xs, &ys)?;
        Ok(Self { samples, fitted_exponent: slope, r_squared: r2 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn recovers_exact_power_law() {
        let samples: Vec<(f64, f64)> = [1.0, 0.5, 0.25, 0.125]
            .iter()
            .map(|&s: &f64| (s, 3.0 * s.powf(1.7)))
            .collect();
        let fit = ScalingFit::from_samples(samples).unwrap();
        assert_relative_eq!(fit.fitted_exponent, 1.7, max_relative = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_short_or_unsorted_ladders() {
        assert!(ScalingFit::from_samples(vec![(1.0, 1.0), (0.5, 0.5)]).is_err());
        assert!(ScalingFit::from_samples(vec![(0.5, 1.0), (1.0, 0.5), (0.25, 2.0)]).is_err());
    }
}
