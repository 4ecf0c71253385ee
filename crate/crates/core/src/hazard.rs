//! Return levels from parameter ensembles.
//!
//! The `T`-year level is the GEV quantile at `1 - 1/T`. Under the
//! nonstationary structure it depends on the covariate value, which is
//! chosen through [`CovariateRef`].

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bayes::{map_estimate, ParameterEnsemble};
use crate::error::{Error, Result};
use crate::gev::{Gev, GevParams, ModelStructure};
use crate::ingest::AlignedDataset;

pub const DEFAULT_CREDIBLE_MASS: f64 = 0.9;
pub const DEFAULT_PERIODS: [f64; 6] = [2.0, 5.0, 10.0, 25.0, 50.0, 100.0];

/// Which covariate value anchors nonstationary return levels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CovariateRef {
    /// Covariate of the final record year.
    #[default]
    LastYear,
    FixedValue { value: f64 },
    /// Mean covariate over the record.
    EmpiricalMean,
}

impl CovariateRef {
    pub fn resolve(&self, dataset: &AlignedDataset) -> Result<f64> {
        match *self {
            CovariateRef::LastYear => Ok(dataset.last_covariate()),
            CovariateRef::EmpiricalMean => Ok(dataset.mean_covariate()),
            CovariateRef::FixedValue { value } => {
                if value.is_finite() {
                    Ok(value)
                } else {
                    Err(Error::Validation(format!("fixed covariate must be finite, got {value}")))
                }
            }
        }
    }
}

impl std::str::FromStr for CovariateRef {
    type Err = Error;

    /// `last-year`, `mean`, or a number (optionally `fixed:<number>`).
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "last-year" | "last_year" => Ok(CovariateRef::LastYear),
            "mean" | "empirical-mean" | "empirical_mean" => Ok(CovariateRef::EmpiricalMean),
            other => {
                let raw = other.strip_prefix("fixed:").unwrap_or(other);
                let value: f64 = raw
                    .parse()
                    .map_err(|_| Error::Validation(format!("bad covariate reference '{other}'")))?;
                if !value.is_finite() {
                    return Err(Error::Validation(format!("fixed covariate must be finite, got {value}")));
                }
                Ok(CovariateRef::FixedValue { value })
            }
        }
    }
}

fn check_period(period: f64) -> Result<()> {
    if period > 1.0 && period.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("return period must exceed 1 year, got {period}")))
    }
}

/// Level exceeded with probability `1/period` in a year with covariate `phi`.
pub fn return_level(
    params: &GevParams,
    period: f64,
    structure: ModelStructure,
    covariate_value: f64,
) -> Result<f64> {
    check_period(period)?;
    let mu = match structure {
        ModelStructure::Stationary => params.mu0,
        ModelStructure::Nonstationary => params.location_at(covariate_value),
    };
    Gev::new(mu, params.sigma, params.xi)?.quantile(1.0 - 1.0 / period)
}

/// Posterior distribution of one return level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnLevelDistribution {
    pub return_period: f64,
    #[serde(skip)]
    pub levels: Vec<f64>,
    pub expected: f64,
    pub median: f64,
    pub mode_estimate: f64,
    pub credible_mass: f64,
    pub credible_interval: (f64, f64),
    pub map_level: f64,
}

impl ReturnLevelDistribution {
    /// Summarizes `levels`; `map_level` is supplied by the caller.
    pub fn from_levels(return_period: f64, levels: Vec<f64>, map_level: f64, mass: f64) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Validation("no return levels to summarize".into()));
        }
        if !(mass > 0.0 && mass < 1.0) {
            return Err(Error::Domain(format!("credible mass must lie in (0, 1), got {mass}")));
        }
        let expected = levels.iter().sum::<f64>() / levels.len() as f64;
        let mut sorted = levels.clone();
        sorted.sort_by(f64::total_cmp);
        let median = median_sorted(&sorted);
        let credible_interval = equal_tailed_interval(&sorted, mass);
        let mode_estimate = histogram_mode(&sorted);
        Ok(Self {
            return_period,
            levels,
            expected,
            median,
            mode_estimate,
            credible_mass: mass,
            credible_interval,
            map_level,
        })
    }

    pub fn interval_width(&self) -> f64 {
        self.credible_interval.1 - self.credible_interval.0
    }
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Order statistics `k` and `n-1-k` with `k = round(n (1-mass)/2)`, so the
/// closed interval holds `mass` of the levels to within `1/n`.
pub(crate) fn equal_tailed_interval(sorted: &[f64], mass: f64) -> (f64, f64) {
    let n = sorted.len();
    let tail = (1.0 - mass) / 2.0;
    let k = ((n as f64 * tail).round() as usize).min((n - 1) / 2);
    (sorted[k], sorted[n - 1 - k])
}

/// Linear-interpolation sample quantile (type 7).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

const MAX_MODE_BINS: usize = 10_000;

/// Center of the densest histogram bin, with Freedman-Diaconis bin width.
pub(crate) fn histogram_mode(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let width = 2.0 * iqr / (n as f64).cbrt();
    if !(width > 0.0) || !(max > min) {
        return median_sorted(sorted);
    }
    let bins = (((max - min) / width).ceil() as usize).clamp(1, MAX_MODE_BINS);
    let width = (max - min) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in sorted {
        let b = (((x - min) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    min + (best as f64 + 0.5) * width
}

fn levels_for(ensemble: &ParameterEnsemble, period: f64, phi: f64) -> Result<Vec<f64>> {
    ensemble
        .samples
        .iter()
        .map(|p| return_level(p, period, ensemble.structure, phi))
        .collect()
}

pub fn return_level_ensemble(
    ensemble: &ParameterEnsemble,
    period: f64,
    covariate_ref: CovariateRef,
    dataset: &AlignedDataset,
    mass: f64,
) -> Result<ReturnLevelDistribution> {
    check_period(period)?;
    let phi = covariate_ref.resolve(dataset)?;
    let map = map_estimate(ensemble)?;
    let map_level = return_level(&map, period, ensemble.structure, phi)?;
    ReturnLevelDistribution::from_levels(period, levels_for(ensemble, period, phi)?, map_level, mass)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnCurve {
    pub periods: Vec<f64>,
    pub summaries: Vec<ReturnLevelDistribution>,
}

pub fn return_curve(
    ensemble: &ParameterEnsemble,
    periods: &[f64],
    covariate_ref: CovariateRef,
    dataset: &AlignedDataset,
    mass: f64,
) -> Result<ReturnCurve> {
    if periods.is_empty() {
        return Err(Error::Validation("no return periods requested".into()));
    }
    for &p in periods {
        check_period(p)?;
    }
    if periods.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("return periods must be strictly increasing".into()));
    }
    let summaries = periods
        .iter()
        .map(|&t| return_level_ensemble(ensemble, t, covariate_ref, dataset, mass))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReturnCurve {
        periods: periods.to_vec(),
        summaries,
    })
}

impl ReturnCurve {
    pub const CSV_HEADER: [&'static str; 7] = ["period", "expected", "median", "mode", "lo", "hi", "map_level"];

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Validation(format!("csv write: {e}"));
        w.write_record(Self::CSV_HEADER).map_err(err)?;
        for s in &self.summaries {
            w.write_record([
                s.return_period.to_string(),
                s.expected.to_string(),
                s.median.to_string(),
                s.mode_estimate.to_string(),
                s.credible_interval.0.to_string(),
                s.credible_interval.1.to_string(),
                s.map_level.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Recurrence interval, under a nonstationary ensemble, of a level designed
/// from a stationary analysis.
///
/// Each sample's exceedance probability of `stationary_level` at the
/// reference covariate is averaged over the ensemble; the result is the
/// reciprocal of that mean, or `f64::INFINITY` when the level lies above
/// every sample's support.
pub fn equivalent_return_period(
    stationary_level: f64,
    ns_ensemble: &ParameterEnsemble,
    covariate_ref: CovariateRef,
    dataset: &AlignedDataset,
) -> Result<f64> {
    if !stationary_level.is_finite() {
        return Err(Error::Validation(format!("level must be finite, got {stationary_level}")));
    }
    if ns_ensemble.is_empty() {
        return Err(Error::Validation("empty ensemble".into()));
    }
    let phi = covariate_ref.resolve(dataset)?;
    let mut total = 0.0;
    for p in &ns_ensemble.samples {
        let mu = match ns_ensemble.structure {
            ModelStructure::Stationary => p.mu0,
            ModelStructure::Nonstationary => p.location_at(phi),
        };
        total += Gev::new(mu, p.sigma, p.xi)?.sf(stationary_level);
    }
    let mean = total / ns_ensemble.len() as f64;
    Ok(if mean > 0.0 { 1.0 / mean } else { f64::INFINITY })
}

/// Fraction of `levels` strictly greater than `x`.
pub fn empirical_survival(levels: &[f64], x: f64) -> f64 {
    if levels.is_empty() {
        return 0.0;
    }
    levels.iter().filter(|&&l| l > x).count() as f64 / levels.len() as f64
}

/// Empirical survival function evaluated at each distinct level.
pub fn survival_function(levels: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        out.push((sorted[i], (sorted.len() - j) as f64 / n));
        i = j;
    }
    out
}

pub fn write_survival_csv<W: Write>(points: &[(f64, f64)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Validation(format!("csv write: {e}"));
    w.write_record(["level", "survival"]).map_err(err)?;
    for (l, s) in points {
        w.write_record([l.to_string(), s.to_string()]).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gumbel_hundred_year() {
        let p = GevParams::stationary(0.0, 1.0, 0.0);
        let l = return_level(&p, 100.0, ModelStructure::Stationary, 0.0).unwrap();
        assert_abs_diff_eq!(l, -(-(0.99f64).ln()).ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(l, 4.6001, epsilon = 5e-5);
    }

    #[test]
    fn two_year_gumbel() {
        let p = GevParams::stationary(3.0, 2.0, 0.0);
        let l = return_level(&p, 2.0, ModelStructure::Stationary, 0.0).unwrap();
        assert_abs_diff_eq!(l, 3.0 - 2.0 * (2f64.ln()).ln(), epsilon = 1e-13);
        assert_abs_diff_eq!((l - 3.0) / 2.0, 0.3665, epsilon = 5e-5);
    }

    #[test]
    fn stationary_ignores_covariate() {
        let p = GevParams::stationary(3.0, 1.0, 0.1);
        let a = return_level(&p, 50.0, ModelStructure::Stationary, -3.0).unwrap();
        let b = return_level(&p, 50.0, ModelStructure::Stationary, 7.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn period_domain() {
        let p = GevParams::stationary(0.0, 1.0, 0.0);
        assert!(matches!(return_level(&p, 1.0, ModelStructure::Stationary, 0.0), Err(Error::Domain(_))));
        assert!(return_level(&p, 0.5, ModelStructure::Stationary, 0.0).is_err());
    }

    #[test]
    fn monotone_in_period() {
        let p = GevParams::new(2.0, 0.5, 0.7, -0.2);
        let mut prev = f64::NEG_INFINITY;
        for t in [1.01, 1.5, 2.0, 5.0, 10.0, 100.0, 1e4] {
            let l = return_level(&p, t, ModelStructure::Nonstationary, 0.4).unwrap();
            assert!(l > prev);
            prev = l;
        }
        // bounded above by the Weibull endpoint
        assert!(prev < p.location_at(0.4) - p.sigma / p.xi);
    }

    #[test]
    fn single_level_summary() {
        let s = ReturnLevelDistribution::from_levels(100.0, vec![7.5], 7.5, 0.9).unwrap();
        assert_eq!((s.expected, s.median, s.mode_estimate), (7.5, 7.5, 7.5));
        assert_eq!(s.interval_width(), 0.0);
    }

    #[test]
    fn interval_coverage_within_one_over_n() {
        for n in [1usize, 2, 3, 10, 11, 99, 100, 1001] {
            let levels: Vec<f64> = (0..n).map(|i| ((i * 37) % n) as f64 + 0.5).collect();
            for mass in [0.5, 0.8, 0.9, 0.95] {
                let s = ReturnLevelDistribution::from_levels(10.0, levels.clone(), 0.0, mass).unwrap();
                let (lo, hi) = s.credible_interval;
                let inside = levels.iter().filter(|&&l| l >= lo && l <= hi).count() as f64 / n as f64;
                assert!(lo <= s.median && s.median <= hi);
                if n > 1 {
                    assert!((inside - mass).abs() <= 1.0 / n as f64 + 1e-12, "n={n} mass={mass} inside={inside}");
                }
            }
        }
    }

    #[test]
    fn mode_finds_the_peak() {
        let mut v: Vec<f64> = (0..200).map(|i| 10.0 + i as f64 * 0.05).collect();
        v.extend(std::iter::repeat_n(3.0, 500));
        v.sort_by(f64::total_cmp);
        let m = histogram_mode(&v);
        assert!((m - 3.0).abs() < 1.0, "{m}");
    }

    #[test]
    fn survival_examples() {
        assert_abs_diff_eq!(empirical_survival(&[1.0, 2.0, 3.0], 1.5), 2.0 / 3.0);
        let sf = survival_function(&[3.0, 1.0, 2.0, 2.0]);
        assert_eq!(sf, vec![(1.0, 0.75), (2.0, 0.25), (3.0, 0.0)]);
        assert_eq!(survival_function(&[4.0; 5]), vec![(4.0, 0.0)]);
        assert_eq!(empirical_survival(&[4.0; 5], 4.0 - 1e-9), 1.0);
    }

    #[test]
    fn covariate_ref_parsing() {
        assert_eq!("last-year".parse::<CovariateRef>().unwrap(), CovariateRef::LastYear);
        assert_eq!("mean".parse::<CovariateRef>().unwrap(), CovariateRef::EmpiricalMean);
        assert_eq!("0.25".parse::<CovariateRef>().unwrap(), CovariateRef::FixedValue { value: 0.25 });
        assert_eq!("fixed:-1".parse::<CovariateRef>().unwrap(), CovariateRef::FixedValue { value: -1.0 });
        assert!("nan".parse::<CovariateRef>().is_err());
        assert!("soon".parse::<CovariateRef>().is_err());
    }
}
