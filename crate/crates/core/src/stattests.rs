//! Nonstationarity screening: Pettitt change-point test, Mann-Kendall trend
//! test, and the split-and-retest workflow built on them.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::AnnualMaximaSeries;

/// Smallest sample either test accepts.
pub const MIN_TEST_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangePointResult {
    /// 1-based index of the last point of the first segment.
    pub tau: usize,
    pub statistic_k: u64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrendDirection {
    Increasing,
    Decreasing,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendResult {
    pub statistic_s: i64,
    pub variance_s: f64,
    pub z_score: f64,
    pub p_value: f64,
    pub significant: bool,
    pub direction: TrendDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecommendedStructure {
    Stationary,
    Nonstationary,
}

impl From<RecommendedStructure> for crate::gev::ModelStructure {
    fn from(r: RecommendedStructure) -> Self {
        match r {
            RecommendedStructure::Stationary => crate::gev::ModelStructure::Stationary,
            RecommendedStructure::Nonstationary => crate::gev::ModelStructure::Nonstationary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonstationarityAssessment {
    pub alpha: f64,
    pub n: usize,
    pub change_point: ChangePointResult,
    /// Calendar year of the last point before the break.
    pub change_year: Option<i32>,
    pub trend_full: Option<TrendResult>,
    pub trend_before: Option<TrendResult>,
    pub trend_after: Option<TrendResult>,
    pub recommended_structure: RecommendedStructure,
    #[serde(default)]
    pub warnings: Vec<String>,
}

fn sgn(a: f64, b: f64) -> i64 {
    match a.partial_cmp(&b) {
        Some(Ordering::Greater) => 1,
        Some(Ordering::Less) => -1,
        _ => 0,
    }
}

fn check_input(values: &[f64], alpha: f64) -> Result<()> {
    if values.len() < MIN_TEST_LEN {
        return Err(Error::InsufficientData {
            needed: MIN_TEST_LEN,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("test input contains non-finite values".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("significance level must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Pettitt's rank-based test for a single change point in the mean.
///
/// `U_t = sum_{i<=t} sum_{j>t} sgn(x_i - x_j)`, `K = max |U_t|` with the
/// earliest maximizing `t` reported, and the approximate p-value
/// `min(1, 2 exp(-6K^2 / (n^3 + n^2)))`.
pub fn pettitt_test(values: &[f64], alpha: f64) -> Result<ChangePointResult> {
    check_input(values, alpha)?;
    let n = values.len();

    // U_t = U_{t-1} + sum_j sgn(x_t - x_j)
    let mut u: i64 = 0;
    let mut best_k: u64 = 0;
    let mut tau = 1;
    for t in 0..n - 1 {
        let xt = values[t];
        u += values.iter().map(|&xj| sgn(xt, xj)).sum::<i64>();
        let k = u.unsigned_abs();
        if k > best_k {
            best_k = k;
            tau = t + 1;
        }
    }

    let nf = n as f64;
    let kf = best_k as f64;
    let p_value = (2.0 * (-6.0 * kf * kf / (nf.powi(3) + nf.powi(2))).exp()).min(1.0);
    Ok(ChangePointResult {
        tau,
        statistic_k: best_k,
        p_value,
        significant: p_value < alpha,
    })
}

/// Two-sided standard normal tail probability `P(|Z| > |z|)`.
pub(crate) fn two_sided_normal_p(z: f64) -> f64 {
    statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Mann-Kendall monotonic trend test, normal approximation with tie
/// correction and continuity correction.
pub fn mann_kendall_test(values: &[f64], alpha: f64) -> Result<TrendResult> {
    check_input(values, alpha)?;
    let n = values.len();

    let mut s: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            s += sgn(values[j], values[i]);
        }
    }

    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * (t - 1.0) * (2.0 * t + 5.0);
        i = j;
    }
    let nf = n as f64;
    let variance = ((nf * (nf - 1.0) * (2.0 * nf + 5.0) - tie_term) / 18.0).max(0.0);

    if variance == 0.0 {
        return Ok(TrendResult {
            statistic_s: s,
            variance_s: 0.0,
            z_score: 0.0,
            p_value: 1.0,
            significant: false,
            direction: TrendDirection::None,
        });
    }

    let sd = variance.sqrt();
    let z = match s.cmp(&0) {
        Ordering::Greater => (s - 1) as f64 / sd,
        Ordering::Less => (s + 1) as f64 / sd,
        Ordering::Equal => 0.0,
    };
    let p_value = two_sided_normal_p(z);
    let significant = p_value < alpha;
    let direction = match (significant, s.cmp(&0)) {
        (true, Ordering::Greater) => TrendDirection::Increasing,
        (true, Ordering::Less) => TrendDirection::Decreasing,
        _ => TrendDirection::None,
    };
    Ok(TrendResult {
        statistic_s: s,
        variance_s: variance,
        z_score: z,
        p_value,
        significant,
        direction,
    })
}

fn subseries_trend(
    values: &[f64],
    alpha: f64,
    label: &str,
    warnings: &mut Vec<String>,
) -> Result<Option<TrendResult>> {
    if values.len() < MIN_TEST_LEN {
        warnings.push(format!(
            "{label} subseries has {} values (< {MIN_TEST_LEN}); trend not tested",
            values.len()
        ));
        return Ok(None);
    }
    mann_kendall_test(values, alpha).map(Some)
}

/// Screens a record for nonstationarity.
///
/// A significant change point splits the record in two and each side is
/// tested for trend; the structure is then nonstationary. Otherwise the
/// whole record is tested for trend and the structure follows that test.
pub fn assess_nonstationarity(
    series: &AnnualMaximaSeries,
    alpha: f64,
) -> Result<NonstationarityAssessment> {
    let values = series.values();
    let change_point = pettitt_test(values, alpha)?;
    let mut warnings = Vec::new();

    let (trend_full, trend_before, trend_after, recommended) = if change_point.significant {
        let (before, after) = values.split_at(change_point.tau);
        let tb = subseries_trend(before, alpha, "pre-change", &mut warnings)?;
        let ta = subseries_trend(after, alpha, "post-change", &mut warnings)?;
        (None, tb, ta, RecommendedStructure::Nonstationary)
    } else {
        let tf = mann_kendall_test(values, alpha)?;
        let rec = if tf.significant {
            RecommendedStructure::Nonstationary
        } else {
            RecommendedStructure::Stationary
        };
        (Some(tf), None, None, rec)
    };

    Ok(NonstationarityAssessment {
        alpha,
        n: values.len(),
        change_point,
        change_year: series.years().get(change_point.tau - 1).copied(),
        trend_full,
        trend_before,
        trend_after,
        recommended_structure: recommended,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pettitt_step_example() {
        let r = pettitt_test(&[1.0, 1.0, 1.0, 10.0, 10.0, 10.0], 0.05).unwrap();
        assert_eq!(r.statistic_k, 9);
        assert_eq!(r.tau, 3);
        assert_abs_diff_eq!(r.p_value, 2.0 * (-486.0f64 / 252.0).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.p_value, 0.291, epsilon = 5e-4);
        assert!(!r.significant);
    }

    #[test]
    fn pettitt_ramp_and_constant() {
        let r = pettitt_test(&[1.0, 2.0, 3.0, 4.0], 0.05).unwrap();
        assert_eq!((r.statistic_k, r.tau), (4, 2));

        let r = pettitt_test(&[3.0; 8], 0.05).unwrap();
        assert_eq!(r.statistic_k, 0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.significant);
    }

    #[test]
    fn short_input_rejected() {
        assert!(matches!(
            pettitt_test(&[1.0, 2.0, 3.0], 0.05),
            Err(Error::InsufficientData { needed: 4, got: 3 })
        ));
        assert!(matches!(
            mann_kendall_test(&[1.0, 2.0], 0.05),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn mann_kendall_ramp() {
        let r = mann_kendall_test(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.05).unwrap();
        assert_eq!(r.statistic_s, 10);
        assert_abs_diff_eq!(r.variance_s, 50.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.z_score, 9.0 / (50.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(r.z_score, 2.2045, epsilon = 5e-5);
        assert_abs_diff_eq!(r.p_value, 0.0275, epsilon = 5e-5);
        assert!(r.significant);
        assert_eq!(r.direction, TrendDirection::Increasing);
    }

    #[test]
    fn mann_kendall_constant_is_degenerate() {
        let r = mann_kendall_test(&[2.0; 6], 0.05).unwrap();
        assert_eq!(r.statistic_s, 0);
        assert_eq!(r.z_score, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.direction, TrendDirection::None);
    }

    #[test]
    fn mann_kendall_reversal_negates() {
        let x = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let mut rev = x;
        rev.reverse();
        let a = mann_kendall_test(&x, 0.05).unwrap();
        let b = mann_kendall_test(&rev, 0.05).unwrap();
        assert_eq!(a.statistic_s, -b.statistic_s);
        assert_eq!(a.variance_s, b.variance_s);
    }

    #[test]
    fn normal_tail_reference_values() {
        // P(|Z| > 1.959963984540054) = 0.05; erfc is good to about 1e-11 here
        assert_abs_diff_eq!(two_sided_normal_p(1.959963984540054), 0.05, epsilon = 1e-10);
        assert_abs_diff_eq!(two_sided_normal_p(2.5758293035489004), 0.01, epsilon = 1e-11);
        assert_eq!(two_sided_normal_p(0.0), 1.0);
    }

    #[test]
    fn short_side_after_split_is_reported() {
        // a break after the second point; K <= tau * (n - tau) keeps p large,
        // so a loose alpha is needed to flag it
        let mut v = vec![1.0, 1.1];
        v.extend(std::iter::repeat_n(10.0, 20));
        let years: Vec<i32> = (1990..1990 + v.len() as i32).collect();
        let s = AnnualMaximaSeries::new(years, v, None).unwrap();
        let a = assess_nonstationarity(&s, 0.9).unwrap();
        assert!(a.change_point.significant);
        assert_eq!(a.change_point.tau, 2);
        assert_eq!(a.change_year, Some(1991));
        assert!(a.trend_before.is_none());
        assert!(a.trend_after.is_some());
        assert_eq!(a.warnings.len(), 1);
        assert_eq!(a.recommended_structure, RecommendedStructure::Nonstationary);
    }
}
