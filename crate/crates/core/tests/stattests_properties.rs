mod common;

use proptest::prelude::*;

use stagefreq::ingest::AnnualMaximaSeries;
use stagefreq::stattests::{assess_nonstationarity, mann_kendall_test, pettitt_test, RecommendedStructure, TrendDirection};
use stagefreq::synthetic;

use common::{mann_kendall_brute, pettitt_brute};

fn tied_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0..6u8).prop_map(f64::from), 4..40)
}

proptest! {
    #[test]
    fn statistics_match_pair_enumeration(x in tied_values()) {
        let p = pettitt_test(&x, 0.05).unwrap();
        prop_assert_eq!((p.tau, p.statistic_k), pettitt_brute(&x));
        let m = mann_kendall_test(&x, 0.05).unwrap();
        let (s, var) = mann_kendall_brute(&x);
        prop_assert_eq!(m.statistic_s, s);
        prop_assert_eq!(m.variance_s, var);
    }

    #[test]
    fn p_values_and_flags_are_consistent(x in prop::collection::vec(-5.0..5.0f64, 4..60), alpha in 0.001..0.5f64) {
        let p = pettitt_test(&x, alpha).unwrap();
        prop_assert!((0.0..=1.0).contains(&p.p_value));
        prop_assert_eq!(p.significant, p.p_value < alpha);
        prop_assert!(p.tau >= 1 && p.tau < x.len());
        let n = x.len() as u64;
        prop_assert!(p.statistic_k <= (n / 2) * (n - n / 2));

        let m = mann_kendall_test(&x, alpha).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.p_value));
        prop_assert_eq!(m.significant, m.p_value < alpha);
        prop_assert!(m.statistic_s.unsigned_abs() <= n * (n - 1) / 2);
        match m.direction {
            TrendDirection::Increasing => prop_assert!(m.significant && m.statistic_s > 0),
            TrendDirection::Decreasing => prop_assert!(m.significant && m.statistic_s < 0),
            TrendDirection::None => prop_assert!(!m.significant || m.statistic_s == 0),
        }
    }

    #[test]
    fn rank_statistics_ignore_monotone_transforms(x in prop::collection::vec(0.1..5.0f64, 4..40)) {
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.exp() + 1.0).collect();
        let (px, py) = (pettitt_test(&x, 0.05).unwrap(), pettitt_test(&y, 0.05).unwrap());
        prop_assert_eq!(px, py);
        let (mx, my) = (mann_kendall_test(&x, 0.05).unwrap(), mann_kendall_test(&y, 0.05).unwrap());
        prop_assert_eq!(mx, my);
    }

    #[test]
    fn tighter_alpha_never_adds_significance(x in prop::collection::vec(-5.0..5.0f64, 4..60)) {
        let loose = mann_kendall_test(&x, 0.05).unwrap();
        let tight = mann_kendall_test(&x, 0.01).unwrap();
        prop_assert!(!tight.significant || loose.significant);
        prop_assert_eq!(loose.p_value, tight.p_value);
    }
}

fn series(values: Vec<f64>) -> AnnualMaximaSeries {
    let years = (1961..1961 + values.len() as i32).collect();
    AnnualMaximaSeries::new(years, values, None).unwrap()
}

#[test]
fn step_fixture_recommends_nonstationary() {
    let s = series(synthetic::step_series(30, 30, 5.0, 8.0, 1.0, synthetic::STEP_SEED));
    let a = assess_nonstationarity(&s, 0.05).unwrap();
    assert!(a.change_point.significant);
    assert_eq!(a.recommended_structure, RecommendedStructure::Nonstationary);
    assert!(a.trend_full.is_none() && a.trend_before.is_some() && a.trend_after.is_some());
    assert_eq!(a.change_year, Some(1961 + a.change_point.tau as i32 - 1));
}

#[test]
fn white_noise_fixture_recommends_stationary() {
    let s = series(synthetic::white_noise(60, 6.0, 0.5, synthetic::WHITE_NOISE_SEED));
    let a = assess_nonstationarity(&s, 0.05).unwrap();
    assert!(!a.change_point.significant);
    assert_eq!(a.recommended_structure, RecommendedStructure::Stationary);
}
