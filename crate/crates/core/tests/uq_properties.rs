mod common;

use proptest::prelude::*;

use stagefreq::uq::{anova_effects, decompose, marginal_cumulative, Measure, ScenarioGrid};

use common::{decompose_brute, grid_from_fn, random_grid, range_of, tuples, variance_of};

fn grid_strategy() -> impl Strategy<Value = ScenarioGrid> {
    prop::collection::vec(1..4usize, 1..4).prop_flat_map(|counts| {
        let n: usize = counts.iter().product();
        prop::collection::vec(-20.0..20.0f64, n).prop_map(move |values| {
            let names = (0..counts.len()).map(|i| format!("s{i}")).collect();
            ScenarioGrid::new(names, counts.clone(), values).unwrap()
        })
    })
}

fn measure_strategy() -> impl Strategy<Value = Measure> {
    prop_oneof![Just(Measure::Range), Just(Measure::Variance)]
}

fn reference(m: Measure) -> fn(&[f64]) -> f64 {
    match m {
        Measure::Range => range_of,
        Measure::Variance => variance_of,
    }
}

proptest! {
    #[test]
    fn telescoping_and_monotone(g in grid_strategy(), m in measure_strategy()) {
        let d = decompose(&g, m).unwrap();
        let sum: f64 = d.individual.iter().sum();
        prop_assert!((sum - d.total).abs() <= 1e-9);
        prop_assert!(d.individual.iter().all(|u| *u >= -1e-12));
        prop_assert!(d.cumulative.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        prop_assert_eq!(d.total, *d.cumulative.last().unwrap());
        prop_assert!((d.total - m.apply(&g.estimates).unwrap()).abs() <= 1e-12);
        let shares = d.shares();
        if d.total > 0.0 {
            prop_assert!((shares.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn matches_brute_force(g in grid_strategy(), m in measure_strategy()) {
        let d = decompose(&g, m).unwrap();
        let (cum, ind) = decompose_brute(&g, reference(m));
        for k in 0..g.sources() {
            prop_assert!((d.cumulative[k] - cum[k]).abs() <= 1e-12);
            prop_assert!((d.individual[k] - ind[k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn relabelling_scenarios_changes_nothing(g in grid_strategy(), m in measure_strategy(), source in 0..3usize, shift in 1..3usize) {
        let source = source % g.sources();
        let counts = g.scenario_counts.clone();
        let all = tuples(&counts);
        let permuted = grid_from_fn(&counts, |t| {
            let mut u = t.to_vec();
            u[source] = (u[source] + shift) % counts[source];
            g.estimates[all.iter().position(|v| *v == u).unwrap()]
        });
        let (a, b) = (decompose(&g, m).unwrap(), decompose(&permuted, m).unwrap());
        for k in 0..g.sources() {
            prop_assert!((a.individual[k] - b.individual[k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn full_anova_reproduces_variance_individuals(g in grid_strategy()) {
        let a = anova_effects(&g, Measure::Variance).unwrap();
        let d = decompose(&g, Measure::Variance).unwrap();
        for z in 0..g.sources() {
            prop_assert!((a.full_reconstruction(z) - d.individual[z]).abs() <= 1e-9);
        }
        prop_assert!((a.total_variance() - d.total).abs() <= 1e-9);
    }
}

#[test]
fn degenerate_source_contributes_nothing() {
    let g = grid_from_fn(&[3, 4], |t| [1.0, 4.0, 2.5, 9.0][t[1]]);
    for m in [Measure::Range, Measure::Variance] {
        let d = decompose(&g, m).unwrap();
        assert_eq!(d.individual[0], 0.0);
    }
}

#[test]
fn single_source_marginal_is_whole_grid_measure() {
    let g = random_grid(&[7], 3);
    for m in [Measure::Range, Measure::Variance] {
        assert_eq!(marginal_cumulative(&g, 1, m).unwrap(), m.apply(&g.estimates).unwrap());
    }
}

#[test]
fn source_order_matters_but_total_does_not() {
    let g = random_grid(&[3, 2, 4], 11);
    let r = g.reorder_sources(&[2, 0, 1]).unwrap();
    let (a, b) = (decompose(&g, Measure::Range).unwrap(), decompose(&r, Measure::Range).unwrap());
    assert!((a.total - b.total).abs() < 1e-12);
    assert_eq!(r.source_names, vec!["s2", "s0", "s1"]);
}
