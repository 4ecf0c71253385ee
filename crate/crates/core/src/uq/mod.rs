//! Cumulative decomposition of return-level uncertainty across ordered
//! sources.
//!
//! For sources `1..=Z` the conditional cumulative uncertainty up to source
//! `z` is the spread (range or population variance) of all estimates
//! obtained by varying sources `1..=z` while sources after `z` are held at
//! one fixed choice. Averaging over every fixed choice gives the marginal
//! cumulative uncertainty, and successive differences of the marginal
//! values give each source's individual contribution. Those contributions
//! telescope to the total.

mod anova;
mod scenario;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use anova::{anova_effects, AnovaEffects, AnovaTerm};
pub use scenario::{
    build_scenario_grid, fit_cells, grid_from_cells, CellFit, NamedPrior, FIT_STAGE, SOURCE_PARAMETER,
    SOURCE_PRIOR, SOURCE_STRUCTURE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Range,
    Variance,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::Range => "range",
            Measure::Variance => "variance",
        }
    }

    pub fn apply(self, values: &[f64]) -> Result<f64> {
        match self {
            Measure::Range => range_measure(values),
            Measure::Variance => variance_measure(values),
        }
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "range" => Ok(Measure::Range),
            "variance" => Ok(Measure::Variance),
            other => Err(Error::Validation(format!("unknown measure '{other}'"))),
        }
    }
}

/// `max - min`.
pub fn range_measure(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Validation("range of an empty set".into()));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(hi - lo)
}

/// Population variance `(1/n) sum (y - mean)^2`.
pub fn variance_measure(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Validation("variance of an empty set".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok(values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n)
}

/// Fully crossed table of estimates, one axis per uncertainty source.
///
/// Stored row-major: the last source varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGrid {
    pub source_names: Vec<String>,
    pub scenario_counts: Vec<usize>,
    pub estimates: Vec<f64>,
}

impl ScenarioGrid {
    pub fn new(source_names: Vec<String>, scenario_counts: Vec<usize>, estimates: Vec<f64>) -> Result<Self> {
        if source_names.is_empty() || source_names.len() != scenario_counts.len() {
            return Err(Error::Validation(format!(
                "{} source names for {} scenario axes",
                source_names.len(),
                scenario_counts.len()
            )));
        }
        if scenario_counts.contains(&0) {
            return Err(Error::Validation("every source needs at least one scenario".into()));
        }
        let cells: usize = scenario_counts.iter().product();
        if cells != estimates.len() {
            return Err(Error::Validation(format!(
                "incomplete grid: {} estimates for {cells} scenario combinations",
                estimates.len()
            )));
        }
        if estimates.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("grid holds non-finite estimates".into()));
        }
        Ok(Self {
            source_names,
            scenario_counts,
            estimates,
        })
    }

    pub fn sources(&self) -> usize {
        self.scenario_counts.len()
    }

    fn strides(&self) -> Vec<usize> {
        let z = self.sources();
        let mut s = vec![1; z];
        for j in (0..z.saturating_sub(1)).rev() {
            s[j] = s[j + 1] * self.scenario_counts[j + 1];
        }
        s
    }

    pub fn index_of(&self, choice: &[usize]) -> Result<usize> {
        if choice.len() != self.sources() {
            return Err(Error::Validation(format!(
                "scenario choice has {} entries for {} sources",
                choice.len(),
                self.sources()
            )));
        }
        let mut idx = 0;
        for ((&c, &n), s) in choice.iter().zip(&self.scenario_counts).zip(self.strides()) {
            if c >= n {
                return Err(Error::Validation(format!("scenario {c} out of range 0..{n}")));
            }
            idx += c * s;
        }
        Ok(idx)
    }

    pub fn get(&self, choice: &[usize]) -> Result<f64> {
        Ok(self.estimates[self.index_of(choice)?])
    }

    /// The same table with its axes listed in `order`.
    pub fn reorder_sources(&self, order: &[usize]) -> Result<Self> {
        let z = self.sources();
        let mut seen = vec![false; z];
        if order.len() != z || order.iter().any(|&o| o >= z || std::mem::replace(&mut seen[o], true)) {
            return Err(Error::Validation(format!("{order:?} is not a permutation of 0..{z}")));
        }
        let names = order.iter().map(|&o| self.source_names[o].clone()).collect();
        let counts: Vec<usize> = order.iter().map(|&o| self.scenario_counts[o]).collect();
        let old_strides = self.strides();
        let mut out = Vec::with_capacity(self.estimates.len());
        let mut choice = vec![0usize; z];
        for _ in 0..self.estimates.len() {
            let src: usize = choice.iter().zip(order).map(|(&c, &o)| c * old_strides[o]).sum();
            out.push(self.estimates[src]);
            for j in (0..z).rev() {
                choice[j] += 1;
                if choice[j] < counts[j] {
                    break;
                }
                choice[j] = 0;
            }
        }
        Self::new(names, counts, out)
    }

    /// Combinations of the leading `upto` sources, times those of the rest.
    fn split(&self, upto: usize) -> (usize, usize) {
        let lead: usize = self.scenario_counts[..upto].iter().product();
        let trail: usize = self.scenario_counts[upto..].iter().product();
        (lead, trail)
    }

    fn slice_values(&self, upto: usize, trailing_offset: usize) -> Vec<f64> {
        let (lead, trail) = self.split(upto);
        (0..lead).map(|l| self.estimates[l * trail + trailing_offset]).collect()
    }

    fn check_upto(&self, upto: usize) -> Result<()> {
        if upto == 0 || upto > self.sources() {
            return Err(Error::Validation(format!(
                "source count {upto} outside 1..={}",
                self.sources()
            )));
        }
        Ok(())
    }
}

/// Spread of the estimates over every choice of sources `1..=upto`, with the
/// later sources fixed at `fixed_after` (scenario indices, one per source
/// after `upto`).
pub fn conditional_cumulative(
    grid: &ScenarioGrid,
    upto: usize,
    fixed_after: &[usize],
    measure: Measure,
) -> Result<f64> {
    grid.check_upto(upto)?;
    let rest = &grid.scenario_counts[upto..];
    if fixed_after.len() != rest.len() {
        return Err(Error::Validation(format!(
            "expected {} fixed scenario choices after source {upto}, got {}",
            rest.len(),
            fixed_after.len()
        )));
    }
    let mut offset = 0;
    for (&c, &n) in fixed_after.iter().zip(rest) {
        if c >= n {
            return Err(Error::Validation(format!("scenario {c} out of range 0..{n}")));
        }
        offset = offset * n + c;
    }
    measure.apply(&grid.slice_values(upto, offset))
}

/// Mean of the conditional cumulative uncertainty over every fixed choice
/// of the sources after `upto`. Zero for `upto == 0`.
pub fn marginal_cumulative(grid: &ScenarioGrid, upto: usize, measure: Measure) -> Result<f64> {
    if upto == 0 {
        return Ok(0.0);
    }
    grid.check_upto(upto)?;
    let (_, trail) = grid.split(upto);
    let mut sum = 0.0;
    for t in 0..trail {
        sum += measure.apply(&grid.slice_values(upto, t))?;
    }
    Ok(sum / trail as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyDecomposition {
    pub measure: Measure,
    pub source_names: Vec<String>,
    /// Marginal cumulative uncertainty up to and including each source.
    pub cumulative: Vec<f64>,
    pub individual: Vec<f64>,
    pub total: f64,
}

impl UncertaintyDecomposition {
    /// Each source's fraction of the total; zeros when the total is zero.
    pub fn shares(&self) -> Vec<f64> {
        if self.total > 0.0 {
            self.individual.iter().map(|u| u / self.total).collect()
        } else {
            vec![0.0; self.individual.len()]
        }
    }
}

/// Relative slack allowed for float reassociation in the monotonicity check.
const MONOTONE_SLACK: f64 = 1e-12;

/// Cumulative and individual uncertainties for every source in grid order.
///
/// A drop in the cumulative sequence beyond rounding is returned as
/// [`Error::NonMonotone`] rather than clamped.
pub fn decompose(grid: &ScenarioGrid, measure: Measure) -> Result<UncertaintyDecomposition> {
    let z = grid.sources();
    let mut cumulative = Vec::with_capacity(z);
    let mut individual = Vec::with_capacity(z);
    let mut prev: f64 = 0.0;
    for upto in 1..=z {
        let cur = marginal_cumulative(grid, upto, measure)?;
        if cur < prev - MONOTONE_SLACK * (1.0 + prev.abs()) {
            return Err(Error::NonMonotone {
                source_index: upto - 1,
                previous: prev,
                current: cur,
            });
        }
        individual.push(cur - prev);
        cumulative.push(cur);
        prev = cur;
    }
    Ok(UncertaintyDecomposition {
        measure,
        source_names: grid.source_names.clone(),
        cumulative,
        individual,
        total: prev,
    })
}
