//! Functional ANOVA of a balanced scenario grid.

use serde::{Deserialize, Serialize};

use super::{Measure, ScenarioGrid};
use crate::error::{Error, Result};

const MAX_ANOVA_SOURCES: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTerm {
    /// Source indices of the effect, increasing.
    pub sources: Vec<usize>,
    /// Mean square of the effect over the grid.
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaEffects {
    pub source_names: Vec<String>,
    pub grand_mean: f64,
    /// Every nonempty effect, ordered by size then by source indices.
    pub terms: Vec<AnovaTerm>,
}

impl AnovaEffects {
    fn term(&self, sources: &[usize]) -> f64 {
        self.terms
            .iter()
            .find(|t| t.sources == sources)
            .map(|t| t.variance)
            .unwrap_or(0.0)
    }

    pub fn main_variance(&self, z: usize) -> f64 {
        self.term(&[z])
    }

    pub fn main_variances(&self) -> Vec<f64> {
        (0..self.source_names.len()).map(|z| self.main_variance(z)).collect()
    }

    pub fn interaction_variance(&self, z: usize, h: usize) -> f64 {
        let (a, b) = if z < h { (z, h) } else { (h, z) };
        self.term(&[a, b])
    }

    /// Pairwise interactions `(z, h, variance)` with `z < h`.
    pub fn interaction_variances(&self) -> Vec<(usize, usize, f64)> {
        self.terms
            .iter()
            .filter(|t| t.sources.len() == 2)
            .map(|t| (t.sources[0], t.sources[1], t.variance))
            .collect()
    }

    /// Main effect of `z` plus its pairwise interactions with later sources.
    pub fn pairwise_reconstruction(&self, z: usize) -> f64 {
        let later: f64 = (z + 1..self.source_names.len())
            .map(|h| self.interaction_variance(z, h))
            .sum();
        self.main_variance(z) + later
    }

    /// Every effect whose earliest source is `z`; equals the variance-measure
    /// individual uncertainty of `z` exactly.
    pub fn full_reconstruction(&self, z: usize) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.sources.first() == Some(&z))
            .map(|t| t.variance)
            .sum()
    }

    /// Variance carried by effects of three or more sources.
    pub fn higher_order_variance(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.sources.len() > 2)
            .map(|t| t.variance)
            .sum()
    }

    pub fn total_variance(&self) -> f64 {
        self.terms.iter().map(|t| t.variance).sum()
    }
}

/// Decomposes the grid into a grand mean plus orthogonal effects.
///
/// Each main effect is the scenario-conditional mean minus the grand mean;
/// each interaction is the conditional mean over its sources minus all
/// lower-order effects it contains. Only defined for the variance measure.
pub fn anova_effects(grid: &ScenarioGrid, measure: Measure) -> Result<AnovaEffects> {
    if measure != Measure::Variance {
        return Err(Error::Unsupported("ANOVA effects are defined for the variance measure only".into()));
    }
    let z = grid.sources();
    if z > MAX_ANOVA_SOURCES {
        return Err(Error::Unsupported(format!("ANOVA over {z} sources (max {MAX_ANOVA_SOURCES})")));
    }
    let n = grid.estimates.len();
    let counts = &grid.scenario_counts;
    let grand_mean = grid.estimates.iter().sum::<f64>() / n as f64;

    // multi-index of every cell
    let mut coords = vec![vec![0usize; z]; n];
    {
        let mut c = vec![0usize; z];
        for cell in coords.iter_mut() {
            cell.copy_from_slice(&c);
            for j in (0..z).rev() {
                c[j] += 1;
                if c[j] < counts[j] {
                    break;
                }
                c[j] = 0;
            }
        }
    }

    let mut masks: Vec<u32> = (1..(1u32 << z)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));

    let mut effects: Vec<(u32, Vec<f64>)> = Vec::with_capacity(masks.len());
    for &mask in &masks {
        let axes: Vec<usize> = (0..z).filter(|j| mask & (1 << j) != 0).collect();
        let group_of = |cell: &[usize]| axes.iter().fold(0usize, |acc, &j| acc * counts[j] + cell[j]);
        let groups: usize = axes.iter().map(|&j| counts[j]).product();
        let mut sums = vec![0.0; groups];
        let mut sizes = vec![0usize; groups];
        for (cell, &v) in coords.iter().zip(&grid.estimates) {
            let g = group_of(cell);
            sums[g] += v;
            sizes[g] += 1;
        }
        let mut beta: Vec<f64> = coords
            .iter()
            .map(|cell| {
                let g = group_of(cell);
                sums[g] / sizes[g] as f64 - grand_mean
            })
            .collect();
        for (sub, sub_beta) in &effects {
            if sub & mask == *sub && *sub != mask {
                for (b, s) in beta.iter_mut().zip(sub_beta) {
                    *b -= s;
                }
            }
        }
        effects.push((mask, beta));
    }

    let terms = effects
        .iter()
        .map(|(mask, beta)| AnovaTerm {
            sources: (0..z).filter(|j| mask & (1 << j) != 0).collect(),
            variance: beta.iter().map(|b| b * b).sum::<f64>() / n as f64,
        })
        .collect();

    Ok(AnovaEffects {
        source_names: grid.source_names.clone(),
        grand_mean,
        terms,
    })
}
