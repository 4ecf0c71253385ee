//! Crossed (prior × structure × parameter) scenario grids built from MCMC
//! ensembles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ScenarioGrid;
use crate::bayes::{mh_sample, ChainConfig, ParameterEnsemble, PriorSpec};
use crate::error::{Error, Result};
use crate::gev::ModelStructure;
use crate::hazard::{return_level, CovariateRef};
use crate::ingest::AlignedDataset;
use crate::seed::derive_seed;

pub const SOURCE_PRIOR: &str = "prior";
pub const SOURCE_STRUCTURE: &str = "structure";
pub const SOURCE_PARAMETER: &str = "parameter";

/// Stage name mixed into per-cell chain seeds.
pub const FIT_STAGE: &str = "fit";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedPrior {
    pub name: String,
    pub spec: PriorSpec,
}

impl NamedPrior {
    pub fn preset(name: &str) -> Result<Self> {
        Ok(Self {
            name: name.to_string(),
            spec: PriorSpec::preset(name)?,
        })
    }
}

/// One fitted (prior, structure) cell.
#[derive(Debug, Clone)]
pub struct CellFit {
    pub prior: NamedPrior,
    pub structure: ModelStructure,
    pub seed: u64,
    pub ensemble: ParameterEnsemble,
}

/// Runs one chain per (prior, structure) cell, prior-major.
///
/// Cell `i` uses seed `derive_seed(base.seed, "fit", i)`. Chains run in
/// parallel; the result order and contents do not depend on scheduling.
pub fn fit_cells(
    dataset: &AlignedDataset,
    priors: &[NamedPrior],
    structures: &[ModelStructure],
    base: &ChainConfig,
) -> Result<Vec<CellFit>> {
    if priors.is_empty() || structures.is_empty() {
        return Err(Error::Validation("need at least one prior and one structure".into()));
    }
    let cells: Vec<(usize, &NamedPrior, ModelStructure)> = priors
        .iter()
        .flat_map(|p| structures.iter().map(move |&s| (p, s)))
        .enumerate()
        .map(|(i, (p, s))| (i, p, s))
        .collect();

    cells
        .into_par_iter()
        .map(|(i, prior, structure)| {
            let seed = derive_seed(base.seed, FIT_STAGE, i as u64);
            let cfg = base.with_seed(seed);
            let ensemble = mh_sample(dataset, structure, &prior.spec, &cfg).map_err(|e| {
                let msg = format!("cell {i} (prior {}, structure {structure}): {e}", prior.name);
                match e {
                    Error::Initialization(_) => Error::Initialization(msg),
                    _ => Error::Validation(msg),
                }
            })?;
            Ok(CellFit {
                prior: prior.clone(),
                structure,
                seed,
                ensemble,
            })
        })
        .collect()
}

/// Return levels at `period` for every (prior, structure, parameter
/// scenario) combination.
///
/// Each cell's ensemble is thinned to `parameter_scenarios` equally spaced
/// draws; the k-th draw of every cell shares parameter index k.
pub fn grid_from_cells(
    cells: &[CellFit],
    n_priors: usize,
    n_structures: usize,
    period: f64,
    covariate_ref: CovariateRef,
    dataset: &AlignedDataset,
    parameter_scenarios: usize,
) -> Result<ScenarioGrid> {
    if cells.len() != n_priors * n_structures {
        return Err(Error::Validation(format!(
            "{} fitted cells for a {n_priors} x {n_structures} design",
            cells.len()
        )));
    }
    let phi = covariate_ref.resolve(dataset)?;
    let mut estimates = Vec::with_capacity(cells.len() * parameter_scenarios);
    for cell in cells {
        for p in cell.ensemble.equally_spaced(parameter_scenarios)? {
            estimates.push(return_level(&p, period, cell.structure, phi)?);
        }
    }
    ScenarioGrid::new(
        vec![SOURCE_PRIOR.into(), SOURCE_STRUCTURE.into(), SOURCE_PARAMETER.into()],
        vec![n_priors, n_structures, parameter_scenarios],
        estimates,
    )
}

/// Fits every (prior, structure) cell and tabulates the `period` return
/// level over the crossed design.
#[allow(clippy::too_many_arguments)]
pub fn build_scenario_grid(
    dataset: &AlignedDataset,
    priors: &[NamedPrior],
    structures: &[ModelStructure],
    period: f64,
    covariate_ref: CovariateRef,
    chain_config: &ChainConfig,
    parameter_scenarios: usize,
) -> Result<ScenarioGrid> {
    if parameter_scenarios == 0 || parameter_scenarios > chain_config.retained() {
        return Err(Error::Validation(format!(
            "parameter scenarios must lie in 1..={}, got {parameter_scenarios}",
            chain_config.retained()
        )));
    }
    let cells = fit_cells(dataset, priors, structures, chain_config)?;
    grid_from_cells(
        &cells,
        priors.len(),
        structures.len(),
        period,
        covariate_ref,
        dataset,
        parameter_scenarios,
    )
}
