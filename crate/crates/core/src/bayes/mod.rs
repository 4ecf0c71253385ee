//! Priors, Metropolis-Hastings posterior sampling, MAP extraction and a
//! maximum-likelihood fit for comparison.

mod mcmc;
mod mle;
mod prior;

pub use mcmc::{
    log_posterior, map_estimate, map_index, mh_sample, moment_start, ChainConfig, ParameterEnsemble,
    ACCEPTANCE_WARN_BAND, DEFAULT_BURN_IN, DEFAULT_ITERATIONS, TARGET_ACCEPTANCE,
};
pub use mle::{mle_fit, nelder_mead, MLE_MAX_ITERATIONS};
pub use prior::{log_prior, ParamVec, PriorSpec, NARROW_GAUSSIAN_VARIANCE, WIDE_GAUSSIAN_VARIANCE};
