//! Bayesian frequency analysis of annual-maxima river stage records.
//!
//! The crate covers the whole chain from raw records to design levels:
//!
//! * [`ingest`]: stage and climate-index CSV loading, seasonal covariates,
//!   year alignment.
//! * [`stattests`]: Pettitt change-point and Mann-Kendall trend screening.
//! * [`gev`]: GEV density, distribution, quantile and the stationary or
//!   covariate-dependent likelihood.
//! * [`bayes`]: priors, Metropolis-Hastings posterior ensembles, MAP and
//!   maximum-likelihood fits.
//! * [`hazard`]: return levels, credible intervals, equivalent return
//!   periods and survival curves.
//! * [`uq`]: cumulative range/variance decomposition of return-level
//!   uncertainty across priors, structures and parameters.
//! * [`pipeline`]: the configuration and commands behind the `stagefreq`
//!   binary.

pub mod bayes;
pub mod error;
pub mod gev;
pub mod hazard;
pub mod ingest;
pub mod pipeline;
pub mod seed;
pub mod stattests;
pub mod synthetic;
pub mod uq;

pub use error::{Error, Result};
pub use gev::{GevParams, ModelStructure};
