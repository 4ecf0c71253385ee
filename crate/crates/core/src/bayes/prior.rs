use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gev::{GevParams, ModelStructure};

/// One value per GEV parameter, in the order (mu0, mu1, sigma, xi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamVec {
    pub mu0: f64,
    pub mu1: f64,
    pub sigma: f64,
    pub xi: f64,
}

impl ParamVec {
    pub const fn new(mu0: f64, mu1: f64, sigma: f64, xi: f64) -> Self {
        Self { mu0, mu1, sigma, xi }
    }

    pub const fn splat(v: f64) -> Self {
        Self::new(v, v, v, v)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.mu0, self.mu1, self.sigma, self.xi]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// Independent priors on the natural GEV parameters.
///
/// The scale always carries zero mass at `sigma <= 0`, so a Gaussian prior
/// on `sigma` is truncated to the positive half-line (unnormalized).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum PriorSpec {
    Gaussian { mean: ParamVec, variance: ParamVec },
    Uniform { lower: ParamVec, upper: ParamVec },
}

pub const WIDE_GAUSSIAN_VARIANCE: f64 = 100.0;
pub const NARROW_GAUSSIAN_VARIANCE: f64 = 1.0;

impl PriorSpec {
    /// Zero-mean Gaussian with the same variance on every parameter.
    pub fn gaussian(variance: f64) -> Self {
        PriorSpec::Gaussian {
            mean: ParamVec::splat(0.0),
            variance: ParamVec::splat(variance),
        }
    }

    /// Bounded flat prior: [-100, 100] for the location terms, (0, 100] for
    /// the scale and [-5, 5] for the shape.
    pub fn uniform() -> Self {
        PriorSpec::Uniform {
            lower: ParamVec::new(-100.0, -100.0, 0.0, -5.0),
            upper: ParamVec::new(100.0, 100.0, 100.0, 5.0),
        }
    }

    /// Named presets: `gauss-wide` N(0, 100), `gauss-narrow` N(0, 1), `uniform`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "gauss-wide" => Ok(Self::gaussian(WIDE_GAUSSIAN_VARIANCE)),
            "gauss-narrow" => Ok(Self::gaussian(NARROW_GAUSSIAN_VARIANCE)),
            "uniform" => Ok(Self::uniform()),
            other => {
                if let Some(v) = other.strip_prefix("gauss:") {
                    let variance: f64 = v
                        .parse()
                        .map_err(|_| Error::Validation(format!("bad prior variance in '{other}'")))?;
                    let spec = Self::gaussian(variance);
                    spec.validate()?;
                    Ok(spec)
                } else {
                    Err(Error::Validation(format!(
                        "unknown prior '{other}' (expected gauss-wide, gauss-narrow, uniform or gauss:<variance>)"
                    )))
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PriorSpec::Gaussian { mean, variance } => {
                for (m, v) in mean.as_array().iter().zip(variance.as_array()) {
                    if !m.is_finite() || !(v > 0.0) || !v.is_finite() {
                        return Err(Error::Validation(format!(
                            "gaussian prior needs finite mean and positive variance, got ({m}, {v})"
                        )));
                    }
                }
            }
            PriorSpec::Uniform { lower, upper } => {
                for (lo, hi) in lower.as_array().iter().zip(upper.as_array()) {
                    if !lo.is_finite() || !hi.is_finite() || *lo >= hi {
                        return Err(Error::Validation(format!(
                            "uniform prior needs finite lower < upper, got [{lo}, {hi}]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parameter slots sampled under each structure.
pub(crate) fn active_indices(structure: ModelStructure) -> &'static [usize] {
    match structure {
        ModelStructure::Stationary => &[0, 2, 3],
        ModelStructure::Nonstationary => &[0, 1, 2, 3],
    }
}

/// Sum of independent log prior densities over the active parameters.
pub fn log_prior(params: &GevParams, spec: &PriorSpec, structure: ModelStructure) -> f64 {
    if !(params.sigma > 0.0) {
        return f64::NEG_INFINITY;
    }
    let theta = params.as_array();
    let mut total = 0.0;
    match spec {
        PriorSpec::Gaussian { mean, variance } => {
            let (m, v) = (mean.as_array(), variance.as_array());
            for &k in active_indices(structure) {
                let d = theta[k] - m[k];
                total += -0.5 * (2.0 * PI * v[k]).ln() - d * d / (2.0 * v[k]);
            }
        }
        PriorSpec::Uniform { lower, upper } => {
            let (lo, hi) = (lower.as_array(), upper.as_array());
            for &k in active_indices(structure) {
                if !(theta[k] >= lo[k] && theta[k] <= hi[k]) {
                    return f64::NEG_INFINITY;
                }
                total -= (hi[k] - lo[k]).ln();
            }
        }
    }
    total
}
