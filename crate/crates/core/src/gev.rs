//! Generalized extreme value distribution.
//!
//! With `s = (x - mu) / sigma` the density is
//!
//! ```text
//! f(x) = (1/sigma) t^(1 + xi) exp(-t),   t = (1 + xi s)^(-1/xi)   (xi != 0)
//! f(x) = (1/sigma) exp(-s) exp(-exp(-s))                          (xi == 0)
//! ```
//!
//! on the support `1 + xi s > 0`. A positive shape gives a heavy (Fréchet)
//! upper tail and a lower bound at `mu - sigma/xi`; a negative shape gives a
//! bounded (Weibull) upper tail at the same expression.
//!
//! Nonstationarity enters through the location only: `mu(t) = mu0 + mu1 * phi(t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::AlignedDataset;

/// Shapes with `|xi|` below this use the Gumbel branch.
pub const XI_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelStructure {
    Stationary,
    Nonstationary,
}

impl ModelStructure {
    pub fn name(self) -> &'static str {
        match self {
            ModelStructure::Stationary => "stationary",
            ModelStructure::Nonstationary => "nonstationary",
        }
    }

    pub fn is_stationary(self) -> bool {
        self == ModelStructure::Stationary
    }
}

impl std::fmt::Display for ModelStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelStructure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stationary" | "st" => Ok(ModelStructure::Stationary),
            "nonstationary" | "ns" => Ok(ModelStructure::Nonstationary),
            other => Err(Error::Validation(format!("unknown model structure '{other}'"))),
        }
    }
}

/// GEV parameters with a covariate-dependent location.
///
/// `mu1` is the location slope per unit covariate and is exactly zero for
/// the stationary structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub mu0: f64,
    pub mu1: f64,
    pub sigma: f64,
    pub xi: f64,
}

impl GevParams {
    pub fn new(mu0: f64, mu1: f64, sigma: f64, xi: f64) -> Self {
        Self { mu0, mu1, sigma, xi }
    }

    pub fn stationary(mu: f64, sigma: f64, xi: f64) -> Self {
        Self::new(mu, 0.0, sigma, xi)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.mu0, self.mu1, self.sigma, self.xi]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    /// Location at covariate value `phi`.
    pub fn location_at(&self, phi: f64) -> f64 {
        if self.mu1 == 0.0 {
            self.mu0
        } else {
            self.mu0 + self.mu1 * phi
        }
    }

    pub fn validate(&self, structure: ModelStructure) -> Result<()> {
        if !self.as_array().iter().all(|v| v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite parameters {self:?}")));
        }
        if self.sigma <= 0.0 {
            return Err(Error::Parameter(format!("scale must be positive, got {}", self.sigma)));
        }
        if structure.is_stationary() && self.mu1 != 0.0 {
            return Err(Error::Parameter(format!(
                "stationary parameters must have mu1 = 0, got {}",
                self.mu1
            )));
        }
        Ok(())
    }

    /// The distribution of the annual maximum in a year with covariate `phi`.
    pub fn at(&self, phi: f64) -> Result<Gev> {
        Gev::new(self.location_at(phi), self.sigma, self.xi)
    }
}

/// A single GEV distribution with fixed location, scale and shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gev {
    mu: f64,
    sigma: f64,
    xi: f64,
}

impl Gev {
    pub fn new(mu: f64, sigma: f64, xi: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Parameter(format!("scale must be positive and finite, got {sigma}")));
        }
        if !mu.is_finite() || !xi.is_finite() {
            return Err(Error::Parameter(format!("non-finite location {mu} or shape {xi}")));
        }
        Ok(Self { mu, sigma, xi })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    fn is_gumbel(&self) -> bool {
        self.xi.abs() < XI_TOL
    }

    /// Finite endpoint of the support, if any: `mu - sigma/xi`.
    pub fn endpoint(&self) -> Option<f64> {
        if self.is_gumbel() {
            None
        } else {
            Some(self.mu - self.sigma / self.xi)
        }
    }

    /// Whether `x` lies inside the open support `1 + xi s > 0`.
    pub fn in_support(&self, x: f64) -> bool {
        self.is_gumbel() || 1.0 + self.xi * (x - self.mu) / self.sigma > 0.0
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        ln_pdf_unchecked(x, self.mu, self.sigma, self.xi)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let s = (x - self.mu) / self.sigma;
        if self.is_gumbel() {
            return (-(-s).exp()).exp();
        }
        let u = self.xi * s;
        if 1.0 + u <= 0.0 {
            // below a lower bound (xi > 0) or above an upper bound (xi < 0)
            return if self.xi > 0.0 { 0.0 } else { 1.0 };
        }
        let t = (-u.ln_1p() / self.xi).exp();
        (-t).exp()
    }

    pub fn sf(&self, x: f64) -> f64 {
        let s = (x - self.mu) / self.sigma;
        if self.is_gumbel() {
            return -(-(-s).exp()).exp_m1();
        }
        let u = self.xi * s;
        if 1.0 + u <= 0.0 {
            return if self.xi > 0.0 { 1.0 } else { 0.0 };
        }
        let t = (-u.ln_1p() / self.xi).exp();
        -(-t).exp_m1()
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("probability must lie in (0, 1), got {p}")));
        }
        Ok(self.quantile_unchecked(p))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        let ln_y = (-p.ln()).ln();
        if self.is_gumbel() {
            self.mu - self.sigma * ln_y
        } else {
            self.mu + self.sigma * (-self.xi * ln_y).exp_m1() / self.xi
        }
    }
}

#[inline]
pub(crate) fn ln_pdf_unchecked(x: f64, mu: f64, sigma: f64, xi: f64) -> f64 {
    let s = (x - mu) / sigma;
    if xi.abs() < XI_TOL {
        return -sigma.ln() - s - (-s).exp();
    }
    let u = xi * s;
    if 1.0 + u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let log_base = u.ln_1p();
    -sigma.ln() - (1.0 + 1.0 / xi) * log_base - (-log_base / xi).exp()
}

/// Log-density of GEV(mu, sigma, xi) at `x`; `-inf` outside the support.
pub fn gev_logpdf(x: f64, mu: f64, sigma: f64, xi: f64) -> Result<f64> {
    check_scale(sigma)?;
    Ok(ln_pdf_unchecked(x, mu, sigma, xi))
}

pub fn gev_cdf(x: f64, mu: f64, sigma: f64, xi: f64) -> Result<f64> {
    Ok(Gev::new(mu, sigma, xi)?.cdf(x))
}

/// Level exceeded with probability `1 - p`.
pub fn gev_quantile(p: f64, mu: f64, sigma: f64, xi: f64) -> Result<f64> {
    Gev::new(mu, sigma, xi)?.quantile(p)
}

pub fn location_at(params: &GevParams, covariate_value: f64) -> f64 {
    params.location_at(covariate_value)
}

fn check_scale(sigma: f64) -> Result<()> {
    if sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("scale must be positive, got {sigma}")))
    }
}

/// Sum of log-densities of the observations, each at its own year's location.
///
/// Returns `-inf` when any observation falls outside its year's support.
pub fn log_likelihood(
    dataset: &AlignedDataset,
    structure: ModelStructure,
    params: &GevParams,
) -> Result<f64> {
    dataset.check_aligned()?;
    check_scale(params.sigma)?;
    Ok(log_likelihood_unchecked(
        dataset.stage(),
        dataset.covariate_values(),
        structure,
        params,
    ))
}

pub(crate) fn log_likelihood_unchecked(
    stage: &[f64],
    covariate: &[f64],
    structure: ModelStructure,
    params: &GevParams,
) -> f64 {
    let mut total = 0.0;
    match structure {
        ModelStructure::Stationary => {
            for &x in stage {
                total += ln_pdf_unchecked(x, params.mu0, params.sigma, params.xi);
                if total == f64::NEG_INFINITY {
                    break;
                }
            }
        }
        ModelStructure::Nonstationary => {
            for (&x, &phi) in stage.iter().zip(covariate) {
                let mu = params.mu0 + params.mu1 * phi;
                total += ln_pdf_unchecked(x, mu, params.sigma, params.xi);
                if total == f64::NEG_INFINITY {
                    break;
                }
            }
        }
    }
    total
}
