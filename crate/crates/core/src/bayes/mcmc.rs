//! Random-walk Metropolis sampling of the GEV posterior.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::prior::{active_indices, log_prior, ParamVec, PriorSpec};
use crate::error::{Error, Result};
use crate::gev::{log_likelihood, log_likelihood_unchecked, GevParams, ModelStructure};
use crate::ingest::AlignedDataset;

pub const DEFAULT_ITERATIONS: usize = 100_000;
pub const DEFAULT_BURN_IN: usize = 10_000;

/// Acceptance rate the burn-in adaptation steers toward.
pub const TARGET_ACCEPTANCE: f64 = 0.3;
/// Post-burn-in acceptance rates outside this band attach a warning.
pub const ACCEPTANCE_WARN_BAND: (f64, f64) = (0.05, 0.8);

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_INIT_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Proposal standard deviations. `None` derives them from the data scale.
    #[serde(default)]
    pub initial_step_sizes: Option<ParamVec>,
    #[serde(default = "default_true")]
    pub adapt_during_burnin: bool,
}

fn default_true() -> bool {
    true
}

impl ChainConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            iterations: DEFAULT_ITERATIONS,
            burn_in: DEFAULT_BURN_IN,
            seed,
            initial_step_sizes: None,
            adapt_during_burnin: true,
        }
    }

    pub fn with_length(mut self, iterations: usize, burn_in: usize) -> Self {
        self.iterations = iterations;
        self.burn_in = burn_in;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn retained(&self) -> usize {
        self.iterations - self.burn_in
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Validation("iterations must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Validation(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if let Some(steps) = &self.initial_step_sizes {
            if steps.as_array().iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
                return Err(Error::Validation(format!(
                    "step sizes must be positive and finite, got {steps:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Post-burn-in posterior draws of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterEnsemble {
    pub samples: Vec<GevParams>,
    pub log_posteriors: Vec<f64>,
    pub structure: ModelStructure,
    pub prior: PriorSpec,
    pub acceptance_rate: f64,
    pub config: ChainConfig,
    /// Proposal scales in force after burn-in.
    pub step_sizes: ParamVec,
    /// Keep every `stride`-th draw; 1 for a full ensemble.
    pub stride: usize,
    pub warnings: Vec<String>,
}

impl ParameterEnsemble {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.samples.iter().map(|p| p.as_array()[k]).collect()
    }

    /// Every `stride`-th sample starting from the first.
    pub fn thinned(&self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::Validation("thinning stride must be positive".into()));
        }
        let mut out = self.clone();
        out.samples = self.samples.iter().step_by(stride).copied().collect();
        out.log_posteriors = self.log_posteriors.iter().step_by(stride).copied().collect();
        out.stride = self.stride * stride;
        Ok(out)
    }

    /// Exactly `count` samples at indices `floor(k * len / count)`.
    pub fn equally_spaced(&self, count: usize) -> Result<Vec<GevParams>> {
        let n = self.len();
        if count == 0 || count > n {
            return Err(Error::Validation(format!(
                "cannot take {count} equally spaced samples from an ensemble of {n}"
            )));
        }
        Ok((0..count).map(|k| self.samples[k * n / count]).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&EnsembleFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: EnsembleFile = serde_json::from_str(text)?;
        f.try_into()
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Column-wise on-disk layout of an ensemble.
#[derive(Serialize, Deserialize)]
struct EnsembleFile {
    config: ChainConfig,
    structure: ModelStructure,
    prior: PriorSpec,
    acceptance_rate: f64,
    step_sizes: ParamVec,
    stride: usize,
    warnings: Vec<String>,
    mu0: Vec<f64>,
    mu1: Vec<f64>,
    sigma: Vec<f64>,
    xi: Vec<f64>,
    log_posterior: Vec<f64>,
}

impl From<&ParameterEnsemble> for EnsembleFile {
    fn from(e: &ParameterEnsemble) -> Self {
        EnsembleFile {
            config: e.config,
            structure: e.structure,
            prior: e.prior,
            acceptance_rate: e.acceptance_rate,
            step_sizes: e.step_sizes,
            stride: e.stride,
            warnings: e.warnings.clone(),
            mu0: e.column(0),
            mu1: e.column(1),
            sigma: e.column(2),
            xi: e.column(3),
            log_posterior: e.log_posteriors.clone(),
        }
    }
}

impl TryFrom<EnsembleFile> for ParameterEnsemble {
    type Error = Error;

    fn try_from(f: EnsembleFile) -> Result<Self> {
        let n = f.mu0.len();
        if [f.mu1.len(), f.sigma.len(), f.xi.len(), f.log_posterior.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(Error::Validation("ensemble columns differ in length".into()));
        }
        let samples: Vec<GevParams> = (0..n)
            .map(|i| GevParams::new(f.mu0[i], f.mu1[i], f.sigma[i], f.xi[i]))
            .collect();
        for (p, lp) in samples.iter().zip(&f.log_posterior) {
            p.validate(f.structure)?;
            if !lp.is_finite() {
                return Err(Error::Validation("ensemble holds a non-finite log-posterior".into()));
            }
        }
        Ok(ParameterEnsemble {
            samples,
            log_posteriors: f.log_posterior,
            structure: f.structure,
            prior: f.prior,
            acceptance_rate: f.acceptance_rate,
            config: f.config,
            step_sizes: f.step_sizes,
            stride: f.stride.max(1),
            warnings: f.warnings,
        })
    }
}

/// Unnormalized log posterior: log-likelihood plus log prior.
pub fn log_posterior(
    dataset: &AlignedDataset,
    structure: ModelStructure,
    params: &GevParams,
    spec: &PriorSpec,
) -> Result<f64> {
    spec.validate()?;
    dataset.check_aligned()?;
    let lp = log_prior(params, spec, structure);
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    Ok(lp + log_likelihood(dataset, structure, params)?)
}

/// Gumbel method-of-moments start: `sigma = s sqrt(6)/pi`,
/// `mu0 = mean - gamma sigma`, `mu1 = xi = 0`.
pub fn moment_start(stage: &[f64]) -> GevParams {
    let n = stage.len() as f64;
    let mean = stage.iter().sum::<f64>() / n;
    let var = if stage.len() > 1 {
        stage.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut sigma = var.sqrt() * 6f64.sqrt() / std::f64::consts::PI;
    if !(sigma > 0.0) {
        sigma = (mean.abs() * 0.1).max(1e-3);
    }
    GevParams::new(mean - EULER_GAMMA * sigma, 0.0, sigma, 0.0)
}

fn default_steps(dataset: &AlignedDataset, start: &GevParams) -> ParamVec {
    let cov = dataset.covariate_values();
    let n = cov.len() as f64;
    let m = cov.iter().sum::<f64>() / n;
    let sd = (cov.iter().map(|c| (c - m).powi(2)).sum::<f64>() / n).sqrt();
    let s = start.sigma;
    let slope = if sd > 0.0 { 0.1 * s / sd } else { 0.1 * s };
    ParamVec::new(0.1 * s, slope, 0.05 * s, 0.05)
}

struct Target<'a> {
    stage: &'a [f64],
    covariate: &'a [f64],
    structure: ModelStructure,
    prior: &'a PriorSpec,
}

impl Target<'_> {
    fn eval(&self, theta: &[f64; 4]) -> f64 {
        let p = GevParams::from_array(*theta);
        let lp = log_prior(&p, self.prior, self.structure);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        let ll = log_likelihood_unchecked(self.stage, self.covariate, self.structure, &p);
        let total = lp + ll;
        if total.is_nan() {
            f64::NEG_INFINITY
        } else {
            total
        }
    }
}

/// Running mean and variance (Welford).
#[derive(Default, Clone, Copy)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn sd(&self) -> f64 {
        if self.n > 1.0 {
            (self.m2 / (self.n - 1.0)).sqrt()
        } else {
            0.0
        }
    }
}

/// Draws a posterior ensemble by random-walk Metropolis.
///
/// Every iteration perturbs all active parameters jointly with independent
/// Gaussian steps and accepts with probability `min(1, exp(delta))`. During
/// burn-in a Robbins-Monro update scales the proposal toward
/// [`TARGET_ACCEPTANCE`]; halfway through burn-in the per-parameter scales
/// are reset from the spread of the preceding quarter of draws. Proposals
/// are frozen once burn-in ends. Output is a pure function of the inputs.
pub fn mh_sample(
    dataset: &AlignedDataset,
    structure: ModelStructure,
    prior: &PriorSpec,
    config: &ChainConfig,
) -> Result<ParameterEnsemble> {
    config.validate()?;
    prior.validate()?;
    dataset.check_aligned()?;

    let target = Target {
        stage: dataset.stage(),
        covariate: dataset.covariate_values(),
        structure,
        prior,
    };
    let active = active_indices(structure);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let start = moment_start(dataset.stage());
    let mut steps = config
        .initial_step_sizes
        .unwrap_or_else(|| default_steps(dataset, &start))
        .as_array();
    let (mut theta, mut current) = initialize(&target, start, &steps, active, &mut rng)?;

    let adapt = config.adapt_during_burnin && config.burn_in > 0;
    let rescale_at = config.burn_in / 2;
    let window_start = config.burn_in / 4;
    let mut window = [Moments::default(); 4];
    let mut log_scale = 0.0f64;
    let mut adapt_t = 0usize;

    let retained = config.retained();
    let mut samples = Vec::with_capacity(retained);
    let mut log_posteriors = Vec::with_capacity(retained);
    let mut accepted = 0usize;

    for it in 0..config.iterations {
        let scale = log_scale.exp();
        let mut proposal = theta;
        for &k in active {
            let z: f64 = rng.sample(StandardNormal);
            proposal[k] += scale * steps[k] * z;
        }
        let candidate = target.eval(&proposal);
        let log_u = rng.random::<f64>().ln();
        let delta = candidate - current;
        let accept = candidate > f64::NEG_INFINITY && (delta >= 0.0 || log_u < delta);
        if accept {
            theta = proposal;
            current = candidate;
        }

        if it < config.burn_in {
            if adapt {
                let alpha = if candidate > f64::NEG_INFINITY { delta.min(0.0).exp() } else { 0.0 };
                adapt_t += 1;
                log_scale += (alpha - TARGET_ACCEPTANCE) / (adapt_t as f64).powf(0.6);
                log_scale = log_scale.clamp(-20.0, 20.0);
                if it >= window_start && it < rescale_at {
                    for &k in active {
                        window[k].push(theta[k]);
                    }
                }
                if it + 1 == rescale_at && rescale_at > window_start + 10 {
                    let d = active.len() as f64;
                    for &k in active {
                        let sd = window[k].sd();
                        if sd > 0.0 && sd.is_finite() {
                            steps[k] = 2.38 / d.sqrt() * sd;
                        }
                    }
                    log_scale = 0.0;
                    adapt_t = 0;
                }
            }
        } else {
            if accept {
                accepted += 1;
            }
            samples.push(GevParams::from_array(theta));
            log_posteriors.push(current);
        }
    }

    let acceptance_rate = accepted as f64 / retained as f64;
    let mut warnings = Vec::new();
    if acceptance_rate < ACCEPTANCE_WARN_BAND.0 || acceptance_rate > ACCEPTANCE_WARN_BAND.1 {
        let msg = format!(
            "acceptance rate {acceptance_rate:.3} outside [{}, {}]",
            ACCEPTANCE_WARN_BAND.0, ACCEPTANCE_WARN_BAND.1
        );
        warn!("{msg}");
        warnings.push(msg);
    }

    let final_scale = log_scale.exp();
    let mut effective = steps;
    for &k in active {
        effective[k] *= final_scale;
    }

    Ok(ParameterEnsemble {
        samples,
        log_posteriors,
        structure,
        prior: *prior,
        acceptance_rate,
        config: *config,
        step_sizes: ParamVec::from_array(effective),
        stride: 1,
        warnings,
    })
}

fn initialize(
    target: &Target<'_>,
    start: GevParams,
    steps: &[f64; 4],
    active: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<([f64; 4], f64)> {
    let base = start.as_array();
    let lp = target.eval(&base);
    if lp > f64::NEG_INFINITY {
        return Ok((base, lp));
    }
    for attempt in 0..MAX_INIT_ATTEMPTS {
        let spread = 1.0 + attempt as f64 / 10.0;
        let mut theta = base;
        for &k in active {
            let z: f64 = rng.sample(StandardNormal);
            theta[k] += spread * steps[k] * 10.0 * z;
        }
        let lp = target.eval(&theta);
        if lp > f64::NEG_INFINITY {
            return Ok((theta, lp));
        }
    }
    Err(Error::Initialization(format!(
        "no finite log-posterior near the moment start {start:?} after {MAX_INIT_ATTEMPTS} attempts"
    )))
}

/// Highest-posterior retained sample; earliest on ties.
pub fn map_estimate(ensemble: &ParameterEnsemble) -> Result<GevParams> {
    map_index(ensemble).map(|i| ensemble.samples[i])
}

pub fn map_index(ensemble: &ParameterEnsemble) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &lp) in ensemble.log_posteriors.iter().enumerate() {
        if best.is_none_or(|(_, b)| lp > b) {
            best = Some((i, lp));
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::Validation("MAP of an empty ensemble".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{align, AnnualMaximaSeries, CovariateSeries};

    fn dataset(stage: Vec<f64>) -> AlignedDataset {
        let years: Vec<i32> = (1950..1950 + stage.len() as i32).collect();
        let cov: Vec<f64> = (0..stage.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let s = AnnualMaximaSeries::new(years.clone(), stage, None).unwrap();
        align(&s, &CovariateSeries::new(years, cov).unwrap()).unwrap()
    }

    fn toy() -> AlignedDataset {
        dataset((0..30).map(|i| 4.0 + ((i * 7919) % 31) as f64 / 15.0).collect())
    }

    #[test]
    fn config_validation() {
        assert!(ChainConfig::new(1).with_length(10, 10).validate().is_err());
        assert!(ChainConfig::new(1).with_length(0, 0).validate().is_err());
        assert!(ChainConfig::new(1).validate().is_ok());
        assert_eq!(ChainConfig::new(1).retained(), 90_000);
    }

    #[test]
    fn short_chain_shape_and_invariants() {
        let d = toy();
        let cfg = ChainConfig::new(7).with_length(4000, 1000);
        let e = mh_sample(&d, ModelStructure::Nonstationary, &PriorSpec::gaussian(100.0), &cfg).unwrap();
        assert_eq!(e.len(), 3000);
        assert!(e.samples.iter().all(|p| p.sigma > 0.0));
        assert!(e.log_posteriors.iter().all(|lp| lp.is_finite()));
        assert!((0.0..=1.0).contains(&e.acceptance_rate));
    }

    #[test]
    fn stationary_chain_keeps_zero_slope() {
        let d = toy();
        let cfg = ChainConfig::new(3).with_length(2000, 500);
        let e = mh_sample(&d, ModelStructure::Stationary, &PriorSpec::uniform(), &cfg).unwrap();
        assert!(e.samples.iter().all(|p| p.mu1 == 0.0));
    }

    #[test]
    fn initialization_failure_is_reported() {
        // stage far outside the uniform location box
        let d = dataset((0..20).map(|i| 500.0 + i as f64).collect());
        let cfg = ChainConfig::new(1).with_length(100, 10);
        let err = mh_sample(&d, ModelStructure::Stationary, &PriorSpec::uniform(), &cfg).unwrap_err();
        assert!(matches!(err, Error::Initialization(_)), "{err}");
    }

    #[test]
    fn map_of_single_and_appended() {
        let d = toy();
        let cfg = ChainConfig::new(9).with_length(200, 100);
        let mut e = mh_sample(&d, ModelStructure::Stationary, &PriorSpec::gaussian(100.0), &cfg).unwrap();
        let mut one = e.clone();
        one.samples.truncate(1);
        one.log_posteriors.truncate(1);
        assert_eq!(map_estimate(&one).unwrap(), one.samples[0]);

        let top = e.log_posteriors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let extra = GevParams::new(1.0, 0.0, 1.0, 0.0);
        e.samples.push(extra);
        e.log_posteriors.push(top + 1.0);
        assert_eq!(map_estimate(&e).unwrap(), extra);

        e.samples.clear();
        e.log_posteriors.clear();
        assert!(map_estimate(&e).is_err());
    }

    #[test]
    fn map_ties_pick_earliest() {
        let d = toy();
        let cfg = ChainConfig::new(9).with_length(20, 10);
        let mut e = mh_sample(&d, ModelStructure::Stationary, &PriorSpec::gaussian(100.0), &cfg).unwrap();
        e.log_posteriors = vec![1.0; e.len()];
        assert_eq!(map_index(&e).unwrap(), 0);
    }

    #[test]
    fn json_round_trip_and_thinning() {
        let d = toy();
        let cfg = ChainConfig::new(11).with_length(300, 100);
        let e = mh_sample(&d, ModelStructure::Nonstationary, &PriorSpec::gaussian(1.0), &cfg).unwrap();
        let back = ParameterEnsemble::from_json(&e.to_json().unwrap()).unwrap();
        assert_eq!(back, e);
        let t = e.thinned(7).unwrap();
        assert_eq!(t.len(), 200usize.div_ceil(7));
        assert_eq!(t.samples[1], e.samples[7]);
        assert_eq!(t.stride, 7);
        assert!(e.thinned(0).is_err());
    }

    #[test]
    fn equally_spaced_indices() {
        let d = toy();
        let cfg = ChainConfig::new(2).with_length(110, 10);
        let e = mh_sample(&d, ModelStructure::Stationary, &PriorSpec::gaussian(100.0), &cfg).unwrap();
        let s = e.equally_spaced(10).unwrap();
        assert_eq!(s.len(), 10);
        assert_eq!(s[3], e.samples[30]);
        assert!(e.equally_spaced(101).is_err());
        assert!(e.equally_spaced(0).is_err());
    }
}
