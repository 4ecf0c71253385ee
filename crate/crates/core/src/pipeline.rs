//! Configuration and commands behind the `stagefreq` binary.
//!
//! Every command computes all of its artifacts in memory first and writes
//! them only once nothing is left to validate, so a failing run leaves no
//! partial output behind.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::bayes::{mh_sample, ChainConfig, ParameterEnsemble, DEFAULT_BURN_IN, DEFAULT_ITERATIONS};
use crate::error::{Error, Result};
use crate::gev::ModelStructure;
use crate::hazard::{
    equivalent_return_period, return_curve, return_level_ensemble, survival_function,
    write_survival_csv, CovariateRef, ReturnCurve, DEFAULT_CREDIBLE_MASS, DEFAULT_PERIODS,
};
use crate::ingest::{
    align, load_annual_maxima, load_monthly_index, seasonal_mean_covariate, AlignedDataset,
    SkippedYear, StationMeta, MIN_SERIES_LEN,
};
use crate::seed::derive_seed;
use crate::stattests::{assess_nonstationarity, NonstationarityAssessment};
use crate::uq::{anova_effects, decompose, fit_cells, grid_from_cells, AnovaEffects, CellFit, Measure, NamedPrior, UncertaintyDecomposition};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_MONTHS: (u8, u8) = (6, 11);
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_PARAMETER_SCENARIOS: usize = 1000;
pub const DEFAULT_PRIOR_MENU: [&str; 3] = ["gauss-wide", "gauss-narrow", "uniform"];

/// Stage name for the chain of the single-model `fit` command.
pub const SINGLE_FIT_STAGE: &str = "single-fit";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureChoice {
    /// Follow the nonstationarity assessment.
    #[default]
    Auto,
    Stationary,
    Nonstationary,
}

impl std::str::FromStr for StructureChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(StructureChoice::Auto);
        }
        Ok(match s.parse::<ModelStructure>()? {
            ModelStructure::Stationary => StructureChoice::Stationary,
            ModelStructure::Nonstationary => StructureChoice::Nonstationary,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Stage CSV (`year,stage_m`).
    pub stage: Option<PathBuf>,
    /// Monthly climate index CSV (`year,month,value`).
    pub index: Option<PathBuf>,
    /// Station metadata JSON.
    pub meta: Option<PathBuf>,
    /// Previously aligned dataset; replaces `stage`/`index`/`meta`.
    pub dataset: Option<PathBuf>,
    /// Ensemble consumed by `levels` and `equivalent`.
    pub ensemble: Option<PathBuf>,
    /// Stationary ensemble whose expected levels `equivalent` re-evaluates.
    pub stationary_ensemble: Option<PathBuf>,
    /// Level for `equivalent` given directly.
    pub stationary_level: Option<f64>,
    pub months: (u8, u8),
    pub min_length: usize,
    pub alpha: f64,
    /// Prior of the `fit` command.
    pub prior: String,
    /// Prior menu of `sensitivity` and `report`.
    pub priors: Vec<String>,
    pub structure: StructureChoice,
    pub iterations: usize,
    pub burn_in: usize,
    /// Keep every `thin`-th draw in written ensembles.
    pub thin: usize,
    pub periods: Vec<f64>,
    pub covariate_ref: CovariateRef,
    pub credible_mass: f64,
    pub parameter_scenarios: usize,
    pub measures: Vec<Measure>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            stage: None,
            index: None,
            meta: None,
            dataset: None,
            ensemble: None,
            stationary_ensemble: None,
            stationary_level: None,
            months: DEFAULT_MONTHS,
            min_length: MIN_SERIES_LEN,
            alpha: DEFAULT_ALPHA,
            prior: DEFAULT_PRIOR_MENU[0].to_string(),
            priors: DEFAULT_PRIOR_MENU.iter().map(|s| s.to_string()).collect(),
            structure: StructureChoice::Auto,
            iterations: DEFAULT_ITERATIONS,
            burn_in: DEFAULT_BURN_IN,
            thin: 1,
            periods: DEFAULT_PERIODS.to_vec(),
            covariate_ref: CovariateRef::LastYear,
            credible_mass: DEFAULT_CREDIBLE_MASS,
            parameter_scenarios: DEFAULT_PARAMETER_SCENARIOS,
            measures: vec![Measure::Range, Measure::Variance],
            seed: None,
            out_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
    }

    /// Checks everything that does not depend on input contents.
    pub fn validate(&self) -> Result<()> {
        for path in [&self.stage, &self.index, &self.meta, &self.dataset, &self.ensemble, &self.stationary_ensemble]
            .into_iter()
            .flatten()
        {
            if !path.is_file() {
                return Err(Error::Validation(format!("input file not found: {}", path.display())));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Validation(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.credible_mass > 0.0 && self.credible_mass < 1.0) {
            return Err(Error::Validation(format!(
                "credible mass must lie in (0, 1), got {}",
                self.credible_mass
            )));
        }
        if self.thin == 0 {
            return Err(Error::Validation("thin must be at least 1".into()));
        }
        if self.periods.is_empty() {
            return Err(Error::Validation("no return periods requested".into()));
        }
        if self.periods.iter().any(|p| !(p.is_finite() && *p > 1.0)) {
            return Err(Error::Validation(format!("return periods must exceed 1, got {:?}", self.periods)));
        }
        if self.periods.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("return periods must be strictly increasing".into()));
        }
        if self.measures.is_empty() {
            return Err(Error::Validation("no uncertainty measure requested".into()));
        }
        if let Some(level) = self.stationary_level {
            if !level.is_finite() {
                return Err(Error::Validation(format!("stationary level must be finite, got {level}")));
            }
        }
        self.chain_config(0).validate()?;
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Validation("an explicit --seed is required for sampling commands".into()))
    }

    pub fn chain_config(&self, seed: u64) -> ChainConfig {
        ChainConfig::new(seed).with_length(self.iterations, self.burn_in)
    }

    fn named_priors(&self) -> Result<Vec<NamedPrior>> {
        if self.priors.is_empty() {
            return Err(Error::Validation("empty prior menu".into()));
        }
        self.priors.iter().map(|p| NamedPrior::preset(p)).collect()
    }
}

/// Acceptance and diagnostics of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub label: String,
    pub prior: String,
    pub structure: ModelStructure,
    pub seed: u64,
    pub retained: usize,
    pub acceptance_rate: f64,
    pub warnings: Vec<String>,
}

impl ChainSummary {
    fn new(label: String, prior: &str, seed: u64, ensemble: &ParameterEnsemble) -> Self {
        Self {
            label,
            prior: prior.to_string(),
            structure: ensemble.structure,
            seed,
            retained: ensemble.len(),
            acceptance_rate: ensemble.acceptance_rate,
            warnings: ensemble.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    /// Files written, relative to the output directory, in write order.
    pub outputs: Vec<String>,
    pub chains: Vec<ChainSummary>,
    pub warnings: Vec<String>,
}

/// Artifacts produced by a command, held until the whole command succeeds.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
    pub chains: Vec<ChainSummary>,
    pub warnings: Vec<String>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.add(name, text.into_bytes());
        Ok(())
    }

    pub fn rename(&mut self, from: &str, to: &str) {
        for (n, _) in self.files.iter_mut().filter(|(n, _)| n == from) {
            *n = to.to_string();
        }
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    /// Writes every artifact plus `<command>.manifest.json` under the output
    /// directory and returns the manifest.
    pub fn commit(mut self, command: &str, config: &RunConfig) -> Result<RunManifest> {
        let manifest_name = format!("{command}.manifest.json");
        let mut outputs: Vec<String> = self.files.iter().map(|(n, _)| n.clone()).collect();
        outputs.push(manifest_name.clone());
        let manifest = RunManifest {
            tool: "stagefreq".into(),
            version: VERSION.into(),
            command: command.into(),
            config: config.clone(),
            outputs,
            chains: std::mem::take(&mut self.chains),
            warnings: std::mem::take(&mut self.warnings),
        };
        self.add_json(&manifest_name, &manifest)?;

        let dir = &config.out_dir;
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
            info!("wrote {}", path.display());
        }
        Ok(manifest)
    }
}

fn skipped_warning(s: &SkippedYear) -> String {
    format!("covariate year {} dropped: missing months {:?}", s.year, s.missing_months)
}

/// Builds the dataset from `dataset`, or from `stage` + `index` (+ `meta`).
pub fn load_dataset(config: &RunConfig, warnings: &mut Vec<String>) -> Result<AlignedDataset> {
    if let Some(path) = &config.dataset {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        return AlignedDataset::from_json_with_min_length(&text, config.min_length)
            .map_err(|e| Error::Validation(format!("{}: {e}", path.display())));
    }
    let (Some(stage), Some(index)) = (&config.stage, &config.index) else {
        return Err(Error::Validation("no input: give --dataset, or --stage with --index".into()));
    };
    let mut series = load_annual_maxima(stage)?;
    if series.len() < config.min_length {
        return Err(Error::InsufficientData {
            needed: config.min_length,
            got: series.len(),
        });
    }
    if let Some(meta) = &config.meta {
        series = series.with_meta(Some(StationMeta::load(meta)?))?;
    }
    let monthly = load_monthly_index(index)?;
    let (start, end) = config.months;
    let seasonal = seasonal_mean_covariate(&monthly, start, end)?;
    warnings.extend(seasonal.skipped.iter().map(skipped_warning));
    Ok(align(&series, &seasonal.covariate)?.with_covariate_months(Some(config.months)))
}

fn resolve_structure(
    config: &RunConfig,
    dataset: &AlignedDataset,
) -> Result<(ModelStructure, Option<NonstationarityAssessment>)> {
    Ok(match config.structure {
        StructureChoice::Stationary => (ModelStructure::Stationary, None),
        StructureChoice::Nonstationary => (ModelStructure::Nonstationary, None),
        StructureChoice::Auto => {
            let a = assess_nonstationarity(dataset.series(), config.alpha)?;
            (a.recommended_structure.into(), Some(a))
        }
    })
}

fn ensemble_bytes(ensemble: &ParameterEnsemble, thin: usize) -> Result<Vec<u8>> {
    let mut text = if thin > 1 {
        ensemble.thinned(thin)?.to_json()?
    } else {
        ensemble.to_json()?
    };
    text.push('\n');
    Ok(text.into_bytes())
}

fn curve_bytes(curve: &ReturnCurve) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    curve.write_csv(&mut buf)?;
    Ok(buf)
}

fn survival_bytes(ensemble: &ParameterEnsemble, period: f64, config: &RunConfig, dataset: &AlignedDataset) -> Result<Vec<u8>> {
    let dist = return_level_ensemble(ensemble, period, config.covariate_ref, dataset, config.credible_mass)?;
    let mut buf = Vec::new();
    write_survival_csv(&survival_function(&dist.levels), &mut buf)?;
    Ok(buf)
}

fn label(prior: &str, structure: ModelStructure) -> String {
    format!("{prior}_{}", structure.name())
}

fn load_ensemble(path: &Option<PathBuf>, what: &str) -> Result<ParameterEnsemble> {
    let path = path
        .as_ref()
        .ok_or_else(|| Error::Validation(format!("{what} requires --ensemble")))?;
    ParameterEnsemble::load(path)
}

pub fn cmd_ingest(config: &RunConfig) -> Result<Artifacts> {
    config.validate()?;
    let mut out = Artifacts::default();
    let dataset = load_dataset(config, &mut out.warnings)?;
    out.add("dataset.json", format!("{}\n", dataset.to_json()?).into_bytes());
    Ok(out)
}

pub fn cmd_assess(config: &RunConfig) -> Result<(NonstationarityAssessment, Artifacts)> {
    config.validate()?;
    let mut out = Artifacts::default();
    let dataset = load_dataset(config, &mut out.warnings)?;
    let assessment = assess_nonstationarity(dataset.series(), config.alpha)?;
    out.warnings.extend(assessment.warnings.iter().cloned());
    out.add_json("assessment.json", &assessment)?;
    Ok((assessment, out))
}

/// One chain under `prior` and the requested or assessed structure.
pub fn cmd_fit(config: &RunConfig) -> Result<(ParameterEnsemble, Artifacts)> {
    config.validate()?;
    let base = config.require_seed()?;
    let named = NamedPrior::preset(&config.prior)?;
    let mut out = Artifacts::default();
    let dataset = load_dataset(config, &mut out.warnings)?;
    let (structure, assessment) = resolve_structure(config, &dataset)?;
    if let Some(a) = &assessment {
        info!("assessment recommends a {} model", structure.name());
        out.add_json("assessment.json", a)?;
    }
    let seed = derive_seed(base, SINGLE_FIT_STAGE, 0);
    let ensemble = mh_sample(&dataset, structure, &named.spec, &config.chain_config(seed))?;
    for w in &ensemble.warnings {
        warn!("{w}");
    }
    out.chains.push(ChainSummary::new(label(&named.name, structure), &named.name, seed, &ensemble));
    out.add("ensemble.json", ensemble_bytes(&ensemble, config.thin)?);
    Ok((ensemble, out))
}

pub fn cmd_levels(config: &RunConfig) -> Result<(ReturnCurve, Artifacts)> {
    config.validate()?;
    let ensemble = load_ensemble(&config.ensemble, "levels")?;
    let mut out = Artifacts::default();
    let dataset = load_dataset(config, &mut out.warnings)?;
    let curve = return_curve(&ensemble, &config.periods, config.covariate_ref, &dataset, config.credible_mass)?;
    out.add("levels.csv", curve_bytes(&curve)?);
    for &t in &config.periods {
        out.add(format!("survival_{t}.csv"), survival_bytes(&ensemble, t, config, &dataset)?);
    }
    out.add_json("levels.json", &curve)?;
    Ok((curve, out))
}

/// Recurrence interval of a stationary design level under a nonstationary
/// ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalentEntry {
    pub prior: Option<String>,
    /// Return period the stationary level was designed for, when known.
    pub design_period: Option<f64>,
    pub stationary_level: f64,
    pub covariate_value: f64,
    /// `None` when the level lies above every sample's support.
    pub equivalent_period: Option<f64>,
}

fn equivalent_entry(
    prior: Option<String>,
    design_period: Option<f64>,
    level: f64,
    ns: &ParameterEnsemble,
    config: &RunConfig,
    dataset: &AlignedDataset,
) -> Result<EquivalentEntry> {
    let t = equivalent_return_period(level, ns, config.covariate_ref, dataset)?;
    Ok(EquivalentEntry {
        prior,
        design_period,
        stationary_level: level,
        covariate_value: config.covariate_ref.resolve(dataset)?,
        equivalent_period: t.is_finite().then_some(t),
    })
}

fn stationary_entries(
    prior: Option<String>,
    st: &ParameterEnsemble,
    ns: &ParameterEnsemble,
    config: &RunConfig,
    dataset: &AlignedDataset,
) -> Result<Vec<EquivalentEntry>> {
    config
        .periods
        .iter()
        .map(|&t| {
            let level = return_level_ensemble(st, t, config.covariate_ref, dataset, config.credible_mass)?.expected;
            equivalent_entry(prior.clone(), Some(t), level, ns, config, dataset)
        })
        .collect()
}

pub fn cmd_equivalent(config: &RunConfig) -> Result<(Vec<EquivalentEntry>, Artifacts)> {
    config.validate()?;
    let ns = load_ensemble(&config.ensemble, "equivalent")?;
    if ns.structure != ModelStructure::Nonstationary {
        warn!("equivalent periods from a stationary ensemble carry no covariate shift");
    }
    let mut out = Artifacts::default();
    let dataset = load_dataset(config, &mut out.warnings)?;
    let mut entries = Vec::new();
    if let Some(level) = config.stationary_level {
        entries.push(equivalent_entry(None, None, level, &ns, config, &dataset)?);
    }
    if config.stationary_ensemble.is_some() {
        let st = load_ensemble(&config.stationary_ensemble, "equivalent")?;
        entries.extend(stationary_entries(None, &st, &ns, config, &dataset)?);
    }
    if entries.is_empty() {
        return Err(Error::Validation(
            "equivalent requires --stationary-level or --stationary-ensemble".into(),
        ));
    }
    out.add_json("equivalent.json", &entries)?;
    Ok((entries, out))
}

/// Decompositions for one return period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSensitivity {
    pub period: f64,
    pub grid_mean: f64,
    pub grid_min: f64,
    pub grid_max: f64,
    pub decompositions: Vec<UncertaintyDecomposition>,
    pub shares: Vec<Vec<f64>>,
    pub anova: Option<AnovaEffects>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub source_order: Vec<String>,
    pub priors: Vec<NamedPrior>,
    pub structures: Vec<ModelStructure>,
    pub parameter_scenarios: usize,
    pub covariate_ref: CovariateRef,
    pub periods: Vec<PeriodSensitivity>,
}

impl SensitivityReport {
    pub const CSV_HEADER: [&'static str; 5] = ["period", "measure", "source", "individual", "share"];

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Validation(format!("csv write: {e}"));
        w.write_record(Self::CSV_HEADER).map_err(err)?;
        for p in &self.periods {
            for (d, shares) in p.decompositions.iter().zip(&p.shares) {
                for ((name, u), s) in d.source_names.iter().zip(&d.individual).zip(shares) {
                    w.write_record([p.period.to_string(), d.measure.name().to_string(), name.clone(), u.to_string(), s.to_string()])
                        .map_err(err)?;
                }
            }
        }
        w.into_inner().map_err(|e| Error::Validation(format!("csv write: {e}")))
    }
}

const STRUCTURES: [ModelStructure; 2] = [ModelStructure::Stationary, ModelStructure::Nonstationary];

fn sensitivity_report(
    config: &RunConfig,
    dataset: &AlignedDataset,
    priors: &[NamedPrior],
    cells: &[CellFit],
) -> Result<SensitivityReport> {
    let mut periods = Vec::with_capacity(config.periods.len());
    for &t in &config.periods {
        let grid = grid_from_cells(
            cells,
            priors.len(),
            STRUCTURES.len(),
            t,
            config.covariate_ref,
            dataset,
            config.parameter_scenarios,
        )?;
        let decompositions = config
            .measures
            .iter()
            .map(|&m| decompose(&grid, m))
            .collect::<Result<Vec<_>>>()?;
        let anova = if config.measures.contains(&Measure::Variance) {
            Some(anova_effects(&grid, Measure::Variance)?)
        } else {
            None
        };
        let est = &grid.estimates;
        periods.push(PeriodSensitivity {
            period: t,
            grid_mean: est.iter().sum::<f64>() / est.len() as f64,
            grid_min: est.iter().cloned().fold(f64::INFINITY, f64::min),
            grid_max: est.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            shares: decompositions.iter().map(|d| d.shares()).collect(),
            decompositions,
            anova,
        });
    }
    Ok(SensitivityReport {
        source_order: grid_source_names(),
        priors: priors.to_vec(),
        structures: STRUCTURES.to_vec(),
        parameter_scenarios: config.parameter_scenarios,
        covariate_ref: config.covariate_ref,
        periods,
    })
}

fn grid_source_names() -> Vec<String> {
    use crate::uq::{SOURCE_PARAMETER, SOURCE_PRIOR, SOURCE_STRUCTURE};
    vec![SOURCE_PRIOR.into(), SOURCE_STRUCTURE.into(), SOURCE_PARAMETER.into()]
}

fn check_scenarios(config: &RunConfig) -> Result<()> {
    let retained = config.iterations - config.burn_in;
    if config.parameter_scenarios == 0 || config.parameter_scenarios > retained {
        return Err(Error::Validation(format!(
            "parameter scenarios must lie in 1..={retained}, got {}",
            config.parameter_scenarios
        )));
    }
    Ok(())
}

fn fit_all_cells(
    config: &RunConfig,
    dataset: &AlignedDataset,
    priors: &[NamedPrior],
    out: &mut Artifacts,
) -> Result<Vec<CellFit>> {
    let base = config.chain_config(config.require_seed()?);
    let cells = fit_cells(dataset, priors, &STRUCTURES, &base)?;
    for c in &cells {
        for w in &c.ensemble.warnings {
            warn!("{}: {w}", label(&c.prior.name, c.structure));
        }
        out.chains.push(ChainSummary::new(
            label(&c.prior.name, c.structure),
            &c.prior.name,
            c.seed,
            &c.ensemble,
        ));
    }
    Ok(cells)
}

/// Writes a report describing a decomposition failure next to the other
/// outputs, then hands the error back.
fn sensitivity_failure(config: &RunConfig, err: Error) -> Error {
    if let Error::NonMonotone { .. } = err {
        let path = config.out_dir.join("sensitivity_error.json");
        let body = serde_json::json!({ "error": err.to_string() });
        if fs::create_dir_all(&config.out_dir).is_ok() {
            if let Err(e) = fs::write(&path, format!("{body:#}\n")) {
                warn!("could not write {}: {e}", path.display());
            }
        }
    }
    err
}

pub fn cmd_sensitivity(config: &RunConfig) -> Result<(SensitivityReport, Artifacts)> {
    config.validate()?;
    config.require_seed()?;
    check_scenarios(config)?;
    let priors = config.named_priors()?;
    let mut out = Artifacts::default();
    let dataset = load_dataset(config, &mut out.warnings)?;
    let cells = fit_all_cells(config, &dataset, &priors, &mut out)?;
    let report = sensitivity_report(config, &dataset, &priors, &cells).map_err(|e| sensitivity_failure(config, e))?;
    out.add("sensitivity.csv", report.to_csv()?);
    out.add_json("sensitivity.json", &report)?;
    Ok((report, out))
}

/// Full pipeline: ingest, assess, every (prior, structure) fit, return
/// curves, equivalent periods and the uncertainty decomposition.
pub fn cmd_report(config: &RunConfig) -> Result<Artifacts> {
    config.validate()?;
    config.require_seed()?;
    check_scenarios(config)?;
    let priors = config.named_priors()?;
    let mut out = Artifacts::default();
    let dataset = load_dataset(config, &mut out.warnings)?;
    out.add("dataset.json", format!("{}\n", dataset.to_json()?).into_bytes());

    let assessment = assess_nonstationarity(dataset.series(), config.alpha)?;
    out.warnings.extend(assessment.warnings.iter().cloned());
    out.add_json("assessment.json", &assessment)?;

    let cells = fit_all_cells(config, &dataset, &priors, &mut out)?;
    let top = *config.periods.last().expect("periods validated nonempty");
    for c in &cells {
        let name = label(&c.prior.name, c.structure);
        out.add(format!("ensemble_{name}.json"), ensemble_bytes(&c.ensemble, config.thin)?);
        let curve = return_curve(&c.ensemble, &config.periods, config.covariate_ref, &dataset, config.credible_mass)?;
        out.add(format!("levels_{name}.csv"), curve_bytes(&curve)?);
        out.add(format!("survival_{name}_{top}.csv"), survival_bytes(&c.ensemble, top, config, &dataset)?);
    }

    let mut equivalents = Vec::new();
    for pair in cells.chunks(STRUCTURES.len()) {
        let (st, ns) = (&pair[0], &pair[1]);
        equivalents.extend(stationary_entries(Some(st.prior.name.clone()), &st.ensemble, &ns.ensemble, config, &dataset)?);
    }
    out.add_json("equivalent.json", &equivalents)?;

    let report = sensitivity_report(config, &dataset, &priors, &cells).map_err(|e| sensitivity_failure(config, e))?;
    out.add("sensitivity.csv", report.to_csv()?);
    out.add_json("sensitivity.json", &report)?;
    Ok(out)
}
