//! Seeded synthetic records used for fixtures, tests and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::gev::Gev;
use crate::ingest::{AnnualMaximaSeries, MonthlyIndexSeries, MonthlyValue, StationMeta};

/// Seeds of the bundled fixtures.
pub const TRENDING_SEED: u64 = 1961;
pub const HEAVY_TAIL_SEED: u64 = 1975;
pub const STEP_SEED: u64 = 30;
pub const WHITE_NOISE_SEED: u64 = 60;
pub const RAMP_SEED: u64 = 45;
pub const GUMBEL_SEED: u64 = 50;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn open_unit(r: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = r.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// `n` independent GEV draws by inversion.
pub fn gev_sample(n: usize, mu: f64, sigma: f64, xi: f64, seed: u64) -> Result<Vec<f64>> {
    let d = Gev::new(mu, sigma, xi)?;
    let mut r = rng(seed);
    (0..n).map(|_| d.quantile(open_unit(&mut r))).collect()
}

pub fn gumbel_sample(n: usize, mu: f64, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    gev_sample(n, mu, sigma, 0.0, seed)
}

pub fn white_noise(n: usize, mean: f64, sd: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let d = Normal::new(mean, sd).expect("finite normal parameters");
    (0..n).map(|_| d.sample(&mut r)).collect()
}

/// `n_before` draws around `level_before`, then `n_after` around `level_after`.
pub fn step_series(
    n_before: usize,
    n_after: usize,
    level_before: f64,
    level_after: f64,
    noise_sd: f64,
    seed: u64,
) -> Vec<f64> {
    let noise = white_noise(n_before + n_after, 0.0, noise_sd, seed);
    noise
        .iter()
        .enumerate()
        .map(|(i, e)| if i < n_before { level_before + e } else { level_after + e })
        .collect()
}

pub fn linear_ramp(n: usize, intercept: f64, slope: f64, noise_sd: f64, seed: u64) -> Vec<f64> {
    white_noise(n, 0.0, noise_sd, seed)
        .iter()
        .enumerate()
        .map(|(i, e)| intercept + slope * i as f64 + e)
        .collect()
}

/// A synthetic station whose stage location follows a rising climate index.
#[derive(Debug, Clone)]
pub struct SyntheticStation {
    pub meta: StationMeta,
    pub stage: AnnualMaximaSeries,
    pub monthly_index: MonthlyIndexSeries,
}

#[derive(Debug, Clone, Copy)]
pub struct StationRecipe {
    pub first_year: i32,
    pub years: usize,
    /// Seasonal index mean in the first year and its yearly drift.
    pub index_start: f64,
    pub index_drift: f64,
    pub index_year_sd: f64,
    pub index_month_sd: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub sigma: f64,
    pub xi: f64,
}

impl StationRecipe {
    /// Location rising with an upward-drifting index.
    pub fn trending() -> Self {
        Self {
            first_year: 1961,
            years: 60,
            index_start: -0.5,
            index_drift: 0.025,
            index_year_sd: 0.1,
            index_month_sd: 0.2,
            mu0: 5.0,
            mu1: 2.0,
            sigma: 0.3,
            xi: 0.3,
        }
    }

    /// Stationary record with a heavy upper tail.
    pub fn heavy_tail() -> Self {
        Self {
            first_year: 1975,
            years: 40,
            index_start: 0.0,
            index_drift: 0.0,
            index_year_sd: 0.3,
            index_month_sd: 0.2,
            mu0: 5.0,
            mu1: 0.0,
            sigma: 0.8,
            xi: 0.25,
        }
    }

    pub fn generate(&self, station_id: &str, seed: u64) -> Result<SyntheticStation> {
        let mut r = rng(seed);
        let year_noise = Normal::new(0.0, self.index_year_sd).expect("finite sd");
        let month_noise = Normal::new(0.0, self.index_month_sd).expect("finite sd");
        let last_year = self.first_year + self.years as i32 - 1;

        let mut entries = Vec::with_capacity(self.years * 12);
        let mut years = Vec::with_capacity(self.years);
        let mut stage = Vec::with_capacity(self.years);
        for (i, year) in (self.first_year..=last_year).enumerate() {
            let level = self.index_start + self.index_drift * i as f64 + year_noise.sample(&mut r);
            let mut window_sum = 0.0;
            for month in 1..=12u8 {
                let value = round4(level + month_noise.sample(&mut r));
                if (6..=11).contains(&month) {
                    window_sum += value;
                }
                entries.push(MonthlyValue { year, month, value });
            }
            let phi = window_sum / 6.0;
            let d = Gev::new(self.mu0 + self.mu1 * phi, self.sigma, self.xi)?;
            let x = d.quantile(open_unit(&mut r))?;
            years.push(year);
            stage.push(round4(x.max(0.01)));
        }
        let meta = StationMeta {
            station_id: station_id.to_string(),
            name: format!("Synthetic {station_id}"),
            river_basin: "Synthetic".into(),
            latitude: 27.5,
            longitude: 85.0,
            basin_area: 3650.0,
            record_start_year: self.first_year,
            record_end_year: last_year,
        };
        Ok(SyntheticStation {
            stage: AnnualMaximaSeries::new(years, stage, Some(meta.clone()))?,
            monthly_index: MonthlyIndexSeries::new(entries)?,
            meta,
        })
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

pub fn write_monthly_csv<W: std::io::Write>(series: &MonthlyIndexSeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| crate::error::Error::Validation(format!("csv write: {e}"));
    w.write_record(crate::ingest::INDEX_HEADER).map_err(err)?;
    for e in series.entries() {
        w.write_record([e.year.to_string(), e.month.to_string(), e.value.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| crate::error::Error::io("<csv>", e))?;
    Ok(())
}
