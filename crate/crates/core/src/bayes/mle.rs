//! Maximum-likelihood GEV fit by Nelder-Mead, used as the frequentist
//! reference point next to the posterior ensemble.

use super::mcmc::moment_start;
use crate::error::{Error, Result};
use crate::gev::{log_likelihood_unchecked, GevParams, ModelStructure};
use crate::ingest::AlignedDataset;

pub const MLE_MAX_ITERATIONS: usize = 20_000;
const F_TOL: f64 = 1e-11;
const X_TOL: f64 = 1e-9;

/// Minimizes `f` from `start` with the downhill simplex method.
///
/// Returns the best vertex, its value and whether the tolerance was met
/// before `max_iter` iterations.
pub fn nelder_mead<F>(f: F, start: &[f64], initial_step: &[f64], max_iter: usize) -> (Vec<f64>, f64, bool)
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += initial_step[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let (alpha, gamma, rho, shrink) = (1.0, 2.0, 0.5, 0.5);
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = (values[n] - values[0]).abs();
        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if values[0].is_finite() && spread <= F_TOL * (values[0].abs() + F_TOL) && diameter <= X_TOL {
            return (simplex[0].clone(), values[0], true);
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(alpha);
        let fr = eval(&reflected);
        if fr < values[0] {
            let expanded = along(gamma);
            let fe = eval(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let c = along(rho);
            let fc = eval(&c);
            (c, fc)
        } else {
            let c = along(-rho);
            let fc = eval(&c);
            (c, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            for j in 0..n {
                simplex[i][j] = best[j] + shrink * (simplex[i][j] - best[j]);
            }
            values[i] = eval(&simplex[i]);
        }
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    (simplex[best].clone(), values[best], false)
}

/// Maximum-likelihood parameters for `structure`.
///
/// The search runs over `(mu0, [mu1], ln sigma, xi)` from the Gumbel moment
/// start, restricted to `xi > -1` where the likelihood is bounded. The
/// simplex is restarted once at the optimum. Never returns a point with a
/// lower log-likelihood than the start.
pub fn mle_fit(dataset: &AlignedDataset, structure: ModelStructure) -> Result<GevParams> {
    dataset.check_aligned()?;
    let stage = dataset.stage();
    let cov = dataset.covariate_values();
    let start = moment_start(stage);
    let ns = !structure.is_stationary();

    let unpack = |x: &[f64]| -> GevParams {
        if ns {
            GevParams::new(x[0], x[1], x[2].exp(), x[3])
        } else {
            GevParams::new(x[0], 0.0, x[1].exp(), x[2])
        }
    };
    let objective = |x: &[f64]| -> f64 {
        let p = unpack(x);
        if !(p.xi > -1.0) || !(p.sigma > 0.0) || !p.sigma.is_finite() {
            return f64::INFINITY;
        }
        let ll = log_likelihood_unchecked(stage, cov, structure, &p);
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    };

    let cov_sd = {
        let m = cov.iter().sum::<f64>() / cov.len() as f64;
        (cov.iter().map(|c| (c - m).powi(2)).sum::<f64>() / cov.len() as f64).sqrt()
    };
    let (x0, step): (Vec<f64>, Vec<f64>) = if ns {
        let slope_step = if cov_sd > 0.0 { 0.2 * start.sigma / cov_sd } else { 0.2 * start.sigma };
        (
            vec![start.mu0, 0.0, start.sigma.ln(), 0.0],
            vec![0.2 * start.sigma, slope_step, 0.2, 0.1],
        )
    } else {
        (vec![start.mu0, start.sigma.ln(), 0.0], vec![0.2 * start.sigma, 0.2, 0.1])
    };

    let f_start = objective(&x0);
    let (x1, _, ok1) = nelder_mead(objective, &x0, &step, MLE_MAX_ITERATIONS);
    let small: Vec<f64> = step.iter().map(|s| s * 0.1).collect();
    let (x2, f2, ok2) = nelder_mead(objective, &x1, &small, MLE_MAX_ITERATIONS);

    let best = if f2 <= f_start { unpack(&x2) } else { start };
    if !(ok1 && ok2) {
        return Err(Error::Convergence {
            iterations: MLE_MAX_ITERATIONS,
            best_value: -f2.min(f_start),
            best: Box::new(best),
        });
    }
    Ok(best)
}
