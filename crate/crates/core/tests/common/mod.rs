//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stagefreq::uq::ScenarioGrid;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

/// Textbook GEV density, written out without the library's helpers.
pub fn gev_pdf_reference(x: f64, mu: f64, sigma: f64, xi: f64) -> f64 {
    let z = (x - mu) / sigma;
    if xi == 0.0 {
        let e = (-z).exp();
        return e * (-e).exp() / sigma;
    }
    let t = 1.0 + xi * z;
    if t <= 0.0 {
        return 0.0;
    }
    t.powf(-1.0 / xi - 1.0) * (-t.powf(-1.0 / xi)).exp() / sigma
}

/// Log of the textbook density, evaluated in log space.
pub fn gev_ln_pdf_reference(x: f64, mu: f64, sigma: f64, xi: f64) -> f64 {
    let z = (x - mu) / sigma;
    if xi == 0.0 {
        return -sigma.ln() - z - (-z).exp();
    }
    let t = 1.0 + xi * z;
    if t <= 0.0 {
        return f64::NEG_INFINITY;
    }
    -sigma.ln() - (1.0 + 1.0 / xi) * t.ln() - t.powf(-1.0 / xi)
}

pub fn gev_cdf_reference(x: f64, mu: f64, sigma: f64, xi: f64) -> f64 {
    let z = (x - mu) / sigma;
    if xi == 0.0 {
        return (-(-z).exp()).exp();
    }
    let t = 1.0 + xi * z;
    if t <= 0.0 {
        return if xi > 0.0 { 0.0 } else { 1.0 };
    }
    (-t.powf(-1.0 / xi)).exp()
}

pub fn gev_quantile_reference(p: f64, mu: f64, sigma: f64, xi: f64) -> f64 {
    let y = -p.ln();
    if xi == 0.0 {
        mu - sigma * y.ln()
    } else {
        mu + sigma * (y.powf(-xi) - 1.0) / xi
    }
}

fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, m: f64, fm: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + simpson_step(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fb, fm) = (f(a), f(b), f(m));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, fa, b, fb, m, fm, whole, tol, 60)
}

/// Integral over consecutive pieces of `breaks`.
pub fn piecewise_simpson(f: &dyn Fn(f64) -> f64, breaks: &[f64], tol: f64) -> f64 {
    breaks.windows(2).map(|w| adaptive_simpson(f, w[0], w[1], tol)).sum()
}

fn sign(a: f64, b: f64) -> i64 {
    if a > b {
        1
    } else if a < b {
        -1
    } else {
        0
    }
}

/// Pettitt `(tau, K)` from the double sum at every split.
pub fn pettitt_brute(x: &[f64]) -> (usize, u64) {
    let n = x.len();
    let mut best = (1usize, 0u64);
    for t in 1..n {
        let mut u = 0i64;
        for i in 0..t {
            for j in t..n {
                u += sign(x[i], x[j]);
            }
        }
        if u.unsigned_abs() > best.1 {
            best = (t, u.unsigned_abs());
        }
    }
    best
}

/// Mann-Kendall `(S, Var(S))`, ties counted by pairwise comparison.
pub fn mann_kendall_brute(x: &[f64]) -> (i64, f64) {
    let n = x.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += sign(x[j], x[i]);
        }
    }
    let mut seen = vec![false; n];
    let mut tie_term = 0.0;
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let mut g = 0usize;
        for j in i..n {
            if x[j] == x[i] {
                seen[j] = true;
                g += 1;
            }
        }
        let g = g as f64;
        tie_term += g * (g - 1.0) * (2.0 * g + 5.0);
    }
    let nf = n as f64;
    (s, (nf * (nf - 1.0) * (2.0 * nf + 5.0) - tie_term) / 18.0)
}

/// Every index tuple of a grid, first coordinate slowest.
pub fn tuples(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &c in counts {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..c).map(move |k| {
                    let mut t = prefix.clone();
                    t.push(k);
                    t
                })
            })
            .collect();
    }
    out
}

pub fn grid_from_fn(counts: &[usize], f: impl Fn(&[usize]) -> f64) -> ScenarioGrid {
    let names = (0..counts.len()).map(|i| format!("s{i}")).collect();
    let values = tuples(counts).iter().map(|t| f(t)).collect();
    ScenarioGrid::new(names, counts.to_vec(), values).expect("valid grid")
}

pub fn random_grid(counts: &[usize], seed: u64) -> ScenarioGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..counts.iter().product::<usize>()).map(|_| rng.random_range(0.0..10.0)).collect();
    let names = (0..counts.len()).map(|i| format!("s{i}")).collect();
    ScenarioGrid::new(names, counts.to_vec(), values).expect("valid grid")
}

pub fn range_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn variance_of(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

/// Cumulative and individual uncertainties straight from the definitions:
/// for each source prefix, measure every slice with the trailing sources
/// fixed, average over those slices, then difference.
pub fn decompose_brute(grid: &ScenarioGrid, measure: fn(&[f64]) -> f64) -> (Vec<f64>, Vec<f64>) {
    let counts = &grid.scenario_counts;
    let all = tuples(counts);
    let value = |t: &[usize]| grid.estimates[all.iter().position(|u| u.as_slice() == t).unwrap()];
    let z = counts.len();
    let mut cumulative = Vec::new();
    for upto in 1..=z {
        let suffixes = tuples(&counts[upto..]);
        let mut acc = 0.0;
        for s in &suffixes {
            let slice: Vec<f64> = all.iter().filter(|t| &t[upto..] == s.as_slice()).map(|t| value(t)).collect();
            acc += measure(&slice);
        }
        cumulative.push(acc / suffixes.len() as f64);
    }
    let mut individual = Vec::new();
    let mut prev = 0.0;
    for &c in &cumulative {
        individual.push(c - prev);
        prev = c;
    }
    (cumulative, individual)
}
