//! Full-model fit over every team's fitness plus `H` and `delta`.
//!
//! The likelihood only sees `(f_i - f_j + H) / delta`, so the fit runs on
//! `g_i = (f_i - 1/2) / delta` and `h = H / delta`, which is a logistic
//! regression with a concave log-likelihood. Newton steps with backtracking
//! start from the simplified-model optimum, so the result never has a lower
//! likelihood than the simplified fit.

use super::{check_fit_input, fingerprint, fit_simplified, outcome_log_prob, CalibrationFit, ModelKind};
use crate::error::Result;
use crate::model::logistic;
use crate::synth::ResultSet;

const MAX_NEWTON_STEPS: usize = 500;
const LL_TOL: f64 = 1e-10;
const GRAD_TOL: f64 = 1e-9;

pub fn fit_full(results: &ResultSet) -> Result<CalibrationFit> {
    check_fit_input(results)?;
    let simplified = fit_simplified(results)?;
    let n = results.n_teams();
    let w = results.win_ratios();

    // theta = (g_1 .. g_{n-1}, h) with g_0 pinned at 0
    let dim = n;
    let mut theta = vec![0.0; dim];
    for t in 1..n {
        theta[t - 1] = (w[t] - w[0]) / simplified.delta_hat;
    }
    theta[dim - 1] = simplified.home_hat / simplified.delta_hat;

    let games: Vec<(usize, usize, bool)> = results.games().iter().map(|g| (g.home, g.away, g.home_won)).collect();
    let predictor = |theta: &[f64], home: usize, away: usize| {
        let g = |t: usize| if t == 0 { 0.0 } else { theta[t - 1] };
        g(home) - g(away) + theta[dim - 1]
    };
    let log_lik = |theta: &[f64]| -> f64 {
        games.iter().map(|&(h, a, won)| outcome_log_prob(logistic(predictor(theta, h, a)), won)).sum()
    };

    let mut ll = log_lik(&theta);
    let mut warnings = Vec::new();
    let mut converged = false;
    for _ in 0..MAX_NEWTON_STEPS {
        let mut grad = vec![0.0; dim];
        let mut hess = vec![0.0; dim * dim];
        for &(h, a, won) in &games {
            let p = logistic(predictor(&theta, h, a));
            let resid = won as u8 as f64 - p;
            let weight = p * (1.0 - p);
            let mut x: [(usize, f64); 3] = [(usize::MAX, 0.0); 3];
            let mut len = 0;
            if h != 0 {
                x[len] = (h - 1, 1.0);
                len += 1;
            }
            if a != 0 {
                x[len] = (a - 1, -1.0);
                len += 1;
            }
            x[len] = (dim - 1, 1.0);
            len += 1;
            for &(i, xi) in &x[..len] {
                grad[i] += resid * xi;
                for &(j, xj) in &x[..len] {
                    hess[i * dim + j] += weight * xi * xj;
                }
            }
        }
        let grad_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if grad_norm < GRAD_TOL {
            converged = true;
            break;
        }
        let scale = (0..dim).map(|i| hess[i * dim + i]).fold(0.0f64, f64::max).max(1.0);
        for i in 0..dim {
            hess[i * dim + i] += 1e-10 * scale;
        }
        let Some(step) = cholesky_solve(&hess, &grad, dim) else {
            warnings.push("singular curvature in full-model fit".to_string());
            break;
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = theta.iter().zip(&step).map(|(x, s)| x + t * s).collect();
            let trial_ll = log_lik(&trial);
            if trial_ll >= ll {
                accepted = Some((trial, trial_ll));
                break;
            }
            t *= 0.5;
        }
        let Some((next, next_ll)) = accepted else {
            converged = true;
            break;
        };
        let gain = next_ll - ll;
        theta = next;
        ll = next_ll;
        if gain < LL_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        warnings.push(format!("full-model fit stopped after {MAX_NEWTON_STEPS} Newton steps"));
    }

    let mut g: Vec<f64> = std::iter::once(0.0).chain(theta[..dim - 1].iter().copied()).collect();
    let g_mean = g.iter().sum::<f64>() / n as f64;
    g.iter_mut().for_each(|x| *x -= g_mean);
    let h = theta[dim - 1];

    let spread = |v: &[f64]| {
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        hi - lo
    };
    let (g_spread, w_spread) = (spread(&g), spread(&w));
    let delta_hat = if g_spread > 1e-12 && w_spread > 1e-12 {
        w_spread / g_spread
    } else {
        warnings.push("no fitness spread to match; delta reported as 1".to_string());
        1.0
    };
    for msg in &warnings {
        log::warn!("full fit: {msg}");
    }

    let mut fit = CalibrationFit::new(ModelKind::Full, delta_hat, h * delta_hat, ll, n + 2, fingerprint(results));
    fit.fitness_hat = Some(g.iter().map(|x| 0.5 + delta_hat * x).collect());
    fit.warnings = warnings;
    Ok(fit)
}

/// Solves `a x = b` for symmetric positive-definite `a` (row-major, `n x n`).
fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i * n + i];
    }
    Some(x)
}
