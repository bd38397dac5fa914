//! Least-squares fit of the power-law fitness shape to a season's win ratios.

use serde::Serialize;

use super::nelder_mead;
use crate::error::{Error, Result};
use crate::synth::ResultSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeFit {
    pub shape_alpha_hat: f64,
    pub shape_beta_hat: f64,
    pub gamma_hat: f64,
    pub sse: f64,
    /// Norm of the SSE gradient at the reported optimum.
    pub grad_norm: f64,
}

const ALPHA_SEEDS: [f64; 4] = [0.5, 1.0, 2.0, 3.0];
const BETA_SEEDS: [f64; 3] = [0.25, 0.5, 1.0];
const GRAD_TOL: f64 = 1e-8;
const MIN_ALPHA: f64 = 1e-6;

/// Sorted win ratios paired with rank positions `x_i = (i - 0.5) / N`.
struct ShapeData {
    x: Vec<f64>,
    y: Vec<f64>,
    ln_x: Vec<f64>,
}

impl ShapeData {
    /// Residuals and their partial derivatives in `(alpha, beta)`, with
    /// `gamma = 1/2 - beta * mean(x^alpha)`.
    fn residuals(&self, alpha: f64, beta: f64) -> (Vec<f64>, Vec<[f64; 2]>, f64) {
        let n = self.x.len() as f64;
        let pow: Vec<f64> = self.x.iter().map(|x| x.powf(alpha)).collect();
        let dpow: Vec<f64> = pow.iter().zip(&self.ln_x).map(|(p, l)| p * l).collect();
        let m = pow.iter().sum::<f64>() / n;
        let dm = dpow.iter().sum::<f64>() / n;
        let gamma = 0.5 - beta * m;
        let r = pow.iter().zip(&self.y).map(|(p, y)| beta * (p - m) + 0.5 - y).collect();
        let j = pow.iter().zip(&dpow).map(|(p, dp)| [beta * (dp - dm), p - m]).collect();
        (r, j, gamma)
    }

    fn sse(&self, alpha: f64, beta: f64) -> f64 {
        self.residuals(alpha, beta).0.iter().map(|r| r * r).sum()
    }
}

/// Fits `beta * x^alpha + gamma` to win ratios sorted from worst to best.
///
/// Multi-start Nelder-Mead over `(ln alpha, beta)` from the seed grid, then
/// Levenberg-Marquardt polishing until the gradient norm drops below 1e-8.
pub fn fit_shape(results: &ResultSet) -> Result<ShapeFit> {
    if let Some(team) = results.games_played().iter().position(|&g| g == 0) {
        return Err(Error::Underdetermined(format!("team {team} has no games")));
    }
    let mut y = results.win_ratios();
    y.sort_by(f64::total_cmp);
    let distinct = y.windows(2).filter(|w| w[1] - w[0] > 1e-12).count() + 1;
    if distinct < 3 {
        return Err(Error::Underdetermined(format!("only {distinct} distinct win-ratio values")));
    }
    fit_shape_values(&y)
}

/// Shape fit on win ratios already sorted ascending.
pub fn fit_shape_values(sorted_ratios: &[f64]) -> Result<ShapeFit> {
    let n = sorted_ratios.len();
    if n < 3 {
        return Err(Error::Underdetermined(format!("need at least 3 teams, got {n}")));
    }
    let x: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
    let ln_x = x.iter().map(|v| v.ln()).collect();
    let data = ShapeData { x, y: sorted_ratios.to_vec(), ln_x };

    let objective = |theta: &[f64]| data.sse(theta[0].exp().max(MIN_ALPHA), theta[1]);
    let opts = nelder_mead::Options { f_tol: 1e-16, x_tol: 1e-10, max_iterations: 20_000 };
    let best = ALPHA_SEEDS
        .iter()
        .flat_map(|&a| BETA_SEEDS.iter().map(move |&b| [a.ln(), b]))
        .map(|start| nelder_mead::minimize(objective, &start, &[0.2, 0.1], &opts))
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("non-empty seed grid");

    let (mut alpha, mut beta) = (best.x[0].exp().max(MIN_ALPHA), best.x[1]);
    let mut lambda = 1e-6;
    let mut grad_norm = f64::INFINITY;
    for _ in 0..200 {
        let (r, j, _) = data.residuals(alpha, beta);
        let sse: f64 = r.iter().map(|v| v * v).sum();
        let g = [
            2.0 * r.iter().zip(&j).map(|(ri, ji)| ri * ji[0]).sum::<f64>(),
            2.0 * r.iter().zip(&j).map(|(ri, ji)| ri * ji[1]).sum::<f64>(),
        ];
        grad_norm = g[0].hypot(g[1]);
        if grad_norm < GRAD_TOL {
            break;
        }
        let mut jtj = [0.0; 4];
        for ji in &j {
            jtj[0] += ji[0] * ji[0];
            jtj[1] += ji[0] * ji[1];
            jtj[3] += ji[1] * ji[1];
        }
        jtj[2] = jtj[1];
        let mut improved = false;
        for _ in 0..40 {
            let a = [jtj[0] * (1.0 + lambda), jtj[1], jtj[2], jtj[3] * (1.0 + lambda)];
            let det = a[0] * a[3] - a[1] * a[2];
            if det.abs() < 1e-300 {
                lambda *= 10.0;
                continue;
            }
            // solve a * step = -g / 2
            let (b0, b1) = (-g[0] / 2.0, -g[1] / 2.0);
            let step = [(a[3] * b0 - a[1] * b1) / det, (a[0] * b1 - a[2] * b0) / det];
            let (na, nb) = ((alpha + step[0]).max(MIN_ALPHA), beta + step[1]);
            if data.sse(na, nb) <= sse {
                alpha = na;
                beta = nb;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let (r, _, gamma) = data.residuals(alpha, beta);
    Ok(ShapeFit {
        shape_alpha_hat: alpha,
        shape_beta_hat: beta,
        gamma_hat: gamma,
        sse: r.iter().map(|v| v * v).sum(),
        grad_norm,
    })
}
