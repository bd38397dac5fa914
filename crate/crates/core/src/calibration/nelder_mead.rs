//! Nelder-Mead simplex minimizer.

#[derive(Debug, Clone, Copy)]
pub struct Options {
    /// Stop when the spread of objective values over the simplex is below this.
    pub f_tol: f64,
    /// ... and the largest vertex distance from the best vertex is below this.
    pub x_tol: f64,
    pub max_iterations: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self { f_tol: 1e-11, x_tol: 1e-9, max_iterations: 20_000 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `objective` starting from `x0` with initial simplex steps `step`.
/// The search is restarted from the best vertex once after convergence to
/// guard against a collapsed simplex.
pub fn minimize<F>(mut objective: F, x0: &[f64], step: &[f64], opts: &Options) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let first = run(&mut objective, x0, step, opts);
    let second = run(&mut objective, &first.x, step, opts);
    let iterations = first.iterations + second.iterations;
    if second.value <= first.value {
        Minimum { iterations, ..second }
    } else {
        Minimum { iterations, ..first }
    }
}

fn run<F>(objective: &mut F, x0: &[f64], step: &[f64], opts: &Options) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let dim = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += step[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| sanitize(objective(v))).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[dim] - values[0];
        let size = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= opts.f_tol && size <= opts.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|v| v[k]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[dim]).map(|(c, w)| c + t * (c - w)).collect()
        };

        let reflected = along(REFLECT);
        let f_reflected = sanitize(objective(&reflected));
        if f_reflected < values[0] {
            let expanded = along(EXPAND);
            let f_expanded = sanitize(objective(&expanded));
            if f_expanded < f_reflected {
                simplex[dim] = expanded;
                values[dim] = f_expanded;
            } else {
                simplex[dim] = reflected;
                values[dim] = f_reflected;
            }
            continue;
        }
        if f_reflected < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = f_reflected;
            continue;
        }
        // outside contraction if the reflection improved on the worst vertex
        let candidate = if f_reflected < values[dim] { along(CONTRACT) } else { along(-CONTRACT) };
        let f_candidate = sanitize(objective(&candidate));
        if f_candidate < values[dim].min(f_reflected) {
            simplex[dim] = candidate;
            values[dim] = f_candidate;
            continue;
        }
        for i in 1..=dim {
            let shrunk: Vec<f64> = simplex[i].iter().zip(&simplex[0]).map(|(x, b)| b + SHRINK * (x - b)).collect();
            values[i] = sanitize(objective(&shrunk));
            simplex[i] = shrunk;
        }
    }
    let best = (0..=dim).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Minimum { x: simplex[best].clone(), value: values[best], iterations, converged }
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let m = minimize(
            |x| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.25).powi(2),
            &[0.0, 0.0],
            &[0.5, 0.5],
            &Options::default(),
        );
        assert!(m.converged);
        assert!((m.x[0] - 1.5).abs() < 1e-6);
        assert!((m.x[1] + 0.25).abs() < 1e-6);
    }

    #[test]
    fn rosenbrock() {
        let m = minimize(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.2, 1.0],
            &[0.3, 0.3],
            &Options { f_tol: 1e-16, x_tol: 1e-10, max_iterations: 50_000 },
        );
        assert!((m.x[0] - 1.0).abs() < 1e-5, "{:?}", m.x);
        assert!((m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn nan_regions_are_avoided() {
        let m = minimize(
            |x| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.3).powi(2) },
            &[1.0],
            &[0.5],
            &Options::default(),
        );
        assert!((m.x[0] - 0.3).abs() < 1e-6);
    }
}
