use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::seed::derive_seed;
use super::{Axis, AxisValue, SweepSpec};
use crate::error::{Error, Result};
use crate::metrics::{GroundTruth, Metric};
use crate::rankers::{score, Method};
use crate::synth::{perturb_unexpected, simulate_season, PerturbMode};

const PERTURB_STREAM: u64 = 0x7065_7274;

/// Aggregate for one (grid point, algorithm, metric).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub point: Vec<AxisValue>,
    pub algorithm: Method,
    pub metric: Metric,
    pub mean: f64,
    pub sem: f64,
    pub n: usize,
    /// Per-realization values in realization order.
    #[serde(skip)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axes: Vec<Axis>,
    /// Grid points in lexicographic order, then algorithms and metrics in
    /// spec order.
    pub cells: Vec<SweepCell>,
}

impl Serialize for AxisValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AxisValue::Num(x) => s.serialize_f64(*x),
            AxisValue::Mode(m) => m.serialize(s),
        }
    }
}

impl Serialize for Axis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl SweepResult {
    pub fn cell(&self, point: &[AxisValue], algorithm: Method, metric: Metric) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.point == point && c.algorithm == algorithm && c.metric == metric)
    }

    /// Header `axis...,algorithm,metric,mean,sem,n`, one row per cell.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = self.axes.iter().map(|a| a.as_str().to_string()).collect();
        header.extend(["algorithm", "metric", "mean", "sem", "n"].map(String::from));
        w.write_record(&header)?;
        for c in &self.cells {
            let mut row: Vec<String> = c.point.iter().map(|v| v.to_string()).collect();
            row.push(c.algorithm.as_str().to_string());
            row.push(c.metric.as_str().to_string());
            row.push(c.mean.to_string());
            row.push(c.sem.to_string());
            row.push(c.n.to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<sweep output>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Runs every grid point `realizations` times. Perturbation axes (`eta`,
/// `mode`) are applied to the same generated season, so they share seeds.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Spec(format!("cannot start thread pool: {e}")))?
            .install(|| execute(spec)),
        None => execute(spec),
    }
}

/// A sweep over `eta` for a given perturbation mode. `eta = 0` reproduces the
/// unperturbed sweep for the same seeds.
pub fn run_perturbation_study(spec: &SweepSpec) -> Result<SweepResult> {
    let has_eta = spec.grid.iter().any(|g| g.axis == Axis::Eta) || spec.eta.is_some();
    if !has_eta {
        return Err(Error::Spec("perturbation study needs an `eta` axis or value".into()));
    }
    if !(spec.mode.is_some() || spec.grid.iter().any(|g| g.axis == Axis::Mode)) {
        return Err(Error::Spec("perturbation study needs a mode".into()));
    }
    run_sweep(spec)
}

fn execute(spec: &SweepSpec) -> Result<SweepResult> {
    let gen_axes: Vec<usize> = (0..spec.grid.len()).filter(|&i| !spec.grid[i].axis.is_perturbation()).collect();
    let points = spec.points();
    // generation points, first-appearance order
    let mut gen_points: Vec<Vec<AxisValue>> = Vec::new();
    let mut gen_of_point = Vec::with_capacity(points.len());
    for p in &points {
        let key: Vec<AxisValue> = gen_axes.iter().map(|&i| p[i]).collect();
        let idx = match gen_points.iter().position(|g| *g == key) {
            Some(i) => i,
            None => {
                gen_points.push(key);
                gen_points.len() - 1
            }
        };
        gen_of_point.push(idx);
    }

    let r_count = spec.realizations;
    let per_point = spec.algorithms.len() * spec.metrics.len();
    // unit u = (generation point, realization); output[u][point][alg * metrics + metric]
    let units: Vec<(usize, usize)> =
        (0..gen_points.len()).flat_map(|g| (0..r_count).map(move |r| (g, r))).collect();
    let outputs: Vec<Vec<(usize, Vec<f64>)>> = units
        .par_iter()
        .map(|&(g, r)| {
            let members: Vec<usize> = (0..points.len()).filter(|&p| gen_of_point[p] == g).collect();
            run_unit(spec, &points, &members, &gen_points[g], r)
        })
        .collect::<Result<_>>()?;

    let mut values = vec![vec![Vec::with_capacity(r_count); per_point]; points.len()];
    for unit in outputs {
        for (p, vals) in unit {
            for (slot, v) in values[p].iter_mut().zip(vals) {
                slot.push(v);
            }
        }
    }

    let mut cells = Vec::with_capacity(points.len() * per_point);
    for (p, point) in points.iter().enumerate() {
        for (a, &algorithm) in spec.algorithms.iter().enumerate() {
            for (m, &metric) in spec.metrics.iter().enumerate() {
                let vals = std::mem::take(&mut values[p][a * spec.metrics.len() + m]);
                let (mean, sem) = mean_sem(&vals);
                cells.push(SweepCell { point: point.clone(), algorithm, metric, mean, sem, n: vals.len(), values: vals });
            }
        }
    }
    Ok(SweepResult { axes: spec.grid.iter().map(|g| g.axis).collect(), cells })
}

fn run_unit(
    spec: &SweepSpec,
    points: &[Vec<AxisValue>],
    members: &[usize],
    gen_point: &[AxisValue],
    realization: usize,
) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut parts: Vec<u64> = gen_point.iter().map(|v| v.seed_bits()).collect();
    parts.push(realization as u64);
    let seed = derive_seed(spec.base_seed, &parts);
    let config = spec.league_at(&points[members[0]], seed);
    let (fitness, results) = simulate_season(&config)?;
    let truth = GroundTruth::from_fitness(&fitness, spec.top_k)?;

    let mut out = Vec::with_capacity(members.len());
    for &p in members {
        let (eta, mode) = perturbation_at(spec, &points[p]);
        let treated = match (eta, mode) {
            (Some(eta), Some(mode)) => {
                // same stream for every eta and mode, so treated sets nest
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[PERTURB_STREAM]));
                perturb_unexpected(&results, &fitness, eta, mode, &mut rng)?
            }
            _ => results.clone(),
        };
        let mut vals = Vec::with_capacity(spec.algorithms.len() * spec.metrics.len());
        for &method in &spec.algorithms {
            let scores = score(&treated, method, spec.teleport_alpha)?;
            for metric in &spec.metrics {
                vals.push(metric.evaluate(&scores, &truth)?);
            }
        }
        out.push((p, vals));
    }
    Ok(out)
}

fn perturbation_at(spec: &SweepSpec, point: &[AxisValue]) -> (Option<f64>, Option<PerturbMode>) {
    let (mut eta, mut mode) = (spec.eta, spec.mode);
    for (g, v) in spec.grid.iter().zip(point) {
        match (g.axis, v) {
            (Axis::Eta, AxisValue::Num(x)) => eta = Some(*x),
            (Axis::Mode, AxisValue::Mode(m)) => mode = Some(*m),
            _ => {}
        }
    }
    (eta, mode)
}

/// Mean by Neumaier summation and standard error `sd / sqrt(n)` with the
/// sample standard deviation. A single value has SEM 0.
pub(crate) fn mean_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = neumaier_sum(values.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = neumaier_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    let sd = (ss / (n - 1) as f64).sqrt();
    (mean, sd / (n as f64).sqrt())
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
