//! Monte Carlo sweeps over league parameters and the early-season
//! evaluation protocol on real seasons.

mod real_eval;
pub mod seed;
mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::metrics::{Metric, DEFAULT_TOP_K};
use crate::model::LeagueConfig;
use crate::rankers::{Method, DEFAULT_TELEPORT_ALPHA};
use crate::synth::PerturbMode;

pub use real_eval::{run_real_eval, write_real_eval_csv, RealEvalOptions, RealEvalResult, RealEvalRow, DEFAULT_LAST_K_SEASONS};
pub use sweep::{run_perturbation_study, run_sweep, SweepCell, SweepResult};

/// A parameter that a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    Delta,
    HomeAdv,
    FracPlayed,
    ShapeAlpha,
    ShapeBeta,
    Eta,
    Mode,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::Delta => "delta",
            Axis::HomeAdv => "home_adv",
            Axis::FracPlayed => "frac_played",
            Axis::ShapeAlpha => "shape_alpha",
            Axis::ShapeBeta => "shape_beta",
            Axis::Eta => "eta",
            Axis::Mode => "mode",
        }
    }

    /// Axes applied after a season has been generated.
    pub fn is_perturbation(&self) -> bool {
        matches!(self, Axis::Eta | Axis::Mode)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "delta" => Axis::Delta,
            "home_adv" | "h" => Axis::HomeAdv,
            "frac_played" | "p" => Axis::FracPlayed,
            "shape_alpha" => Axis::ShapeAlpha,
            "shape_beta" => Axis::ShapeBeta,
            "eta" => Axis::Eta,
            "mode" => Axis::Mode,
            other => return Err(Error::Spec(format!("unknown axis `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Num(f64),
    Mode(PerturbMode),
}

impl AxisValue {
    fn seed_bits(&self) -> u64 {
        match self {
            AxisValue::Num(x) => x.to_bits(),
            AxisValue::Mode(PerturbMode::Remove) => 1,
            AxisValue::Mode(PerturbMode::Revert) => 2,
        }
    }
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Num(x) => write!(f, "{x}"),
            AxisValue::Mode(m) => f.write_str(m.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub axis: Axis,
    pub values: Vec<AxisValue>,
}

impl GridAxis {
    pub fn numeric(axis: Axis, values: &[f64]) -> Self {
        Self { axis, values: values.iter().map(|&v| AxisValue::Num(v)).collect() }
    }

    pub fn modes(values: &[PerturbMode]) -> Self {
        Self { axis: Axis::Mode, values: values.iter().map(|&m| AxisValue::Mode(m)).collect() }
    }
}

/// A Monte Carlo experiment: every grid point is simulated `realizations`
/// times, scored by each algorithm and evaluated by each metric against the
/// fitness ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub grid: Vec<GridAxis>,
    /// Parameters not on the grid. Its `seed` field is ignored.
    pub fixed: LeagueConfig,
    pub eta: Option<f64>,
    pub mode: Option<PerturbMode>,
    pub realizations: usize,
    pub metrics: Vec<Metric>,
    pub algorithms: Vec<Method>,
    pub top_k: usize,
    pub teleport_alpha: f64,
    pub base_seed: u64,
    /// Worker threads; `None` uses the global rayon pool. Never affects output.
    pub threads: Option<usize>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            grid: Vec::new(),
            fixed: LeagueConfig::default(),
            eta: None,
            mode: None,
            realizations: 100,
            metrics: vec![Metric::Kendall],
            algorithms: Method::ALL.to_vec(),
            top_k: DEFAULT_TOP_K,
            teleport_alpha: DEFAULT_TELEPORT_ALPHA,
            base_seed: 0,
            threads: None,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixedFile {
    n_teams: Option<usize>,
    delta: Option<f64>,
    home_adv: Option<f64>,
    frac_played: Option<f64>,
    shape_alpha: Option<f64>,
    shape_beta: Option<f64>,
    eta: Option<f64>,
    mode: Option<PerturbMode>,
}

impl FixedFile {
    fn has(&self, axis: Axis) -> bool {
        match axis {
            Axis::Delta => self.delta.is_some(),
            Axis::HomeAdv => self.home_adv.is_some(),
            Axis::FracPlayed => self.frac_played.is_some(),
            Axis::ShapeAlpha => self.shape_alpha.is_some(),
            Axis::ShapeBeta => self.shape_beta.is_some(),
            Axis::Eta => self.eta.is_some(),
            Axis::Mode => self.mode.is_some(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    axis: String,
    values: Vec<AxisValue>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    realizations: Option<usize>,
    base_seed: Option<u64>,
    metrics: Option<Vec<String>>,
    algorithms: Option<Vec<String>>,
    top_k: Option<usize>,
    teleport_alpha: Option<f64>,
    threads: Option<usize>,
    #[serde(default)]
    fixed: FixedFile,
    #[serde(default)]
    grid: Vec<GridFile>,
}

impl SweepSpec {
    /// Parses a TOML sweep description.
    ///
    /// ```toml
    /// realizations = 100
    /// metrics = ["kendall", "auc", "avg_top_rank"]
    /// algorithms = ["win_ratio", "pagerank", "bipagerank"]
    ///
    /// [fixed]
    /// n_teams = 30
    /// home_adv = 0.0
    ///
    /// [[grid]]
    /// axis = "delta"
    /// values = [0.05, 0.1, 0.2]
    ///
    /// [[grid]]
    /// axis = "frac_played"
    /// values = [0.1, 0.5, 1.0]
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec = Self::parse_toml(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Parses without the final [`SweepSpec::validate`], so callers can apply
    /// overrides first. Unknown keys and fixed/grid overlap are still errors.
    pub fn parse_toml(text: &str) -> Result<Self> {
        let file: SpecFile = toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        let defaults = SweepSpec::default();
        let fixed = &file.fixed;
        let base = LeagueConfig::default();
        let mut spec = SweepSpec {
            grid: Vec::new(),
            fixed: LeagueConfig {
                n_teams: fixed.n_teams.unwrap_or(base.n_teams),
                delta: fixed.delta.unwrap_or(base.delta),
                home_adv: fixed.home_adv.unwrap_or(base.home_adv),
                frac_played: fixed.frac_played.unwrap_or(base.frac_played),
                shape_alpha: fixed.shape_alpha.unwrap_or(base.shape_alpha),
                shape_beta: fixed.shape_beta.unwrap_or(base.shape_beta),
                seed: 0,
            },
            eta: fixed.eta,
            mode: fixed.mode,
            realizations: file.realizations.unwrap_or(defaults.realizations),
            metrics: match &file.metrics {
                Some(m) => m.iter().map(|s| s.parse()).collect::<Result<_>>()?,
                None => defaults.metrics,
            },
            algorithms: match &file.algorithms {
                Some(a) => a.iter().map(|s| s.parse()).collect::<Result<_>>()?,
                None => defaults.algorithms,
            },
            top_k: file.top_k.unwrap_or(defaults.top_k),
            teleport_alpha: file.teleport_alpha.unwrap_or(defaults.teleport_alpha),
            base_seed: file.base_seed.unwrap_or(defaults.base_seed),
            threads: file.threads,
        };
        for g in &file.grid {
            let axis: Axis = g.axis.parse()?;
            if fixed.has(axis) {
                return Err(Error::Spec(format!("`{axis}` is both fixed and a grid axis")));
            }
            spec.grid.push(GridAxis { axis, values: g.values.clone() });
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::Spec("realizations must be at least 1".into()));
        }
        if self.metrics.is_empty() || self.algorithms.is_empty() {
            return Err(Error::Spec("need at least one metric and one algorithm".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Spec("threads must be at least 1".into()));
        }
        let mut seen = Vec::new();
        for g in &self.grid {
            if g.values.is_empty() {
                return Err(Error::Spec(format!("axis `{}` has no values", g.axis)));
            }
            if seen.contains(&g.axis) {
                return Err(Error::Spec(format!("axis `{}` listed twice", g.axis)));
            }
            seen.push(g.axis);
            for v in &g.values {
                match (g.axis, v) {
                    (Axis::Mode, AxisValue::Mode(_)) => {}
                    (Axis::Mode, _) => return Err(Error::Spec("mode values must be `remove` or `revert`".into())),
                    (_, AxisValue::Mode(_)) => return Err(Error::Spec(format!("axis `{}` needs numeric values", g.axis))),
                    (Axis::Eta, AxisValue::Num(x)) if !(0.0..=1.0).contains(x) => {
                        return Err(Error::Spec(format!("eta {x} outside [0, 1]")))
                    }
                    _ => {}
                }
            }
        }
        if (self.grid.iter().any(|g| g.axis == Axis::Eta) || self.eta.is_some_and(|e| e > 0.0)) && !self.has_mode() {
            return Err(Error::Spec("perturbation needs a mode (`remove` or `revert`)".into()));
        }
        if self.top_k == 0 || self.top_k >= self.fixed.n_teams {
            return Err(Error::Spec(format!("top_k must lie in 1..{}", self.fixed.n_teams)));
        }
        // every generation point must be a valid league
        for point in self.points() {
            self.league_at(&point, 0).validate()?;
        }
        Ok(())
    }

    fn has_mode(&self) -> bool {
        self.mode.is_some() || self.grid.iter().any(|g| g.axis == Axis::Mode)
    }

    /// Every grid point, lexicographic in axis order.
    pub fn points(&self) -> Vec<Vec<AxisValue>> {
        cartesian(&self.grid.iter().map(|g| g.values.as_slice()).collect::<Vec<_>>())
    }

    pub(crate) fn league_at(&self, point: &[AxisValue], seed: u64) -> LeagueConfig {
        let mut cfg = LeagueConfig { seed, ..self.fixed };
        for (g, v) in self.grid.iter().zip(point) {
            if let AxisValue::Num(x) = *v {
                match g.axis {
                    Axis::Delta => cfg.delta = x,
                    Axis::HomeAdv => cfg.home_adv = x,
                    Axis::FracPlayed => cfg.frac_played = x,
                    Axis::ShapeAlpha => cfg.shape_alpha = x,
                    Axis::ShapeBeta => cfg.shape_beta = x,
                    Axis::Eta | Axis::Mode => {}
                }
            }
        }
        cfg
    }
}

fn cartesian(axes: &[&[AxisValue]]) -> Vec<Vec<AxisValue>> {
    axes.iter().fold(vec![Vec::new()], |acc, values| {
        acc.into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DELTA_FRAC: &str = r#"
realizations = 20
metrics = ["kendall", "auc", "avg_top_rank"]

[fixed]
n_teams = 30
home_adv = 0.0

[[grid]]
axis = "delta"
values = [0.05, 0.5]

[[grid]]
axis = "frac_played"
values = [0.1, 1.0]
"#;

    #[test]
    fn parses_spec() {
        let spec = SweepSpec::from_toml_str(DELTA_FRAC).unwrap();
        assert_eq!(spec.realizations, 20);
        assert_eq!(spec.metrics, Metric::ALL);
        assert_eq!(spec.algorithms, Method::ALL);
        assert_eq!(spec.grid.len(), 2);
        assert_eq!(spec.points().len(), 4);
        assert_eq!(spec.points()[1], vec![AxisValue::Num(0.05), AxisValue::Num(1.0)]);
        let cfg = spec.league_at(&spec.points()[2], 9);
        assert_eq!((cfg.delta, cfg.frac_played, cfg.seed), (0.5, 0.1, 9));
    }

    #[test]
    fn mode_axis() {
        let text = r#"
[fixed]
delta = 0.25
[[grid]]
axis = "eta"
values = [0.0, 1.0]
[[grid]]
axis = "mode"
values = ["remove", "revert"]
"#;
        let spec = SweepSpec::from_toml_str(text).unwrap();
        assert_eq!(spec.grid[1].values[1], AxisValue::Mode(PerturbMode::Revert));
    }

    #[test]
    fn rejects_overlap_and_bad_values() {
        let overlap = "[fixed]\ndelta = 0.1\n[[grid]]\naxis = \"delta\"\nvalues = [0.2]\n";
        assert!(matches!(SweepSpec::from_toml_str(overlap), Err(Error::Spec(_))));
        let empty = "[[grid]]\naxis = \"delta\"\nvalues = []\n";
        assert!(SweepSpec::from_toml_str(empty).is_err());
        let unknown = "[[grid]]\naxis = \"gamma\"\nvalues = [1.0]\n";
        assert!(SweepSpec::from_toml_str(unknown).is_err());
        let no_mode = "[[grid]]\naxis = \"eta\"\nvalues = [0.5]\n";
        assert!(SweepSpec::from_toml_str(no_mode).is_err());
        let bad_league = "[[grid]]\naxis = \"delta\"\nvalues = [-1.0]\n";
        assert!(SweepSpec::from_toml_str(bad_league).is_err());
        assert!(SweepSpec::from_toml_str("realizations = 0\n").is_err());
        assert!(SweepSpec::from_toml_str("bogus = 1\n").is_err());
        assert!(SweepSpec::from_toml_str("metrics = [\"ndcg\"]\n").is_err());
    }
}
