//! Maximum-likelihood calibration of the outcome model on observed results.
//!
//! The simplified model replaces each team's fitness by its season win ratio
//! and fits only the home advantage `H` and sensitivity `delta`. The full
//! model fits every fitness value as well. AIC picks between the two.

mod full;
pub mod nelder_mead;
mod shape;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{check_delta, logistic, FitnessVector};
use crate::synth::ResultSet;

pub use full::fit_full;
pub use shape::{fit_shape, ShapeFit};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before taking logs.
pub const PROB_CLAMP: f64 = 1e-15;
/// Home advantage estimates are capped at `±HOME_CAP`.
pub const HOME_CAP: f64 = 2.0;
pub const DELTA_MIN: f64 = 1e-3;
pub const DELTA_MAX: f64 = 1e3;

pub const GAUGE_NOTE: &str = "likelihood depends on (f_i - f_j + H)/delta only; gauge fixed by mean(f) = 1/2 \
     and delta chosen so the fitted fitness range equals the win-ratio range";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Simplified,
    Full,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Simplified => "simplified",
            ModelKind::Full => "full",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationFit {
    pub delta_hat: f64,
    pub home_hat: f64,
    pub log_likelihood: f64,
    pub n_params: usize,
    pub aic: f64,
    pub model: ModelKind,
    /// Fitted fitness per team (full model only).
    pub fitness_hat: Option<Vec<f64>>,
    /// Whether every multi-start seed converged to the same optimum.
    pub seeds_agree: bool,
    pub warnings: Vec<String>,
    dataset: u64,
}

impl CalibrationFit {
    fn new(
        model: ModelKind,
        delta_hat: f64,
        home_hat: f64,
        log_likelihood: f64,
        n_params: usize,
        dataset: u64,
    ) -> Self {
        Self {
            delta_hat,
            home_hat,
            log_likelihood,
            n_params,
            aic: aic(n_params, log_likelihood),
            model,
            fitness_hat: None,
            seeds_agree: true,
            warnings: Vec::new(),
            dataset,
        }
    }
}

impl Serialize for CalibrationFit {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Record<'a> {
            delta_hat: f64,
            home_hat: f64,
            log_likelihood: f64,
            n_params: usize,
            aic: f64,
            model: ModelKind,
            gauge_note: &'a str,
        }
        Record {
            delta_hat: self.delta_hat,
            home_hat: self.home_hat,
            log_likelihood: self.log_likelihood,
            n_params: self.n_params,
            aic: self.aic,
            model: self.model,
            gauge_note: GAUGE_NOTE,
        }
        .serialize(serializer)
    }
}

pub fn aic(n_params: usize, log_likelihood: f64) -> f64 {
    2.0 * n_params as f64 - 2.0 * log_likelihood
}

/// Log-likelihood of the observed outcomes given fitness, `H` and `delta`.
pub fn log_likelihood(results: &ResultSet, fitness: &FitnessVector, home_adv: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if fitness.len() != results.n_teams() {
        return Err(Error::invalid("fitness", "length does not match the result set"));
    }
    Ok(results
        .games()
        .iter()
        .map(|g| {
            let p = logistic((fitness.get(g.home) - fitness.get(g.away) + home_adv) / delta);
            outcome_log_prob(p, g.home_won)
        })
        .sum())
}

#[inline]
fn outcome_log_prob(p_home: f64, home_won: bool) -> f64 {
    let p = p_home.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if home_won {
        p.ln()
    } else {
        (1.0 - p).ln()
    }
}

fn fingerprint(results: &ResultSet) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    feed(results.n_teams() as u64);
    for g in results.games() {
        feed(g.home as u64);
        feed(g.away as u64);
        feed(g.home_won as u64);
    }
    h
}

fn check_fit_input(results: &ResultSet) -> Result<()> {
    if results.len() < 2 {
        return Err(Error::Degenerate(format!("need at least 2 games, got {}", results.len())));
    }
    if let Some(team) = results.games_played().iter().position(|&g| g == 0) {
        return Err(Error::Degenerate(format!("team {team} has no games")));
    }
    Ok(())
}

/// `(win-ratio difference, home won)` per game.
struct RatioData {
    games: Vec<(f64, bool)>,
}

impl RatioData {
    fn new(results: &ResultSet, fitness: &[f64]) -> Self {
        Self { games: results.games().iter().map(|g| (fitness[g.home] - fitness[g.away], g.home_won)).collect() }
    }

    fn log_likelihood(&self, home_adv: f64, delta: f64) -> f64 {
        self.games.iter().map(|&(dw, won)| outcome_log_prob(logistic((dw + home_adv) / delta), won)).sum()
    }
}

fn decode(theta: &[f64]) -> (f64, f64) {
    let home = theta[0].clamp(-HOME_CAP, HOME_CAP);
    let delta = theta[1].clamp(DELTA_MIN.ln(), DELTA_MAX.ln()).exp();
    (home, delta)
}

const SEED_DELTAS: [f64; 11] = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0];
const SEED_HOMES: [f64; 5] = [-0.5, -0.25, 0.0, 0.25, 0.5];
const N_STARTS: usize = 3;
const AGREEMENT_TOL: f64 = 1e-4;

/// Fits `(H, delta)` with fitness fixed to the season win ratios.
///
/// A coarse grid over `delta in [0.01, 2]`, `H in [-0.5, 0.5]` supplies the
/// three best starting points; each is refined by Nelder-Mead over
/// `(H, ln delta)` and the best optimum is kept.
pub fn fit_simplified(results: &ResultSet) -> Result<CalibrationFit> {
    check_fit_input(results)?;
    fit_home_and_delta(results, &results.win_ratios())
}

/// `(H, delta)` fit with fitness held fixed at `fitness`.
pub(crate) fn fit_home_and_delta(results: &ResultSet, fitness: &[f64]) -> Result<CalibrationFit> {
    let data = RatioData::new(results, fitness);
    let objective = |theta: &[f64]| {
        let (h, d) = decode(theta);
        -data.log_likelihood(h, d)
    };

    let mut grid: Vec<(f64, [f64; 2])> = SEED_DELTAS
        .iter()
        .flat_map(|&d| SEED_HOMES.iter().map(move |&h| [h, d.ln()]))
        .map(|theta| (objective(&theta), theta))
        .collect();
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));

    let opts = nelder_mead::Options::default();
    let optima: Vec<nelder_mead::Minimum> = grid[..N_STARTS]
        .iter()
        .map(|(_, start)| nelder_mead::minimize(objective, start, &[0.05, 0.3], &opts))
        .collect();
    let best = optima
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one start");
    let (home_hat, delta_hat) = decode(&best.x);
    let seeds_agree = optima.iter().all(|m| {
        let (h, d) = decode(&m.x);
        (h - home_hat).abs() <= AGREEMENT_TOL && (d - delta_hat).abs() <= AGREEMENT_TOL
    });

    let mut fit = CalibrationFit::new(
        ModelKind::Simplified,
        delta_hat,
        home_hat,
        data.log_likelihood(home_hat, delta_hat),
        2,
        fingerprint(results),
    );
    fit.seeds_agree = seeds_agree;
    let home_wins = results.games().iter().filter(|g| g.home_won).count();
    if home_wins == 0 || home_wins == results.len() {
        fit.warnings.push(format!("every game won by the {} team; H is capped at ±{HOME_CAP}", if home_wins == 0 { "away" } else { "home" }));
    } else if home_hat.abs() >= HOME_CAP {
        fit.warnings.push(format!("home advantage estimate hit the ±{HOME_CAP} cap"));
    }
    if delta_hat <= DELTA_MIN * (1.0 + 1e-9) || delta_hat >= DELTA_MAX * (1.0 - 1e-9) {
        fit.warnings.push(format!("delta estimate hit the [{DELTA_MIN}, {DELTA_MAX}] bound"));
    }
    if !seeds_agree {
        fit.warnings.push("multi-start optima disagree beyond 1e-4".to_string());
    }
    for w in &fit.warnings {
        log::warn!("simplified fit: {w}");
    }
    Ok(fit)
}

/// Picks the fit with the lower AIC; equal AIC goes to the simplified model.
pub fn select_model(simplified: &CalibrationFit, full: &CalibrationFit) -> Result<ModelKind> {
    if simplified.dataset != full.dataset {
        return Err(Error::MismatchedDatasets);
    }
    if full.aic < simplified.aic {
        Ok(full.model)
    } else {
        Ok(simplified.model)
    }
}

pub const DEFAULT_BIN_WIDTH: f64 = 0.1;
pub const DEFAULT_MIN_GAMES_PER_BIN: usize = 4;

/// One point of the empirical home-win curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    /// Centre of the win-ratio-difference bin.
    pub center: f64,
    pub rate: f64,
    /// Standard error of the mean home-win indicator.
    pub sem: f64,
    pub count: usize,
}

pub fn empirical_curve(results: &ResultSet, min_games_per_bin: usize) -> Result<Vec<CurvePoint>> {
    empirical_curve_with_width(results, min_games_per_bin, DEFAULT_BIN_WIDTH)
}

/// Home-win frequency binned by end-of-season win-ratio difference
/// `w_home - w_away`.
///
/// Bins are symmetric about zero: `|dw|` is binned and the sign restored, and
/// games with `dw == 0` exactly get their own bin centred at 0. Mirroring
/// the dataset therefore maps `rate(c)` to `1 - rate(-c)` exactly.
pub fn empirical_curve_with_width(
    results: &ResultSet,
    min_games_per_bin: usize,
    bin_width: f64,
) -> Result<Vec<CurvePoint>> {
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(Error::invalid("bin_width", format!("must lie in (0, 1], got {bin_width}")));
    }
    let w = results.win_ratios();
    let max_bin = ((1.0 / bin_width).ceil() as i64 - 1).max(0);
    // key: 0 for the zero bin, ±(k+1) otherwise
    let mut bins: std::collections::BTreeMap<i64, (usize, usize)> = Default::default();
    for g in results.games() {
        let dw = w[g.home] - w[g.away];
        let key = if dw == 0.0 {
            0
        } else {
            let k = ((dw.abs() / bin_width).floor() as i64).min(max_bin);
            (k + 1) * dw.signum() as i64
        };
        let entry = bins.entry(key).or_insert((0, 0));
        entry.0 += g.home_won as usize;
        entry.1 += 1;
    }
    Ok(bins
        .into_iter()
        .filter(|(_, (_, count))| *count >= min_games_per_bin.max(1))
        .map(|(key, (wins, count))| {
            let center = if key == 0 { 0.0 } else { key.signum() as f64 * (key.abs() as f64 - 0.5) * bin_width };
            let rate = wins as f64 / count as f64;
            let sem = if count > 1 { (rate * (1.0 - rate) / (count - 1) as f64).sqrt() } else { 0.0 };
            CurvePoint { center, rate, sem, count }
        })
        .collect())
}
