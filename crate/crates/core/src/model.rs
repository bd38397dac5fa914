//! Home-win probability model and the league parameters shared by the
//! generator, the rankers and the calibration code.
//!
//! The home team `i` beats the away team `j` with probability
//!
//! ```text
//! P(i, j) = 1 / (1 + exp(-(f_i - f_j + H) / delta))
//! ```
//!
//! where `f` is team fitness, `H` the home advantage and `delta` the fitness
//! sensitivity. Large `delta` makes every game a coin flip.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of a synthetic league.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeagueConfig {
    pub n_teams: usize,
    /// Fitness sensitivity.
    pub delta: f64,
    /// Additive fitness bonus of the home team.
    pub home_adv: f64,
    /// Fraction of all `N(N-1)/2` pairings that are played.
    pub frac_played: f64,
    /// Exponent of the power-law fitness assignment.
    pub shape_alpha: f64,
    /// Best-minus-worst fitness range of the power-law assignment.
    pub shape_beta: f64,
    pub seed: u64,
}

impl Default for LeagueConfig {
    fn default() -> Self {
        Self {
            n_teams: 30,
            delta: 0.25,
            home_adv: 0.0,
            frac_played: 1.0,
            shape_alpha: 1.0,
            shape_beta: 1.0,
            seed: 0,
        }
    }
}

impl LeagueConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_teams < 2 {
            return Err(Error::invalid("n_teams", format!("need at least 2 teams, got {}", self.n_teams)));
        }
        check_delta(self.delta)?;
        if !(self.home_adv >= 0.0 && self.home_adv.is_finite()) {
            return Err(Error::invalid("home_adv", format!("must be finite and >= 0, got {}", self.home_adv)));
        }
        if !(self.frac_played > 0.0 && self.frac_played <= 1.0) {
            return Err(Error::invalid("frac_played", format!("must lie in (0, 1], got {}", self.frac_played)));
        }
        if !(self.shape_alpha > 0.0 && self.shape_alpha.is_finite()) {
            return Err(Error::invalid("shape_alpha", format!("must be positive, got {}", self.shape_alpha)));
        }
        if !(self.shape_beta > 0.0 && self.shape_beta <= 1.0) {
            return Err(Error::invalid("shape_beta", format!("must lie in (0, 1], got {}", self.shape_beta)));
        }
        Ok(())
    }
}

/// Per-team fitness, indexed from the weakest team (0) to the strongest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessVector {
    values: Vec<f64>,
}

impl FitnessVector {
    /// Wraps raw fitness values. No ordering or mean constraint is imposed
    /// here; generated fitness comes from [`crate::synth::make_fitness`].
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, team: usize) -> f64 {
        self.values[team]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && !delta.is_nan() {
        Ok(())
    } else {
        Err(Error::invalid("delta", format!("must be positive, got {delta}")))
    }
}

/// Logistic function evaluated without overflowing `exp` for any finite input.
#[inline]
pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Probability that the home team wins.
pub fn win_probability(f_home: f64, f_away: f64, home_adv: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(logistic((f_home - f_away + home_adv) / delta))
}

/// Bradley-Terry form `p_i / (p_i + p_j)` with `p_k = exp(f_k / delta)`.
///
/// Equal to [`win_probability`] with no home advantage; kept as an
/// independent cross-check. Propensities are shifted by the larger exponent
/// so the ratio never overflows.
pub fn bradley_terry_probability(f_home: f64, f_away: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let (a, b) = (f_home / delta, f_away / delta);
    let m = a.max(b);
    let (p_home, p_away) = ((a - m).exp(), (b - m).exp());
    Ok(p_home / (p_home + p_away))
}
