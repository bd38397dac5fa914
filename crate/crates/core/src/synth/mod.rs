//! Synthetic league generation.

mod schedule;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_delta, logistic, FitnessVector, LeagueConfig};

pub use schedule::{is_graphical, make_schedule, total_games};

/// One played game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameRecord {
    pub home: usize,
    pub away: usize,
    pub home_won: bool,
    /// Chronological position within the season.
    pub order: u64,
}

impl GameRecord {
    pub fn winner(&self) -> usize {
        if self.home_won {
            self.home
        } else {
            self.away
        }
    }

    pub fn loser(&self) -> usize {
        if self.home_won {
            self.away
        } else {
            self.home
        }
    }
}

/// Chronologically ordered games between `n_teams` teams.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultSet {
    n_teams: usize,
    games: Vec<GameRecord>,
}

impl ResultSet {
    pub fn new(n_teams: usize, games: Vec<GameRecord>) -> Result<Self> {
        if n_teams == 0 {
            return Err(Error::invalid("n_teams", "a result set needs at least one team"));
        }
        for g in &games {
            if g.home >= n_teams || g.away >= n_teams {
                return Err(Error::invalid(
                    "games",
                    format!("game {} references a team outside 0..{n_teams}", g.order),
                ));
            }
            if g.home == g.away {
                return Err(Error::invalid("games", format!("game {} has team {} playing itself", g.order, g.home)));
            }
        }
        Ok(Self { n_teams, games })
    }

    pub fn empty(n_teams: usize) -> Self {
        Self { n_teams, games: Vec::new() }
    }

    pub fn n_teams(&self) -> usize {
        self.n_teams
    }

    pub fn games(&self) -> &[GameRecord] {
        &self.games
    }

    pub fn len(&self) -> usize {
        self.games.len()
    }

    pub fn is_empty(&self) -> bool {
        self.games.is_empty()
    }

    pub fn wins(&self) -> Vec<u64> {
        let mut wins = vec![0; self.n_teams];
        for g in &self.games {
            wins[g.winner()] += 1;
        }
        wins
    }

    pub fn games_played(&self) -> Vec<u64> {
        let mut played = vec![0; self.n_teams];
        for g in &self.games {
            played[g.home] += 1;
            played[g.away] += 1;
        }
        played
    }

    /// Wins over games played; teams without games get 0.
    pub fn win_ratios(&self) -> Vec<f64> {
        self.wins()
            .into_iter()
            .zip(self.games_played())
            .map(|(w, g)| if g == 0 { 0.0 } else { w as f64 / g as f64 })
            .collect()
    }

    /// The first `count` games in chronological order.
    pub fn prefix(&self, count: usize) -> ResultSet {
        let count = count.min(self.games.len());
        ResultSet { n_teams: self.n_teams, games: self.games[..count].to_vec() }
    }

    /// Home and away swapped in every game, with the outcome flipped so the
    /// same team still wins.
    pub fn mirrored(&self) -> ResultSet {
        let games = self
            .games
            .iter()
            .map(|g| GameRecord { home: g.away, away: g.home, home_won: !g.home_won, order: g.order })
            .collect();
        ResultSet { n_teams: self.n_teams, games }
    }

    /// Concatenates several result sets over the same roster, renumbering
    /// the chronological order.
    pub fn concat<'a>(sets: impl IntoIterator<Item = &'a ResultSet>) -> Result<ResultSet> {
        let mut n_teams = None;
        let mut games = Vec::new();
        for set in sets {
            match n_teams {
                None => n_teams = Some(set.n_teams),
                Some(n) if n != set.n_teams => {
                    return Err(Error::invalid("n_teams", "cannot concatenate result sets with different rosters"))
                }
                Some(_) => {}
            }
            for g in &set.games {
                games.push(GameRecord { order: games.len() as u64, ..*g });
            }
        }
        let n_teams = n_teams.ok_or_else(|| Error::invalid("sets", "nothing to concatenate"))?;
        Ok(ResultSet { n_teams, games })
    }
}

/// Power-law fitness `beta * ((i - 0.5) / N)^alpha + gamma` for `i = 1..=N`,
/// with `gamma` chosen so the mean fitness is exactly 1/2.
pub fn make_fitness(n_teams: usize, shape_alpha: f64, shape_beta: f64) -> Result<FitnessVector> {
    if n_teams < 2 {
        return Err(Error::invalid("n_teams", format!("need at least 2 teams, got {n_teams}")));
    }
    if !(shape_alpha > 0.0 && shape_alpha.is_finite()) {
        return Err(Error::invalid("shape_alpha", format!("must be positive, got {shape_alpha}")));
    }
    if !(shape_beta > 0.0 && shape_beta <= 1.0) {
        return Err(Error::invalid("shape_beta", format!("must lie in (0, 1], got {shape_beta}")));
    }
    let n = n_teams as f64;
    let raw: Vec<f64> = (1..=n_teams).map(|i| shape_beta * ((i as f64 - 0.5) / n).powf(shape_alpha)).collect();
    let gamma = 0.5 - raw.iter().sum::<f64>() / n;
    Ok(FitnessVector::new(raw.into_iter().map(|x| x + gamma).collect()))
}

/// Samples one season: fitness, schedule, then one Bernoulli outcome per game.
/// Deterministic in `config.seed`.
pub fn simulate_season(config: &LeagueConfig) -> Result<(FitnessVector, ResultSet)> {
    config.validate()?;
    let fitness = make_fitness(config.n_teams, config.shape_alpha, config.shape_beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let results = play_schedule(&fitness, config, &mut rng)?;
    Ok((fitness, results))
}

/// Schedules and plays one season for a given fitness vector.
pub fn play_schedule<R: Rng + ?Sized>(
    fitness: &FitnessVector,
    config: &LeagueConfig,
    rng: &mut R,
) -> Result<ResultSet> {
    check_delta(config.delta)?;
    if fitness.len() != config.n_teams {
        return Err(Error::invalid("fitness", "length does not match n_teams"));
    }
    let schedule = make_schedule(config.n_teams, config.frac_played, rng)?;
    let games = schedule
        .into_iter()
        .enumerate()
        .map(|(order, (home, away))| {
            let p = logistic((fitness.get(home) - fitness.get(away) + config.home_adv) / config.delta);
            GameRecord { home, away, home_won: rng.gen::<f64>() < p, order: order as u64 }
        })
        .collect();
    ResultSet::new(config.n_teams, games)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbMode {
    Remove,
    Revert,
}

impl PerturbMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PerturbMode::Remove => "remove",
            PerturbMode::Revert => "revert",
        }
    }
}

impl std::str::FromStr for PerturbMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "remove" => Ok(PerturbMode::Remove),
            "revert" => Ok(PerturbMode::Revert),
            other => Err(Error::invalid("mode", format!("expected `remove` or `revert`, got `{other}`"))),
        }
    }
}

/// Indices (in chronological order) of games won by the lower-fitness team.
pub fn unexpected_games(results: &ResultSet, fitness: &FitnessVector) -> Vec<usize> {
    results
        .games()
        .iter()
        .enumerate()
        .filter(|(_, g)| fitness.get(g.winner()) < fitness.get(g.loser()))
        .map(|(i, _)| i)
        .collect()
}

/// Number of upsets treated for a fraction `eta` of `unexpected` upsets.
pub fn treated_count(eta: f64, unexpected: usize) -> usize {
    ((eta * unexpected as f64) + 0.5).floor() as usize
}

/// Removes or reverts a random fraction `eta` of the upsets.
///
/// The upsets are put in a random priority order and the first
/// `round(eta * U)` of them are treated, so for a fixed RNG state the treated
/// sets are nested as `eta` grows.
pub fn perturb_unexpected<R: Rng + ?Sized>(
    results: &ResultSet,
    fitness: &FitnessVector,
    eta: f64,
    mode: PerturbMode,
    rng: &mut R,
) -> Result<ResultSet> {
    if fitness.len() != results.n_teams() {
        return Err(Error::invalid("fitness", "length does not match the result set"));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid("eta", format!("must lie in [0, 1], got {eta}")));
    }
    let mut upsets = unexpected_games(results, fitness);
    upsets.shuffle(rng);
    let k = treated_count(eta, upsets.len());
    let mut treat = vec![false; results.len()];
    for &i in &upsets[..k] {
        treat[i] = true;
    }
    let games = results
        .games()
        .iter()
        .zip(&treat)
        .filter_map(|(g, &t)| match (t, mode) {
            (false, _) => Some(*g),
            (true, PerturbMode::Remove) => None,
            (true, PerturbMode::Revert) => Some(GameRecord { home_won: !g.home_won, ..*g }),
        })
        .collect();
    Ok(ResultSet { n_teams: results.n_teams(), games })
}
