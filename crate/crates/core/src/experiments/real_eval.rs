use std::io::Write;

use serde::Serialize;

use super::sweep::mean_sem;
use crate::dataio::{truncate_season, SeasonData};
use crate::error::{Error, Result};
use crate::metrics::{kendall_tau_values, tied_pairs};
use crate::rankers::{score, Method, DEFAULT_TELEPORT_ALPHA};

pub const DEFAULT_LAST_K_SEASONS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct RealEvalOptions {
    pub p_axis: Vec<f64>,
    pub algorithms: Vec<Method>,
    pub last_k_seasons: usize,
    pub teleport_alpha: f64,
}

impl Default for RealEvalOptions {
    fn default() -> Self {
        Self {
            p_axis: (1..=20).map(|i| i as f64 / 20.0).collect(),
            algorithms: vec![Method::WinRatio, Method::BiPageRank],
            last_k_seasons: DEFAULT_LAST_K_SEASONS,
            teleport_alpha: DEFAULT_TELEPORT_ALPHA,
        }
    }
}

/// Season-averaged Kendall tau of one algorithm at one truncation level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealEvalRow {
    pub p: f64,
    pub algorithm: Method,
    pub tau_mean: f64,
    pub tau_sem: f64,
    /// Seasons that contributed (skipped cells excluded).
    pub n_seasons: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealEvalResult {
    pub league: String,
    /// Ordered by P, then algorithm in option order.
    pub rows: Vec<RealEvalRow>,
    pub seasons_used: Vec<String>,
    /// (season, P) cells with no games after truncation.
    pub skipped_cells: usize,
    /// Largest P where BiPageRank beats WinRatio; `None` if it never does or
    /// either algorithm is missing.
    pub p_star: Option<f64>,
    /// Seasons whose final win ratios contain ties; tied pairs count 0 in tau.
    pub tied_seasons: Vec<String>,
}

impl RealEvalResult {
    pub fn tau(&self, p: f64, algorithm: Method) -> Option<f64> {
        self.rows.iter().find(|r| r.p == p && r.algorithm == algorithm).map(|r| r.tau_mean)
    }
}

/// Ranks each of the last `last_k_seasons` seasons from its first
/// `floor(P * N_S)` games and scores the ranking against the season's final
/// win ratios.
pub fn run_real_eval(league: &str, seasons: &[SeasonData], options: &RealEvalOptions) -> Result<RealEvalResult> {
    if seasons.is_empty() {
        return Err(Error::invalid("seasons", "need at least one season"));
    }
    if options.last_k_seasons == 0 {
        return Err(Error::invalid("last_k_seasons", "must be at least 1"));
    }
    if options.algorithms.is_empty() || options.p_axis.is_empty() {
        return Err(Error::invalid("options", "need at least one algorithm and one P value"));
    }
    if let Some(&p) = options.p_axis.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
        return Err(Error::invalid("p_axis", format!("P must lie in (0, 1], got {p}")));
    }
    let start = seasons.len().saturating_sub(options.last_k_seasons);
    let used = &seasons[start..];

    let mut taus = vec![vec![Vec::new(); options.algorithms.len()]; options.p_axis.len()];
    let mut skipped = 0;
    let mut tied_seasons = Vec::new();
    for season in used {
        let truth = season.results.win_ratios();
        if tied_pairs(&truth) > 0 {
            tied_seasons.push(season.season.clone());
        }
        for (pi, &p) in options.p_axis.iter().enumerate() {
            let partial = truncate_season(season, p)?;
            if partial.is_empty() {
                skipped += 1;
                continue;
            }
            for (ai, &method) in options.algorithms.iter().enumerate() {
                let scores = score(&partial, method, options.teleport_alpha)?;
                taus[pi][ai].push(kendall_tau_values(&scores.scores, &truth)?);
            }
        }
    }

    let mut rows = Vec::new();
    for (pi, &p) in options.p_axis.iter().enumerate() {
        for (ai, &algorithm) in options.algorithms.iter().enumerate() {
            let vals = &taus[pi][ai];
            let (tau_mean, tau_sem) = mean_sem(vals);
            rows.push(RealEvalRow { p, algorithm, tau_mean, tau_sem, n_seasons: vals.len() });
        }
    }
    let mut result = RealEvalResult {
        league: league.to_string(),
        rows,
        seasons_used: used.iter().map(|s| s.season.clone()).collect(),
        skipped_cells: skipped,
        p_star: None,
        tied_seasons,
    };
    result.p_star = options
        .p_axis
        .iter()
        .copied()
        .filter(|&p| match (result.tau(p, Method::BiPageRank), result.tau(p, Method::WinRatio)) {
            (Some(b), Some(w)) => b - w > 0.0,
            _ => false,
        })
        .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.max(p))));
    Ok(result)
}

/// Header `league,P,algorithm,tau_mean,n_seasons`.
pub fn write_real_eval_csv<W: Write>(results: &[RealEvalResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["league", "P", "algorithm", "tau_mean", "n_seasons"])?;
    for r in results {
        for row in &r.rows {
            w.write_record([
                r.league.clone(),
                row.p.to_string(),
                row.algorithm.as_str().to_string(),
                row.tau_mean.to_string(),
                row.n_seasons.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<real-eval output>", e))?;
    Ok(())
}
