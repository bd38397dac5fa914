//! Team scores from a result set: win ratio, PageRank on the win/loss
//! network, and bi-directional PageRank.
//!
//! A game won by `i` against `j` is a link `j -> i`; prestige flows from the
//! loser to the winner.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::ResultSet;

/// Scores closer than this are tied.
pub const TIE_TOLERANCE: f64 = 1e-10;

pub const DEFAULT_TELEPORT_ALPHA: f64 = 0.15;

/// Weighted win/loss network. `wins(j, i)` is the number of wins of `i` over
/// `j`, i.e. the weight of the link `j -> i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WinLossNetwork {
    n_teams: usize,
    wins: Vec<u64>,
    links: Vec<(usize, usize, u64)>,
    out_strength: Vec<u64>,
    in_strength: Vec<u64>,
}

impl WinLossNetwork {
    /// Builds the network from a dense `n x n` weight matrix in row-major
    /// order, where entry `[j][i]` is the weight of `j -> i`.
    pub fn from_matrix(n_teams: usize, wins: Vec<u64>) -> Result<Self> {
        if wins.len() != n_teams * n_teams {
            return Err(Error::invalid("wins", "matrix size does not match n_teams"));
        }
        if (0..n_teams).any(|i| wins[i * n_teams + i] != 0) {
            return Err(Error::invalid("wins", "self-links are not allowed"));
        }
        let mut links = Vec::new();
        let mut out_strength = vec![0; n_teams];
        let mut in_strength = vec![0; n_teams];
        for from in 0..n_teams {
            for to in 0..n_teams {
                let w = wins[from * n_teams + to];
                if w > 0 {
                    links.push((from, to, w));
                    out_strength[from] += w;
                    in_strength[to] += w;
                }
            }
        }
        Ok(Self { n_teams, wins, links, out_strength, in_strength })
    }

    pub fn n_teams(&self) -> usize {
        self.n_teams
    }

    /// Weight of the link `from -> to`: wins of `to` over `from`.
    pub fn wins(&self, from: usize, to: usize) -> u64 {
        self.wins[from * self.n_teams + to]
    }

    /// Non-zero links as `(from, to, weight)`.
    pub fn links(&self) -> &[(usize, usize, u64)] {
        &self.links
    }

    /// Losses of each team.
    pub fn out_strength(&self) -> &[u64] {
        &self.out_strength
    }

    /// Wins of each team.
    pub fn in_strength(&self) -> &[u64] {
        &self.in_strength
    }

    pub fn total_weight(&self) -> u64 {
        self.out_strength.iter().sum()
    }

    /// Same teams with every link reversed (flow along losses).
    pub fn reversed(&self) -> WinLossNetwork {
        let n = self.n_teams;
        let mut wins = vec![0; n * n];
        for &(from, to, w) in &self.links {
            wins[to * n + from] = w;
        }
        WinLossNetwork::from_matrix(n, wins).expect("transpose of a valid network")
    }
}

pub fn build_network(results: &ResultSet) -> WinLossNetwork {
    let n = results.n_teams();
    let mut wins = vec![0; n * n];
    for g in results.games() {
        wins[g.loser() * n + g.winner()] += 1;
    }
    WinLossNetwork::from_matrix(n, wins).expect("result sets contain no self-games")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "win_ratio")]
    WinRatio,
    #[serde(rename = "pagerank")]
    PageRank,
    #[serde(rename = "bipagerank")]
    BiPageRank,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::WinRatio, Method::PageRank, Method::BiPageRank];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::WinRatio => "win_ratio",
            Method::PageRank => "pagerank",
            Method::BiPageRank => "bipagerank",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "win_ratio" | "winratio" => Ok(Method::WinRatio),
            "pagerank" | "page_rank" => Ok(Method::PageRank),
            "bipagerank" | "bi_pagerank" => Ok(Method::BiPageRank),
            _ => Err(Error::invalid("method", format!("unknown ranking method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub method: Method,
    pub scores: Vec<f64>,
}

impl ScoreVector {
    pub fn new(method: Method, scores: Vec<f64>) -> Self {
        Self { method, scores }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn ranking(&self) -> Vec<f64> {
        to_ranking(&self.scores)
    }
}

/// Wins over games played; teams that have not played score 0.
pub fn win_ratio(results: &ResultSet) -> ScoreVector {
    ScoreVector::new(Method::WinRatio, results.win_ratios())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankConfig {
    pub teleport_alpha: f64,
    /// Stop once the L1 change between sweeps drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        Self { teleport_alpha: DEFAULT_TELEPORT_ALPHA, tolerance: 1e-12, max_iterations: 10_000 }
    }
}

impl PageRankConfig {
    pub fn with_teleport(teleport_alpha: f64) -> Self {
        Self { teleport_alpha, ..Default::default() }
    }
}

pub fn pagerank(network: &WinLossNetwork, teleport_alpha: f64) -> Result<ScoreVector> {
    let scores = power_iteration(network, &PageRankConfig::with_teleport(teleport_alpha))?;
    Ok(ScoreVector::new(Method::PageRank, scores))
}

/// `P - Q` where `Q` is PageRank on the reversed network.
pub fn bipagerank(network: &WinLossNetwork, teleport_alpha: f64) -> Result<ScoreVector> {
    let (p, q) = bipagerank_components(network, teleport_alpha)?;
    let scores = p.iter().zip(&q).map(|(a, b)| a - b).collect();
    Ok(ScoreVector::new(Method::BiPageRank, scores))
}

/// The win-side and loss-side PageRank vectors behind [`bipagerank`].
pub fn bipagerank_components(network: &WinLossNetwork, teleport_alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let config = PageRankConfig::with_teleport(teleport_alpha);
    let p = power_iteration(network, &config)?;
    let q = power_iteration(&network.reversed(), &config)?;
    Ok((p, q))
}

/// Power iteration for
///
/// ```text
/// P_i = (1-a) sum_j P_j w_ji / s_j + a/N + (1-a)/N sum_{j: s_j = 0} P_j
/// ```
///
/// started from the uniform vector.
pub fn power_iteration(network: &WinLossNetwork, config: &PageRankConfig) -> Result<Vec<f64>> {
    let alpha = config.teleport_alpha;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("teleport_alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let n = network.n_teams();
    if n == 0 {
        return Err(Error::invalid("n_teams", "network has no teams"));
    }
    let nf = n as f64;
    let out = network.out_strength();
    let shares: Vec<(usize, usize, f64)> = network
        .links()
        .iter()
        .map(|&(from, to, w)| (from, to, w as f64 / out[from] as f64))
        .collect();
    let dangling: Vec<usize> = (0..n).filter(|&j| out[j] == 0).collect();

    let mut scores = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..config.max_iterations {
        let dangling_mass: f64 = dangling.iter().map(|&j| scores[j]).sum();
        next.fill(alpha / nf + (1.0 - alpha) * dangling_mass / nf);
        for &(from, to, share) in &shares {
            next[to] += (1.0 - alpha) * scores[from] * share;
        }
        residual = scores.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut scores, &mut next);
        if residual < config.tolerance {
            return Ok(scores);
        }
    }
    Err(Error::NotConverged { iterations: config.max_iterations, residual })
}

/// Scores a result set with the given method.
pub fn score(results: &ResultSet, method: Method, teleport_alpha: f64) -> Result<ScoreVector> {
    match method {
        Method::WinRatio => Ok(win_ratio(results)),
        Method::PageRank => pagerank(&build_network(results), teleport_alpha),
        Method::BiPageRank => bipagerank(&build_network(results), teleport_alpha),
    }
}

/// Fractional ranking, 1 = best. Runs of scores whose neighbours differ by at
/// most [`TIE_TOLERANCE`] share the mean of the positions they span.
pub fn to_ranking(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; scores.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && (scores[order[end - 1]] - scores[order[end]]).abs() <= TIE_TOLERANCE {
            end += 1;
        }
        // positions start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &team in &order[start..end] {
            ranks[team] = rank;
        }
        start = end;
    }
    ranks
}
