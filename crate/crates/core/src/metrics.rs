//! Agreement between computed scores and a ground-truth ordering.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::FitnessVector;
use crate::rankers::{to_ranking, ScoreVector, TIE_TOLERANCE};

pub const DEFAULT_TOP_K: usize = 5;

/// A tie-free ordering of all teams, best first, plus the size of the top set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    ordering: Vec<usize>,
    position: Vec<usize>,
    top_k: usize,
}

impl GroundTruth {
    pub fn new(ordering: Vec<usize>, top_k: usize) -> Result<Self> {
        let n = ordering.len();
        let mut position = vec![usize::MAX; n];
        for (pos, &team) in ordering.iter().enumerate() {
            if team >= n || position[team] != usize::MAX {
                return Err(Error::invalid("ordering", "must be a permutation of all teams"));
            }
            position[team] = pos;
        }
        if top_k == 0 || top_k > n {
            return Err(Error::invalid("top_k", format!("must lie in 1..={n}, got {top_k}")));
        }
        Ok(Self { ordering, position, top_k })
    }

    /// Orders teams by decreasing value; equal values keep index order.
    pub fn from_values(values: &[f64], top_k: usize) -> Result<Self> {
        let mut ordering: Vec<usize> = (0..values.len()).collect();
        ordering.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        Self::new(ordering, top_k)
    }

    pub fn from_fitness(fitness: &FitnessVector, top_k: usize) -> Result<Self> {
        Self::from_values(fitness.values(), top_k)
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn top_k(&self) -> usize {
        self.top_k
    }

    pub fn len(&self) -> usize {
        self.ordering.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordering.is_empty()
    }

    /// 0-based position of `team` (0 = best).
    pub fn position(&self, team: usize) -> usize {
        self.position[team]
    }

    pub fn top(&self) -> &[usize] {
        &self.ordering[..self.top_k]
    }

    pub fn ordinary(&self) -> &[usize] {
        &self.ordering[self.top_k..]
    }

    fn check_len(&self, computed: &ScoreVector) -> Result<()> {
        if computed.len() != self.len() {
            return Err(Error::invalid(
                "computed",
                format!("{} scores for {} ground-truth teams", computed.len(), self.len()),
            ));
        }
        Ok(())
    }
}

/// Number of team pairs whose values are tied within [`TIE_TOLERANCE`].
pub fn tied_pairs(values: &[f64]) -> usize {
    let mut count = 0;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            if (values[i] - values[j]).abs() <= TIE_TOLERANCE {
                count += 1;
            }
        }
    }
    count
}

/// Kendall's tau over all `N(N-1)/2` pairs. Pairs tied in the computed scores
/// count as neither concordant nor discordant.
pub fn kendall_tau(computed: &ScoreVector, truth: &GroundTruth) -> Result<f64> {
    truth.check_len(computed)?;
    let n = computed.len();
    if n < 2 {
        return Err(Error::invalid("computed", "need at least two teams"));
    }
    let s = &computed.scores;
    let mut balance: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            let diff = s[i] - s[j];
            if diff.abs() <= TIE_TOLERANCE {
                continue;
            }
            // lower position is better
            let truth_says_i = truth.position(i) < truth.position(j);
            if (diff > 0.0) == truth_says_i {
                balance += 1;
            } else {
                balance -= 1;
            }
        }
    }
    Ok(balance as f64 / (n * (n - 1) / 2) as f64)
}

/// Kendall's tau against ground-truth values that may contain ties. Pairs
/// tied on either side contribute 0.
pub fn kendall_tau_values(computed: &[f64], truth: &[f64]) -> Result<f64> {
    if computed.len() != truth.len() {
        return Err(Error::invalid(
            "computed",
            format!("{} scores for {} ground-truth teams", computed.len(), truth.len()),
        ));
    }
    let n = computed.len();
    if n < 2 {
        return Err(Error::invalid("computed", "need at least two teams"));
    }
    let mut balance: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            let (dc, dt) = (computed[i] - computed[j], truth[i] - truth[j]);
            if dc.abs() <= TIE_TOLERANCE || dt.abs() <= TIE_TOLERANCE {
                continue;
            }
            balance += if (dc > 0.0) == (dt > 0.0) { 1 } else { -1 };
        }
    }
    Ok(balance as f64 / (n * (n - 1) / 2) as f64)
}

/// Mean computed rank of the top ground-truth teams (1 = best, lower is better).
pub fn avg_top_rank(computed: &ScoreVector, truth: &GroundTruth) -> Result<f64> {
    truth.check_len(computed)?;
    let ranks = to_ranking(&computed.scores);
    Ok(truth.top().iter().map(|&t| ranks[t]).sum::<f64>() / truth.top_k() as f64)
}

/// Exact AUC over every (top, ordinary) pair: a top team scoring higher counts
/// 1, a tie counts 1/2.
pub fn auc_top(computed: &ScoreVector, truth: &GroundTruth) -> Result<f64> {
    truth.check_len(computed)?;
    if truth.top_k() >= truth.len() {
        return Err(Error::invalid("top_k", "AUC needs at least one team outside the top set"));
    }
    let s = &computed.scores;
    let mut credit = 0.0;
    for &t in truth.top() {
        for &o in truth.ordinary() {
            credit += pair_credit(s[t], s[o]);
        }
    }
    Ok(credit / (truth.top().len() * truth.ordinary().len()) as f64)
}

/// Monte Carlo AUC from `samples` random (top, ordinary) pairs.
pub fn auc_top_sampled<R: Rng + ?Sized>(
    computed: &ScoreVector,
    truth: &GroundTruth,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    truth.check_len(computed)?;
    if truth.top_k() >= truth.len() {
        return Err(Error::invalid("top_k", "AUC needs at least one team outside the top set"));
    }
    if samples == 0 {
        return Err(Error::invalid("samples", "need at least one sample"));
    }
    let (top, ordinary) = (truth.top(), truth.ordinary());
    let s = &computed.scores;
    let mut credit = 0.0;
    for _ in 0..samples {
        let t = top[rng.gen_range(0..top.len())];
        let o = ordinary[rng.gen_range(0..ordinary.len())];
        credit += pair_credit(s[t], s[o]);
    }
    Ok(credit / samples as f64)
}

fn pair_credit(top: f64, ordinary: f64) -> f64 {
    if (top - ordinary).abs() <= TIE_TOLERANCE {
        0.5
    } else if top > ordinary {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Metric {
    #[serde(rename = "kendall")]
    Kendall,
    #[serde(rename = "auc")]
    Auc,
    #[serde(rename = "avg_top_rank")]
    AvgTopRank,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Kendall, Metric::Auc, Metric::AvgTopRank];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Kendall => "kendall",
            Metric::Auc => "auc",
            Metric::AvgTopRank => "avg_top_rank",
        }
    }

    pub fn evaluate(&self, computed: &ScoreVector, truth: &GroundTruth) -> Result<f64> {
        match self {
            Metric::Kendall => kendall_tau(computed, truth),
            Metric::Auc => auc_top(computed, truth),
            Metric::AvgTopRank => avg_top_rank(computed, truth),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kendall" | "tau" => Ok(Metric::Kendall),
            "auc" => Ok(Metric::Auc),
            "avg_top_rank" | "avg-top-rank" => Ok(Metric::AvgTopRank),
            other => Err(Error::invalid("metric", format!("unknown metric `{other}`"))),
        }
    }
}
