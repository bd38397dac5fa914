//! Random simple schedules with a near-regular degree sequence.
//!
//! A realization of the degree sequence is built with Havel-Hakimi and then
//! randomized by double-edge swaps, which keep every degree fixed and never
//! introduce a repeated pairing.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

const MAX_ATTEMPTS: usize = 16;
const SWAPS_PER_EDGE: usize = 10;
const SWAP_ATTEMPTS_PER_EDGE: usize = 100;

/// Number of games for `n_teams` playing a fraction `frac_played` of all pairings.
pub fn total_games(n_teams: usize, frac_played: f64) -> usize {
    let pairs = (n_teams * n_teams.saturating_sub(1) / 2) as f64;
    (frac_played * pairs).round() as usize
}

/// Erdős–Gallai test for a degree sequence sorted in non-increasing order.
pub fn is_graphical(sorted_desc: &[usize]) -> bool {
    let n = sorted_desc.len();
    let total: usize = sorted_desc.iter().sum();
    if !total.is_multiple_of(2) || sorted_desc.first().is_some_and(|&d| d >= n.max(1)) {
        return false;
    }
    let mut lhs = 0usize;
    for k in 1..=n {
        lhs += sorted_desc[k - 1];
        let rhs = k * (k - 1) + sorted_desc[k..].iter().map(|&d| d.min(k)).sum::<usize>();
        if lhs > rhs {
            return false;
        }
    }
    true
}

/// Draws a random set of `(home, away)` pairings.
///
/// The total is `round(P * N(N-1)/2)`; each team plays either
/// `floor(2G/N)` or one more game, which teams get the extra game is random.
pub fn make_schedule<R: Rng + ?Sized>(
    n_teams: usize,
    frac_played: f64,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    if n_teams < 2 {
        return Err(Error::invalid("n_teams", format!("need at least 2 teams, got {n_teams}")));
    }
    if !(frac_played > 0.0 && frac_played <= 1.0) {
        return Err(Error::invalid("frac_played", format!("must lie in (0, 1], got {frac_played}")));
    }
    let games = total_games(n_teams, frac_played);
    let stubs = 2 * games;
    let base = stubs / n_teams;
    let extra = stubs - base * n_teams;

    let mut last_err = String::new();
    for _ in 0..MAX_ATTEMPTS {
        let mut teams: Vec<usize> = (0..n_teams).collect();
        teams.shuffle(rng);
        let mut degrees = vec![base; n_teams];
        for &t in &teams[..extra] {
            degrees[t] += 1;
        }
        let mut sorted = degrees.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        if !is_graphical(&sorted) {
            last_err = format!("degree sequence {sorted:?} is not graphical");
            continue;
        }
        match havel_hakimi(&degrees) {
            Some(mut edges) => {
                randomize(&mut edges, n_teams, rng);
                edges.shuffle(rng);
                return Ok(edges
                    .into_iter()
                    .map(|(a, b)| if rng.gen_bool(0.5) { (a, b) } else { (b, a) })
                    .collect());
            }
            None => last_err = "havel-hakimi construction failed".to_string(),
        }
    }
    Err(Error::Schedule(last_err))
}

fn havel_hakimi(degrees: &[usize]) -> Option<Vec<(usize, usize)>> {
    let mut remaining: Vec<(usize, usize)> = degrees.iter().copied().enumerate().map(|(i, d)| (d, i)).collect();
    let mut edges = Vec::with_capacity(degrees.iter().sum::<usize>() / 2);
    loop {
        remaining.retain(|&(d, _)| d > 0);
        if remaining.is_empty() {
            return Some(edges);
        }
        remaining.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let (d, v) = remaining[0];
        if d >= remaining.len() {
            return None;
        }
        remaining[0].0 = 0;
        for slot in remaining.iter_mut().skip(1).take(d) {
            slot.0 -= 1;
            edges.push((v, slot.1));
        }
    }
}

fn randomize<R: Rng + ?Sized>(edges: &mut [(usize, usize)], n: usize, rng: &mut R) {
    let m = edges.len();
    if m < 2 {
        return;
    }
    let mut adj = vec![false; n * n];
    for &(a, b) in edges.iter() {
        adj[a * n + b] = true;
        adj[b * n + a] = true;
    }
    let target = SWAPS_PER_EDGE * m;
    let budget = SWAP_ATTEMPTS_PER_EDGE * m;
    let mut done = 0;
    for _ in 0..budget {
        if done >= target {
            break;
        }
        let i = rng.gen_range(0..m);
        let j = rng.gen_range(0..m);
        if i == j {
            continue;
        }
        let (a, b) = edges[i];
        let (mut c, mut d) = edges[j];
        if rng.gen_bool(0.5) {
            std::mem::swap(&mut c, &mut d);
        }
        // (a,b),(c,d) -> (a,d),(c,b)
        if a == d || c == b || adj[a * n + d] || adj[c * n + b] {
            continue;
        }
        adj[a * n + b] = false;
        adj[b * n + a] = false;
        adj[c * n + d] = false;
        adj[d * n + c] = false;
        adj[a * n + d] = true;
        adj[d * n + a] = true;
        adj[c * n + b] = true;
        adj[b * n + c] = true;
        edges[i] = (a, d);
        edges[j] = (c, b);
        done += 1;
    }
}
