//! Friend and interest clustering coefficients, bow-tie counts, and the limiting average friend coefficient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{
    neighbor_birth, open_unit, sample_offset, spatial_coefficient, ArcKind, Digraph, Direction,
};
use crate::marking::Seed;
use crate::model::{rho, ModelParams};
use crate::quad::{integrate_with_breaks, Tolerance};
use crate::stats::{batch_ci, Interval, MIN_BATCH_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    AverageFriend,
    GlobalFriend,
    AverageInterest,
    GlobalInterest,
}

impl Statistic {
    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::AverageFriend => "average_friend",
            Statistic::GlobalFriend => "global_friend",
            Statistic::AverageInterest => "average_interest",
            Statistic::GlobalInterest => "global_interest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringReport {
    pub statistic: Statistic,
    pub value: f64,
    /// Denominator motif total (open wedges or open bow-ties, or the size of the averaging set).
    pub open: u64,
    /// Numerator motif total (closed triangles or closed bow-ties).
    pub closed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ModelParams>,
}

fn sorted_intersection(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

fn friend_lists(out: &[Vec<usize>]) -> Vec<Vec<usize>> {
    out.iter()
        .enumerate()
        .map(|(x, l)| l.iter().copied().filter(|&y| out[y].binary_search(&x).is_ok()).collect())
        .collect()
}

fn check_vertex(g: &Digraph, v: usize) -> Result<()> {
    if v >= g.vertex_count() {
        return Err(Error::UnknownVertex(v));
    }
    Ok(())
}

/// Closed friend pairs around `x`, and the number of friends.
fn friend_tally(friends: &[Vec<usize>], x: usize) -> (u64, u64) {
    let f = &friends[x];
    let twice: usize = f.iter().map(|&y| sorted_intersection(f, &friends[y])).sum();
    ((twice / 2) as u64, f.len() as u64)
}

fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

pub fn local_friend_cc(g: &Digraph, v: usize) -> Result<f64> {
    check_vertex(g, v)?;
    let friends = friend_lists(&g.out_neighbor_sets());
    let (closed, f) = friend_tally(&friends, v);
    Ok(if f < 2 { 0.0 } else { closed as f64 / choose2(f) as f64 })
}

struct FriendTotals {
    local_sum: f64,
    v2: u64,
    closed_pairs: u64,
    wedges: u64,
}

fn friend_totals(g: &Digraph) -> FriendTotals {
    let friends = friend_lists(&g.out_neighbor_sets());
    let per: Vec<(u64, u64)> = (0..g.vertex_count())
        .into_par_iter()
        .map(|x| friend_tally(&friends, x))
        .collect();
    let mut t = FriendTotals { local_sum: 0.0, v2: 0, closed_pairs: 0, wedges: 0 };
    for (closed, f) in per {
        if f >= 2 {
            t.v2 += 1;
            t.local_sum += closed as f64 / choose2(f) as f64;
        }
        t.closed_pairs += closed;
        t.wedges += choose2(f);
    }
    t
}

/// Mean local friend coefficient over vertices with at least two friends.
pub fn average_friend_cc(g: &Digraph) -> f64 {
    let t = friend_totals(g);
    if t.v2 == 0 {
        0.0
    } else {
        t.local_sum / t.v2 as f64
    }
}

/// Three times the friend triangles over the friend wedges.
///
/// Every triangle closes three wedges, so this is the fraction of closed wedges.
pub fn global_friend_cc(g: &Digraph) -> f64 {
    let t = friend_totals(g);
    if t.wedges == 0 {
        0.0
    } else {
        t.closed_pairs as f64 / t.wedges as f64
    }
}

/// `2(C-1)/(2n-C-1)` for `n = outdeg(x)` and `C` shared out-neighbours, or 0 outside the interest set.
fn interest_value(n: u64, c: u64) -> f64 {
    if n < 2 || c == 0 {
        return 0.0;
    }
    2.0 * (c - 1) as f64 / (2 * n - c - 1) as f64
}

pub fn local_interest_cc(g: &Digraph, x: usize, y: usize) -> Result<f64> {
    check_vertex(g, x)?;
    check_vertex(g, y)?;
    if x == y {
        return Err(Error::Domain(format!("interest coefficient needs distinct vertices, got {x} twice")));
    }
    let out = g.out_neighbor_sets();
    let c = sorted_intersection(&out[x], &out[y]) as u64;
    Ok(interest_value(out[x].len() as u64, c))
}

/// Per-vertex interest tallies for the vertex playing the role of `x`.
#[derive(Debug, Clone, Default)]
struct InterestTally {
    /// Sum of local coefficients over partners `y` in the interest set, added in ascending `y`.
    local_sum: f64,
    pairs: u64,
    /// Ordered quadruples `(x, w, u, v)` with `w→u, w→v` and `x→u, x→v`.
    closed: u64,
    /// Ordered quadruples `(x, w, u, v)` with `x→u, x→v, w→v`.
    open: u64,
}

fn interest_tally(out: &[Vec<usize>], inn: &[Vec<usize>], keep: &[bool], x: usize, shared: &mut Vec<u64>) -> InterestTally {
    let mut t = InterestTally::default();
    if !keep[x] {
        return t;
    }
    let nx: Vec<usize> = out[x].iter().copied().filter(|&u| keep[u]).collect();
    let n = nx.len() as u64;
    if n == 0 {
        return t;
    }
    let mut touched = Vec::new();
    let mut in_sum = 0u64;
    for &u in &nx {
        for &w in &inn[u] {
            if w == x || !keep[w] {
                continue;
            }
            in_sum += 1;
            if shared[w] == 0 {
                touched.push(w);
            }
            shared[w] += 1;
        }
    }
    // ordered pairs (u,v) in out(x) with u→v
    let mut e = 0u64;
    for &u in &nx {
        e += out[u].iter().filter(|&&v| keep[v] && out[x].binary_search(&v).is_ok()).count() as u64;
    }
    touched.sort_unstable();
    for &w in &touched {
        let c = shared[w];
        t.closed += c * (c - 1);
        if n >= 2 {
            t.local_sum += interest_value(n, c);
            t.pairs += 1;
        }
        shared[w] = 0;
    }
    t.open = (n - 1) * in_sum - e;
    t
}

struct InterestTotals {
    local_sum: f64,
    pairs: u64,
    closed: u64,
    open: u64,
}

fn interest_totals(g: &Digraph, birth_floor: f64) -> InterestTotals {
    let out = g.out_neighbor_sets();
    let inn = g.in_neighbor_sets();
    let keep: Vec<bool> = g.vertices().iter().map(|v| v.birth > birth_floor).collect();
    let n = g.vertex_count();
    let per: Vec<InterestTally> = (0..n)
        .into_par_iter()
        .map_init(|| vec![0u64; n], |shared, x| interest_tally(&out, &inn, &keep, x, shared))
        .collect();
    let mut t = InterestTotals { local_sum: 0.0, pairs: 0, closed: 0, open: 0 };
    // row sums are added in ascending x
    for p in per {
        t.pairs += p.pairs;
        t.local_sum += p.local_sum;
        t.closed += p.closed;
        t.open += p.open;
    }
    t
}

/// Mean local interest coefficient over ordered pairs `(x, y)` with `outdeg(x) ≥ 2` and a shared out-neighbour.
pub fn average_interest_cc(g: &Digraph) -> f64 {
    let t = interest_totals(g, f64::NEG_INFINITY);
    if t.pairs == 0 {
        0.0
    } else {
        t.local_sum / t.pairs as f64
    }
}

/// Twice the closed bow-ties over the quadruples where `w` hits at least one of `x`'s pair.
pub fn global_interest_cc(g: &Digraph) -> f64 {
    let t = interest_totals(g, f64::NEG_INFINITY);
    // "or" count = 2·open − closed
    let denom = 2 * t.open - t.closed;
    if denom == 0 {
        0.0
    } else {
        2.0 * t.closed as f64 / denom as f64
    }
}

/// Open and closed bow-ties among vertices born after `birth_floor`, as ordered quadruples of distinct vertices.
pub fn count_bowties(g: &Digraph, birth_floor: f64) -> Result<(u64, u64)> {
    if !(0.0..1.0).contains(&birth_floor) {
        return Err(Error::Domain(format!("birth floor {birth_floor} outside [0,1)")));
    }
    let t = interest_totals(g, birth_floor);
    Ok((t.open, t.closed))
}

/// All four graph-level statistics with their motif totals.
pub fn clustering_summary(g: &Digraph, params: Option<ModelParams>) -> Vec<ClusteringReport> {
    let f = friend_totals(g);
    let i = interest_totals(g, f64::NEG_INFINITY);
    let ratio = |a: f64, b: u64| if b == 0 { 0.0 } else { a / b as f64 };
    let denom = 2 * i.open - i.closed;
    vec![
        ClusteringReport { statistic: Statistic::AverageFriend, value: ratio(f.local_sum, f.v2), open: f.v2, closed: 0, params },
        ClusteringReport { statistic: Statistic::GlobalFriend, value: ratio(f.closed_pairs as f64, f.wedges), open: f.wedges, closed: f.closed_pairs, params },
        ClusteringReport { statistic: Statistic::AverageInterest, value: ratio(i.local_sum, i.pairs), open: i.pairs, closed: 0, params },
        ClusteringReport { statistic: Statistic::GlobalInterest, value: ratio(2.0 * i.closed as f64, denom), open: i.open, closed: i.closed, params },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub interval: Interval,
    /// `∫₀¹ (1 - e^{-λ} - λe^{-λ}) du`.
    pub normalizer: f64,
    pub acceptance_rate: f64,
}

/// Older and younger parts of the friend intensity of a root born at `u`.
fn friend_masses(params: &ModelParams, u: f64) -> (f64, f64) {
    let c = params.degree_constant();
    let older = c / (1.0 + params.big_gamma() - params.gamma());
    (older, crate::degrees::mu_rec_unchecked(params, u))
}

fn two_or_more(lam: f64) -> f64 {
    if lam < 1e-4 {
        // series avoids cancellation
        return lam * lam / 2.0 - lam * lam * lam / 3.0;
    }
    1.0 - (-lam).exp() * (1.0 + lam)
}

struct Friend {
    location: Vec<f64>,
    birth: f64,
}

fn sample_friend<R: Rng + ?Sized>(params: &ModelParams, u: f64, rng: &mut R) -> Friend {
    let (older, younger) = friend_masses(params, u);
    let pick_older = rng.random::<f64>() * (older + younger) < older;
    let p = open_unit(rng);
    let s = if pick_older {
        neighbor_birth(params, u, Direction::In, ArcKind::Reciprocal, p)
    } else {
        neighbor_birth(params, u, Direction::Out, ArcKind::Reciprocal, p)
    };
    let a = spatial_coefficient(params, u, s);
    Friend { location: sample_offset(a, params.delta(), params.dim(), rng), birth: s }
}

fn double_arc_probability(params: &ModelParams, x: &Friend, y: &Friend) -> f64 {
    let (lo, hi) = if x.birth < y.birth { (x.birth, y.birth) } else { (y.birth, x.birth) };
    let sq: f64 = x.location.iter().zip(&y.location).map(|(a, b)| (a - b) * (a - b)).sum();
    let dist_d = sq.sqrt().powi(params.dim() as i32);
    let z = params.age_scaled(lo, hi, dist_d);
    rho(z, params.delta()) * (hi / lo).powf(-params.big_gamma())
}

/// Monte-Carlo value of the limiting average friend coefficient.
///
/// Root births are drawn from the law with density proportional to `P(Poisson(λ(u)) ≥ 2)`; each sample contributes
/// the probability that two independent friends of the root are friends of each other. With fewer than ten samples
/// the interval is the trivial `[0, 1]`.
pub fn limit_average_friend_cc(params: &ModelParams, samples: usize, seed: Seed) -> Result<LimitEstimate> {
    if samples == 0 {
        return Err(Error::InsufficientData("at least one sample is needed".into()));
    }
    let lam = |u: f64| {
        let (a, b) = friend_masses(params, u);
        a + b
    };
    let breaks: Vec<f64> = (1..40).map(|i| (-(i as f64)).exp()).collect();
    let normalizer = integrate_with_breaks(|u| two_or_more(lam(u)), 0.0, 1.0, &breaks, Tolerance::rel(1e-10))?;
    let sup_lambda = if params.big_gamma() > params.gamma() {
        lam(0.0)
    } else {
        f64::INFINITY
    };
    let envelope = if sup_lambda.is_finite() { two_or_more(sup_lambda) } else { 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let mut values = Vec::with_capacity(samples);
    let mut proposals = 0u64;
    while values.len() < samples {
        proposals += 1;
        let u = open_unit(&mut rng);
        if rng.random::<f64>() * envelope >= two_or_more(lam(u)) {
            continue;
        }
        let x = sample_friend(params, u, &mut rng);
        let y = sample_friend(params, u, &mut rng);
        values.push(double_arc_probability(params, &x, &y));
    }
    let interval = if samples >= MIN_BATCH_SAMPLES {
        batch_ci(&values)?
    } else {
        let mean = values.iter().sum::<f64>() / samples as f64;
        Interval { mean, ci_low: 0.0, ci_high: 1.0, n: samples }
    };
    Ok(LimitEstimate { interval, normalizer, acceptance_rate: samples as f64 / proposals as f64 })
}
