//! The acceptance suite: twelve reproducible checks of the model's laws and of the tooling.
//!
//! Each check draws all randomness from the suite seed, so a run is fully repeatable.

pub mod oracle;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{
    average_friend_cc, average_interest_cc, count_bowties, global_friend_cc, global_interest_cc,
    local_friend_cc, local_interest_cc,
};
use crate::degrees::{empirical_degree_hist, DegreeHistogram, OutComponent, PmfOracle};
use crate::error::{Error, Result};
use crate::generator::{
    generate_torus, grow_sequential, open_unit, palm_degree_samples, palm_implicit,
    sample_palm_neighborhood_with, ArcKind, Digraph, Direction,
};
use crate::marking::{replicate_seed, stream_seed, SampleMode, Seed};
use crate::model::{ModelParams, TorusSpec};
use crate::percolation::{estimate_survival, regime, two_connection_check, Regime};
use crate::stats::{
    batch_ci, fit_tail_exponent, gof_test, trend_test, two_proportion_test, two_sample_test, KMin,
    TrendPoint, TrendVerdict,
};
use oracle::Brute;

pub const DEFAULT_SUITE_SEED: Seed = Seed(0x5EED_DA2C);

pub const CRITERIA: [(u8, &str); 12] = [
    (1, "symmetric arcs when reciprocation is certain"),
    (2, "arcs per vertex approach the mean out-degree"),
    (3, "Palm out-degree law"),
    (4, "in-degree tail exponent"),
    (5, "out-degree tail exponent"),
    (6, "root neighbourhoods stabilize with volume"),
    (7, "clustering statistics match brute-force enumeration"),
    (8, "interest-clustering threshold at gamma = 1/2"),
    (9, "friend-clustering threshold at gamma - Gamma = 1/2"),
    (10, "out-percolation regimes"),
    (11, "two-hop connection bound"),
    (12, "growing and torus models share degree laws"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
    pub seed: u64,
    pub seconds: f64,
}

struct Check {
    passed: bool,
    detail: Vec<String>,
    metrics: BTreeMap<String, f64>,
}

impl Check {
    fn new() -> Self {
        Check { passed: true, detail: Vec::new(), metrics: BTreeMap::new() }
    }

    fn metric(&mut self, name: impl Into<String>, v: f64) {
        self.metrics.insert(name.into(), v);
    }

    fn require(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        self.detail.push(format!("{} {what}", if ok { "ok:" } else { "FAILED:" }));
        self.passed &= ok;
    }
}

pub fn criterion_seed(suite: Seed, id: u8) -> Seed {
    Seed(stream_seed(suite, id as u64))
}

/// Runs one criterion. Errors inside a check are reported as a failure with the error text.
pub fn run_criterion(id: u8, suite: Seed) -> Result<CriterionOutcome> {
    let Some(&(_, title)) = CRITERIA.iter().find(|c| c.0 == id) else {
        return Err(Error::Domain(format!("no criterion {id}; valid ids are 1 to {}", CRITERIA.len())));
    };
    let seed = criterion_seed(suite, id);
    let start = Instant::now();
    let res = match id {
        1 => symmetric_reciprocation(seed),
        2 => sparsity(seed),
        3 => outdegree_law(seed),
        4 => indegree_tail(seed),
        5 => outdegree_tail(seed),
        6 => stabilization(seed),
        7 => clustering_oracle(seed),
        8 => interest_threshold(seed),
        9 => friend_threshold(seed),
        10 => percolation_regimes(seed),
        11 => two_connection(seed),
        _ => law_equivalence(seed),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (passed, detail, metrics) = match res {
        Ok(c) => (c.passed, c.detail.join("; "), c.metrics),
        Err(e) => (false, format!("error: {e}"), BTreeMap::new()),
    };
    Ok(CriterionOutcome { id, title: title.to_string(), passed, detail, metrics, seed: seed.0, seconds })
}

pub fn run_suite(ids: &[u8], suite: Seed) -> Result<Vec<CriterionOutcome>> {
    ids.iter().map(|&id| run_criterion(id, suite)).collect()
}

fn symmetric_reciprocation(seed: Seed) -> Result<Check> {
    let p = ModelParams::finite(0.4, 0.35, 2.5, 0.0, 2)?;
    let spec = TorusSpec::with_volume(5000.0, 2)?;
    let g = generate_torus(&p, &spec, SampleMode::FixedCount(5000), seed)?;
    g.check_invariants()?;
    let total = g.arc_count();
    let reciprocated = g.arcs().filter(|(s, a)| g.has_arc(a.target, *s)).count();
    let mut c = Check::new();
    c.metric("arcs", total as f64);
    c.metric("reciprocated", reciprocated as f64);
    c.require(total > 0, format!("{total} arcs on 5000 vertices"));
    c.require(reciprocated == total, format!("{reciprocated} of {total} arcs reciprocated"));
    Ok(c)
}

fn sparsity(seed: Seed) -> Result<Check> {
    let p = ModelParams::finite(0.4, 0.4, 2.5, 1.0, 1)?;
    let target = crate::degrees::mean_outdegree(&p);
    let mut c = Check::new();
    c.metric("mean_outdegree", target);
    let mut errors = Vec::new();
    for (i, (t, reps)) in [(4000.0, 64u64), (16000.0, 16), (64000.0, 4)].into_iter().enumerate() {
        let spec = TorusSpec::with_volume(t, 1)?;
        let ratios: Vec<f64> = (0..reps)
            .map(|r| {
                let g = generate_torus(&p, &spec, SampleMode::PoissonCount, replicate_seed(seed, (i as u64) << 32 | r))?;
                Ok(g.arc_count() as f64 / g.vertex_count() as f64)
            })
            .collect::<Result<_>>()?;
        let mse = ratios.iter().map(|x| (x - target) * (x - target)).sum::<f64>() / reps as f64;
        let rel = mse.sqrt() / target;
        let mean = ratios.iter().sum::<f64>() / reps as f64;
        c.metric(format!("mean_ratio_t{t}"), mean);
        c.metric(format!("rel_rmse_t{t}"), rel);
        errors.push(rel);
    }
    c.require(errors[2] < 0.05, format!("relative RMSE {:.4} at t=64000 below 0.05", errors[2]));
    c.require(
        errors.windows(2).all(|w| w[1] < w[0]),
        format!("relative RMSE decreasing across volumes {errors:.4?}"),
    );
    Ok(c)
}

fn palm_out_samples(p: &ModelParams, n: usize, seed: Seed) -> Result<Vec<(u64, u64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    (0..n)
        .map(|_| {
            let u = open_unit(&mut rng);
            let nb = sample_palm_neighborhood_with(p, u, Direction::Out, &mut rng)?;
            Ok((nb.neighbors.len() as u64, nb.count(ArcKind::Reciprocal) as u64))
        })
        .collect()
}

fn outdegree_law(seed: Seed) -> Result<Check> {
    let mut c = Check::new();
    const N: usize = 100_000;
    // β = 0.25, δ = 2, d = 1 gives a degree constant of 1
    for (label, gg) in [("Gamma>gamma", 1.0), ("Gamma=gamma", 0.5), ("Gamma<gamma", 0.25)] {
        let p = ModelParams::finite(0.25, 0.5, 2.0, gg, 1)?;
        let samples = palm_out_samples(&p, N, replicate_seed(seed, (gg * 100.0) as u64))?;
        let hist = DegreeHistogram::from_samples(Direction::Out, samples.iter().map(|s| s.0));
        let table = PmfOracle::new(p, OutComponent::Total).table()?;
        let r = gof_test(&hist, &table)?;
        c.metric(format!("p_value_{label}"), r.p_value);
        c.require(r.p_value > 0.01, format!("{label}: chi-square p = {:.4} with {} bins", r.p_value, r.bins));
        if gg == 0.5 {
            for (k, want) in [(0u64, 0.5), (1, 0.25)] {
                let hits = samples.iter().filter(|s| s.1 == k).count() as f64;
                let got = hits / N as f64;
                let se = (want * (1.0 - want) / N as f64).sqrt();
                c.metric(format!("reciprocal_pmf_{k}"), got);
                c.require(
                    (got - want).abs() <= 3.0 * se,
                    format!("reciprocal pmf at {k}: {got:.5} vs {want} (3 s.e. = {:.5})", 3.0 * se),
                );
            }
        }
    }
    Ok(c)
}

fn palm_count_samples(p: &ModelParams, direction: Direction, n: usize, seed: Seed) -> Vec<f64> {
    palm_degree_samples(p, direction, n, seed).into_iter().map(|k| k as f64).collect()
}

fn indegree_tail(seed: Seed) -> Result<Check> {
    let mut c = Check::new();
    // Γ = 2γ-1 keeps the reciprocal in-degree part at the same mean as the forward offset
    for (i, (gamma, gg, beta)) in [(0.5, 0.0, 1.25), (0.75, 0.5, 1.875)].into_iter().enumerate() {
        let p = ModelParams::finite(beta, gamma, 2.0, gg, 1)?;
        let xs = palm_count_samples(&p, Direction::In, 1_000_000, replicate_seed(seed, i as u64));
        let f = fit_tail_exponent(&xs, KMin::Auto, true)?;
        let want = 1.0 + 1.0 / gamma;
        c.metric(format!("hill_gamma{gamma}"), f.estimate);
        c.require(
            (f.estimate - want).abs() <= 0.15,
            format!("gamma={gamma}: Hill {:.4} (k_min {}) vs {want:.4} +- 0.15", f.estimate, f.k_min),
        );
    }
    Ok(c)
}

fn outdegree_tail(seed: Seed) -> Result<Check> {
    let mut c = Check::new();
    let p = ModelParams::finite(0.25, 0.5, 2.0, 0.25, 1)?;
    let xs = palm_count_samples(&p, Direction::Out, 1_000_000, seed);
    let f = fit_tail_exponent(&xs, KMin::Auto, true)?;
    c.metric("hill", f.estimate);
    c.metric("k_min", f.k_min);
    c.require(
        (f.estimate - 5.0).abs() <= 0.3,
        format!("Hill {:.4} (k_min {}, stderr {:.4}) vs 5.0 +- 0.3", f.estimate, f.k_min, f.stderr),
    );
    Ok(c)
}

type Signature = (Vec<(u64, ArcKind)>, Vec<(u64, ArcKind)>);

fn root_signature(p: &ModelParams, volume: f64, seed: Seed) -> Result<Signature> {
    let spec = TorusSpec::with_volume(volume, p.dim())?;
    let (g, root) = palm_implicit(p, &spec, seed, None)?;
    let keys: Vec<u64> = g.vertices().iter().map(|v| v.key).collect();
    let (mut out, mut inn) = (Vec::new(), Vec::new());
    for w in 0..g.len() {
        if w == root {
            continue;
        }
        let (a, b) = g.arcs_between(root, w);
        if let Some(k) = a {
            out.push((keys[w], k));
        }
        if let Some(k) = b {
            inn.push((keys[w], k));
        }
    }
    out.sort();
    inn.sort();
    Ok((out, inn))
}

fn stabilization(seed: Seed) -> Result<Check> {
    let p = ModelParams::finite(0.4, 0.35, 2.5, 1.0, 2)?;
    let volumes = [1e3, 4e3, 1.6e4, 6.4e4];
    let sigs: Vec<Vec<Signature>> = (0..20u64)
        .into_par_iter()
        .map(|r| volumes.iter().map(|&t| root_signature(&p, t, replicate_seed(seed, r))).collect())
        .collect::<Result<_>>()?;
    let mut c = Check::new();
    for k in 0..volumes.len() - 1 {
        let same = sigs.iter().filter(|s| s[k] == s[k + 1]).count();
        c.metric(format!("equal_t{}_vs_t{}", volumes[k], volumes[k + 1]), same as f64);
    }
    let top = sigs.iter().filter(|s| s[2] == s[3]).count();
    c.require(top >= 19, format!("{top}/20 roots identical at t=16000 and t=64000"));
    Ok(c)
}

fn random_small_graph<R: Rng>(rng: &mut R) -> Result<Digraph> {
    let n = rng.random_range(3..=8);
    let density: f64 = rng.random_range(0.2..0.8);
    let mut arcs = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if s != t && rng.random::<f64>() < density {
                arcs.push((s, t));
            }
        }
    }
    Digraph::from_plain_arcs(n, &arcs)
}

/// Compares every clustering statistic on one graph with exhaustive enumeration; returns mismatches.
pub fn compare_with_oracle(g: &Digraph, floors: &[f64]) -> Result<Vec<String>> {
    let b = Brute::new(g);
    let n = g.vertex_count();
    let mut bad = Vec::new();
    let mut cmp = |what: String, fast: f64, slow: f64| {
        if fast.to_bits() != slow.to_bits() {
            bad.push(format!("{what}: {fast} vs {slow}"));
        }
    };
    for x in 0..n {
        cmp(format!("local_friend({x})"), local_friend_cc(g, x)?, b.local_friend(x));
        for y in 0..n {
            if x != y {
                cmp(format!("local_interest({x},{y})"), local_interest_cc(g, x, y)?, b.local_interest(x, y));
            }
        }
    }
    cmp("average_friend".into(), average_friend_cc(g), b.average_friend());
    cmp("global_friend".into(), global_friend_cc(g), b.global_friend());
    cmp("average_interest".into(), average_interest_cc(g), b.average_interest());
    cmp("global_interest".into(), global_interest_cc(g), b.global_interest());
    for &f in floors {
        let fast = count_bowties(g, f)?;
        let slow = b.bowties(f);
        if fast != slow {
            bad.push(format!("bowties(floor {f}): {fast:?} vs {slow:?}"));
        }
    }
    Ok(bad)
}

fn clustering_oracle(seed: Seed) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let mut c = Check::new();
    let mut mismatches = Vec::new();
    for i in 0..50 {
        let g = random_small_graph(&mut rng)?;
        let floors = [0.0, rng.random_range(0.0..0.4)];
        for m in compare_with_oracle(&g, &floors)? {
            mismatches.push(format!("graph {i}: {m}"));
        }
    }
    c.metric("mismatches", mismatches.len() as f64);
    c.require(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "all statistics equal on 50 graphs".to_string()
        } else {
            mismatches.join(", ")
        },
    );
    Ok(c)
}

const CLUSTER_SCALES: [f64; 3] = [2000.0, 8000.0, 32000.0];
const CLUSTER_REPS: u64 = 20;

/// Trend verdict of a graph statistic across the clustering volumes.
fn clustering_trend(
    p: &ModelParams,
    stat: fn(&Digraph) -> f64,
    seed: Seed,
    c: &mut Check,
    label: &str,
) -> Result<TrendVerdict> {
    let mut points = Vec::new();
    for (i, &t) in CLUSTER_SCALES.iter().enumerate() {
        let spec = TorusSpec::with_volume(t, p.dim())?;
        let values: Vec<f64> = (0..CLUSTER_REPS)
            .map(|r| {
                let g = generate_torus(p, &spec, SampleMode::PoissonCount, replicate_seed(seed, (i as u64) << 32 | r))?;
                Ok(stat(&g))
            })
            .collect::<Result<_>>()?;
        let ci = batch_ci(&values)?;
        c.metric(format!("{label}_mean_t{t}"), ci.mean);
        c.metric(format!("{label}_ci_low_t{t}"), ci.ci_low);
        c.metric(format!("{label}_ci_high_t{t}"), ci.ci_high);
        points.push(TrendPoint { t, interval: ci });
    }
    let r = trend_test(&points)?;
    let series: Vec<String> = points.iter().map(|q| format!("t={} {:.4}", q.t, q.interval.mean)).collect();
    c.detail.push(format!("{label}: {:?} ({}; means {})", r.verdict, r.evidence, series.join(", ")));
    Ok(r.verdict)
}

fn interest_threshold(seed: Seed) -> Result<Check> {
    let mut c = Check::new();
    let lo = ModelParams::finite(0.5, 0.3, 2.5, 0.5, 1)?;
    let hi = ModelParams::finite(0.5, 0.7, 2.5, 0.5, 1)?;
    let v = clustering_trend(&lo, global_interest_cc, replicate_seed(seed, 1), &mut c, "gamma0.3")?;
    c.require(v == TrendVerdict::Stable, format!("gamma=0.3 verdict {v:?}, want Stable"));
    let v = clustering_trend(&hi, global_interest_cc, replicate_seed(seed, 2), &mut c, "gamma0.7")?;
    c.require(v == TrendVerdict::Vanishing, format!("gamma=0.7 verdict {v:?}, want Vanishing"));
    Ok(c)
}

fn friend_threshold(seed: Seed) -> Result<Check> {
    let mut c = Check::new();
    let lo = ModelParams::finite(0.5, 0.6, 2.5, 0.3, 1)?;
    let hi = ModelParams::finite(0.5, 0.8, 2.5, 0.1, 1)?;
    let v = clustering_trend(&lo, global_friend_cc, replicate_seed(seed, 1), &mut c, "gamma0.6_Gamma0.3")?;
    c.require(v == TrendVerdict::Stable, format!("(0.6, 0.3) verdict {v:?}, want Stable"));
    let v = clustering_trend(&hi, global_friend_cc, replicate_seed(seed, 2), &mut c, "gamma0.8_Gamma0.1")?;
    c.require(v == TrendVerdict::Vanishing, format!("(0.8, 0.1) verdict {v:?}, want Vanishing"));
    Ok(c)
}

fn percolation_regimes(seed: Seed) -> Result<Check> {
    let mut c = Check::new();
    let (t, reps, k) = (20000.0, 200, 500);
    let sup = ModelParams::finite(0.05, 0.95, 1.5, 0.0, 1)?;
    let r = regime(sup.gamma(), sup.delta(), sup.big_gamma());
    c.require(r == Regime::NoSubcriticalPhase, format!("(0.95, 1.5, 0) classified {r:?}"));
    let curve = estimate_survival(&sup, &[0.05], t, reps, k, replicate_seed(seed, 1))?;
    let s = &curve.points[0];
    c.metric("supercritical_survival", s.interval.mean);
    c.metric("supercritical_ci_low", s.interval.ci_low);
    c.require(
        s.interval.ci_low > 0.0,
        format!("survival at beta=0.05 is {:.3} with 95% CI [{:.3}, {:.3}]", s.interval.mean, s.interval.ci_low, s.interval.ci_high),
    );
    let sub = ModelParams::finite(1.0, 0.35, 2.5, 1.0, 1)?;
    let r = regime(sub.gamma(), sub.delta(), sub.big_gamma());
    c.require(r == Regime::SubcriticalPhaseExists, format!("(0.35, 2.5, 1) classified {r:?}"));
    let curve = estimate_survival(&sub, &[0.01, 1.0], t, reps, k, replicate_seed(seed, 2))?;
    let (a, b) = (&curve.points[0], &curve.points[1]);
    let test = two_proportion_test(a.survivors, reps as u64, b.survivors, reps as u64)?;
    c.metric("subcritical_survival_beta0.01", a.interval.mean);
    c.metric("subcritical_survival_beta1", b.interval.mean);
    c.metric("two_proportion_p", test.p_less);
    c.require(
        test.p_less < 0.01,
        format!(
            "survival {:.3} at beta=0.01 below {:.3} at beta=1 with one-sided p = {:.2e}",
            a.interval.mean, b.interval.mean, test.p_less
        ),
    );
    Ok(c)
}

/// Random parameter sets inside the bound's hypotheses, with admissible vertex pairs.
pub fn two_connection_configs(n: usize, seed: Seed) -> Result<Vec<(ModelParams, f64, f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let dim = rng.random_range(1..=2);
        let delta = rng.random_range(1.5..4.0);
        let gamma = rng.random_range(0.1..0.9);
        let gg = rng.random_range(0.0..1.5);
        let beta = rng.random_range(0.2..2.0);
        let p = ModelParams::finite(beta, gamma, delta, gg, dim)?;
        if regime(gamma, p.delta(), gg) != Regime::SubcriticalPhaseExists
            || delta * (1.0 - gamma) + gamma - gg <= 0.0
        {
            continue;
        }
        let t_x: f64 = rng.random_range(0.05..0.95);
        let t_y: f64 = t_x * rng.random_range(0.05..0.95);
        let need = beta * t_y.powf(-gamma) * t_x.powf(gamma - 1.0);
        let dist = (need * rng.random_range(1.0..10.0)).powf(1.0 / dim as f64);
        out.push((p, t_x, t_y, dist));
    }
    Ok(out)
}

fn two_connection(seed: Seed) -> Result<Check> {
    let mut c = Check::new();
    let mut worst: f64 = 0.0;
    for (i, (p, t_x, t_y, dist)) in two_connection_configs(20, seed)?.into_iter().enumerate() {
        let r = two_connection_check(&p, t_x, t_y, dist, 0, seed)?;
        worst = worst.max(r.lhs_estimate / r.rhs_bound);
        c.require(
            r.holds(1e-6),
            format!(
                "config {i} (d={}, beta={:.3}, gamma={:.3}, delta={:.3}, Gamma={:.3}): lhs {:.3e} <= rhs {:.3e}",
                p.dim(), p.beta(), p.gamma(), p.delta(), p.big_gamma(), r.lhs_estimate, r.rhs_bound
            ),
        );
    }
    c.metric("max_lhs_over_rhs", worst);
    Ok(c)
}

fn law_equivalence(seed: Seed) -> Result<Check> {
    let mut c = Check::new();
    let p = ModelParams::finite(0.4, 0.35, 2.5, 1.0, 1)?;
    let grown = grow_sequential(&p, 1e4, replicate_seed(seed, 1))?;
    let torus = generate_torus(&p, &TorusSpec::with_volume(1e4, 1)?, SampleMode::PoissonCount, replicate_seed(seed, 2))?;
    for dir in [Direction::Out, Direction::In] {
        let a = empirical_degree_hist(&grown, dir);
        let b = empirical_degree_hist(&torus, dir);
        let r = two_sample_test(&a, &b)?;
        let label = match dir {
            Direction::Out => "out",
            Direction::In => "in",
        };
        c.metric(format!("p_value_{label}"), r.p_value);
        c.require(r.p_value > 0.01, format!("{label}-degree two-sample p = {:.4} over {} bins", r.p_value, r.bins));
    }
    Ok(c)
}
