//! Directed out-components, survival over β grids, the regime classifier and two-hop connection checks.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{
    neighbor_birth, open_unit, palm_implicit, random_direction, sample_offset, spatial_coefficient,
    ArcKind, Direction, ImplicitGraph, OutNeighbors,
};
use crate::marking::{replicate_seed, Seed};
use crate::model::{rho, spatial_mass, unit_ball_volume, Delta, ModelParams, TorusSpec};
use crate::quad::{integrate, integrate_to_infinity, integrate_with_breaks, Tolerance};
use crate::stats::{wilson_interval, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Exhausted,
    SizeCap,
    DepthCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub root: usize,
    pub visited: usize,
    pub max_depth: usize,
    pub terminated_by: Termination,
}

/// Breadth-first exploration along out-arcs, one frontier at a time in ascending id order.
pub fn out_component<G: OutNeighbors + ?Sized>(
    g: &G,
    root: usize,
    size_cap: usize,
    depth_cap: usize,
) -> Result<ComponentStats> {
    if root >= g.vertex_count() {
        return Err(Error::UnknownVertex(root));
    }
    if size_cap == 0 || depth_cap == 0 {
        return Err(Error::Precondition("size and depth caps must be at least 1".into()));
    }
    let mut seen = HashSet::from([root]);
    let mut frontier = vec![root];
    let mut depth = 0;
    let mut buf = Vec::new();
    let stats = |visited, depth, t| ComponentStats { root, visited, max_depth: depth, terminated_by: t };
    if size_cap == 1 {
        return Ok(stats(1, 0, Termination::SizeCap));
    }
    loop {
        let mut next = Vec::new();
        for &v in &frontier {
            g.out_neighbors_into(v, &mut buf);
            for &w in &buf {
                if !seen.contains(&w) {
                    if depth == depth_cap {
                        return Ok(stats(seen.len(), depth, Termination::DepthCap));
                    }
                    seen.insert(w);
                    next.push(w);
                    if seen.len() >= size_cap {
                        return Ok(stats(seen.len(), depth + 1, Termination::SizeCap));
                    }
                }
            }
        }
        if next.is_empty() {
            return Ok(stats(seen.len(), depth, Termination::Exhausted));
        }
        next.sort_unstable();
        frontier = next;
        depth += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
    pub beta: f64,
    pub survivors: u64,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub points: Vec<SurvivalPoint>,
    pub reps: usize,
    pub volume: f64,
    pub threshold: usize,
}

impl SurvivalCurve {
    /// Rows `beta,survival,ci_low,ci_high,reps,volume,threshold`.
    pub fn rows(&self) -> Vec<(f64, f64, f64, f64, usize, f64, usize)> {
        self.points
            .iter()
            .map(|p| {
                (p.beta, p.interval.mean, p.interval.ci_low, p.interval.ci_high, self.reps, self.volume, self.threshold)
            })
            .collect()
    }
}

/// Fraction of Palm roots whose out-component reaches `threshold` vertices.
///
/// Each replicate draws one vertex set and reuses it for every β, so the outcome is monotone in β
/// replicate by replicate. The β stored in `base` is ignored.
pub fn estimate_survival(
    base: &ModelParams,
    betas: &[f64],
    volume: f64,
    reps: usize,
    threshold: usize,
    seed: Seed,
) -> Result<SurvivalCurve> {
    if betas.is_empty() {
        return Err(Error::param("beta_grid", "must not be empty"));
    }
    if betas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("beta_grid", "must be strictly increasing"));
    }
    if reps == 0 {
        return Err(Error::param("reps", "must be at least 1"));
    }
    if threshold == 0 {
        return Err(Error::param("threshold", "must be at least 1"));
    }
    let grid: Vec<ModelParams> = betas.iter().map(|&b| base.with_beta(b)).collect::<Result<_>>()?;
    let spec = TorusSpec::with_volume(volume, base.dim())?;
    let outcomes: Vec<Vec<bool>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let rs = replicate_seed(seed, r);
            let (g0, root) = palm_implicit(base, &spec, rs, None)?;
            let vertices = g0.vertices().to_vec();
            grid.iter()
                .map(|p| {
                    let g = ImplicitGraph::new(*p, spec.side(), vertices.clone(), rs)?;
                    let c = out_component(&g, root, threshold, usize::MAX)?;
                    Ok(c.visited >= threshold)
                })
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<_>>()?;
    let z = crate::stats::normal_quantile(0.975);
    let points = betas
        .iter()
        .enumerate()
        .map(|(i, &beta)| {
            let survivors = outcomes.iter().filter(|o| o[i]).count() as u64;
            SurvivalPoint { beta, survivors, interval: wilson_interval(survivors, reps as u64, z) }
        })
        .collect();
    Ok(SurvivalCurve { points, reps, volume, threshold })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    SubcriticalPhaseExists,
    NoSubcriticalPhase,
    Boundary,
}

const BOUNDARY_REL_TOL: f64 = 1e-12;

/// Compares `γ` with `(δ+Γ)/(δ+1)`; the indicator profile (`δ = ∞`) always has a subcritical phase.
pub fn regime(gamma: f64, delta: Delta, big_gamma: f64) -> Regime {
    let b = match delta {
        Delta::Infinite => 1.0,
        Delta::Finite(d) => (d + big_gamma) / (d + 1.0),
    };
    if (gamma - b).abs() <= BOUNDARY_REL_TOL * b.abs().max(gamma.abs()) {
        Regime::Boundary
    } else if gamma < b {
        Regime::SubcriticalPhaseExists
    } else {
        Regime::NoSubcriticalPhase
    }
}

/// `2^{dδ+1} ω_d δ / (d(δ-1)(δ(1-γ)+γ-Γ))`, defined when the last factor is positive.
pub fn two_connection_constant(params: &ModelParams) -> Result<f64> {
    let Delta::Finite(delta) = params.delta() else {
        return Err(Error::Hypothesis("the two-connection constant needs a finite δ".into()));
    };
    let (g, gg, d) = (params.gamma(), params.big_gamma(), params.dim() as f64);
    let k = delta * (1.0 - g) + g - gg;
    if k <= 0.0 {
        return Err(Error::Hypothesis(format!("δ(1-γ)+γ-Γ = {k} is not positive")));
    }
    Ok(2f64.powf(d * delta + 1.0) * unit_ball_volume(params.dim()) * delta / (d * (delta - 1.0) * k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoConnectionReport {
    /// Expected number of younger two-hop connectors, by quadrature.
    pub lhs_estimate: f64,
    pub lhs_monte_carlo: f64,
    pub monte_carlo_stderr: f64,
    pub rhs_bound: f64,
    pub constant: f64,
}

impl TwoConnectionReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs_estimate <= self.rhs_bound + slack
    }
}

/// `∫ ρ(a1|z|^d) ρ(a2|z-y|^d) dz` over `R^d` with `|y| = r`.
fn overlap_integral(a1: f64, a2: f64, r: f64, delta: Delta, dim: usize, tol: Tolerance) -> Result<f64> {
    let f1 = |q: f64| rho(a1 * q, delta);
    let f2 = |q: f64| rho(a2 * q, delta);
    let r1 = a1.powf(-1.0 / dim as f64);
    let r2 = a2.powf(-1.0 / dim as f64);
    // integral over the first coordinate `z1`, with `g(z1)` the cross-section integral
    let line = |g: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
        let pts = [0.0, r, -r1, r1, r - r2, r + r2];
        let lo = pts.iter().copied().fold(f64::INFINITY, f64::min) - r1.max(r2);
        let hi = pts.iter().copied().fold(f64::NEG_INFINITY, f64::max) + r1.max(r2);
        let mut err = None;
        let mut wrap = |z: f64| match g(z) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        };
        let mid = integrate_with_breaks(&mut wrap, lo, hi, &pts, tol)?;
        let right = integrate_to_infinity(|s| wrap(hi + s), 0.0, tol)?;
        let left = integrate_to_infinity(|s| wrap(lo - s), 0.0, tol)?;
        match err {
            Some(e) => Err(e),
            None => Ok(mid + right + left),
        }
    };
    if dim == 1 {
        return line(&|z: f64| Ok(f1(z.abs()) * f2((z - r).abs())));
    }
    let dm = dim as f64;
    let shell = (dm - 1.0) * unit_ball_volume(dim - 1);
    line(&|z1: f64| {
        let cross = |p: f64| {
            let q1 = (z1 * z1 + p * p).powf(dm / 2.0);
            let q2 = ((z1 - r) * (z1 - r) + p * p).powf(dm / 2.0);
            shell * p.powi(dim as i32 - 2) * f1(q1) * f2(q2)
        };
        let mut breaks = Vec::new();
        for (rr, c) in [(r1, z1), (r2, z1 - r)] {
            let s = rr * rr - c * c;
            if s > 0.0 {
                breaks.push(s.sqrt());
            }
        }
        let top = breaks.iter().copied().fold(r1.max(r2), f64::max) * 2.0;
        let a = integrate_with_breaks(cross, 0.0, top, &breaks, tol)?;
        let b = integrate_to_infinity(|s| cross(top + s), 0.0, tol)?;
        Ok(a + b)
    })
}

fn check_two_connection(params: &ModelParams, t_x: f64, t_y: f64, distance: f64) -> Result<()> {
    if regime(params.gamma(), params.delta(), params.big_gamma()) != Regime::SubcriticalPhaseExists {
        return Err(Error::Hypothesis("γ must lie below (δ+Γ)/(δ+1)".into()));
    }
    if !(t_y > 0.0 && t_y < t_x && t_x < 1.0) {
        return Err(Error::Hypothesis(format!("need 0 < t_y < t_x < 1, got t_y = {t_y}, t_x = {t_x}")));
    }
    let need = params.beta() * t_y.powf(-params.gamma()) * t_x.powf(params.gamma() - 1.0);
    let have = distance.powi(params.dim() as i32);
    if !(have >= need) {
        return Err(Error::Hypothesis(format!("distance^d = {have} below β t_y^-γ t_x^(γ-1) = {need}")));
    }
    Ok(())
}

/// Expected younger two-hop connectors from `x = (0, t_x)` to `y = (distance·e1, t_y)`, against the bound `βCρ(...)`.
pub fn two_connection_check(
    params: &ModelParams,
    t_x: f64,
    t_y: f64,
    distance: f64,
    reps: usize,
    seed: Seed,
) -> Result<TwoConnectionReport> {
    check_two_connection(params, t_x, t_y, distance)?;
    let constant = two_connection_constant(params)?;
    let (beta, g, gg, dim, delta) =
        (params.beta(), params.gamma(), params.big_gamma(), params.dim(), params.delta());
    let coeffs = |u: f64| {
        let w = u.powf(1.0 - g) / beta;
        (t_x.powf(g) * w, t_y.powf(g) * w)
    };
    let inner_tol = Tolerance { abs: 0.0, rel: 1e-9, max_intervals: 2000 };
    let mut err = None;
    let lhs = integrate(
        |u| {
            let (a1, a2) = coeffs(u);
            match overlap_integral(a1, a2, distance, delta, dim, inner_tol) {
                Ok(v) => (t_x / u).powf(gg) * v,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        },
        t_x,
        1.0,
        Tolerance { abs: 0.0, rel: 1e-7, max_intervals: 2000 },
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    let rhs = beta * constant * rho(t_y.powf(g) * t_x.powf(1.0 - g) * distance.powi(dim as i32) / beta, delta);
    let (mc, se) = if reps == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let mass = spatial_mass(delta, dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
        let mut y = vec![0.0; dim];
        y[0] = distance;
        let xs: Vec<f64> = (0..reps)
            .map(|_| {
                let u = t_x + (1.0 - t_x) * open_unit(&mut rng);
                let (a1, a2) = coeffs(u);
                let z = sample_offset(a1, delta, dim, &mut rng);
                let sq: f64 = z.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
                (1.0 - t_x) * (t_x / u).powf(gg) * mass / a1 * rho(a2 * sq.sqrt().powi(dim as i32), delta)
            })
            .collect();
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
        (m, (var / n).sqrt())
    };
    Ok(TwoConnectionReport { lhs_estimate: lhs, lhs_monte_carlo: mc, monte_carlo_stderr: se, rhs_bound: rhs, constant })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderEstimate {
    pub interval: Interval,
    pub successes: u64,
    pub alpha1: f64,
    pub alpha2: f64,
}

/// Admissible midpoints `(α1, α2)` for the two-step ladder event.
pub fn ladder_exponents(params: &ModelParams) -> Result<(f64, f64)> {
    let Delta::Finite(delta) = params.delta() else {
        return Err(Error::Hypothesis("the ladder event needs a finite δ".into()));
    };
    let (g, gg) = (params.gamma(), params.big_gamma());
    let top1 = (g - gg) / (delta * (1.0 - g));
    if !(top1 > 1.0) {
        return Err(Error::Hypothesis(format!("α1 range (1, {top1}) is empty")));
    }
    let a1 = 0.5 * (1.0 + top1);
    let top2 = (a1 * (g * delta - 1.0) + g - gg) / (delta - 1.0);
    if !(top2 > a1) {
        return Err(Error::Hypothesis(format!("α2 range ({a1}, {top2}) is empty")));
    }
    Ok((a1, 0.5 * (a1 + top2)))
}

/// Frequency with which a root `x = (0, t)` reaches, through one younger vertex, an older vertex `y`
/// with birth below `t^α1` and `|y|^d < t^-α2`. Sampled exactly in the infinite model.
pub fn ladder_probability(params: &ModelParams, t_root: f64, reps: usize, seed: Seed) -> Result<LadderEstimate> {
    if regime(params.gamma(), params.delta(), params.big_gamma()) != Regime::NoSubcriticalPhase {
        return Err(Error::Hypothesis("γ must exceed (δ+Γ)/(δ+1)".into()));
    }
    if !(t_root > 0.0 && t_root < 0.5) {
        return Err(Error::Hypothesis(format!("root birth {t_root} outside (0, 1/2)")));
    }
    if reps == 0 {
        return Err(Error::param("reps", "must be at least 1"));
    }
    let (a1, a2) = ladder_exponents(params)?;
    let dim = params.dim();
    let s_max = t_root.powf(a1);
    let radius = t_root.powf(-a2 / dim as f64);
    let y_mean = unit_ball_volume(dim) * t_root.powf(-a2) * s_max;
    let y_count = Poisson::new(y_mean).map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let mut successes = 0u64;
    for _ in 0..reps {
        let (_, nz) = crate::generator::sample_palm_counts(params, t_root, Direction::Out, &mut rng);
        let zs: Vec<(Vec<f64>, f64)> = (0..nz)
            .map(|_| {
                let u = neighbor_birth(params, t_root, Direction::Out, ArcKind::Reciprocal, open_unit(&mut rng));
                let a = spatial_coefficient(params, t_root, u);
                (sample_offset(a, params.delta(), dim, &mut rng), u)
            })
            .collect();
        let ny = y_count.sample(&mut rng) as u64;
        let mut hit = false;
        for _ in 0..ny {
            // uniform in the ball
            let r = radius * open_unit(&mut rng).powf(1.0 / dim as f64);
            let y: Vec<f64> = random_direction(dim, &mut rng).into_iter().map(|x| x * r).collect();
            let s = s_max * open_unit(&mut rng);
            for (z, u) in &zs {
                let sq: f64 = z.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
                let p = rho(params.age_scaled(s, *u, sq.sqrt().powi(dim as i32)), params.delta());
                if rng.random::<f64>() < p {
                    hit = true;
                }
            }
        }
        if hit {
            successes += 1;
        }
    }
    let z = crate::stats::normal_quantile(0.975);
    Ok(LadderEstimate { interval: wilson_interval(successes, reps as u64, z), successes, alpha1: a1, alpha2: a2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::Digraph;
    use approx::assert_relative_eq;

    #[test]
    fn component_examples() {
        let iso = Digraph::from_plain_arcs(3, &[(1, 2)]).unwrap();
        let c = out_component(&iso, 0, 10, 10).unwrap();
        assert_eq!((c.visited, c.terminated_by), (1, Termination::Exhausted));
        let cyc = Digraph::from_plain_arcs(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let c = out_component(&cyc, 0, 100, 100).unwrap();
        assert_eq!((c.visited, c.max_depth, c.terminated_by), (5, 4, Termination::Exhausted));
        assert_eq!(out_component(&cyc, 0, 3, 100).unwrap().terminated_by, Termination::SizeCap);
        let c = out_component(&cyc, 0, 100, 2).unwrap();
        assert_eq!((c.visited, c.terminated_by), (3, Termination::DepthCap));
        assert!(out_component(&cyc, 9, 10, 10).is_err());
        assert!(out_component(&cyc, 0, 0, 10).is_err());
    }

    #[test]
    fn regime_examples() {
        assert_eq!(regime(0.35, Delta::Finite(2.5), 1.0), Regime::SubcriticalPhaseExists);
        assert_eq!(regime(0.95, Delta::Finite(1.5), 0.0), Regime::NoSubcriticalPhase);
        assert_eq!(regime(0.6, Delta::Finite(1.5), 0.0), Regime::Boundary);
        assert_eq!(regime(0.99, Delta::Infinite, 0.0), Regime::SubcriticalPhaseExists);
    }

    #[test]
    fn constant_example() {
        let p = ModelParams::finite(1.0, 0.5, 2.0, 0.75, 1).unwrap();
        assert_relative_eq!(two_connection_constant(&p).unwrap(), 128.0 / 3.0, max_relative = 1e-12);
        let bad = ModelParams::finite(1.0, 0.5, 2.0, 2.0, 1).unwrap();
        assert!(matches!(two_connection_constant(&bad), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn overlap_integral_total_mass() {
        // with a2 → 0 the second factor is 1 and the integral is the mass of ρ(a1|z|^d)
        for dim in [1, 2, 3] {
            let delta = Delta::Finite(2.5);
            let v = overlap_integral(2.0, 1e-9, 1.0, delta, dim, Tolerance::rel(1e-9)).unwrap();
            assert_relative_eq!(v, spatial_mass(delta, dim) / 2.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn two_connection_quadrature_matches_monte_carlo() {
        let p = ModelParams::finite(0.5, 0.4, 2.0, 0.5, 2).unwrap();
        let r = two_connection_check(&p, 0.5, 0.2, 4.0, 200_000, Seed(3)).unwrap();
        assert!((r.lhs_estimate - r.lhs_monte_carlo).abs() < 4.0 * r.monte_carlo_stderr, "{r:?}");
        assert!(r.holds(1e-6));
        assert!(two_connection_check(&p, 0.2, 0.5, 4.0, 0, Seed(3)).is_err());
        assert!(two_connection_check(&p, 0.5, 0.2, 0.01, 0, Seed(3)).is_err());
    }

    #[test]
    fn ladder_hypotheses() {
        let sub = ModelParams::finite(1.0, 0.35, 2.5, 1.0, 1).unwrap();
        assert!(matches!(ladder_probability(&sub, 0.1, 10, Seed(1)), Err(Error::Hypothesis(_))));
        let sup = ModelParams::finite(1.0, 0.95, 1.5, 0.0, 1).unwrap();
        assert!(ladder_probability(&sup, 0.6, 10, Seed(1)).is_err());
        let (a1, a2) = ladder_exponents(&sup).unwrap();
        assert!(a1 > 1.0 && a2 > a1);
    }
}
