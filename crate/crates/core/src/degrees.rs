//! Degree histograms and the exact degree laws of the infinite model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::generator::{Digraph, Direction};
use crate::model::ModelParams;
use crate::quad::{integrate_with_breaks, Tolerance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeHistogram {
    pub direction: Direction,
    pub counts: BTreeMap<u64, u64>,
    pub total: u64,
}

impl DegreeHistogram {
    pub fn from_samples(direction: Direction, samples: impl IntoIterator<Item = u64>) -> Self {
        let mut counts = BTreeMap::new();
        let mut total = 0;
        for k in samples {
            *counts.entry(k).or_insert(0) += 1;
            total += 1;
        }
        DegreeHistogram { direction, counts, total }
    }

    pub fn count(&self, k: u64) -> u64 {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    pub fn max_degree(&self) -> u64 {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.counts.iter().map(|(&k, &c)| k as f64 * c as f64).sum::<f64>() / self.total as f64
    }

    /// Samples expanded back into a list (ascending).
    pub fn samples(&self) -> Vec<u64> {
        self.counts
            .iter()
            .flat_map(|(&k, &c)| std::iter::repeat_n(k, c as usize))
            .collect()
    }

    /// Rows `(k, count, frequency)` in ascending `k`.
    pub fn rows(&self) -> Vec<(u64, u64, f64)> {
        self.counts
            .iter()
            .map(|(&k, &c)| (k, c, c as f64 / self.total.max(1) as f64))
            .collect()
    }
}

pub fn empirical_degree_hist(g: &Digraph, direction: Direction) -> DegreeHistogram {
    let n = g.vertex_count();
    let degs: Vec<u64> = match direction {
        Direction::Out => (0..n).map(|v| g.out_degree(v) as u64).collect(),
        Direction::In => {
            let mut d = vec![0u64; n];
            for (_, a) in g.arcs() {
                d[a.target] += 1;
            }
            d
        }
    };
    DegreeHistogram::from_samples(direction, degs)
}

/// Mean number of older out-neighbours; does not depend on the root's birth.
pub fn mu_old(params: &ModelParams) -> f64 {
    params.degree_constant() / (1.0 - params.gamma())
}

pub fn mu_rec(params: &ModelParams, u: f64) -> Result<f64> {
    if !(u > 0.0 && u <= 1.0) {
        return Err(Error::Domain(format!("root birth {u} outside (0,1]")));
    }
    Ok(mu_rec_unchecked(params, u))
}

pub(crate) fn mu_rec_unchecked(params: &ModelParams, u: f64) -> f64 {
    let c = params.degree_constant();
    let diff = params.big_gamma() - params.gamma();
    if u >= 1.0 {
        return 0.0;
    }
    if diff == 0.0 {
        c * (1.0 / u).ln()
    } else if diff > 0.0 {
        c * (1.0 - u.powf(diff)) / diff
    } else {
        c * (u.powf(diff) - 1.0) / (-diff)
    }
}

pub fn mean_outdegree(params: &ModelParams) -> f64 {
    let g = params.gamma();
    params.degree_constant() * (1.0 / (1.0 - g) + 1.0 / (1.0 + params.big_gamma() - g))
}

pub fn indegree_tail_exponent(params: &ModelParams) -> f64 {
    1.0 + 1.0 / params.gamma()
}

pub fn outdegree_tail_exponent(params: &ModelParams) -> Option<f64> {
    let e = params.gamma() - params.big_gamma();
    (e > 0.0).then(|| 1.0 + 1.0 / e)
}

pub fn poisson_pmf(k: u64, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    (kf * lambda.ln() - lambda - ln_gamma(kf + 1.0)).exp()
}

/// Which part of the out-degree a mixed-Poisson oracle describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutComponent {
    Total,
    Reciprocal,
}

/// Mixed-Poisson law `∫₀¹ Pois(λ(u)) du` for the root's out-degree.
#[derive(Debug, Clone, Copy)]
pub struct PmfOracle {
    pub params: ModelParams,
    pub component: OutComponent,
    pub rel_tol: f64,
}

/// Point masses on `0..values.len()` and the exact mass beyond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    pub values: Vec<f64>,
    pub tail_mass: f64,
}

impl Pmf {
    pub fn get(&self, k: u64) -> f64 {
        self.values.get(k as usize).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() + self.tail_mass
    }
}

/// Largest support index computed before the tail mass takes over.
const MAX_SUPPORT: u64 = 200_000;
const TRUNCATION: f64 = 1e-12;

impl PmfOracle {
    pub fn new(params: ModelParams, component: OutComponent) -> Self {
        PmfOracle { params, component, rel_tol: 1e-8 }
    }

    fn lambda(&self, u: f64) -> f64 {
        let r = mu_rec_unchecked(&self.params, u);
        match self.component {
            OutComponent::Total => mu_old(&self.params) + r,
            OutComponent::Reciprocal => r,
        }
    }

    /// `∫₀¹ g(λ(u)) du` in the variable `x = -ln u`, split where `λ` crosses `k`.
    fn mix<G: Fn(f64) -> f64>(&self, k: u64, g: G) -> Result<f64> {
        let lam_x = |x: f64| self.lambda((-x).exp());
        let kf = k as f64;
        let far = kf + 40.0 * kf.sqrt() + 60.0;
        let mut x_max = 60.0;
        if lam_x(x_max) > far {
            let (mut lo, mut hi) = (0.0, x_max);
            for _ in 0..80 {
                let m = 0.5 * (lo + hi);
                if lam_x(m) > far {
                    hi = m;
                } else {
                    lo = m;
                }
            }
            x_max = hi;
        }
        let mut breaks = Vec::new();
        if lam_x(0.0) < kf && lam_x(x_max) > kf {
            let (mut lo, mut hi) = (0.0, x_max);
            for _ in 0..80 {
                let m = 0.5 * (lo + hi);
                if lam_x(m) > kf {
                    hi = m;
                } else {
                    lo = m;
                }
            }
            let w = 2.0 / (kf.sqrt() + 1.0);
            breaks.extend([lo - w, lo, lo + w]);
        }
        breaks.extend((1..60).map(|i| i as f64).filter(|&x| x < x_max));
        let tol = Tolerance { abs: 1e-17, rel: self.rel_tol, max_intervals: 20_000 };
        integrate_with_breaks(|x| g(lam_x(x)) * (-x).exp(), 0.0, x_max, &breaks, tol)
    }

    pub fn pmf(&self, k: u64) -> Result<f64> {
        self.mix(k, |lam| poisson_pmf(k, lam))
    }

    /// `P(N ≥ k)`.
    pub fn tail(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        self.mix(k, |lam| if lam <= 0.0 { 0.0 } else { gamma_lr(k as f64, lam) })
    }

    /// Masses up to the first `k` past the bulk where the mass drops below `1e-12`, plus the exact tail.
    pub fn table(&self) -> Result<Pmf> {
        let mut values = Vec::new();
        let mut cum = 0.0;
        for k in 0..MAX_SUPPORT {
            let p = self.pmf(k)?;
            values.push(p);
            cum += p;
            if cum >= 0.5 && p < TRUNCATION {
                break;
            }
        }
        let tail_mass = self.tail(values.len() as u64)?;
        Ok(Pmf { values, tail_mass })
    }
}

pub fn theoretical_outdegree_pmf(params: &ModelParams, k: u64) -> Result<f64> {
    PmfOracle::new(*params, OutComponent::Total).pmf(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Delta;
    use crate::quad::integrate;
    use approx::assert_relative_eq;

    #[test]
    fn closed_forms() {
        let p = ModelParams::finite(0.4, 0.35, 2.5, 1.0, 2).unwrap();
        assert_relative_eq!(mu_old(&p), 3.2221, epsilon = 1e-4);
        let q = ModelParams::finite(0.4, 0.4, 2.5, 1.0, 1).unwrap();
        assert_relative_eq!(mean_outdegree(&q), 3.0556, epsilon = 1e-4);
        let inf = ModelParams::new(0.4, 0.35, Delta::Infinite, 1.0, 2).unwrap();
        assert_relative_eq!(mu_old(&inf), 0.4 * std::f64::consts::PI / 0.65, epsilon = 1e-12);
        let eq = ModelParams::finite(0.25, 0.5, 2.0, 0.5, 1).unwrap();
        assert_relative_eq!(mu_rec(&eq, 0.25).unwrap(), 4f64.ln(), epsilon = 1e-12);
        for gg in [0.1, 0.5, 1.5] {
            let p = ModelParams::finite(0.3, 0.5, 3.0, gg, 2).unwrap();
            assert_eq!(mu_rec(&p, 1.0).unwrap(), 0.0);
        }
        assert!(mu_rec(&p, 0.0).is_err());
        assert_eq!(indegree_tail_exponent(&eq), 3.0);
        let h = ModelParams::finite(0.25, 0.5, 2.0, 0.25, 1).unwrap();
        assert_eq!(outdegree_tail_exponent(&h), Some(5.0));
        assert_eq!(outdegree_tail_exponent(&eq), None);
    }

    #[test]
    fn geometric_component() {
        let p = ModelParams::finite(0.25, 0.5, 2.0, 0.5, 1).unwrap();
        let o = PmfOracle::new(p, OutComponent::Reciprocal);
        for k in 0..8 {
            assert_relative_eq!(o.pmf(k).unwrap(), 0.5f64.powi(k as i32 + 1), max_relative = 1e-8);
        }
    }

    #[test]
    fn table_normalized() {
        for gg in [1.0, 0.5, 0.25] {
            let p = ModelParams::finite(0.25, 0.5, 2.0, gg, 1).unwrap();
            let t = PmfOracle::new(p, OutComponent::Total).table().unwrap();
            assert!((t.total() - 1.0).abs() < 1e-6, "Gamma {gg}: {}", t.total());
            assert!(t.values.iter().sum::<f64>() >= 1.0 - 1e-6);
        }
    }

    #[test]
    fn mean_outdegree_matches_quadrature() {
        for gg in [0.0, 0.2, 0.4, 1.0] {
            let p = ModelParams::finite(0.4, 0.4, 2.5, gg, 1).unwrap();
            let q = mu_old(&p)
                + integrate(|u| mu_rec_unchecked(&p, u), 0.0, 1.0, Tolerance::rel(1e-12)).unwrap();
            assert_relative_eq!(mean_outdegree(&p), q, max_relative = 1e-8);
        }
    }
}
