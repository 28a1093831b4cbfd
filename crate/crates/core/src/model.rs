//! Model parameters, connection kernels and torus geometry.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};

/// Decay exponent of the spatial profile. `Infinite` selects the indicator profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delta {
    Finite(f64),
    Infinite,
}

impl Delta {
    pub fn is_finite(self) -> bool {
        matches!(self, Delta::Finite(_))
    }

    /// `δ/(δ-1)`, or 1 for the indicator profile.
    pub fn tail_factor(self) -> f64 {
        match self {
            Delta::Finite(d) => d / (d - 1.0),
            Delta::Infinite => 1.0,
        }
    }
}

impl std::fmt::Display for Delta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Delta::Finite(d) => write!(f, "{d}"),
            Delta::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Delta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Delta::Finite(d) => s.serialize_f64(*d),
            Delta::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Delta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v.is_infinite() && v > 0.0 => Ok(Delta::Infinite),
            Raw::Num(v) => Ok(Delta::Finite(v)),
            Raw::Text(s) => match s.to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "+inf" => Ok(Delta::Infinite),
                other => other
                    .parse::<f64>()
                    .map(Delta::Finite)
                    .map_err(|_| serde::de::Error::custom(format!("invalid delta `{s}`"))),
            },
        }
    }
}

/// Validated model parameters `(β, γ, δ, Γ)` and spatial dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    beta: f64,
    gamma: f64,
    delta: Delta,
    big_gamma: f64,
    dim: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    beta: f64,
    gamma: f64,
    delta: Delta,
    #[serde(rename = "Gamma")]
    big_gamma: f64,
    dim: usize,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.beta, r.gamma, r.delta, r.big_gamma, r.dim)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            beta: p.beta,
            gamma: p.gamma,
            delta: p.delta,
            big_gamma: p.big_gamma,
            dim: p.dim,
        }
    }
}

impl ModelParams {
    pub fn new(beta: f64, gamma: f64, delta: Delta, big_gamma: f64, dim: usize) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::param("beta", format!("must be positive, got {beta}")));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::param("gamma", format!("must lie in (0,1), got {gamma}")));
        }
        if let Delta::Finite(d) = delta {
            if !(d.is_finite() && d > 1.0) {
                return Err(Error::param("delta", format!("must exceed 1, got {d}")));
            }
        }
        if !(big_gamma.is_finite() && big_gamma >= 0.0) {
            return Err(Error::param(
                "Gamma",
                format!("must be nonnegative, got {big_gamma}"),
            ));
        }
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        Ok(ModelParams {
            beta,
            gamma,
            delta,
            big_gamma,
            dim,
        })
    }

    /// Shorthand for a finite decay exponent.
    pub fn finite(beta: f64, gamma: f64, delta: f64, big_gamma: f64, dim: usize) -> Result<Self> {
        Self::new(beta, gamma, Delta::Finite(delta), big_gamma, dim)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn delta(&self) -> Delta {
        self.delta
    }
    pub fn big_gamma(&self) -> f64 {
        self.big_gamma
    }
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(beta, self.gamma, self.delta, self.big_gamma, self.dim)
    }

    pub fn with_big_gamma(&self, big_gamma: f64) -> Result<Self> {
        Self::new(self.beta, self.gamma, self.delta, big_gamma, self.dim)
    }

    /// `β·ω_d·δ/(δ-1)` (or `β·ω_d` for the indicator profile).
    pub fn degree_constant(&self) -> f64 {
        self.beta * spatial_mass(self.delta, self.dim)
    }

    /// Age-scaled distance fed to the profile for a pair with the given births.
    #[inline]
    pub fn age_scaled(&self, t_old: f64, t_young: f64, dist_pow_d: f64) -> f64 {
        t_old.powf(self.gamma) * t_young.powf(1.0 - self.gamma) * dist_pow_d / self.beta
    }
}

/// Distance convention used when evaluating kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Metric {
    Torus(TorusSpec),
    Euclidean,
}

impl Metric {
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            Metric::Torus(spec) => torus_distance(x, y, spec),
            Metric::Euclidean => {
                check_dims(x, y)?;
                Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusSpec {
    side: f64,
    dim: usize,
}

impl TorusSpec {
    pub fn new(side: f64, dim: usize) -> Result<Self> {
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::param("side", format!("must be positive, got {side}")));
        }
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        Ok(TorusSpec { side, dim })
    }

    /// Torus of the given volume `L^d`.
    pub fn with_volume(volume: f64, dim: usize) -> Result<Self> {
        if !(volume.is_finite() && volume > 0.0) {
            return Err(Error::param("volume", format!("must be positive, got {volume}")));
        }
        Self::new(volume.powf(1.0 / dim as f64), dim)
    }

    pub fn side(&self) -> f64 {
        self.side
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// Whether `x` lies in the reduced fundamental domain `[-L/2, L/2)^d`.
    pub fn contains(&self, x: &[f64]) -> bool {
        let h = self.side / 2.0;
        x.len() == self.dim && x.iter().all(|&c| c >= -h && c < h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: usize,
    pub location: Vec<f64>,
    pub birth: f64,
    /// Canonical key used by the mark hash.
    pub key: u64,
}

pub fn profile_rho(x: f64, delta: Delta) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("profile argument must be nonnegative, got {x}")));
    }
    Ok(rho(x, delta))
}

#[inline]
pub(crate) fn rho(x: f64, delta: Delta) -> f64 {
    if x <= 1.0 {
        return 1.0;
    }
    match delta {
        Delta::Finite(d) => x.powf(-d),
        Delta::Infinite => 0.0,
    }
}

/// Whether a uniform mark `u` falls below `ρ(z)`. The cheap reject uses `z^-δ < 1/z` for `z > 1`.
#[inline]
pub(crate) fn arc_present(z: f64, u: f64, delta: Delta) -> bool {
    if z <= 1.0 {
        return true;
    }
    match delta {
        Delta::Infinite => false,
        Delta::Finite(d) => {
            if u * z >= 1.0 {
                false
            } else {
                u < z.powf(-d)
            }
        }
    }
}

pub fn reciprocity_pi(ratio: f64, big_gamma: f64) -> Result<f64> {
    if ratio.is_nan() || ratio < 1.0 {
        return Err(Error::Domain(format!("birth ratio must be at least 1, got {ratio}")));
    }
    if big_gamma < 0.0 {
        return Err(Error::Domain(format!("Gamma must be nonnegative, got {big_gamma}")));
    }
    Ok(ratio.powf(-big_gamma))
}

pub fn forward_arc_prob(
    younger: &Vertex,
    older: &Vertex,
    params: &ModelParams,
    metric: &Metric,
) -> Result<f64> {
    if !(older.birth < younger.birth) {
        return Err(Error::Precondition(format!(
            "older birth {} must be below younger birth {}",
            older.birth, younger.birth
        )));
    }
    let dist = metric.distance(&younger.location, &older.location)?;
    let z = params.age_scaled(older.birth, younger.birth, dist.powi(params.dim() as i32));
    Ok(rho(z, params.delta()))
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

pub fn torus_distance(x: &[f64], y: &[f64], spec: &TorusSpec) -> Result<f64> {
    check_dims(x, y)?;
    if x.len() != spec.dim() {
        return Err(Error::Domain(format!(
            "point has dimension {}, torus has {}",
            x.len(),
            spec.dim()
        )));
    }
    Ok(torus_dist_sq(x, y, spec.side()).sqrt())
}

#[inline]
pub(crate) fn wrap_diff(a: f64, b: f64, side: f64) -> f64 {
    let d = (a - b).abs();
    if d > side * 0.5 {
        side - d
    } else {
        d
    }
}

#[inline]
pub(crate) fn torus_dist_sq(x: &[f64], y: &[f64], side: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let d = wrap_diff(a, b, side);
            d * d
        })
        .sum()
}

/// `|x|^d` from a squared norm.
#[inline]
pub(crate) fn pow_d_from_sq(sq: f64, dim: usize) -> f64 {
    match dim {
        1 => sq.sqrt(),
        2 => sq,
        _ => sq.powf(dim as f64 / 2.0),
    }
}

/// Maps a point of the unit torus with birth in `(0,t)` to the side-`t^(1/d)` torus with birth in `(0,1)`.
pub fn rescale_h(location: &[f64], birth: f64, t: f64) -> Result<(Vec<f64>, f64)> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Domain(format!("scale must be positive, got {t}")));
    }
    if !(birth > 0.0 && birth < t) {
        return Err(Error::Domain(format!("birth {birth} outside (0, {t})")));
    }
    let s = t.powf(1.0 / location.len().max(1) as f64);
    Ok((location.iter().map(|c| c * s).collect(), birth / t))
}

pub fn rescale_h_inverse(location: &[f64], birth: f64, t: f64) -> Result<(Vec<f64>, f64)> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Domain(format!("scale must be positive, got {t}")));
    }
    if !(birth > 0.0 && birth < 1.0) {
        return Err(Error::Domain(format!("birth {birth} outside (0, 1)")));
    }
    let s = t.powf(1.0 / location.len().max(1) as f64);
    Ok((location.iter().map(|c| c / s).collect(), birth * t))
}

pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    std::f64::consts::PI.powf(h) / gamma_fn(h + 1.0)
}

/// `∫ ρ(|x|^d) dx` over `R^d`.
pub fn spatial_mass(delta: Delta, dim: usize) -> f64 {
    unit_ball_volume(dim) * delta.tail_factor()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rho_examples() {
        assert_eq!(profile_rho(0.5, Delta::Finite(2.5)).unwrap(), 1.0);
        assert_eq!(profile_rho(2.0, Delta::Finite(2.0)).unwrap(), 0.25);
        assert_eq!(profile_rho(2.0, Delta::Infinite).unwrap(), 0.0);
        assert_eq!(profile_rho(1.0, Delta::Infinite).unwrap(), 1.0);
        assert!(profile_rho(-0.1, Delta::Infinite).is_err());
    }

    #[test]
    fn pi_examples() {
        assert_eq!(reciprocity_pi(1.0, 2.7).unwrap(), 1.0);
        assert_eq!(reciprocity_pi(4.0, 1.0).unwrap(), 0.25);
        assert_eq!(reciprocity_pi(10.0, 0.0).unwrap(), 1.0);
        assert!(reciprocity_pi(0.9, 1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::finite(0.0, 0.5, 2.0, 0.0, 1).is_err());
        assert!(ModelParams::finite(1.0, 1.0, 2.0, 0.0, 1).is_err());
        assert!(ModelParams::finite(1.0, 0.5, 1.0, 0.0, 1).is_err());
        assert!(ModelParams::finite(1.0, 0.5, 2.0, -0.1, 1).is_err());
        assert!(ModelParams::finite(1.0, 0.5, 2.0, 0.0, 0).is_err());
        assert!(ModelParams::new(1.0, 0.5, Delta::Infinite, 0.0, 3).is_ok());
    }

    #[test]
    fn forward_prob_example() {
        let p = ModelParams::new(1.0, 0.5, Delta::Infinite, 0.0, 1).unwrap();
        let y = Vertex { id: 0, location: vec![2.0], birth: 0.36, key: 1 };
        let o = Vertex { id: 1, location: vec![0.0], birth: 0.25, key: 2 };
        assert_eq!(forward_arc_prob(&y, &o, &p, &Metric::Euclidean).unwrap(), 1.0);
        assert!(forward_arc_prob(&o, &y, &p, &Metric::Euclidean).is_err());
        let same = Vertex { location: vec![0.0], ..y.clone() };
        assert_eq!(forward_arc_prob(&same, &o, &p, &Metric::Euclidean).unwrap(), 1.0);
    }

    #[test]
    fn torus_examples() {
        let s1 = TorusSpec::new(1.0, 1).unwrap();
        assert_relative_eq!(torus_distance(&[0.45], &[-0.45], &s1).unwrap(), 0.1, epsilon = 1e-12);
        assert_eq!(torus_distance(&[0.3], &[0.3], &s1).unwrap(), 0.0);
        let s2 = TorusSpec::new(1.0, 2).unwrap();
        assert_relative_eq!(
            torus_distance(&[0.4, 0.0], &[-0.4, 0.0], &s2).unwrap(),
            0.2,
            epsilon = 1e-12
        );
        assert!(torus_distance(&[0.1], &[0.1, 0.2], &s2).is_err());
    }

    #[test]
    fn rescale_examples() {
        let (x, b) = rescale_h(&[0.25], 0.5, 4.0).unwrap();
        assert_eq!((x[0], b), (1.0, 0.125));
        let (x, b) = rescale_h(&[0.25, -0.5], 0.5, 4.0).unwrap();
        assert_eq!((x.clone(), b), (vec![0.5, -1.0], 0.125));
        let (y, s) = rescale_h_inverse(&x, b, 4.0).unwrap();
        assert_eq!((y, s), (vec![0.25, -0.5], 0.5));
        let (x, b) = rescale_h(&[0.0], 0.3, 1.0).unwrap();
        assert_eq!((x[0], b), (0.0, 0.3));
        let (x0, b0) = rescale_h_inverse(&x, b, 1.0).unwrap();
        assert_eq!((x0[0], b0), (0.0, 0.3));
        assert!(rescale_h(&[0.1], 4.0, 4.0).is_err());
    }

    #[test]
    fn ball_volumes() {
        assert_relative_eq!(unit_ball_volume(1), 2.0, epsilon = 1e-14);
        assert_relative_eq!(unit_ball_volume(2), std::f64::consts::PI, epsilon = 1e-14);
        assert_relative_eq!(
            unit_ball_volume(3),
            4.0 * std::f64::consts::PI / 3.0,
            epsilon = 1e-13
        );
    }

    #[test]
    fn delta_serde() {
        let p = ModelParams::new(0.4, 0.35, Delta::Infinite, 1.0, 2).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"inf\""));
        let q: ModelParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        let bad = r#"{"beta":-1,"gamma":0.5,"delta":2,"Gamma":0,"dim":1}"#;
        assert!(serde_json::from_str::<ModelParams>(bad).is_err());
    }
}
