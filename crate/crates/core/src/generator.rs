//! Finite digraphs on the torus, the growing model, and exact Palm neighbourhoods.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marking::{
    hash_words, pair_mark, sample_vertices, tag, to_unit, Channel, KeyHalves, SampleMode, Seed,
};
use crate::model::{
    arc_present, pow_d_from_sq, spatial_mass, wrap_diff, Delta, Metric, ModelParams, TorusSpec,
    Vertex,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcKind {
    Forward,
    Reciprocal,
}

impl ArcKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ArcKind::Forward => "forward",
            ArcKind::Reciprocal => "reciprocal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Arc {
    pub target: usize,
    pub kind: ArcKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

/// A realized digraph. Out-lists are sorted by target.
#[derive(Debug, Clone, PartialEq)]
pub struct Digraph {
    vertices: Vec<Vertex>,
    out: Vec<Vec<Arc>>,
    metric: Metric,
}

impl Digraph {
    /// Builds a graph from explicit arcs. Duplicate arcs are collapsed; self-loops are rejected.
    pub fn from_arcs(
        vertices: Vec<Vertex>,
        arcs: &[(usize, usize, ArcKind)],
        metric: Metric,
    ) -> Result<Self> {
        let n = vertices.len();
        let mut out = vec![Vec::new(); n];
        for &(s, t, kind) in arcs {
            if s >= n {
                return Err(Error::UnknownVertex(s));
            }
            if t >= n {
                return Err(Error::UnknownVertex(t));
            }
            if s == t {
                return Err(Error::Domain(format!("self-loop at {s}")));
            }
            out[s].push(Arc { target: t, kind });
        }
        for l in &mut out {
            l.sort();
            l.dedup();
        }
        Ok(Digraph { vertices, out, metric })
    }

    /// Unlabelled vertices with births `1/(i+2)` for hand-built examples.
    pub fn from_plain_arcs(n: usize, arcs: &[(usize, usize)]) -> Result<Self> {
        let vertices = (0..n)
            .map(|i| Vertex { id: i, location: vec![0.0], birth: 1.0 / (i as f64 + 2.0), key: i as u64 })
            .collect();
        let arcs: Vec<_> = arcs.iter().map(|&(s, t)| (s, t, ArcKind::Forward)).collect();
        Self::from_arcs(vertices, &arcs, Metric::Euclidean)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn arc_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn out_arcs(&self, v: usize) -> Result<&[Arc]> {
        self.out.get(v).map(Vec::as_slice).ok_or(Error::UnknownVertex(v))
    }

    pub fn has_arc(&self, s: usize, t: usize) -> bool {
        self.out
            .get(s)
            .map(|l| l.iter().any(|a| a.target == t))
            .unwrap_or(false)
    }

    /// Sorted, deduplicated out-neighbour ids per vertex (arc kinds merged).
    pub fn out_neighbor_sets(&self) -> Vec<Vec<usize>> {
        self.out
            .iter()
            .map(|l| {
                let mut v: Vec<usize> = l.iter().map(|a| a.target).collect();
                v.dedup();
                v
            })
            .collect()
    }

    /// Sorted in-neighbour ids per vertex.
    pub fn in_neighbor_sets(&self) -> Vec<Vec<usize>> {
        let mut inn = vec![Vec::new(); self.vertices.len()];
        for (s, l) in self.out_neighbor_sets().into_iter().enumerate() {
            for t in l {
                inn[t].push(s);
            }
        }
        inn
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, Arc)> + '_ {
        self.out.iter().enumerate().flat_map(|(s, l)| l.iter().map(move |a| (s, *a)))
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out[v].len()
    }

    /// Checks the model invariants on arc orientation and reciprocation.
    pub fn check_invariants(&self) -> Result<()> {
        for (s, a) in self.arcs() {
            if s == a.target {
                return Err(Error::Precondition(format!("self-loop at {s}")));
            }
            let (bs, bt) = (self.vertices[s].birth, self.vertices[a.target].birth);
            match a.kind {
                ArcKind::Forward if !(bs > bt) => {
                    return Err(Error::Precondition(format!("forward arc {s}->{} not younger to older", a.target)))
                }
                ArcKind::Reciprocal => {
                    let matched = self.out[a.target]
                        .iter()
                        .any(|b| b.target == s && b.kind == ArcKind::Forward);
                    if !matched {
                        return Err(Error::Precondition(format!(
                            "reciprocal arc {s}->{} without forward arc",
                            a.target
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Adds the reverse of every arc. Reverses of forward arcs are labelled reciprocal.
pub fn as_undirected(g: &Digraph) -> Digraph {
    let mut extra: Vec<(usize, Arc)> = Vec::new();
    for (s, a) in g.arcs() {
        if !g.has_arc(a.target, s) {
            let kind = match a.kind {
                ArcKind::Forward => ArcKind::Reciprocal,
                ArcKind::Reciprocal => ArcKind::Forward,
            };
            extra.push((a.target, Arc { target: s, kind }));
        }
    }
    let mut out = g.out.clone();
    for (s, a) in extra {
        out[s].push(a);
    }
    for l in &mut out {
        l.sort();
        l.dedup();
    }
    Digraph { vertices: g.vertices.clone(), out, metric: g.metric }
}

/// Anything that can list the out-neighbours of a vertex in ascending id order.
pub trait OutNeighbors {
    fn vertex_count(&self) -> usize;
    fn out_neighbors_into(&self, v: usize, buf: &mut Vec<usize>);
}

impl OutNeighbors for Digraph {
    fn vertex_count(&self) -> usize {
        self.vertices.len()
    }
    fn out_neighbors_into(&self, v: usize, buf: &mut Vec<usize>) {
        buf.clear();
        buf.extend(self.out[v].iter().map(|a| a.target));
        buf.dedup();
    }
}

/// The graph on a fixed vertex set with arcs decided on demand from the pair marks.
///
/// Materializing it and querying it pair by pair give the same arc set.
pub struct ImplicitGraph {
    params: ModelParams,
    side: f64,
    dim: usize,
    coords: Vec<f64>,
    births: Vec<f64>,
    keys: Vec<u64>,
    t_gamma: Vec<f64>,
    t_one_minus_gamma: Vec<f64>,
    fwd: Vec<KeyHalves>,
    rec: Vec<KeyHalves>,
    vertices: Vec<Vertex>,
}

impl ImplicitGraph {
    /// `side` is the torus side length used for distances.
    pub fn new(params: ModelParams, side: f64, vertices: Vec<Vertex>, seed: Seed) -> Result<Self> {
        let dim = params.dim();
        let mut coords = Vec::with_capacity(vertices.len() * dim);
        for v in &vertices {
            if v.location.len() != dim {
                return Err(Error::Domain(format!(
                    "vertex {} has dimension {}, model has {dim}",
                    v.id,
                    v.location.len()
                )));
            }
            coords.extend_from_slice(&v.location);
        }
        let births: Vec<f64> = vertices.iter().map(|v| v.birth).collect();
        let keys: Vec<u64> = vertices.iter().map(|v| v.key).collect();
        let g = params.gamma();
        Ok(ImplicitGraph {
            params,
            side,
            dim,
            t_gamma: births.iter().map(|t| t.powf(g)).collect(),
            t_one_minus_gamma: births.iter().map(|t| t.powf(1.0 - g)).collect(),
            fwd: keys.iter().map(|&k| KeyHalves::new(seed, k, Channel::Forward)).collect(),
            rec: keys.iter().map(|&k| KeyHalves::new(seed, k, Channel::Reciprocal)).collect(),
            coords,
            births,
            keys,
            vertices,
        })
    }

    pub fn len(&self) -> usize {
        self.births.len()
    }

    pub fn is_empty(&self) -> bool {
        self.births.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    #[inline]
    fn dist_pow_d(&self, i: usize, j: usize) -> f64 {
        let d = self.dim;
        let (a, b) = (&self.coords[i * d..i * d + d], &self.coords[j * d..j * d + d]);
        if d == 1 {
            return wrap_diff(a[0], b[0], self.side);
        }
        let mut sq = 0.0;
        for k in 0..d {
            let x = wrap_diff(a[k], b[k], self.side);
            sq += x * x;
        }
        pow_d_from_sq(sq, d)
    }

    /// Forward arc from the younger `y` to the older `o`.
    #[inline]
    fn forward(&self, y: usize, o: usize) -> bool {
        let z = self.t_gamma[o] * self.t_one_minus_gamma[y] * self.dist_pow_d(y, o) / self.params.beta();
        if z <= 1.0 {
            return true;
        }
        if let Delta::Infinite = self.params.delta() {
            return false;
        }
        let u = pair_mark(self.keys[y], &self.fwd[y], self.keys[o], &self.fwd[o]);
        arc_present(z, u, self.params.delta())
    }

    /// Reciprocal arc from the older `o` back to `y`, given the forward arc.
    #[inline]
    fn reciprocal(&self, y: usize, o: usize) -> bool {
        let gam = self.params.big_gamma();
        if gam == 0.0 {
            return true;
        }
        let p = (self.births[y] / self.births[o]).powf(-gam);
        pair_mark(self.keys[y], &self.rec[y], self.keys[o], &self.rec[o]) < p
    }

    /// Arcs between `i` and `j` as `(i→j, j→i)`.
    #[inline]
    pub fn arcs_between(&self, i: usize, j: usize) -> (Option<ArcKind>, Option<ArcKind>) {
        let i_younger = self.births[i] > self.births[j];
        let (y, o) = if i_younger { (i, j) } else { (j, i) };
        if !self.forward(y, o) {
            return (None, None);
        }
        let back = self.reciprocal(y, o);
        let (yo, oy) = (Some(ArcKind::Forward), back.then_some(ArcKind::Reciprocal));
        if i_younger {
            (yo, oy)
        } else {
            (oy, yo)
        }
    }

    pub fn out_neighbors(&self, v: usize) -> Vec<usize> {
        let mut buf = Vec::new();
        self.out_neighbors_into(v, &mut buf);
        buf
    }

    pub fn in_neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&w| w != v && self.arcs_between(w, v).0.is_some())
            .collect()
    }

    /// Builds the full digraph by scanning all pairs (grid-pruned for the indicator profile).
    pub fn materialize(&self, metric: Metric) -> Digraph {
        let n = self.len();
        let rows: Vec<Vec<(usize, usize, ArcKind)>> = match self.params.delta() {
            Delta::Infinite => self.short_range_rows(),
            Delta::Finite(_) => (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut row = Vec::new();
                    for j in i + 1..n {
                        let (a, b) = self.arcs_between(i, j);
                        if let Some(k) = a {
                            row.push((i, j, k));
                        }
                        if let Some(k) = b {
                            row.push((j, i, k));
                        }
                    }
                    row
                })
                .collect(),
        };
        let mut out = vec![Vec::new(); n];
        for row in rows {
            for (s, t, kind) in row {
                out[s].push(Arc { target: t, kind });
            }
        }
        for l in &mut out {
            l.sort();
        }
        Digraph { vertices: self.vertices.clone(), out, metric }
    }

    /// Pair scan restricted by a bucket grid; each pair is examined from its lower index.
    fn short_range_rows(&self) -> Vec<Vec<(usize, usize, ArcKind)>> {
        let n = self.len();
        if n == 0 {
            return Vec::new();
        }
        let d = self.dim;
        let beta = self.params.beta();
        let tg_min = self.t_gamma.iter().copied().fold(f64::INFINITY, f64::min);
        let t1g_min = self.t_one_minus_gamma.iter().copied().fold(f64::INFINITY, f64::min);
        let per_axis = ((n as f64).powf(1.0 / d as f64).floor() as usize).clamp(1, 1 << 12);
        let cell = self.side / per_axis as f64;
        let bucket_of = |i: usize| -> Vec<usize> {
            (0..d)
                .map(|k| {
                    let x = self.coords[i * d + k] + self.side / 2.0;
                    ((x / cell).floor() as isize).clamp(0, per_axis as isize - 1) as usize
                })
                .collect()
        };
        let flat = |c: &[usize]| c.iter().fold(0usize, |acc, &x| acc * per_axis + x);
        let total_cells = per_axis.checked_pow(d as u32).unwrap_or(usize::MAX);
        if total_cells > 1 << 24 {
            return self.all_pairs_rows();
        }
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); total_cells];
        for i in 0..n {
            buckets[flat(&bucket_of(i))].push(i);
        }
        (0..n)
            .into_par_iter()
            .map(|i| {
                let r_pow = (beta / (tg_min * self.t_one_minus_gamma[i]))
                    .max(beta / (self.t_gamma[i] * t1g_min));
                let r = r_pow.powf(1.0 / d as f64);
                let reach = (r / cell).ceil() as usize + 1;
                let mut row = Vec::new();
                let consider = |j: usize, row: &mut Vec<(usize, usize, ArcKind)>| {
                    if j > i {
                        let (a, b) = self.arcs_between(i, j);
                        if let Some(k) = a {
                            row.push((i, j, k));
                        }
                        if let Some(k) = b {
                            row.push((j, i, k));
                        }
                    }
                };
                if 2 * reach + 1 >= per_axis {
                    for j in i + 1..n {
                        consider(j, &mut row);
                    }
                    return row;
                }
                let home = bucket_of(i);
                let span = 2 * reach + 1;
                let mut offs = vec![0usize; d];
                loop {
                    let c: Vec<usize> = (0..d)
                        .map(|k| (home[k] + per_axis + offs[k] - reach) % per_axis)
                        .collect();
                    for &j in &buckets[flat(&c)] {
                        consider(j, &mut row);
                    }
                    let mut k = 0;
                    loop {
                        if k == d {
                            return row;
                        }
                        offs[k] += 1;
                        if offs[k] < span {
                            break;
                        }
                        offs[k] = 0;
                        k += 1;
                    }
                }
            })
            .collect()
    }

    fn all_pairs_rows(&self) -> Vec<Vec<(usize, usize, ArcKind)>> {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = Vec::new();
                for j in i + 1..n {
                    let (a, b) = self.arcs_between(i, j);
                    if let Some(k) = a {
                        row.push((i, j, k));
                    }
                    if let Some(k) = b {
                        row.push((j, i, k));
                    }
                }
                row
            })
            .collect()
    }
}

impl OutNeighbors for ImplicitGraph {
    fn vertex_count(&self) -> usize {
        self.len()
    }
    fn out_neighbors_into(&self, v: usize, buf: &mut Vec<usize>) {
        buf.clear();
        for w in 0..self.len() {
            if w != v && self.arcs_between(v, w).0.is_some() {
                buf.push(w);
            }
        }
    }
}

pub fn generate_torus(
    params: &ModelParams,
    spec: &TorusSpec,
    mode: SampleMode,
    seed: Seed,
) -> Result<Digraph> {
    check_spec(params, spec)?;
    let vertices = sample_vertices(seed, spec, mode)?;
    let g = ImplicitGraph::new(*params, spec.side(), vertices, seed)?;
    Ok(g.materialize(Metric::Torus(*spec)))
}

fn check_spec(params: &ModelParams, spec: &TorusSpec) -> Result<()> {
    if params.dim() != spec.dim() {
        return Err(Error::param(
            "dim",
            format!("model dimension {} differs from torus dimension {}", params.dim(), spec.dim()),
        ));
    }
    Ok(())
}

/// Key of the Palm root for a given seed, distinct from every ambient key.
fn root_key(seed: Seed, ambient: &[Vertex]) -> u64 {
    let mut attempt = 0u64;
    loop {
        let k = hash_words(seed, &[tag::ROOT, attempt]);
        if ambient.iter().all(|v| v.key != k) {
            return k;
        }
        attempt += 1;
    }
}

/// Ambient Poisson vertices plus a root at the origin, as an implicit graph. The root is the last vertex.
pub fn palm_implicit(
    params: &ModelParams,
    spec: &TorusSpec,
    seed: Seed,
    birth: Option<f64>,
) -> Result<(ImplicitGraph, usize)> {
    check_spec(params, spec)?;
    let u = match birth {
        Some(b) if !(b > 0.0 && b < 1.0) => {
            return Err(Error::Domain(format!("root birth {b} outside (0,1)")))
        }
        Some(b) => b,
        None => to_unit(hash_words(seed, &[tag::ROOT_BIRTH])),
    };
    let mut vertices = sample_vertices(seed, spec, SampleMode::PoissonCount)?;
    if vertices.iter().any(|v| v.birth == u) {
        return Err(Error::Domain(format!("root birth {u} coincides with an ambient birth")));
    }
    let key = root_key(seed, &vertices);
    let id = vertices.len();
    vertices.push(Vertex { id, location: vec![0.0; spec.dim()], birth: u, key });
    Ok((ImplicitGraph::new(*params, spec.side(), vertices, seed)?, id))
}

pub fn add_palm_root(
    params: &ModelParams,
    spec: &TorusSpec,
    seed: Seed,
    birth: Option<f64>,
) -> Result<(Digraph, usize)> {
    let (g, root) = palm_implicit(params, spec, seed, birth)?;
    Ok((g.materialize(Metric::Torus(*spec)), root))
}

/// The growing model on the unit torus up to time `horizon`, with raw arrival times as births.
pub fn grow_sequential(params: &ModelParams, horizon: f64, seed: Seed) -> Result<Digraph> {
    let vertices = grow_vertices(params.dim(), horizon, seed)?;
    let g = ImplicitGraph::new(*params, 1.0, vertices, seed)?;
    Ok(g.materialize(Metric::Torus(TorusSpec::new(1.0, params.dim())?)))
}

/// Arrivals of the growing model: exponential waiting times, uniform positions on the unit torus.
pub fn grow_vertices(dim: usize, horizon: f64, seed: Seed) -> Result<Vec<Vertex>> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::param("horizon", format!("must be positive, got {horizon}")));
    }
    let mut out = Vec::new();
    let mut t = 0.0;
    for i in 0u64.. {
        t += -to_unit(hash_words(seed, &[tag::GROW_WAIT, i])).ln();
        if t > horizon {
            break;
        }
        let location = (0..dim as u64)
            .map(|axis| {
                let x = to_unit(hash_words(seed, &[tag::GROW_POS, dim as u64, i, axis])) - 0.5;
                if x >= 0.5 {
                    -0.5
                } else {
                    x
                }
            })
            .collect();
        let key = hash_words(seed, &[tag::GROW_KEY, i]);
        out.push(Vertex { id: i as usize, location, birth: t, key });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PalmNeighbor {
    pub location: Vec<f64>,
    pub birth: f64,
    pub kind: ArcKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PalmNeighborhood {
    pub root_birth: f64,
    pub direction: Direction,
    pub neighbors: Vec<PalmNeighbor>,
}

impl PalmNeighborhood {
    pub fn count(&self, kind: ArcKind) -> usize {
        self.neighbors.iter().filter(|n| n.kind == kind).count()
    }
}

fn check_root_birth(u: f64) -> Result<()> {
    if !(u > 0.0 && u <= 1.0) {
        return Err(Error::Domain(format!("root birth {u} outside (0,1]")));
    }
    Ok(())
}

/// Mean neighbour counts `(forward, reciprocal)` of a root with birth `u`.
pub fn palm_means(params: &ModelParams, u: f64, direction: Direction) -> (f64, f64) {
    let c = params.degree_constant();
    let g = params.gamma();
    let gg = params.big_gamma();
    match direction {
        Direction::Out => (c / (1.0 - g), crate::degrees::mu_rec_unchecked(params, u)),
        Direction::In => (c * (u.powf(-g) - 1.0) / g, c / (1.0 + gg - g)),
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

/// Neighbour counts `(forward, reciprocal)` of a Palm root, without locations.
pub fn sample_palm_counts<R: Rng + ?Sized>(
    params: &ModelParams,
    u: f64,
    direction: Direction,
    rng: &mut R,
) -> (u64, u64) {
    let (mf, mr) = palm_means(params, u, direction);
    (poisson(mf, rng), poisson(mr, rng))
}

/// Total degrees of `n` independent Palm roots with uniform births.
pub fn palm_degree_samples(params: &ModelParams, direction: Direction, n: usize, seed: Seed) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    (0..n)
        .map(|_| {
            let u = open_unit(&mut rng);
            let (f, r) = sample_palm_counts(params, u, direction, &mut rng);
            f + r
        })
        .collect()
}

/// Birth of a neighbour drawn from the normalized mark density. `p` is uniform on (0,1).
pub(crate) fn neighbor_birth(params: &ModelParams, u: f64, direction: Direction, kind: ArcKind, p: f64) -> f64 {
    let g = params.gamma();
    let e = g - params.big_gamma();
    match (direction, kind) {
        // older, density ∝ s^{-γ} on (0,u)
        (Direction::Out, ArcKind::Forward) => u * p.powf(1.0 / (1.0 - g)),
        // younger, density ∝ s^{γ-Γ-1} on (u,1)
        (Direction::Out, ArcKind::Reciprocal) => power_on_interval(u, e, p),
        // younger, density ∝ s^{γ-1} on (u,1)
        (Direction::In, ArcKind::Forward) => power_on_interval(u, g, p),
        // older, density ∝ s^{Γ-γ} on (0,u)
        (Direction::In, ArcKind::Reciprocal) => u * p.powf(1.0 / (1.0 - e)),
    }
}

/// Inverse CDF of the density `∝ s^{e-1}` on `(u, 1)`.
fn power_on_interval(u: f64, e: f64, p: f64) -> f64 {
    if e == 0.0 {
        u.powf(1.0 - p)
    } else {
        let ue = u.powf(e);
        (ue + p * (1.0 - ue)).powf(1.0 / e).clamp(u, 1.0)
    }
}

/// Coefficient `a` in `ρ(a·|y|^d)` for a neighbour with birth `s` of a root with birth `u`.
pub(crate) fn spatial_coefficient(params: &ModelParams, u: f64, s: f64) -> f64 {
    let (old, young) = if s < u { (s, u) } else { (u, s) };
    old.powf(params.gamma()) * young.powf(1.0 - params.gamma()) / params.beta()
}

/// CDF of `|Y|` when `Y` has density proportional to `ρ(a·|y|^d)` on `R^d`.
pub fn radial_cdf(r: f64, a: f64, delta: Delta, dim: usize) -> f64 {
    let v = a * r.powi(dim as i32);
    match delta {
        Delta::Infinite => v.min(1.0),
        Delta::Finite(d) => {
            if v <= 1.0 {
                v * (d - 1.0) / d
            } else {
                1.0 - v.powf(1.0 - d) / d
            }
        }
    }
}

/// Inverse of [`radial_cdf`].
pub fn radial_quantile(p: f64, a: f64, delta: Delta, dim: usize) -> f64 {
    let v = match delta {
        Delta::Infinite => p,
        Delta::Finite(d) => {
            let knee = (d - 1.0) / d;
            if p <= knee {
                p * d / (d - 1.0)
            } else {
                (d * (1.0 - p)).powf(-1.0 / (d - 1.0))
            }
        }
    };
    (v / a).powf(1.0 / dim as f64)
}

pub(crate) fn random_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    if dim == 1 {
        return vec![if rng.random::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Location relative to the root of a neighbour whose spatial density is `∝ ρ(a·|y|^d)`.
pub(crate) fn sample_offset<R: Rng + ?Sized>(a: f64, delta: Delta, dim: usize, rng: &mut R) -> Vec<f64> {
    let r = radial_quantile(open_unit(rng), a, delta, dim);
    random_direction(dim, rng).into_iter().map(|x| x * r).collect()
}

pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let p: f64 = rng.random();
        if p > 0.0 {
            return p;
        }
    }
}

pub fn sample_palm_neighborhood_with<R: Rng + ?Sized>(
    params: &ModelParams,
    u: f64,
    direction: Direction,
    rng: &mut R,
) -> Result<PalmNeighborhood> {
    check_root_birth(u)?;
    let (nf, nr) = sample_palm_counts(params, u, direction, rng);
    let mut neighbors = Vec::with_capacity((nf + nr) as usize);
    for (kind, n) in [(ArcKind::Forward, nf), (ArcKind::Reciprocal, nr)] {
        for _ in 0..n {
            let s = neighbor_birth(params, u, direction, kind, open_unit(rng));
            let a = spatial_coefficient(params, u, s);
            let location = sample_offset(a, params.delta(), params.dim(), rng);
            neighbors.push(PalmNeighbor { location, birth: s, kind });
        }
    }
    Ok(PalmNeighborhood { root_birth: u, direction, neighbors })
}

pub fn sample_palm_out_neighborhood(params: &ModelParams, u: f64, seed: Seed) -> Result<PalmNeighborhood> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    sample_palm_neighborhood_with(params, u, Direction::Out, &mut rng)
}

pub fn sample_palm_in_neighborhood(params: &ModelParams, u: f64, seed: Seed) -> Result<PalmNeighborhood> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    sample_palm_neighborhood_with(params, u, Direction::In, &mut rng)
}

/// Total `∫ρ` over space, exposed for oracles.
pub fn profile_integral(delta: Delta, dim: usize) -> f64 {
    spatial_mass(delta, dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, integrate_to_infinity, Tolerance};
    use approx::assert_relative_eq;

    fn params(gg: f64) -> ModelParams {
        ModelParams::finite(0.4, 0.35, 2.5, gg, 2).unwrap()
    }

    #[test]
    fn radial_cdf_matches_quadrature() {
        for (delta, dim, a) in [
            (Delta::Finite(2.5), 1, 0.7),
            (Delta::Finite(1.5), 2, 2.0),
            (Delta::Finite(4.0), 3, 0.3),
            (Delta::Infinite, 2, 1.3),
        ] {
            let surface = dim as f64 * crate::model::unit_ball_volume(dim);
            let dens = |r: f64| surface * r.powi(dim as i32 - 1) * crate::model::rho(a * r.powi(dim as i32), delta);
            let total = spatial_mass(delta, dim) / a;
            let knee = a.powf(-1.0 / dim as f64);
            for r in [0.3 * knee, knee, 2.0 * knee, 10.0 * knee] {
                let inner = integrate(dens, 0.0, r.min(knee), Tolerance::rel(1e-12)).unwrap()
                    + if r > knee { integrate(dens, knee, r, Tolerance::rel(1e-12)).unwrap() } else { 0.0 };
                assert_relative_eq!(radial_cdf(r, a, delta, dim), inner / total, epsilon = 1e-9);
                let p = radial_cdf(r, a, delta, dim);
                if p < 1.0 {
                    assert_relative_eq!(radial_quantile(p, a, delta, dim), r, max_relative = 1e-6);
                }
            }
            if delta.is_finite() {
                let all = integrate(dens, 0.0, knee, Tolerance::rel(1e-12)).unwrap()
                    + integrate_to_infinity(dens, knee, Tolerance::rel(1e-12)).unwrap();
                assert_relative_eq!(all, total, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn birth_quantiles_hit_their_intervals() {
        let p = params(1.0);
        for q in [1e-9, 0.3, 0.999_999] {
            let s = neighbor_birth(&p, 0.4, Direction::Out, ArcKind::Forward, q);
            assert!(s > 0.0 && s < 0.4);
            let s = neighbor_birth(&p, 0.4, Direction::Out, ArcKind::Reciprocal, q);
            assert!(s > 0.4 && s <= 1.0);
            let s = neighbor_birth(&p, 0.4, Direction::In, ArcKind::Forward, q);
            assert!(s > 0.4 && s <= 1.0);
            let s = neighbor_birth(&p, 0.4, Direction::In, ArcKind::Reciprocal, q);
            assert!(s > 0.0 && s < 0.4);
        }
        let eq = ModelParams::finite(0.4, 0.35, 2.5, 0.35, 2).unwrap();
        let s = neighbor_birth(&eq, 0.25, Direction::Out, ArcKind::Reciprocal, 0.5);
        assert_relative_eq!(s, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn palm_orientation_and_root_at_one() {
        let p = params(0.5);
        let out = sample_palm_out_neighborhood(&p, 0.3, Seed(5)).unwrap();
        for n in &out.neighbors {
            match n.kind {
                ArcKind::Forward => assert!(n.birth < 0.3),
                ArcKind::Reciprocal => assert!(n.birth > 0.3),
            }
        }
        let inn = sample_palm_in_neighborhood(&p, 0.3, Seed(5)).unwrap();
        for n in &inn.neighbors {
            match n.kind {
                ArcKind::Forward => assert!(n.birth > 0.3),
                ArcKind::Reciprocal => assert!(n.birth < 0.3),
            }
        }
        for s in 0..50 {
            let o = sample_palm_out_neighborhood(&p, 1.0, Seed(s)).unwrap();
            assert_eq!(o.count(ArcKind::Reciprocal), 0);
            let i = sample_palm_in_neighborhood(&p, 1.0, Seed(s)).unwrap();
            assert_eq!(i.count(ArcKind::Forward), 0);
        }
        assert!(sample_palm_out_neighborhood(&p, 0.0, Seed(1)).is_err());
        assert!(sample_palm_out_neighborhood(&p, 1.5, Seed(1)).is_err());
    }

    #[test]
    fn as_undirected_examples() {
        let g = Digraph::from_plain_arcs(2, &[(1, 0)]).unwrap();
        let u = as_undirected(&g);
        assert!(u.has_arc(1, 0) && u.has_arc(0, 1));
        assert_eq!(as_undirected(&u), u);
    }
}
