//! Counter-based marks for vertices and vertex pairs.
//!
//! Everything random in a realized graph is a pure function of a 64-bit seed and
//! integer counters, so the same vertex or pair receives the same mark no matter
//! which box it is sampled in. The byte-level layout is described in the README.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{TorusSpec, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

pub type VertexKey = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Forward,
    Reciprocal,
}

impl Channel {
    fn word(self) -> u64 {
        match self {
            Channel::Forward => 1,
            Channel::Reciprocal => 2,
        }
    }
}

pub(crate) const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const SEED_SALT: u64 = 0x6A09_E667_F3BC_C909;

pub(crate) mod tag {
    pub const CELL_COUNT: u64 = 0x10;
    pub const CELL_POS: u64 = 0x11;
    pub const CELL_BIRTH: u64 = 0x12;
    pub const FIXED_POS: u64 = 0x20;
    pub const FIXED_BIRTH: u64 = 0x21;
    pub const EDGE_LO: u64 = 0x30;
    pub const EDGE_HI: u64 = 0x31;
    pub const ROOT: u64 = 0x40;
    pub const ROOT_BIRTH: u64 = 0x41;
    pub const GROW_WAIT: u64 = 0x50;
    pub const GROW_POS: u64 = 0x51;
    pub const GROW_KEY: u64 = 0x52;
    pub const REPLICATE: u64 = 0x60;
    pub const STREAM: u64 = 0x70;
}

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Absorbs `words` into a 64-bit state initialised from the seed.
#[inline]
pub fn hash_words(seed: Seed, words: &[u64]) -> u64 {
    let mut h = mix64(seed.0 ^ SEED_SALT);
    for &w in words {
        h = mix64(h.wrapping_add(GOLDEN) ^ w);
    }
    h
}

/// Top 52 bits mapped to the open interval (0,1).
#[inline]
pub fn to_unit(h: u64) -> f64 {
    ((h >> 12) as f64 + 0.5) * (1.0 / 4_503_599_627_370_496.0)
}

/// Derived seed for the `index`-th replicate of an experiment.
pub fn replicate_seed(seed: Seed, index: u64) -> Seed {
    Seed(hash_words(seed, &[tag::REPLICATE, index]))
}

/// Seed for a sequential RNG stream labelled by `label`.
pub fn stream_seed(seed: Seed, label: u64) -> u64 {
    hash_words(seed, &[tag::STREAM, label])
}

/// Per-vertex halves of the pair hash, precomputable once per vertex.
#[derive(Debug, Clone, Copy)]
pub(crate) struct KeyHalves {
    lo: u64,
    hi: u64,
}

impl KeyHalves {
    #[inline]
    pub(crate) fn new(seed: Seed, key: VertexKey, channel: Channel) -> Self {
        KeyHalves {
            lo: hash_words(seed, &[tag::EDGE_LO, channel.word(), key]),
            hi: hash_words(seed, &[tag::EDGE_HI, channel.word(), key]),
        }
    }
}

/// Mark of a pair given the halves of both endpoints; `a_key` and `b_key` order the pair.
#[inline]
pub(crate) fn pair_mark(a_key: VertexKey, a: &KeyHalves, b_key: VertexKey, b: &KeyHalves) -> f64 {
    let (lo, hi) = if a_key < b_key { (a.lo, b.hi) } else { (b.lo, a.hi) };
    to_unit(mix64(lo ^ hi))
}

pub fn edge_mark(seed: Seed, a: VertexKey, b: VertexKey, channel: Channel) -> Result<f64> {
    if a == b {
        return Err(Error::Domain("edge mark requested for a self-pair".into()));
    }
    let ha = KeyHalves::new(seed, a, channel);
    let hb = KeyHalves::new(seed, b, channel);
    Ok(pair_mark(a, &ha, b, &hb))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "n")]
pub enum SampleMode {
    PoissonCount,
    FixedCount(i64),
}

/// Side of the cells that partition space for Poisson sampling.
pub const CELL_SIDE: f64 = 1.0;

/// Points of the unit-intensity marked Poisson process (or `N` uniform points) in the box of `spec`,
/// centred at the origin.
pub fn sample_vertices(seed: Seed, spec: &TorusSpec, mode: SampleMode) -> Result<Vec<Vertex>> {
    let mut out = match mode {
        SampleMode::FixedCount(n) => {
            if n < 0 {
                return Err(Error::param("N", format!("must be nonnegative, got {n}")));
            }
            fixed_points(seed, spec, n as u64)
        }
        SampleMode::PoissonCount => cell_points(seed, spec),
    };
    resolve_birth_collisions(&mut out);
    for (i, v) in out.iter_mut().enumerate() {
        v.id = i;
    }
    Ok(out.into_iter().map(|p| p.vertex).collect())
}

struct Draft {
    vertex: Vertex,
    /// Hash words that identify the point, reused when its birth must be re-derived.
    words: Vec<u64>,
    attempt: u64,
    seed: Seed,
}

impl std::ops::Deref for Draft {
    type Target = Vertex;
    fn deref(&self) -> &Vertex {
        &self.vertex
    }
}

impl std::ops::DerefMut for Draft {
    fn deref_mut(&mut self) -> &mut Vertex {
        &mut self.vertex
    }
}

impl Draft {
    fn derive_birth(&mut self) {
        let mut w = self.words.clone();
        w.push(self.attempt);
        let key = hash_words(self.seed, &w);
        self.vertex.key = key;
        self.vertex.birth = to_unit(key);
    }
}

fn fixed_points(seed: Seed, spec: &TorusSpec, n: u64) -> Vec<Draft> {
    let d = spec.dim() as u64;
    let side = spec.side();
    (0..n)
        .map(|j| {
            let location = (0..d)
                .map(|axis| {
                    let u = to_unit(hash_words(seed, &[tag::FIXED_POS, d, j, axis]));
                    reduce((u - 0.5) * side, side)
                })
                .collect();
            let mut draft = Draft {
                vertex: Vertex { id: 0, location, birth: 0.0, key: 0 },
                words: vec![tag::FIXED_BIRTH, d, j],
                attempt: 0,
                seed,
            };
            draft.derive_birth();
            draft
        })
        .collect()
}

/// Guards against `(u - 0.5) * side` rounding up to exactly `side/2`.
fn reduce(x: f64, side: f64) -> f64 {
    if x >= side * 0.5 {
        -side * 0.5
    } else {
        x
    }
}

/// Number of points in a unit-volume cell, by inversion of the Poisson(1) distribution.
fn poisson_one(u: f64) -> u64 {
    let mut k = 0u64;
    let mut p = (-1.0f64).exp();
    let mut cdf = p;
    while u > cdf && k < 64 {
        k += 1;
        p /= k as f64;
        cdf += p;
    }
    k
}

fn cell_points(seed: Seed, spec: &TorusSpec) -> Vec<Draft> {
    let d = spec.dim();
    let half = spec.side() / 2.0;
    let lo = (-half / CELL_SIDE).floor() as i64;
    let hi = (half / CELL_SIDE).ceil() as i64;
    let mut out = Vec::new();
    let mut idx = vec![lo; d];
    loop {
        let cell: Vec<u64> = idx.iter().map(|&c| c as u64).collect();
        let with = |t: u64, extra: &[u64]| -> Vec<u64> {
            let mut w = Vec::with_capacity(d + 4);
            w.push(t);
            w.push(d as u64);
            w.extend_from_slice(&cell);
            w.extend_from_slice(extra);
            w
        };
        let count = poisson_one(to_unit(hash_words(seed, &with(tag::CELL_COUNT, &[]))));
        for j in 0..count {
            let location: Vec<f64> = (0..d)
                .map(|axis| {
                    let u = to_unit(hash_words(seed, &with(tag::CELL_POS, &[j, axis as u64])));
                    (idx[axis] as f64 + u) * CELL_SIDE
                })
                .collect();
            if !location.iter().all(|&c| c >= -half && c < half) {
                continue;
            }
            let mut draft = Draft {
                vertex: Vertex { id: 0, location, birth: 0.0, key: 0 },
                words: with(tag::CELL_BIRTH, &[j]),
                attempt: 0,
                seed,
            };
            draft.derive_birth();
            out.push(draft);
        }
        // odometer over cell indices
        let mut axis = 0;
        loop {
            if axis == d {
                return out;
            }
            idx[axis] += 1;
            if idx[axis] < hi {
                break;
            }
            idx[axis] = lo;
            axis += 1;
        }
    }
}

/// Re-derives births until all are pairwise distinct. The later point in generation order moves.
fn resolve_birth_collisions(points: &mut [Draft]) {
    loop {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a].birth.total_cmp(&points[b].birth).then(a.cmp(&b)));
        let mut clash = None;
        for w in order.windows(2) {
            if points[w[0]].birth == points[w[1]].birth {
                clash = Some(w[0].max(w[1]));
                break;
            }
        }
        match clash {
            None => return,
            Some(i) => {
                points[i].attempt += 1;
                points[i].derive_birth();
            }
        }
    }
}
