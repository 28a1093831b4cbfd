//! Exhaustive motif enumeration on small graphs.
//!
//! Everything here loops over ordered tuples of distinct vertices and shares no code with the fast
//! counters, so it can serve as their reference on graphs of up to about ten vertices.

use crate::generator::Digraph;

pub struct Brute {
    n: usize,
    adj: Vec<Vec<bool>>,
    births: Vec<f64>,
}

impl Brute {
    pub fn new(g: &Digraph) -> Self {
        let n = g.vertex_count();
        let adj = (0..n).map(|a| (0..n).map(|b| g.has_arc(a, b)).collect()).collect();
        Brute { n, adj, births: g.vertices().iter().map(|v| v.birth).collect() }
    }

    fn a(&self, x: usize, y: usize) -> bool {
        self.adj[x][y]
    }

    fn mutual(&self, x: usize, y: usize) -> bool {
        self.adj[x][y] && self.adj[y][x]
    }

    fn out_degree(&self, x: usize) -> usize {
        (0..self.n).filter(|&u| self.a(x, u)).count()
    }

    /// Ordered closed and open friend wedges centred at `x`.
    fn friend_counts(&self, x: usize) -> (u64, u64) {
        let (mut closed, mut open) = (0, 0);
        for y in 0..self.n {
            for z in 0..self.n {
                if x == y || x == z || y == z || !self.mutual(x, y) || !self.mutual(x, z) {
                    continue;
                }
                open += 1;
                if self.mutual(y, z) {
                    closed += 1;
                }
            }
        }
        (closed, open)
    }

    pub fn local_friend(&self, x: usize) -> f64 {
        let (closed, open) = self.friend_counts(x);
        if open == 0 {
            0.0
        } else {
            closed as f64 / open as f64
        }
    }

    pub fn average_friend(&self) -> f64 {
        let (mut s, mut k) = (0.0, 0u64);
        for x in 0..self.n {
            let friends = (0..self.n).filter(|&y| y != x && self.mutual(x, y)).count();
            if friends >= 2 {
                s += self.local_friend(x);
                k += 1;
            }
        }
        if k == 0 {
            0.0
        } else {
            s / k as f64
        }
    }

    pub fn global_friend(&self) -> f64 {
        let (mut closed, mut open) = (0u64, 0u64);
        for x in 0..self.n {
            let (c, o) = self.friend_counts(x);
            closed += c;
            open += o;
        }
        if open == 0 {
            0.0
        } else {
            closed as f64 / open as f64
        }
    }

    fn in_interest_set(&self, x: usize, y: usize) -> bool {
        x != y && self.out_degree(x) >= 2 && (0..self.n).any(|u| self.a(x, u) && self.a(y, u))
    }

    pub fn local_interest(&self, x: usize, y: usize) -> f64 {
        if !self.in_interest_set(x, y) {
            return 0.0;
        }
        let (mut num, mut den) = (0u64, 0u64);
        for u in 0..self.n {
            for v in 0..self.n {
                if u == v || !self.a(x, u) || !self.a(x, v) {
                    continue;
                }
                if self.a(y, u) && self.a(y, v) {
                    num += 2;
                }
                if self.a(y, u) || self.a(y, v) {
                    den += 1;
                }
            }
        }
        num as f64 / den as f64
    }

    pub fn average_interest(&self) -> f64 {
        // summed row by row so the rounding matches the fast counter
        let (mut s, mut k) = (0.0, 0u64);
        for x in 0..self.n {
            let mut row = 0.0;
            for y in 0..self.n {
                if self.in_interest_set(x, y) {
                    row += self.local_interest(x, y);
                    k += 1;
                }
            }
            s += row;
        }
        if k == 0 {
            0.0
        } else {
            s / k as f64
        }
    }

    fn quadruples(&self, floor: f64, mut f: impl FnMut(usize, usize, usize, usize)) {
        let n = self.n;
        for x in 0..n {
            for w in 0..n {
                for u in 0..n {
                    for v in 0..n {
                        let q = [x, w, u, v];
                        let distinct = (0..4).all(|i| (i + 1..4).all(|j| q[i] != q[j]));
                        if distinct && q.iter().all(|&i| self.births[i] > floor) {
                            f(x, w, u, v);
                        }
                    }
                }
            }
        }
    }

    pub fn global_interest(&self) -> f64 {
        let (mut num, mut den) = (0u64, 0u64);
        self.quadruples(f64::NEG_INFINITY, |x, w, u, v| {
            if self.a(x, u) && self.a(x, v) {
                if self.a(w, u) && self.a(w, v) {
                    num += 2;
                }
                if self.a(w, u) || self.a(w, v) {
                    den += 1;
                }
            }
        });
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    }

    pub fn bowties(&self, floor: f64) -> (u64, u64) {
        let (mut open, mut closed) = (0, 0);
        self.quadruples(floor, |x, w, u, v| {
            if self.a(x, u) && self.a(x, v) && self.a(w, v) {
                open += 1;
                if self.a(w, u) {
                    closed += 1;
                }
            }
        });
        (open, closed)
    }
}
