//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-14, rel: 1e-10, max_intervals: 4000 }
    }
}

impl Tolerance {
    pub fn rel(rel: f64) -> Self {
        Tolerance { rel, ..Default::default() }
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    let est = rk * h;
    (est, ((rk - rg) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Integral of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a < b) {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, val: v, err: e });
    let (mut total, mut err) = (v, e);
    let mut n = 1;
    while err > tol.abs.max(tol.rel * total.abs()) {
        if n >= tol.max_intervals {
            return Err(Error::Quadrature(format!(
                "[{a}, {b}] error {err:e} after {n} intervals"
            )));
        }
        let p = heap.pop().expect("heap is never empty");
        let m = 0.5 * (p.a + p.b);
        if !(m > p.a && m < p.b) {
            // interval at floating-point resolution; accept as is
            heap.push(Piece { err: 0.0, ..p });
            err = heap.iter().map(|q| q.err).sum();
            continue;
        }
        let (v1, e1) = gk15(&mut f, p.a, m);
        let (v2, e2) = gk15(&mut f, m, p.b);
        total += v1 + v2 - p.val;
        heap.push(Piece { a: p.a, b: m, val: v1, err: e1 });
        heap.push(Piece { a: m, b: p.b, val: v2, err: e2 });
        n += 1;
        // re-sum to avoid drift from repeated subtraction
        if n % 64 == 0 {
            total = heap.iter().map(|q| q.val).sum();
        }
        err = heap.iter().map(|q| q.err).sum();
    }
    Ok(heap.iter().map(|q| q.val).sum())
}

/// Integral over `[a, b]` split at the given interior points (unsorted, out-of-range points ignored).
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<f64> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut s = 0.0;
    for w in pts.windows(2) {
        s += integrate(&mut f, w[0], w[1], tol)?;
    }
    Ok(s)
}

/// Integral over `[a, ∞)` via `x = a + s/(1-s)`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: Tolerance) -> Result<f64> {
    integrate(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let w = 1.0 - s;
            let v = f(a + s / w);
            if v == 0.0 {
                0.0
            } else {
                v / (w * w)
            }
        },
        0.0,
        1.0,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomials_and_smooth() {
        let t = Tolerance::default();
        assert_relative_eq!(integrate(|x| x * x, 0.0, 3.0, t).unwrap(), 9.0, epsilon = 1e-12);
        assert_relative_eq!(
            integrate(f64::sin, 0.0, std::f64::consts::PI, t).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(integrate(|x| x, 1.0, 0.0, t).unwrap(), -0.5, epsilon = 1e-14);
    }

    #[test]
    fn singular_and_kinked() {
        let t = Tolerance::rel(1e-10);
        assert_relative_eq!(integrate(|x| x.powf(-0.5), 0.0, 1.0, t).unwrap(), 2.0, epsilon = 1e-8);
        let v = integrate_with_breaks(|x: f64| x.abs(), -1.0, 2.0, &[0.0], t).unwrap();
        assert_relative_eq!(v, 2.5, epsilon = 1e-12);
    }

    #[test]
    fn infinite_range() {
        let t = Tolerance::rel(1e-10);
        let v = integrate_to_infinity(|x: f64| (-x).exp(), 0.0, t).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-9);
        let v = integrate_to_infinity(|x: f64| x.powf(-2.5), 1.0, t).unwrap();
        assert_relative_eq!(v, 1.0 / 1.5, epsilon = 1e-9);
    }
}
