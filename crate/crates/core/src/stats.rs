//! Tail-exponent fits, goodness-of-fit tests, confidence intervals and trend verdicts.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

use crate::degrees::{DegreeHistogram, Pmf};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KMin {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub tail_fraction: f64,
    pub k_min: f64,
    pub n_tail: usize,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Exponent of the probability mass (or density) function.
    pub estimate: f64,
    pub stderr: f64,
    pub k_min: f64,
    pub n_tail: usize,
    pub sensitivity: Vec<SensitivityRow>,
    /// False when the estimate drifts strongly across the `k_min` grid.
    pub power_law_plausible: bool,
}

const MIN_TAIL: usize = 100;
const DRIFT_LIMIT: f64 = 0.2;

/// Hill estimate `1 + α̂` from samples at or above `k_min`. For integer data the threshold is shifted by 1/2.
fn hill(sorted_desc: &[f64], k_min: f64, discrete: bool) -> Result<(f64, f64, usize)> {
    let n_tail = sorted_desc.partition_point(|&x| x >= k_min);
    if n_tail < MIN_TAIL {
        return Err(Error::InsufficientData(format!(
            "{n_tail} samples at or above k_min = {k_min}, need {MIN_TAIL}"
        )));
    }
    let tail = &sorted_desc[..n_tail];
    if tail[0] == tail[n_tail - 1] {
        return Err(Error::InsufficientData("tail samples are all equal".into()));
    }
    let base = if discrete { k_min - 0.5 } else { k_min };
    if base <= 0.0 {
        return Err(Error::InsufficientData(format!("k_min = {k_min} must be positive")));
    }
    let s: f64 = tail.iter().map(|&x| (x / base).ln()).sum();
    let alpha = n_tail as f64 / s;
    Ok((1.0 + alpha, alpha / (n_tail as f64).sqrt(), n_tail))
}

pub fn fit_tail_exponent(samples: &[f64], k_min: KMin, discrete: bool) -> Result<FitResult> {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(|a, b| b.total_cmp(a));
    match k_min {
        KMin::Fixed(k) => {
            let (estimate, stderr, n_tail) = hill(&xs, k, discrete)?;
            Ok(FitResult {
                estimate,
                stderr,
                k_min: k,
                n_tail,
                sensitivity: vec![SensitivityRow { tail_fraction: n_tail as f64 / xs.len() as f64, k_min: k, n_tail, estimate }],
                power_law_plausible: true,
            })
        }
        KMin::Auto => {
            let n = xs.len();
            let mut rows = Vec::new();
            for i in 1..=10 {
                let f = i as f64 / 100.0;
                let rank = ((f * n as f64).ceil() as usize).clamp(1, n.max(1));
                if n == 0 {
                    break;
                }
                let k = xs[rank - 1];
                if let Ok((estimate, _, n_tail)) = hill(&xs, k, discrete) {
                    rows.push(SensitivityRow { tail_fraction: f, k_min: k, n_tail, estimate });
                }
            }
            if rows.is_empty() {
                return Err(Error::InsufficientData(format!(
                    "no usable tail among {n} samples"
                )));
            }
            // most stable window of three consecutive grid points
            let w = rows.len().min(3);
            let mut best = 0;
            let mut best_spread = f64::INFINITY;
            for s in 0..=rows.len() - w {
                let win = &rows[s..s + w];
                let hi = win.iter().map(|r| r.estimate).fold(f64::NEG_INFINITY, f64::max);
                let lo = win.iter().map(|r| r.estimate).fold(f64::INFINITY, f64::min);
                if hi - lo < best_spread {
                    best_spread = hi - lo;
                    best = s;
                }
            }
            let centre = &rows[best + w / 2];
            let (estimate, stderr, n_tail) = hill(&xs, centre.k_min, discrete)?;
            let first = rows.first().map(|r| r.estimate).unwrap_or(estimate);
            let last = rows.last().map(|r| r.estimate).unwrap_or(estimate);
            let drift = (first - last).abs() / estimate;
            Ok(FitResult {
                estimate,
                stderr,
                k_min: centre.k_min,
                n_tail,
                sensitivity: rows,
                power_law_plausible: drift <= DRIFT_LIMIT,
            })
        }
    }
}

/// Tail fit on the degrees of a histogram.
pub fn fit_hist_tail(hist: &DegreeHistogram, k_min: KMin) -> Result<FitResult> {
    let xs: Vec<f64> = hist.samples().into_iter().map(|k| k as f64).collect();
    fit_tail_exponent(&xs, k_min, true)
}

/// Negative slope of log frequency against log degree over `[k_lo, k_hi]`, on logarithmic bins.
pub fn loglog_slope(hist: &DegreeHistogram, k_lo: u64, k_hi: u64) -> Result<f64> {
    if k_lo == 0 || k_hi <= k_lo {
        return Err(Error::InsufficientData("degree range must satisfy 0 < k_lo < k_hi".into()));
    }
    let n = hist.total as f64;
    let mut pts = Vec::new();
    let mut a = k_lo as f64;
    while a < k_hi as f64 {
        let b = (a * 1.25).max(a + 1.0).min(k_hi as f64 + 1.0);
        let (lo, hi) = (a.ceil() as u64, b.ceil() as u64);
        let c: u64 = hist.counts.range(lo..hi).map(|(_, &c)| c).sum();
        let width = (hi - lo) as f64;
        if c > 0 && width > 0.0 {
            let centre = ((lo as f64) * ((hi - 1) as f64)).sqrt().max(lo as f64);
            pts.push((centre.ln(), (c as f64 / n / width).ln()));
        }
        a = b;
    }
    if pts.len() < 3 {
        return Err(Error::InsufficientData("fewer than three populated bins".into()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(-sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

pub const MIN_GOF_TOTAL: u64 = 200;
const MIN_EXPECTED: f64 = 5.0;

fn chi_square_sf(stat: f64, dof: usize) -> f64 {
    let d = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    d.sf(stat)
}

/// Pearson chi-square test of a degree histogram against an oracle law.
pub fn gof_test(hist: &DegreeHistogram, oracle: &Pmf) -> Result<GofResult> {
    if hist.total < MIN_GOF_TOTAL {
        return Err(Error::InsufficientData(format!(
            "{} samples, need at least {MIN_GOF_TOTAL}",
            hist.total
        )));
    }
    let mass = oracle.total();
    if !((mass - 1.0).abs() <= 1e-6) {
        return Err(Error::Oracle(format!("oracle mass {mass} differs from 1 by more than 1e-6")));
    }
    let n = hist.total as f64;
    // bins as (observed, expected)
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    let mut remaining = mass;
    let kmax = oracle.values.len() as u64;
    for k in 0..kmax {
        let p = oracle.values[k as usize];
        obs += hist.count(k) as f64;
        exp += n * p;
        remaining -= p;
        if exp >= MIN_EXPECTED && n * remaining >= MIN_EXPECTED {
            bins.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    // tail bin: everything not yet closed plus the mass beyond the table
    obs += hist.counts.range(kmax..).map(|(_, &c)| c as f64).sum::<f64>();
    exp += n * remaining.max(0.0);
    if exp >= MIN_EXPECTED || bins.is_empty() {
        bins.push((obs, exp));
    } else {
        let last = bins.last_mut().expect("nonempty");
        last.0 += obs;
        last.1 += exp;
    }
    if bins.len() < 2 {
        return Err(Error::InsufficientData("fewer than two bins after merging".into()));
    }
    let stat: f64 = bins.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = bins.len() - 1;
    Ok(GofResult { statistic: stat, dof, p_value: chi_square_sf(stat, dof), bins: bins.len() })
}

/// Chi-square test of homogeneity between two degree histograms.
pub fn two_sample_test(a: &DegreeHistogram, b: &DegreeHistogram) -> Result<GofResult> {
    if a.total < MIN_GOF_TOTAL || b.total < MIN_GOF_TOTAL {
        return Err(Error::InsufficientData(format!(
            "samples {} and {}, need at least {MIN_GOF_TOTAL} each",
            a.total, b.total
        )));
    }
    let (na, nb) = (a.total as f64, b.total as f64);
    let n = na + nb;
    let kmax = a.max_degree().max(b.max_degree());
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut oa, mut ob) = (0.0, 0.0);
    for k in 0..=kmax {
        oa += a.count(k) as f64;
        ob += b.count(k) as f64;
        let s = oa + ob;
        if na * s / n >= MIN_EXPECTED && nb * s / n >= MIN_EXPECTED {
            bins.push((oa, ob));
            oa = 0.0;
            ob = 0.0;
        }
    }
    if oa + ob > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += oa;
                last.1 += ob;
            }
            None => bins.push((oa, ob)),
        }
    }
    if bins.len() < 2 {
        return Err(Error::InsufficientData("fewer than two bins after merging".into()));
    }
    let mut stat = 0.0;
    for &(x, y) in &bins {
        let s = x + y;
        let (ea, eb) = (na * s / n, nb * s / n);
        stat += (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb;
    }
    let dof = bins.len() - 1;
    Ok(GofResult { statistic: stat, dof, p_value: chi_square_sf(stat, dof), bins: bins.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

impl Interval {
    pub fn overlaps(&self, o: &Interval) -> bool {
        self.ci_low <= o.ci_high && o.ci_low <= self.ci_high
    }

    pub fn excludes_zero(&self) -> bool {
        self.ci_low > 0.0 || self.ci_high < 0.0
    }

    pub fn width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

pub const MIN_BATCH_SAMPLES: usize = 10;

/// Batch-means 95% interval with `clamp(⌊√n⌋, 10, 50)` contiguous batches.
pub fn batch_ci(samples: &[f64]) -> Result<Interval> {
    let n = samples.len();
    if n < MIN_BATCH_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{n} samples, need at least {MIN_BATCH_SAMPLES}"
        )));
    }
    let b = ((n as f64).sqrt().floor() as usize).clamp(10, 50).min(n);
    let mean = samples.iter().sum::<f64>() / n as f64;
    let means: Vec<f64> = (0..b)
        .map(|j| {
            let (lo, hi) = (j * n / b, (j + 1) * n / b);
            samples[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let mb = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mb) * (m - mb)).sum::<f64>() / (b - 1) as f64;
    let q = StudentsT::new(0.0, 1.0, (b - 1) as f64)
        .expect("valid t distribution")
        .inverse_cdf(0.975);
    let half = q * (var / b as f64).sqrt();
    Ok(Interval { mean, ci_low: mean - half, ci_high: mean + half, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrendVerdict {
    Vanishing,
    Stable,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub t: f64,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendResult {
    pub verdict: TrendVerdict,
    pub evidence: String,
}

pub fn trend_test(points: &[TrendPoint]) -> Result<TrendResult> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!("{} scales, need at least 3", points.len())));
    }
    if points.windows(2).any(|w| !(w[0].t < w[1].t)) {
        return Err(Error::Domain("scales must be strictly increasing".into()));
    }
    let means: Vec<f64> = points.iter().map(|p| p.interval.mean).collect();
    let first = points[0].interval;
    let last = points[points.len() - 1].interval;
    let prev = points[points.len() - 2].interval;
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let separated = last.ci_high < first.ci_low;
    // a series settling at a positive value from above matches both rules; this one wins
    if decreasing && separated {
        return Ok(TrendResult {
            verdict: TrendVerdict::Vanishing,
            evidence: format!(
                "means decrease monotonically; last CI [{:.4}, {:.4}] lies below first CI [{:.4}, {:.4}]",
                last.ci_low, last.ci_high, first.ci_low, first.ci_high
            ),
        });
    }
    if prev.overlaps(&last) && prev.excludes_zero() && last.excludes_zero() {
        return Ok(TrendResult {
            verdict: TrendVerdict::Stable,
            evidence: format!(
                "last two CIs [{:.4}, {:.4}] and [{:.4}, {:.4}] overlap and exclude 0",
                prev.ci_low, prev.ci_high, last.ci_low, last.ci_high
            ),
        });
    }
    Ok(TrendResult {
        verdict: TrendVerdict::Inconclusive,
        evidence: format!(
            "means {:?}: neither monotone decrease with separated end CIs nor overlapping nonzero tail CIs",
            means
        ),
    })
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> Interval {
    if n == 0 {
        return Interval { mean: 0.0, ci_low: 0.0, ci_high: 1.0, n: 0 };
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    Interval {
        mean: p,
        ci_low: (centre - half).max(0.0).min(p),
        ci_high: (centre + half).min(1.0).max(p),
        n: n as usize,
    }
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionTest {
    pub z: f64,
    /// One-sided p-value for the alternative that the first proportion is smaller.
    pub p_less: f64,
}

/// Pooled two-proportion z-test.
pub fn two_proportion_test(s1: u64, n1: u64, s2: u64, n2: u64) -> Result<ProportionTest> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::InsufficientData("empty sample in proportion test".into()));
    }
    let (p1, p2) = (s1 as f64 / n1 as f64, s2 as f64 / n2 as f64);
    let pool = (s1 + s2) as f64 / (n1 + n2) as f64;
    let se = (pool * (1.0 - pool) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if se == 0.0 {
        return Ok(ProportionTest { z: 0.0, p_less: 1.0 });
    }
    let z = (p1 - p2) / se;
    Ok(ProportionTest { z, p_less: Normal::standard().cdf(z) })
}
