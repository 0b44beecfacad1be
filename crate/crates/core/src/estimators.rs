//! Statistics over replicas and trajectories.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Fixed-width bin counts over `[lo, hi]`. The last bin is closed on the
/// right; values below `lo` count as underflow, values above `hi` (and NaN)
/// as overflow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    lo: u64,
    hi: u64,
    bins: Vec<u64>,
    underflow: u64,
    overflow: u64,
}

// Bounds are stored as raw bits so the type can be `Eq`.
impl Histogram {
    pub const DEFAULT_BINS: usize = 200;

    pub fn new(lo: f64, hi: f64, n_bins: usize) -> Result<Self> {
        Histogram::from_parts(lo, hi, alloc::vec![0; n_bins], 0, 0)
    }

    /// `n_bins` bins over `[0, 1]`.
    pub fn unit(n_bins: usize) -> Self {
        Histogram::new(0.0, 1.0, n_bins).expect("unit interval binning is valid")
    }

    pub fn from_parts(lo: f64, hi: f64, bins: Vec<u64>, underflow: u64, overflow: u64) -> Result<Self> {
        if bins.is_empty() || !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::Domain("histogram needs finite lo < hi and at least one bin"));
        }
        Ok(Histogram { lo: lo.to_bits(), hi: hi.to_bits(), bins, underflow, overflow })
    }

    pub fn lo(&self) -> f64 {
        f64::from_bits(self.lo)
    }

    pub fn hi(&self) -> f64 {
        f64::from_bits(self.hi)
    }

    pub fn bins(&self) -> &[u64] {
        &self.bins
    }

    pub fn underflow(&self) -> u64 {
        self.underflow
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    pub fn width(&self) -> f64 {
        (self.hi() - self.lo()) / self.bins.len() as f64
    }

    /// `(left, right)` edges of bin `i`.
    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        let right = if i + 1 == self.bins.len() { self.hi() } else { self.lo() + (i + 1) as f64 * w };
        (self.lo() + i as f64 * w, right)
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum::<u64>() + self.underflow + self.overflow
    }

    pub fn add(&mut self, x: f64) {
        let (lo, hi) = (self.lo(), self.hi());
        if x < lo {
            self.underflow += 1;
        } else if x <= hi {
            let i = math::floor((x - lo) / self.width()) as usize;
            let last = self.bins.len() - 1;
            self.bins[i.min(last)] += 1;
        } else {
            self.overflow += 1;
        }
    }

    pub fn extend<I: IntoIterator<Item = f64>>(&mut self, xs: I) {
        xs.into_iter().for_each(|x| self.add(x));
    }

    /// Adds the counts of an identically binned histogram.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.lo != other.lo || self.hi != other.hi || self.bins.len() != other.bins.len() {
            return Err(Error::BinningMismatch);
        }
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        Ok(())
    }

    /// Normalized height of bin `i` (area one over all counted mass).
    pub fn density(&self, i: usize) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.bins[i] as f64 / (total as f64 * self.width())
    }
}

/// Fraction of steps whose removed extreme point was left of the barycentre.
pub fn pi_n<I>(removed_on_left: I) -> Result<f64>
where
    I: IntoIterator<Item = Option<bool>>,
{
    let mut steps = 0usize;
    let mut left = 0usize;
    for (i, side) in removed_on_left.into_iter().enumerate() {
        left += side.ok_or(Error::MissingSide(i))? as usize;
        steps += 1;
    }
    if steps == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(left as f64 / steps as f64)
}

/// CDF of the symmetric Beta(β, β) law, the regularized incomplete beta
/// function `I_x(β, β)`.
pub fn beta_cdf(x: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain("beta must be positive"));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain("beta CDF argument must lie in [0, 1]"));
    }
    Ok(symmetric_beta_cdf(x, beta))
}

fn symmetric_beta_cdf(x: f64, a: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else if x <= 0.5 {
        incomplete_beta_lower(x, a, a)
    } else {
        1.0 - incomplete_beta_lower(1.0 - x, a, a)
    }
}

/// `I_x(a, b)` by its continued fraction, valid (and fast) for
/// `x ≤ (a + 1) / (a + b + 2)`.
fn incomplete_beta_lower(x: f64, a: f64, b: f64) -> f64 {
    let ln_beta = math::ln_gamma(a) + math::ln_gamma(b) - math::ln_gamma(a + b);
    let front = math::exp(a * math::ln(x) + b * math::ln_1p(-x) - ln_beta) / a;
    front * beta_continued_fraction(x, a, b)
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 1000;

    let clamp = |v: f64| if v.abs() < TINY { TINY } else { v };
    let mut c = 1.0;
    let mut d = 1.0 / clamp(1.0 - (a + b) * x / (a + 1.0));
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let even = m * (b - m) * x / ((a - 1.0 + m2) * (a + m2));
        d = 1.0 / clamp(1.0 + even * d);
        c = clamp(1.0 + even / c);
        h *= d * c;
        let odd = -(a + m) * (a + b + m) * x / ((a + m2) * (a + 1.0 + m2));
        d = 1.0 / clamp(1.0 + odd * d);
        c = clamp(1.0 + odd / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// One-sample Kolmogorov–Smirnov distance between `samples` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(ks_distance_sorted(&sorted, cdf))
}

/// [`ks_distance`] for samples already in ascending order.
pub fn ks_distance_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0f64, |acc, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        acc.max(above.abs()).max(below.abs())
    })
}

/// Kolmogorov–Smirnov distance evaluated at the bin edges of a histogram,
/// where its empirical CDF is known exactly. Under- and overflow count as
/// mass at `-∞` and `+∞`.
pub fn ks_distance_binned<F: Fn(f64) -> f64>(hist: &Histogram, cdf: F) -> Result<f64> {
    let total = hist.total();
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    let n = total as f64;
    let mut below = hist.underflow();
    let mut worst = (below as f64 / n - cdf(hist.lo())).abs();
    for (i, &count) in hist.bins().iter().enumerate() {
        below += count;
        let (_, right) = hist.edges(i);
        worst = worst.max((below as f64 / n - cdf(right)).abs());
    }
    Ok(worst)
}

/// Outcome of fitting Beta(β, β) by minimum Kolmogorov–Smirnov distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsFitResult {
    pub beta_star: f64,
    /// The minimized distance `κ(β*)`.
    pub kappa: f64,
    pub n_samples: u64,
}

/// Search bracket for `β`.
pub const BETA_BRACKET: (f64, f64) = (0.5, 5.0);
/// Golden-section stopping width on `β`.
pub const BETA_TOL: f64 = 1e-4;

/// Minimizes `β ↦ KS(samples, Beta(β, β))` over [`BETA_BRACKET`] by
/// golden-section search.
pub fn fit_beta_symmetric(samples: &[f64]) -> Result<KsFitResult> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if samples.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::Domain("samples must lie in [0, 1]"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let objective = |b: f64| ks_distance_sorted(&sorted, |x| symmetric_beta_cdf(x, b));
    let beta_star = golden_section(objective, BETA_BRACKET.0, BETA_BRACKET.1, BETA_TOL);
    Ok(KsFitResult { beta_star, kappa: objective(beta_star), n_samples: sorted.len() as u64 })
}

/// [`fit_beta_symmetric`] on binned data, using [`ks_distance_binned`].
pub fn fit_beta_symmetric_binned(hist: &Histogram) -> Result<KsFitResult> {
    if hist.total() == 0 {
        return Err(Error::EmptyInput);
    }
    if hist.lo() < 0.0 || hist.hi() > 1.0 || hist.underflow() > 0 || hist.overflow() > 0 {
        return Err(Error::Domain("histogram mass must lie in [0, 1]"));
    }
    let objective = |b: f64| {
        ks_distance_binned(hist, |x| symmetric_beta_cdf(x.clamp(0.0, 1.0), b)).unwrap_or(1.0)
    };
    let beta_star = golden_section(objective, BETA_BRACKET.0, BETA_BRACKET.1, BETA_TOL);
    Ok(KsFitResult { beta_star, kappa: objective(beta_star), n_samples: hist.total() })
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (math::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Raw moment `E[X^k]` with its jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub k: u32,
    pub value: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub n_samples: u64,
    pub entries: Vec<MomentEstimate>,
}

impl MomentTable {
    /// Estimate for moment `k` (`1 ≤ k ≤ k_max`).
    pub fn get(&self, k: u32) -> Option<&MomentEstimate> {
        self.entries.iter().find(|e| e.k == k)
    }
}

/// Raw moments `1..=k_max` with delete-one jackknife standard errors. The
/// error is reported as zero for a single sample.
pub fn empirical_moments(samples: &[f64], k_max: u32) -> Result<MomentTable> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if k_max == 0 {
        return Err(Error::Domain("k_max must be at least 1"));
    }
    let n = samples.len() as f64;
    let mut powers: Vec<f64> = samples.to_vec();
    let mut scratch: Vec<f64> = Vec::with_capacity(samples.len());
    let mut entries = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        if k > 1 {
            powers.iter_mut().zip(samples).for_each(|(p, x)| *p *= x);
        }
        let total = math::pairwise_sum(&powers);
        let mean = total / n;
        let std_err = if samples.len() > 1 {
            // Leave-one-out estimates θ_(i) = (total − y_i) / (n − 1).
            scratch.clear();
            scratch.extend(powers.iter().map(|y| {
                let dev = (total - y) / (n - 1.0) - mean;
                dev * dev
            }));
            math::sqrt((n - 1.0) / n * math::pairwise_sum(&scratch))
        } else {
            0.0
        };
        entries.push(MomentEstimate { k, value: mean, std_err });
    }
    Ok(MomentTable { n_samples: samples.len() as u64, entries })
}
