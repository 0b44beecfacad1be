//! Uniform spacings and the law of the starting core of three iid uniforms.
//!
//! With `S₁, S₂` the first two spacings of three uniforms on `[0, 1]` and
//! `W = S₁ + S₂/4`, the core mean and diameter are `(W, S₂/2)` or
//! `(1 − W, S₂/2)` with probability ½ each.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::exact3::{binomial, pow_rat, rat, InitialLaw, Rational};
use crate::math;

/// Gaps between consecutive order statistics of `n` uniforms, with the
/// endpoints 0 and 1 included, so `n + 1` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingVector {
    pub s: Vec<f64>,
}

impl SpacingVector {
    pub fn n(&self) -> usize {
        self.s.len() - 1
    }
}

/// Sorts `n ≥ 1` uniforms and differences them.
pub fn sample_spacings<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SpacingVector {
    assert!(n >= 1, "need at least one uniform");
    let mut u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    u.sort_by(f64::total_cmp);
    let mut s = Vec::with_capacity(n + 1);
    let mut prev = 0.0;
    for &x in &u {
        s.push(x - prev);
        prev = x;
    }
    s.push(1.0 - prev);
    SpacingVector { s }
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `E[S_{n,1}^α S_{n,2}^β] = n! α! β! / (n + α + β)!`, exactly.
pub fn mixed_moment_exact(n: u32, alpha: u32, beta: u32) -> Rational {
    Rational::new(factorial(n) * factorial(alpha) * factorial(beta), factorial(n + alpha + beta))
}

/// `Γ(n+1)Γ(α+1)Γ(β+1)/Γ(n+1+α+β)` for real exponents.
pub fn mixed_moment(n: u32, alpha: f64, beta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1"));
    }
    if !(alpha >= 0.0) || !(beta >= 0.0) {
        return Err(Error::Domain("exponents must be non-negative"));
    }
    let n = n as f64;
    let log = math::ln_gamma(n + 1.0) + math::ln_gamma(alpha + 1.0) + math::ln_gamma(beta + 1.0)
        - math::ln_gamma(n + 1.0 + alpha + beta);
    Ok(math::exp(log))
}

/// One draw of `(μ, D)`, the mean and diameter of the starting core of three
/// iid uniforms, via the spacing representation.
pub fn init_law_mu_d<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let sp = sample_spacings(3, rng);
    let w = sp.s[0] + sp.s[1] / 4.0;
    let d = sp.s[1] / 2.0;
    if rng.random::<bool>() {
        (w, d)
    } else {
        (1.0 - w, d)
    }
}

/// `E[D^k] = 2^{−k}·6/((k+1)(k+2)(k+3))`.
pub fn moment_d(k: u32) -> Rational {
    let k_ = BigInt::from(k);
    let den = (&k_ + 1u32) * (&k_ + 2u32) * (&k_ + 3u32) * (BigInt::one() << k);
    Rational::new(BigInt::from(6), den)
}

/// `w_k = E[W^k] = 8(1 − 4^{−(k+1)})/((k+1)(k+2)(k+3))`.
pub fn moment_w(k: u32) -> Rational {
    let cubic = rat(((k + 1) * (k + 2) * (k + 3)) as i64, 1);
    rat(8, 1) * (Rational::one() - pow_rat(&rat(1, 4), k + 1)) / cubic
}

/// `S(z) = k!/(2z³(k+3)!)·[z²(k+2)(k+3) + 2 − 2z(k+3) − 2(1−z)^{k+3}]`.
pub fn s_closed_form(k: u32, z: &Rational) -> Rational {
    let kk = rat(k as i64, 1);
    let two = rat(2, 1);
    let bracket = z * z * (&kk + rat(2, 1)) * (&kk + rat(3, 1)) + &two
        - &two * z * (&kk + rat(3, 1))
        - &two * pow_rat(&(Rational::one() - z), k + 3);
    let prefactor = Rational::new(factorial(k), factorial(k + 3)) / (two * pow_rat(z, 3));
    prefactor * bracket
}

/// `E[μ^k] = 4(3k − 5 + (3^{k+3} − 1)4^{−(k+1)})/((k+1)(k+2)(k+3))`.
pub fn moment_mu(k: u32) -> Rational {
    let three_pow = Rational::from_integer(BigInt::from(3u32).pow(k + 3));
    let inner = rat(3 * k as i64 - 5, 1) + (three_pow - Rational::one()) * pow_rat(&rat(1, 4), k + 1);
    let cubic = rat(((k + 1) * (k + 2) * (k + 3)) as i64, 1);
    let value = rat(4, 1) * inner / cubic;
    debug_assert_eq!(value, moment_mu_via_sums(k));
    value
}

/// `E[μ^k]` through `½w_k` plus the `S(z)` sums for `½E[(1 − W)^k]`.
pub fn moment_mu_via_sums(k: u32) -> Rational {
    moment_w(k) / rat(2, 1) + rat(4, 1) * s_closed_form(k, &Rational::one()) - s_closed_form(k, &rat(1, 4))
}

/// The starting core of three iid uniforms as an exact initial law.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformInit;

impl UniformInit {
    /// `E[W^a D^b]` by expanding `(S₁ + S₂/4)^a (S₂/2)^b`.
    fn w_d_moment(a: u32, b: u32) -> Rational {
        let sum = (0..=a).fold(Rational::zero(), |acc, i| {
            acc + Rational::from_integer(binomial(a, i))
                * pow_rat(&rat(1, 4), a - i)
                * mixed_moment_exact(3, i, a - i + b)
        });
        sum * pow_rat(&rat(1, 2), b)
    }
}

impl InitialLaw for UniformInit {
    fn joint_moment(&self, mu_power: u32, d_power: u32) -> Option<Rational> {
        let direct = Self::w_d_moment(mu_power, d_power);
        let mirrored = (0..=mu_power).fold(Rational::zero(), |acc, m| {
            let term = Rational::from_integer(binomial(mu_power, m)) * Self::w_d_moment(m, d_power);
            if m % 2 == 0 {
                acc + term
            } else {
                acc - term
            }
        });
        Some((direct + mirrored) / rat(2, 1))
    }
}

/// Density of `D = S₂/2` on `[0, ½]`: `6(1 − 2r)²`, twice the `S₂ ~ Beta(1, 3)`
/// density at `2r`.
pub fn density_d(r: f64) -> f64 {
    if (0.0..=0.5).contains(&r) {
        6.0 * (1.0 - 2.0 * r) * (1.0 - 2.0 * r)
    } else {
        0.0
    }
}

/// Density of `W = S₁ + S₂/4` on `[0, 1]`.
pub fn density_w(r: f64) -> f64 {
    if !(0.0..=1.0).contains(&r) {
        0.0
    } else if r <= 0.25 {
        4.0 * (1.0 - r) * (1.0 - r) - 4.0 * (1.0 - 4.0 * r) * (1.0 - 4.0 * r)
    } else {
        4.0 * (1.0 - r) * (1.0 - r)
    }
}

/// Density of `μ` on `[0, 1]`.
pub fn density_mu(r: f64) -> f64 {
    if !(0.0..=1.0).contains(&r) {
        0.0
    } else if r <= 0.25 {
        4.0 * r * (3.0 * (1.0 - r) - 4.0 * r)
    } else if r <= 0.75 {
        2.0 - 4.0 * r * (1.0 - r)
    } else {
        4.0 * (1.0 - r) * (3.0 * r - 4.0 * (1.0 - r))
    }
}

/// Two-sample Kolmogorov–Smirnov distance. Sorts both inputs in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut worst) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        worst = worst.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(worst)
}

/// One two-sample comparison inside a [`MinIdentityReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct MinCheck {
    pub label: &'static str,
    pub distance: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinIdentityReport {
    pub n: usize,
    pub n_draws: usize,
    pub checks: Vec<MinCheck>,
}

impl MinIdentityReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Samples both sides of `min{S₁, S₂} ≐ ½S₁` (any `n ≥ 1`) and, for `n ≥ 2`,
/// of `(S₁, min{S₂, S₃}) ≐ (S₁, ½S₂)` (each marginal and the product), from
/// independent draws, and compares each pair by two-sample KS at threshold
/// `3/√n_draws`.
pub fn check_min_identities<R: Rng + ?Sized>(n: usize, n_draws: usize, rng: &mut R) -> Result<MinIdentityReport> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1"));
    }
    if n_draws == 0 {
        return Err(Error::EmptyInput);
    }
    let threshold = 3.0 / math::sqrt(n_draws as f64);
    let mut checks = Vec::new();
    let mut push = |label, mut lhs: Vec<f64>, mut rhs: Vec<f64>| -> Result<()> {
        let distance = ks_two_sample(&mut lhs, &mut rhs)?;
        checks.push(MinCheck { label, distance, threshold, pass: distance < threshold });
        Ok(())
    };

    let mut lhs = Vec::with_capacity(n_draws);
    let mut rhs = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let a = sample_spacings(n, rng);
        lhs.push(a.s[0].min(a.s[1]));
        let b = sample_spacings(n, rng);
        rhs.push(b.s[0] / 2.0);
    }
    push("min(S1,S2) vs S1/2", lhs, rhs)?;

    if n >= 2 {
        let (mut l1, mut l2, mut lp) = (Vec::new(), Vec::new(), Vec::new());
        let (mut r1, mut r2, mut rp) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..n_draws {
            let a = sample_spacings(n, rng);
            let m = a.s[1].min(a.s[2]);
            l1.push(a.s[0]);
            l2.push(m);
            lp.push(a.s[0] * m);
            let b = sample_spacings(n, rng);
            let h = b.s[1] / 2.0;
            r1.push(b.s[0]);
            r2.push(h);
            rp.push(b.s[0] * h);
        }
        push("S1 marginal", l1, r1)?;
        push("min(S2,S3) vs S2/2", l2, r2)?;
        push("S1*min(S2,S3) vs S1*S2/2", lp, rp)?;
    }
    Ok(MinIdentityReport { n, n_draws, checks })
}
