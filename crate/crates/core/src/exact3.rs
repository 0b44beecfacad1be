//! Exact analysis of the modified three-point model in one dimension.
//!
//! In the modified model the replacement is uniform on
//! `[min core − D, max core + D]`. The core `(μ', D)` then evolves by a
//! four-branch affine recursion, the limit satisfies
//! `ξ₃ = μ'(0) + D(0) L` with `L` independent of the start, and the moments
//! `θ_k = E[L^k]` follow from a triangular recursion in exact rationals.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::math;

/// Exact rational number (arbitrary precision, always reduced).
pub type Rational = BigRational;

/// Default stopping diameter for [`sample_l`].
pub const DEFAULT_L_TOL: f64 = 1e-6;

pub(crate) fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub(crate) fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

pub(crate) fn pow_rat(x: &Rational, k: u32) -> Rational {
    (0..k).fold(Rational::one(), |acc, _| acc * x)
}

/// Nearest `f64` to an exact rational.
pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Mean and diameter of the two-point core.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorePair {
    pub mu_prime: f64,
    pub diam: f64,
}

/// Branch `branch ∈ {1, 2, 3, 4}` of the core recursion with uniform `v`:
/// the replacement fell left of the core, in its left half, in its right
/// half, or right of the core.
pub fn recur_branch(state: CorePair, branch: u8, v: f64) -> CorePair {
    let CorePair { mu_prime: m, diam: d } = state;
    match branch {
        1 => CorePair { mu_prime: m - (1.0 + v) / 2.0 * d, diam: v * d },
        2 => CorePair { mu_prime: m - (2.0 - v) / 4.0 * d, diam: v * d / 2.0 },
        3 => CorePair { mu_prime: m + (2.0 - v) / 4.0 * d, diam: v * d / 2.0 },
        4 => CorePair { mu_prime: m + (1.0 + v) / 2.0 * d, diam: v * d },
        _ => panic!("branch must be 1..=4, got {branch}"),
    }
}

/// One step of the core recursion; branches have probabilities
/// `1/3, 1/6, 1/6, 1/3`. `None` when the core has collapsed.
pub fn recur_step<R: Rng + ?Sized>(state: CorePair, rng: &mut R) -> Option<CorePair> {
    if !(state.diam > 0.0) {
        return None;
    }
    let pick: f64 = rng.random();
    let branch = if pick < 1.0 / 3.0 {
        1
    } else if pick < 0.5 {
        2
    } else if pick < 2.0 / 3.0 {
        3
    } else {
        4
    };
    Some(recur_branch(state, branch, rng.random()))
}

/// Per-step contraction of `E[D^k]`: `(2 + 2^{-k}) / (3(k + 1))`.
pub fn contraction_factor(k: u32) -> Rational {
    let two_pow = Rational::from_integer(BigInt::one() << k);
    (rat(2, 1) + two_pow.recip()) / Rational::from_integer(BigInt::from(3 * (k + 1)))
}

/// `E[D(t)^k | D(0) = d0]`.
pub fn m_k(t: u32, k: u32, d0: f64) -> f64 {
    let factor = (2.0 + 1.0 / math::powu(2.0, k)) / (3.0 * (k + 1) as f64);
    math::powu(factor, t) * math::powu(d0, k)
}

/// One draw of `L`: the limit of the core mean started from the core
/// `{−1/2, 1/2}`, iterated until the diameter drops below `tol`.
pub fn sample_l<R: Rng + ?Sized>(rng: &mut R, tol: f64) -> f64 {
    let mut state = CorePair { mu_prime: 0.0, diam: 1.0 };
    while state.diam >= tol {
        match recur_step(state, rng) {
            Some(next) => state = next,
            None => break,
        }
    }
    state.mu_prime
}

/// `θ_k = E[L^k]` for `k = 0..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaTable {
    pub theta: Vec<Rational>,
}

impl ThetaTable {
    pub fn k_max(&self) -> u32 {
        self.theta.len() as u32 - 1
    }

    pub fn get(&self, k: u32) -> &Rational {
        &self.theta[k as usize]
    }
}

/// `E[((1+U)/2)^j U^{k−j}]`.
fn outer_coefficient(k: u32, j: u32) -> Rational {
    let sum = (0..=j).fold(Rational::zero(), |acc, l| {
        acc + Rational::new(binomial(j, l), BigInt::from(k - l + 1))
    });
    sum / Rational::from_integer(BigInt::one() << j)
}

/// `E[((2−U)/4)^j (U/2)^{k−j}]`.
fn inner_coefficient(k: u32, j: u32) -> Rational {
    let minus_half = rat(-1, 2);
    let sum = (0..=j).fold(Rational::zero(), |acc, l| {
        acc + Rational::new(binomial(j, l), BigInt::from(k - l + 1)) * pow_rat(&minus_half, j - l)
    });
    sum / Rational::from_integer(BigInt::one() << k)
}

/// Exact moments of `L` from its four-branch fixed point. Expanding the
/// fixed point gives `θ_k = (1/3) Σ_{j even} C(k,j) θ_{k−j} (2a(k,j) + b(k,j))`;
/// the `j = 0` term contains `θ_k` itself and is moved to the left-hand side.
pub fn theta_recursion(k_max: u32) -> ThetaTable {
    let third = rat(1, 3);
    let mut theta: Vec<Rational> = vec![Rational::one()];
    for k in 1..=k_max {
        let weight = |j: u32| (outer_coefficient(k, j) * rat(2, 1) + inner_coefficient(k, j)) * &third;
        let rhs = (2..=k).step_by(2).fold(Rational::zero(), |acc, j| {
            acc + Rational::from_integer(binomial(k, j)) * &theta[(k - j) as usize] * weight(j)
        });
        theta.push(rhs / (Rational::one() - weight(0)));
    }
    ThetaTable { theta }
}

/// Exact joint moments `E[μ'(0)^a D(0)^b]` of a random initial core.
pub trait InitialLaw {
    fn joint_moment(&self, mu_power: u32, d_power: u32) -> Option<Rational>;
}

/// A finite mixture of deterministic cores `(probability, μ'(0), D(0))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteInit {
    pub atoms: Vec<(Rational, Rational, Rational)>,
}

impl DiscreteInit {
    pub fn point(mu: Rational, d: Rational) -> Self {
        DiscreteInit { atoms: vec![(Rational::one(), mu, d)] }
    }

    /// The starting core of three distinct points: the point farthest from
    /// their mean is dropped, exact ties split the probability evenly.
    pub fn three_points(points: [Rational; 3]) -> Result<Self> {
        if points[0] == points[1] || points[0] == points[2] || points[1] == points[2] {
            return Err(Error::Config("initial points must be distinct"));
        }
        let mean = (&points[0] + &points[1] + &points[2]) / rat(3, 1);
        let dist: Vec<Rational> = points.iter().map(|p| (p - &mean).abs()).collect();
        let far = dist.iter().max().expect("three distances").clone();
        let extremes: Vec<usize> = (0..3).filter(|&i| dist[i] == far).collect();
        let weight = rat(1, extremes.len() as i64);
        let atoms = extremes
            .iter()
            .map(|&e| {
                let core: Vec<&Rational> = (0..3).filter(|&i| i != e).map(|i| &points[i]).collect();
                let mu = (core[0] + core[1]) / rat(2, 1);
                let d = (core[0] - core[1]).abs();
                (weight.clone(), mu, d)
            })
            .collect();
        Ok(DiscreteInit { atoms })
    }
}

impl InitialLaw for DiscreteInit {
    fn joint_moment(&self, mu_power: u32, d_power: u32) -> Option<Rational> {
        Some(self.atoms.iter().fold(Rational::zero(), |acc, (p, mu, d)| {
            acc + p * pow_rat(mu, mu_power) * pow_rat(d, d_power)
        }))
    }
}

/// Exact moments `E[ξ₃^k]`, `k = 0..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMoments {
    pub values: Vec<Rational>,
}

impl ExactMoments {
    pub fn get(&self, k: u32) -> &Rational {
        &self.values[k as usize]
    }
}

/// `E[ξ₃^k] = Σ_j C(k,j) θ_j E[μ'(0)^{k−j} D(0)^j]`, the binomial expansion of
/// `(μ'(0) + D(0) L)^k` with `L` independent of the start. Terms with
/// `θ_j = 0` never query the oracle.
pub fn xi3_moments_from_init<L: InitialLaw + ?Sized>(init: &L, k_max: u32) -> Result<ExactMoments> {
    let theta = theta_recursion(k_max);
    let mut values = Vec::with_capacity(k_max as usize + 1);
    for k in 0..=k_max {
        let mut total = Rational::zero();
        for j in 0..=k {
            let th = theta.get(j);
            if th.is_zero() {
                continue;
            }
            let joint = init
                .joint_moment(k - j, j)
                .ok_or(Error::MissingMoment { mu_power: k - j, d_power: j })?;
            total += Rational::from_integer(binomial(k, j)) * th * joint;
        }
        values.push(total);
    }
    Ok(ExactMoments { values })
}
