//! Fast invariant suite behind `bcl selftest`.

use bcl_core::dynamics::{Initial, RunParams, Trajectory, MONOTONE_SLACK};
use bcl_core::estimators::beta_cdf;
use bcl_core::exact3::{theta_recursion, xi3_moments_from_init, DiscreteInit, InitialLaw, Rational};
use bcl_core::geometry::{diameter, sum_sq_distances};
use bcl_core::rng::seeded;
use bcl_core::spacings::{mixed_moment_exact, moment_d, moment_mu, moment_mu_via_sums, UniformInit};
use bcl_core::Configuration;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Knobs for [`run`]. `inject_fault` flips the sign of `G_n` inside the
/// sandwich check, which must then fail.
#[derive(Debug, Clone, Copy, Default)]
pub struct Options {
    pub quick: bool,
    pub inject_fault: bool,
    pub seed: u64,
}

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn check_sandwich(opts: Options) -> Check {
    let mut rng = seeded(opts.seed);
    let trials = if opts.quick { 2_000 } else { 10_000 };
    let mut bad = 0;
    for _ in 0..trials {
        let n = rng.random_range(2..=10);
        let dim = rng.random_range(1..=3);
        let coords = (0..n * dim).map(|_| rng.random::<f64>()).collect();
        let config = Configuration::new(dim, coords).expect("well-formed");
        let g = if opts.inject_fault { -sum_sq_distances(&config) } else { sum_sq_distances(&config) };
        let d2 = diameter(&config).powi(2);
        let slack = 1e-12 * d2.max(1e-300);
        if g < d2 / 2.0 - slack || g > (n as f64 - 1.0) * d2 / 2.0 + slack {
            bad += 1;
        }
    }
    Check { name: "sandwich D^2/2 <= G_n <= (n-1)D^2/2", pass: bad == 0, detail: format!("{bad} violations in {trials}") }
}

fn check_monotone(opts: Options) -> Check {
    let steps_per = if opts.quick { 600 } else { 10_000 };
    let mut bad = 0u64;
    let mut total = 0u64;
    for n in 3..=8 {
        for dim in 1..=3 {
            let params = RunParams::new(n, dim);
            let rng = seeded(opts.seed ^ ((n * 4 + dim) as u64));
            let mut traj = Trajectory::new(&params, &Initial::IidUniform, rng).expect("valid run");
            for _ in 0..steps_per {
                let info = traj.step();
                total += 1;
                bad += (info.lyapunov_after > info.lyapunov_before + MONOTONE_SLACK) as u64;
            }
        }
    }
    Check { name: "Lyapunov value non-increasing", pass: bad == 0, detail: format!("{bad} increases in {total} steps") }
}

fn check_theta() -> Check {
    let t = theta_recursion(7);
    let want = [(2, r(7, 12)), (4, r(375, 368)), (6, r(76693, 22080))];
    let odd_zero = (1..=7).step_by(2).all(|k| t.get(k) == &r(0, 1));
    let pass = odd_zero && want.iter().all(|(k, v)| t.get(*k) == v);
    Check { name: "theta table", pass, detail: format!("theta_2..6 = {}, {}, {}", t.get(2), t.get(4), t.get(6)) }
}

fn check_exact_moments() -> Check {
    let triple = DiscreteInit::three_points([r(1, 4), r(1, 2), r(3, 4)]).expect("distinct");
    let a = xi3_moments_from_init(&triple, 4).expect("complete oracle");
    let b = xi3_moments_from_init(&UniformInit, 3).expect("complete oracle");
    let pass = a.values[1..] == [r(1, 2), r(29, 96), r(13, 64), r(873, 5888)]
        && b.values[1..] == [r(1, 2), r(1, 3), r(1, 4)];
    Check { name: "exact xi_3 moments", pass, detail: format!("(1/4,1/2,3/4): {:?}", a.values[1..].iter().map(|v| v.to_string()).collect::<Vec<_>>()) }
}

fn check_spacings() -> Check {
    let quoted = [moment_d(1), moment_d(2), moment_d(3), moment_mu(1), moment_mu(2), moment_mu(3)]
        == [r(1, 8), r(1, 40), r(1, 160), r(1, 2), r(51, 160), r(73, 320)];
    let cross = UniformInit.joint_moment(1, 2) == Some(r(1, 80));
    let routes = (0..=12).all(|k| moment_mu(k) == moment_mu_via_sums(k) && UniformInit.joint_moment(k, 0) == Some(moment_mu(k)));
    let mixed = mixed_moment_exact(3, 2, 0) == r(1, 10) && mixed_moment_exact(3, 1, 1) == r(1, 20);
    Check {
        name: "spacing moment identities",
        pass: quoted && cross && routes && mixed,
        detail: format!("quoted {quoted}, E[mu D^2] {cross}, routes {routes}, mixed {mixed}"),
    }
}

fn check_beta() -> Check {
    let got = [beta_cdf(0.25, 2.0), beta_cdf(0.5, 1.7), beta_cdf(0.3, 1.0)];
    let want = [0.15625, 0.5, 0.3];
    let pass = got.iter().zip(want).all(|(g, w)| g.as_ref().is_ok_and(|g| (g - w).abs() < 1e-13));
    Check { name: "Beta CDF closed forms", pass, detail: format!("{got:?}") }
}

pub fn run(opts: Options) -> Report {
    Report {
        checks: vec![
            check_sandwich(opts),
            check_monotone(opts),
            check_theta(),
            check_exact_moments(),
            check_spacings(),
            check_beta(),
        ],
    }
}
