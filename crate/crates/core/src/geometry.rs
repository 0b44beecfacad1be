//! Geometric measures of a point configuration.
//!
//! A configuration is an ordered list of `n` points in `R^d`. The measures
//! here are the barycentre, the barycentric order (points sorted by distance
//! to the barycentre, exact ties permuted uniformly at random), the diameter,
//! and the sum of squared distances `G_n` together with the Lyapunov value
//! `F_n = G_{n-1}(core)`.

use alloc::vec::Vec;
use core::slice::ChunksExact;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::math;

/// `n` points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    dim: usize,
    coords: Vec<f64>,
}

impl Configuration {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::Config("coordinate count is not a multiple of the dimension"));
        }
        Ok(Configuration { dim, coords })
    }

    /// Builds a configuration from points given as slices of length `dim`.
    pub fn from_points<P, I>(dim: usize, points: I) -> Result<Self>
    where
        P: AsRef<[f64]>,
        I: IntoIterator<Item = P>,
    {
        let mut config = Configuration::empty(dim)?;
        for p in points {
            config.push(p.as_ref())?;
        }
        Ok(config)
    }

    /// One-dimensional configuration.
    pub fn from_scalars(xs: &[f64]) -> Self {
        Configuration { dim: 1, coords: xs.to_vec() }
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Configuration::new(dim, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    /// Flat row-major coordinates.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::Config("point has the wrong number of coordinates"));
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    /// True when no two points coincide exactly.
    pub fn has_distinct_points(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| (0..i).all(|j| self.point(i) != self.point(j)))
    }
}

/// A configuration in barycentric order: the last point is the extreme
/// point, the first `n - 1` points form the core.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedConfiguration {
    points: Configuration,
    permutation: Vec<usize>,
    barycentre: Vec<f64>,
    distances: Vec<f64>,
}

impl OrderedConfiguration {
    /// Points sorted by non-decreasing distance to the barycentre.
    pub fn points(&self) -> &Configuration {
        &self.points
    }

    /// `permutation[r]` is the original index of the point at rank `r`.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn barycentre(&self) -> &[f64] {
        &self.barycentre
    }

    /// Euclidean distances to the barycentre, in rank order.
    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    /// The point farthest from the barycentre.
    pub fn extreme(&self) -> &[f64] {
        self.points.point(self.points.len() - 1)
    }

    /// Original index of the extreme point.
    pub fn extreme_index(&self) -> usize {
        self.permutation[self.permutation.len() - 1]
    }

    /// The configuration with the extreme point removed.
    pub fn core(&self) -> Configuration {
        let dim = self.points.dim;
        let keep = (self.points.len() - 1) * dim;
        Configuration { dim, coords: self.points.coords[..keep].to_vec() }
    }

    pub fn into_configuration(self) -> Configuration {
        self.points
    }
}

/// Lyapunov-side summary of a configuration: mean, diameter and `G` of the
/// core.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreSummary {
    pub core_mean: Vec<f64>,
    pub core_diameter: f64,
    pub lyapunov: f64,
}

pub fn barycentre(config: &Configuration) -> Result<Vec<f64>> {
    if config.is_empty() {
        return Err(Error::Domain("barycentre of an empty configuration"));
    }
    let mut mean = alloc::vec![0.0; config.dim];
    mean_into(config.coords(), config.dim, &mut mean);
    Ok(mean)
}

/// Sorts the points by distance to the barycentre. Exact ties (equal squared
/// distances) are permuted uniformly at random using `tie_rng`; the generator
/// is only consulted when a tie exists.
pub fn order_by_distance<R: Rng + ?Sized>(
    config: &Configuration,
    tie_rng: &mut R,
) -> Result<OrderedConfiguration> {
    let mean = barycentre(config)?;
    let dim = config.dim;
    let sq: Vec<f64> = config.points().map(|p| dist_sq(p, &mean)).collect();

    let mut order: Vec<usize> = (0..config.len()).collect();
    order.sort_by(|&a, &b| sq[a].total_cmp(&sq[b]));
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && sq[order[end]] == sq[order[start]] {
            end += 1;
        }
        if end - start > 1 {
            order[start..end].shuffle(tie_rng);
        }
        start = end;
    }

    let mut coords = Vec::with_capacity(config.coords.len());
    for &i in &order {
        coords.extend_from_slice(config.point(i));
    }
    let distances = order.iter().map(|&i| math::sqrt(sq[i])).collect();
    Ok(OrderedConfiguration {
        points: Configuration { dim, coords },
        permutation: order,
        barycentre: mean,
        distances,
    })
}

/// `G_n = Σ_i ‖x_i − μ_n‖²`, the sum of squared distances to the barycentre.
/// Zero for an empty configuration.
pub fn sum_sq_distances(config: &Configuration) -> f64 {
    if config.is_empty() {
        return 0.0;
    }
    let mut mean = alloc::vec![0.0; config.dim];
    mean_into(config.coords(), config.dim, &mut mean);
    let g = sum_sq_about(config.coords(), config.dim, &mean);
    debug_assert!({
        // Both forms cancel against the raw magnitudes, hence the second term.
        let pairwise = sum_sq_distances_pairwise(config);
        let raw: f64 = config.coords().iter().map(|x| x * x).sum();
        (g - pairwise).abs() <= 1e-12 * g.max(pairwise) + 1e-14 * config.len() as f64 * raw
    });
    g
}

/// The pairwise form `n^{-1} Σ_{i<j} ‖x_i − x_j‖²` of [`sum_sq_distances`].
pub fn sum_sq_distances_pairwise(config: &Configuration) -> f64 {
    let n = config.len();
    if n == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..i {
            total += dist_sq(config.point(i), config.point(j));
        }
    }
    total / n as f64
}

/// `F_n`: the sum of squared distances of the core.
pub fn lyapunov<R: Rng + ?Sized>(config: &Configuration, tie_rng: &mut R) -> Result<f64> {
    if config.len() < 2 {
        return Err(Error::Domain("the Lyapunov value needs at least two points"));
    }
    let ordered = order_by_distance(config, tie_rng)?;
    Ok(sum_sq_distances(&ordered.core()))
}

/// Largest pairwise Euclidean distance; zero for fewer than two points.
pub fn diameter(config: &Configuration) -> f64 {
    math::sqrt(diameter_sq(config.coords(), config.dim))
}

pub fn core_summary<R: Rng + ?Sized>(config: &Configuration, tie_rng: &mut R) -> Result<CoreSummary> {
    if config.len() < 2 {
        return Err(Error::Domain("a core needs at least two points"));
    }
    let core = order_by_distance(config, tie_rng)?.core();
    Ok(CoreSummary {
        core_mean: barycentre(&core)?,
        core_diameter: diameter(&core),
        lyapunov: sum_sq_distances(&core),
    })
}

#[inline]
pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn mean_into(coords: &[f64], dim: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|m| *m = 0.0);
    let n = coords.len() / dim;
    for p in coords.chunks_exact(dim) {
        for (m, x) in out.iter_mut().zip(p) {
            *m += x;
        }
    }
    out.iter_mut().for_each(|m| *m /= n as f64);
}

pub(crate) fn sum_sq_about(coords: &[f64], dim: usize, centre: &[f64]) -> f64 {
    coords.chunks_exact(dim).map(|p| dist_sq(p, centre)).sum()
}

pub(crate) fn diameter_sq(coords: &[f64], dim: usize) -> f64 {
    let mut best = 0.0f64;
    let n = coords.len() / dim;
    for i in 0..n {
        let a = &coords[i * dim..(i + 1) * dim];
        for j in 0..i {
            best = best.max(dist_sq(a, &coords[j * dim..(j + 1) * dim]));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use alloc::vec;
    use rand::Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn random_config(rng: &mut impl Rng, n: usize, dim: usize) -> Configuration {
        Configuration::new(dim, (0..n * dim).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn construction_rejects_ragged_input() {
        assert!(Configuration::new(0, vec![]).is_err());
        assert!(Configuration::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Configuration::from_points(2, [[0.0, 1.0], [2.0, 3.0]]).is_ok());
        assert!(Configuration::from_points(2, [vec![0.0, 1.0], vec![2.0]]).is_err());
    }

    #[test]
    fn barycentre_examples() {
        assert_eq!(barycentre(&Configuration::from_scalars(&[0.0, 1.0])).unwrap(), vec![0.5]);
        let tri = Configuration::from_points(2, [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let b = barycentre(&tri).unwrap();
        assert!(close(b[0], 1.0 / 3.0, 1e-15) && close(b[1], 1.0 / 3.0, 1e-15));
        let sym = Configuration::from_scalars(&[0.25, 0.5, 0.75]);
        assert_eq!(barycentre(&sym).unwrap(), vec![0.5]);
        assert_eq!(
            barycentre(&Configuration::empty(1).unwrap()),
            Err(Error::Domain("barycentre of an empty configuration"))
        );
    }

    #[test]
    fn symmetric_tie_is_fair() {
        let config = Configuration::from_scalars(&[0.0, 1.0]);
        let mut rng = seeded(11);
        let draws = 10_000;
        let last_is_zero = (0..draws)
            .filter(|_| order_by_distance(&config, &mut rng).unwrap().extreme()[0] == 0.0)
            .count();
        let frac = last_is_zero as f64 / draws as f64;
        assert!((frac - 0.5).abs() < 0.02, "frac = {frac}");
    }

    #[test]
    fn extreme_by_hand() {
        // μ = 7/15; distances 7/15, 1/15, 8/15.
        let config = Configuration::from_scalars(&[0.0, 0.4, 1.0]);
        let ordered = order_by_distance(&config, &mut seeded(1)).unwrap();
        assert_eq!(ordered.extreme(), &[1.0]);
        assert_eq!(ordered.permutation(), &[1, 0, 2]);
        assert!(close(ordered.distances()[2], 8.0 / 15.0, 1e-15));
    }

    #[test]
    fn symmetric_triple_never_drops_the_middle() {
        let config = Configuration::from_scalars(&[0.25, 0.5, 0.75]);
        let mut rng = seeded(5);
        let mut low = 0;
        for _ in 0..2000 {
            let ordered = order_by_distance(&config, &mut rng).unwrap();
            let e = ordered.extreme()[0];
            assert_ne!(e, 0.5);
            assert_eq!(ordered.points().point(0), &[0.5]);
            if e == 0.25 {
                low += 1;
            }
        }
        assert!((low as f64 / 2000.0 - 0.5).abs() < 0.05);
    }

    #[test]
    fn sum_sq_examples() {
        assert_eq!(sum_sq_distances(&Configuration::from_scalars(&[0.0, 1.0])), 0.5);
        assert_eq!(sum_sq_distances(&Configuration::from_scalars(&[0.0, 0.0, 0.0])), 0.0);
    }

    /// Nelder–Mead on `y ↦ Σ‖x_i − y‖²`, independent of the closed form.
    fn variational_minimum(config: &Configuration) -> f64 {
        let d = config.dim();
        let objective = |y: &[f64]| -> f64 { config.points().map(|p| dist_sq(p, y)).sum() };
        let mut simplex: Vec<Vec<f64>> = (0..=d)
            .map(|i| {
                let mut v = vec![0.0; d];
                if i > 0 {
                    v[i - 1] = 1.0;
                }
                v
            })
            .collect();
        for _ in 0..4000 {
            simplex.sort_by(|a, b| objective(a).total_cmp(&objective(b)));
            let worst = simplex[d].clone();
            let centroid: Vec<f64> = (0..d)
                .map(|k| simplex[..d].iter().map(|v| v[k]).sum::<f64>() / d as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&worst).map(|(c, w)| c + t * (c - w)).collect()
            };
            let reflected = along(1.0);
            let (fr, fb, fsw) = (objective(&reflected), objective(&simplex[0]), objective(&simplex[d - 1]));
            if fr < fb {
                let expanded = along(2.0);
                simplex[d] = if objective(&expanded) < fr { expanded } else { reflected };
            } else if fr < fsw {
                simplex[d] = reflected;
            } else {
                let contracted = along(-0.5);
                if objective(&contracted) < objective(&worst) {
                    simplex[d] = contracted;
                } else {
                    let best = simplex[0].clone();
                    for v in simplex.iter_mut().skip(1) {
                        for (x, b) in v.iter_mut().zip(&best) {
                            *x = b + 0.5 * (*x - b);
                        }
                    }
                }
            }
        }
        simplex.iter().map(|v| objective(v)).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn sum_sq_matches_variational_minimum() {
        let mut rng = seeded(3);
        for _ in 0..5 {
            let config = random_config(&mut rng, 50, 3);
            let g = sum_sq_distances(&config);
            let oracle = variational_minimum(&config);
            assert!(close(g, oracle, 1e-8), "{g} vs {oracle}");
        }
    }

    #[test]
    fn lyapunov_examples() {
        let mut rng = seeded(9);
        for _ in 0..50 {
            let f = lyapunov(&Configuration::from_scalars(&[0.0, 1.0, 0.5]), &mut rng).unwrap();
            assert!(close(f, 0.125, 1e-15));
        }
        assert_eq!(lyapunov(&Configuration::from_scalars(&[0.3, 0.3, 0.9]), &mut rng).unwrap(), 0.0);
        assert_eq!(lyapunov(&Configuration::from_scalars(&[0.1, 0.7]), &mut rng).unwrap(), 0.0);
        assert!(lyapunov(&Configuration::from_scalars(&[0.1]), &mut rng).is_err());
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(diameter(&Configuration::from_scalars(&[0.0, 1.0])), 1.0);
        assert_eq!(diameter(&Configuration::from_points(2, [[0.0, 0.0], [3.0, 4.0]]).unwrap()), 5.0);
        assert_eq!(diameter(&Configuration::from_scalars(&[0.4])), 0.0);
        let mut rng = seeded(4);
        let config = random_config(&mut rng, 20, 2);
        let mut brute = 0.0f64;
        for p in config.points() {
            for q in config.points() {
                brute = brute.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
            }
        }
        assert_eq!(diameter(&config), brute);
    }

    #[test]
    fn core_summary_obeys_sandwich() {
        let mut rng = seeded(8);
        for n in 3..10 {
            let config = random_config(&mut rng, n, 2);
            let s = core_summary(&config, &mut rng).unwrap();
            let d2 = s.core_diameter * s.core_diameter;
            assert!(s.lyapunov >= d2 / 2.0 - 1e-15);
            assert!(s.lyapunov <= (n - 2) as f64 * d2 / 2.0 + 1e-15);
        }
    }
}
