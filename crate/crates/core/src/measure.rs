//! Finite atomic approximations of a measure, ball masses with shell-error
//! bookkeeping, the generalized-dimension integrand and doubling estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{Space, SpatialIndex};
use crate::manifolds::ChartMap;

/// Weighted point set approximating a measure at a given resolution.
///
/// Every atom lies within `resolution` of the part of the target measure it
/// carries, so a ball mass computed here differs from the target's by at
/// most the mass of the shell of width `2 · resolution` around the sphere.
#[derive(Clone, Debug)]
pub struct AtomicMeasure {
    space: Space,
    points: Vec<f64>,
    masses: Vec<f64>,
    resolution: f64,
    total: f64,
    index: SpatialIndex,
}

/// Result of [`AtomicMeasure::doubling_constant`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingConstantEstimate {
    /// `max μ(B_2r(x)) / μ(B_r(x))` over probed atoms and scales.
    pub c_hat: f64,
    pub scales: Vec<f64>,
    /// The maximizing ratio at each scale, aligned with `scales`.
    pub per_scale: Vec<f64>,
    pub worst_center: Vec<f64>,
    pub worst_scale: f64,
    /// Largest relative shell error `shell / μ(B_r)` seen while probing.
    pub shell_error: f64,
}

impl AtomicMeasure {
    pub fn new(space: Space, points: Vec<f64>, masses: Vec<f64>, resolution: f64) -> Result<Self> {
        let n = space.ambient_dim();
        if masses.is_empty() {
            return domain("an atomic measure needs at least one atom");
        }
        if points.len() != masses.len() * n {
            return domain(format!(
                "{} coordinates for {} atoms in dimension {n}",
                points.len(),
                masses.len()
            ));
        }
        if let Some(i) = masses.iter().position(|m| !(*m > 0.0) || !m.is_finite()) {
            return domain(format!("atom {i} has non-positive mass {}", masses[i]));
        }
        if !(resolution > 0.0) || !resolution.is_finite() {
            return domain(format!("resolution must be positive, got {resolution}"));
        }
        let total = masses.iter().sum();
        let index = SpatialIndex::build(&space, &points, 4.0 * resolution)?;
        Ok(Self {
            space,
            points,
            masses,
            resolution,
            total,
            index,
        })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let n = self.space.ambient_dim();
        &self.points[i * n..(i + 1) * n]
    }

    /// Flat coordinate buffer.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn index(&self) -> &SpatialIndex {
        &self.index
    }

    /// Smallest scale the estimators accept.
    pub fn scale_floor(&self) -> f64 {
        4.0 * self.resolution
    }

    pub fn check_scale(&self, delta: f64) -> Result<()> {
        // Relative slack for scales computed as products, e.g. 4 · 3^-12.
        if !(delta >= self.scale_floor() * (1.0 - 1e-12)) {
            return domain(format!(
                "scale {delta} is below the floor 4 · resolution = {}",
                self.scale_floor()
            ));
        }
        Ok(())
    }

    /// Atom ids in the closed ball `B_r(x)`, ascending.
    pub fn atoms_within(&self, x: &[f64], r: f64) -> Vec<usize> {
        if r <= 0.0 {
            return (0..self.len())
                .filter(|&i| self.space.distance(x, self.point(i)) <= r.max(0.0))
                .collect();
        }
        self.index.within(x, r)
    }

    /// `μ(B_r(x))` for the closed ball, summed in atom order.
    pub fn ball_mass(&self, x: &[f64], r: f64) -> f64 {
        self.atoms_within(x, r).iter().map(|&i| self.masses[i]).sum()
    }

    /// `(μ(B_r(x)), shell)` where `shell` is the atomic mass with
    /// `r - 2·res < d(x, a) <= r + 2·res`.
    pub fn ball_mass_with_error(&self, x: &[f64], r: f64) -> (f64, f64) {
        let inner = r - 2.0 * self.resolution;
        let mut mass = 0.0;
        let mut shell = 0.0;
        for i in self.atoms_within(x, r + 2.0 * self.resolution) {
            let d = self.space.distance(x, self.point(i));
            if d <= r {
                mass += self.masses[i];
            }
            if d > inner {
                shell += self.masses[i];
            }
        }
        (mass, shell)
    }

    /// `μ(B_r(a))` for every atom `a`.
    pub fn ball_masses(&self, r: f64) -> Vec<f64> {
        let index = self.index_for(r);
        (0..self.len())
            .into_par_iter()
            .map(|i| index.within(self.point(i), r).iter().map(|&j| self.masses[j]).sum())
            .collect()
    }

    /// An index whose bucket width matches radius `r`.
    pub(crate) fn index_for(&self, r: f64) -> SpatialIndex {
        let width = self.space.embedded_radius(r).max(1e-300);
        if (width / self.index.width() - 1.0).abs() < 1e-9 {
            return self.index.clone();
        }
        self.index
            .rebuilt(width)
            .expect("points were validated when the measure was built")
    }

    /// Discretized `∫ μ(B_δ(x))^{q-1} dμ(x)`.
    pub fn lq_sum(&self, delta: f64, q: f64) -> Result<f64> {
        if q == 1.0 {
            return domain("lq_sum is undefined at q = 1; use the entropy module");
        }
        self.check_scale(delta)?;
        Ok(self.lq_sum_unchecked(delta, q))
    }

    pub(crate) fn lq_sum_unchecked(&self, delta: f64, q: f64) -> f64 {
        self.ball_masses(delta)
            .iter()
            .zip(&self.masses)
            .map(|(b, m)| m * b.powf(q - 1.0))
            .sum()
    }

    /// `lq_sum` together with the largest change when the radius moves by
    /// the shell width `2 · resolution` in either direction.
    pub fn lq_sum_with_error(&self, delta: f64, q: f64) -> Result<(f64, f64)> {
        let value = self.lq_sum(delta, q)?;
        let w = 2.0 * self.resolution;
        let hi = self.lq_sum_unchecked(delta + w, q);
        let lo = self.lq_sum_unchecked((delta - w).max(self.resolution), q);
        Ok((value, (hi - value).abs().max((lo - value).abs())))
    }

    /// Largest `μ(B_2r(x)) / μ(B_r(x))` over probed atoms and scales.
    ///
    /// `probes` atoms are used, evenly strided by id; all atoms when
    /// `probes >= len`.
    pub fn doubling_constant(&self, scales: &[f64], probes: usize) -> Result<DoublingConstantEstimate> {
        if scales.is_empty() {
            return domain("doubling constant needs at least one scale");
        }
        for &r in scales {
            self.check_scale(r)?;
        }
        let ids = self.probe_ids(probes);
        let mut c_hat = 1.0f64;
        let mut worst = (0usize, scales[0]);
        let mut per_scale = Vec::with_capacity(scales.len());
        let mut shell_error = 0.0f64;
        for &r in scales {
            let small = self.ball_masses(r);
            let big = self.ball_masses(2.0 * r);
            let mut best = 1.0f64;
            for &i in &ids {
                let ratio = big[i] / small[i];
                if ratio > best {
                    best = ratio;
                }
                if ratio > c_hat {
                    c_hat = ratio;
                    worst = (i, r);
                }
            }
            per_scale.push(best);
            for &i in ids.iter().step_by((ids.len() / 64).max(1)) {
                let (m, shell) = self.ball_mass_with_error(self.point(i), r);
                shell_error = shell_error.max(shell / m);
            }
        }
        Ok(DoublingConstantEstimate {
            c_hat,
            scales: scales.to_vec(),
            per_scale,
            worst_center: self.point(worst.0).to_vec(),
            worst_scale: worst.1,
            shell_error,
        })
    }

    pub(crate) fn probe_ids(&self, probes: usize) -> Vec<usize> {
        let n = self.len();
        if probes >= n || probes == 0 {
            return (0..n).collect();
        }
        (0..probes).map(|k| k * n / probes).collect()
    }

    /// Image measure under a chart; masses are carried over unchanged.
    pub fn pushforward(&self, chart: &ChartMap) -> Result<AtomicMeasure> {
        let (space, lip) = chart.target(&self.space)?;
        let mut points = Vec::with_capacity(self.len() * space.ambient_dim());
        for i in 0..self.len() {
            let image = chart.apply(self.point(i)).map_err(|e| Error::Domain(format!("atom {i}: {e}")))?;
            points.extend(image);
        }
        AtomicMeasure::new(space, points, self.masses.clone(), self.resolution * lip)
    }

    /// Diameter of the atom cloud (quadratic; meant for modest sizes).
    pub fn support_diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                d = d.max(self.space.distance(self.point(i), self.point(j)));
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{attractor_atoms_depth, WORD_BUDGET};
    use crate::manifolds::StereographicChart;
    use crate::systems;

    fn two_atoms() -> AtomicMeasure {
        AtomicMeasure::new(Space::euclidean(1), vec![0.0, 1.0], vec![0.5, 0.5], 0.01).unwrap()
    }

    #[test]
    fn rejects_bad_masses() {
        assert!(AtomicMeasure::new(Space::euclidean(1), vec![0.0], vec![0.0], 0.1).is_err());
        assert!(AtomicMeasure::new(Space::euclidean(1), vec![0.0, 1.0], vec![1.0], 0.1).is_err());
    }

    #[test]
    fn own_cylinder_is_inside() {
        let spec = systems::fair_cantor();
        let mu = attractor_atoms_depth(&spec, 2, WORD_BUDGET).unwrap();
        assert!(mu.ball_mass(mu.point(0), 1.0 / 9.0) >= 0.25);
    }

    #[test]
    fn whole_space_ball_has_total_mass() {
        let mu = two_atoms();
        assert_eq!(mu.ball_mass(&[5.0], 10.0), mu.total_mass());
    }

    #[test]
    fn depth_twelve_left_third() {
        // Exact count: the cylinders of word prefix 0 lie in [0, 1/3]; the
        // anchor of prefix 1 sits at 2/3, outside.
        let spec = systems::fair_cantor();
        let mu = attractor_atoms_depth(&spec, 12, WORD_BUDGET).unwrap();
        let m = mu.ball_mass(&[0.0], 1.0 / 3.0);
        assert!((m - 0.5).abs() <= 2f64.powi(-10));
    }

    #[test]
    fn lq_sum_closed_forms() {
        let mu = two_atoms();
        assert!((mu.lq_sum(0.1, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((mu.lq_sum(0.1, 0.5).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!(mu.lq_sum(0.1, 1.0).is_err());
        assert!(mu.lq_sum(0.01, 2.0).is_err());
    }

    fn correlation_oracle(mu: &AtomicMeasure, delta: f64) -> f64 {
        let mut s = 0.0;
        for a in 0..mu.len() {
            for b in 0..mu.len() {
                if mu.space().distance(mu.point(a), mu.point(b)) <= delta {
                    s += mu.masses()[a] * mu.masses()[b];
                }
            }
        }
        s
    }

    #[test]
    fn q_two_is_the_correlation_sum() {
        let spec = systems::fair_cantor();
        let mu = attractor_atoms_depth(&spec, 12, WORD_BUDGET).unwrap();
        let delta = 2f64.powi(-6);
        let got = mu.lq_sum(delta, 2.0).unwrap();
        assert!((got - correlation_oracle(&mu, delta)).abs() < 1e-12);
    }

    #[test]
    fn ball_mass_is_monotone_in_r() {
        let spec = systems::biased_cantor();
        let mu = attractor_atoms_depth(&spec, 8, WORD_BUDGET).unwrap();
        let x = mu.point(17).to_vec();
        let mut last = 0.0;
        for k in 1..200 {
            let m = mu.ball_mass(&x, k as f64 * 0.005);
            assert!(m >= last);
            last = m;
        }
    }

    #[test]
    fn interval_measure_doubling() {
        let spec = systems::uniform_interval();
        let mu = attractor_atoms_depth(&spec, 12, WORD_BUDGET).unwrap();
        let scales: Vec<f64> = (3..=8).map(|t| 2f64.powi(-t)).collect();
        let est = mu.doubling_constant(&scales, usize::MAX).unwrap();
        // Interior probes give ratio 2; boundary probes can reach 3.
        assert!(est.c_hat <= 4.0, "C = {}", est.c_hat);
        assert!(est.c_hat >= 1.9);
    }

    #[test]
    fn cantor_doubling_is_finite() {
        let spec = systems::fair_cantor();
        let mu = attractor_atoms_depth(&spec, 12, WORD_BUDGET).unwrap();
        let scales: Vec<f64> = (3..=8).map(|t| 2f64.powi(-t)).collect();
        let est = mu.doubling_constant(&scales, usize::MAX).unwrap();
        assert!(est.c_hat.is_finite() && est.c_hat >= 1.0 && est.c_hat <= 8.0, "C = {}", est.c_hat);
    }

    #[test]
    fn single_atom_doubling_is_one() {
        let mu = AtomicMeasure::new(Space::euclidean(2), vec![0.3, 0.3], vec![1.0], 1e-3).unwrap();
        let est = mu.doubling_constant(&[0.01, 0.1], 10).unwrap();
        assert_eq!(est.c_hat, 1.0);
    }

    #[test]
    fn identity_pushforward_is_identical() {
        let spec = systems::biased_cantor();
        let mu = attractor_atoms_depth(&spec, 6, WORD_BUDGET).unwrap();
        let same = mu.pushforward(&ChartMap::Identity).unwrap();
        assert_eq!(same.points(), mu.points());
        assert_eq!(same.masses(), mu.masses());
    }

    #[test]
    fn lift_preserves_masses_and_compares_balls() {
        let planar_spec = systems::planar_cantor();
        let mu = attractor_atoms_depth(&planar_spec, 8, WORD_BUDGET).unwrap();
        let chart = StereographicChart::new(2).unwrap();
        let lifted = mu.pushforward(&ChartMap::Lift(chart)).unwrap();
        assert_eq!(lifted.masses(), mu.masses());
        assert!(lifted.space().is_sphere());
        // Near the pole φ halves lengths: a sphere ball of radius 2r sits
        // between planar balls of radius r and 1.2 r on this support.
        for i in (0..mu.len()).step_by(13) {
            let r = 0.02;
            let sphere = lifted.ball_mass(lifted.point(i), 2.0 * r);
            let lo = mu.ball_mass(mu.point(i), r * 0.8);
            let hi = mu.ball_mass(mu.point(i), r * 1.2);
            assert!(lo <= sphere + 1e-12 && sphere <= hi + 1e-12, "i={i}");
        }
        let outside = AtomicMeasure::new(Space::euclidean(2), vec![1.5, 0.0], vec![1.0], 0.1).unwrap();
        assert!(outside.pushforward(&ChartMap::Lift(chart)).is_err());
    }
}
