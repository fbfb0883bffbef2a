use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::manifolds::StereographicChart;

/// Sphere points must have unit Euclidean norm up to this tolerance.
pub const SPHERE_TOL: f64 = 1e-12;

// Validation tolerance for points that went through a few floating point maps.
const SPHERE_ACCEPT: f64 = 1e-9;

/// The metric space a measure lives in.
///
/// Points are always stored in ambient coordinates: `R^n` for
/// `Euclidean(n)`, `R^{n+1}` for `SphereGeodesic(n)` and chart
/// coordinates (the open unit disk of `R^n`) for `Chart`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Space {
    Euclidean { dim: usize },
    /// The unit sphere `S^n` with its great-circle distance.
    SphereGeodesic { dim: usize },
    /// Chart coordinates whose distance is measured after lifting into `inner`.
    Chart {
        inner: Box<Space>,
        chart: StereographicChart,
    },
}

impl Space {
    pub fn euclidean(dim: usize) -> Self {
        Space::Euclidean { dim }
    }

    pub fn sphere(dim: usize) -> Self {
        Space::SphereGeodesic { dim }
    }

    /// Pullback of the geodesic metric of `S^n` to the disk through `chart`.
    pub fn chart(chart: StereographicChart) -> Self {
        Space::Chart {
            inner: Box::new(Space::sphere(chart.dim())),
            chart,
        }
    }

    /// Number of coordinates of a stored point.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Space::Euclidean { dim } => *dim,
            Space::SphereGeodesic { dim } => dim + 1,
            Space::Chart { chart, .. } => chart.dim(),
        }
    }

    /// Number of coordinates of the points the spatial index buckets.
    pub(crate) fn embedded_dim(&self) -> usize {
        match self {
            Space::Chart { inner, .. } => inner.ambient_dim(),
            other => other.ambient_dim(),
        }
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self, Space::SphereGeodesic { .. })
    }

    pub fn validate_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.ambient_dim() {
            return domain(format!(
                "point has {} coordinates, space expects {}",
                x.len(),
                self.ambient_dim()
            ));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return domain("point has a non-finite coordinate");
        }
        match self {
            Space::SphereGeodesic { .. } => {
                let norm = norm(x);
                if (norm - 1.0).abs() > SPHERE_ACCEPT {
                    return domain(format!("sphere point has norm {norm}, expected 1"));
                }
            }
            Space::Chart { .. } => {
                if norm(x) >= 1.0 {
                    return domain("chart point lies outside the open unit disk");
                }
            }
            Space::Euclidean { .. } => {}
        }
        Ok(())
    }

    /// Distance between two valid points.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Space::Euclidean { .. } => euclid(x, y),
            Space::SphereGeodesic { .. } => geodesic(x, y),
            Space::Chart { chart, .. } => geodesic(&chart.inverse_raw(x), &chart.inverse_raw(y)),
        }
    }

    /// Checked distance: validates both points first.
    pub fn try_distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.validate_point(x)?;
        self.validate_point(y)?;
        Ok(self.distance(x, y))
    }

    /// Coordinates used by the spatial index.
    pub(crate) fn embed(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Space::Chart { chart, .. } => chart.inverse_raw(x),
            _ => x.to_vec(),
        }
    }

    /// A radius in embedded coordinates whose ball contains the metric ball
    /// of radius `r`. For the sphere this is the chord length, which never
    /// exceeds the arc length.
    pub(crate) fn embedded_radius(&self, r: f64) -> f64 {
        match self {
            Space::Euclidean { .. } => r,
            _ => {
                if r >= std::f64::consts::PI {
                    2.0
                } else {
                    2.0 * (0.5 * r).sin() * (1.0 + 1e-12) + 1e-15
                }
            }
        }
    }
}

/// A closed ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return domain(format!("ball radius must be positive, got {radius}"));
        }
        Ok(Self { center, radius })
    }

    /// Closed-ball membership.
    pub fn contains(&self, space: &Space, x: &[f64]) -> bool {
        space.distance(&self.center, x) <= self.radius
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub(crate) fn euclid(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

// Clamped arccos of the dot product. Near zero the chord formula is used
// since acos loses half the digits there.
pub(crate) fn geodesic(x: &[f64], y: &[f64]) -> f64 {
    let chord = euclid(x, y);
    if chord < 1e-4 {
        return 2.0 * (0.5 * chord).asin();
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    dot.clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn random_sphere_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = norm(&v);
            if r > 1e-3 && r <= 1.0 {
                return v.iter().map(|c| c / r).collect();
            }
        }
    }

    #[test]
    fn euclidean_line_distance() {
        let s = Space::euclidean(1);
        assert!((s.distance(&[0.2], &[0.5]) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn sphere_orthogonal_and_identical() {
        let s = Space::sphere(2);
        let d = s.try_distance(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        assert!((d - FRAC_PI_2).abs() < 1e-15);
        let p = [0.0, 0.0, -1.0];
        assert_eq!(s.try_distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn non_unit_sphere_point_is_rejected() {
        let s = Space::sphere(2);
        assert!(s.try_distance(&[1.0, 0.1, 0.0], &[0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn metric_axioms_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let chart = StereographicChart::new(2).unwrap();
        let spaces = [Space::euclidean(3), Space::sphere(2), Space::chart(chart)];
        for space in &spaces {
            for _ in 0..10_000 {
                let pts: Vec<Vec<f64>> = (0..3)
                    .map(|_| match space {
                        Space::Euclidean { dim } => {
                            (0..*dim).map(|_| rng.gen_range(-2.0..2.0)).collect()
                        }
                        Space::SphereGeodesic { dim } => random_sphere_point(&mut rng, *dim),
                        Space::Chart { .. } => loop {
                            let u = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                            if norm(&u) < 0.95 {
                                break u;
                            }
                        },
                    })
                    .collect();
                let (x, y, z) = (&pts[0], &pts[1], &pts[2]);
                let dxy = space.distance(x, y);
                assert!(dxy >= 0.0);
                assert!((dxy - space.distance(y, x)).abs() <= 1e-9);
                assert!(space.distance(x, x) <= 1e-9);
                assert!(dxy <= space.distance(x, z) + space.distance(z, y) + 1e-9);
            }
        }
    }

    #[test]
    fn ball_rejects_nonpositive_radius() {
        assert!(Ball::new(vec![0.0], 0.0).is_err());
        assert!(Ball::new(vec![0.0], -1.0).is_err());
        assert!(Ball::new(vec![0.0], 0.5).is_ok());
    }
}
