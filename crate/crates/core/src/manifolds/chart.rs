use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::SPHERE_TOL;

/// Stereographic projection of the open lower hemisphere of `S^n` onto the
/// open unit disk of `R^n`, projecting from the north pole.
///
/// `forward(x) = (x_1, ..., x_n) / (1 - x_{n+1})` and
/// `inverse(u) = (2u_1, ..., 2u_n, |u|^2 - 1) / (|u|^2 + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StereographicChart {
    dim: usize,
}

impl StereographicChart {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return domain("chart dimension must be positive");
        }
        Ok(Self { dim })
    }

    /// Dimension `n` of the sphere and of the disk.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Lower hemisphere to disk.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim + 1 {
            return domain(format!("expected {} sphere coordinates", self.dim + 1));
        }
        let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return domain(format!("point has norm {norm}, not on the unit sphere"));
        }
        if !(x[self.dim] < 0.0) {
            return domain(format!(
                "point with last coordinate {} is outside the open lower hemisphere",
                x[self.dim]
            ));
        }
        Ok(self.forward_raw(x))
    }

    /// Disk to lower hemisphere.
    pub fn inverse(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.dim {
            return domain(format!("expected {} disk coordinates", self.dim));
        }
        let sq: f64 = u.iter().map(|c| c * c).sum();
        if !(sq < 1.0) {
            return domain(format!("point with |u| = {} is outside the open unit disk", sq.sqrt()));
        }
        Ok(self.inverse_raw(u))
    }

    pub(crate) fn forward_raw(&self, x: &[f64]) -> Vec<f64> {
        let s = 1.0 / (1.0 - x[self.dim]);
        x[..self.dim].iter().map(|c| c * s).collect()
    }

    pub(crate) fn inverse_raw(&self, u: &[f64]) -> Vec<f64> {
        let sq: f64 = u.iter().map(|c| c * c).sum();
        let s = 1.0 / (sq + 1.0);
        let mut x: Vec<f64> = u.iter().map(|c| 2.0 * c * s).collect();
        x.push((sq - 1.0) * s);
        // One Newton step on the norm keeps lifted points on the sphere to
        // working precision.
        let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > SPHERE_TOL * 0.1 {
            x.iter_mut().for_each(|c| *c /= norm);
        }
        x
    }

    /// Conformal factor of `forward` at the sphere point `x`.
    pub fn forward_scale(&self, x: &[f64]) -> f64 {
        1.0 / (1.0 - x[self.dim])
    }

    /// Conformal factor of `inverse` at the disk point `u`.
    pub fn inverse_scale(&self, u: &[f64]) -> f64 {
        2.0 / (1.0 + u.iter().map(|c| c * c).sum::<f64>())
    }

    /// Height `x_{n+1}` of the lift of `u`.
    pub fn height(&self, u: &[f64]) -> f64 {
        let sq: f64 = u.iter().map(|c| c * c).sum();
        (sq - 1.0) / (sq + 1.0)
    }

    /// Largest disk radius whose lift stays at height `<= -margin`.
    pub fn disk_radius_for_margin(margin: f64) -> f64 {
        ((1.0 - margin) / (1.0 + margin)).sqrt()
    }
}
