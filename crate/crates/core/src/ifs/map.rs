use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::manifolds::StereographicChart;

/// `x ↦ ratio · R x + translation` with `R` orthogonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    ratio: f64,
    /// Row-major `n × n` orthogonal matrix.
    rotation: Vec<f64>,
    translation: Vec<f64>,
}

impl Similarity {
    pub fn new(ratio: f64, rotation: Vec<f64>, translation: Vec<f64>) -> Result<Self> {
        let n = translation.len();
        if n == 0 {
            return domain("similarity needs a nonempty translation");
        }
        if !(ratio > 0.0) || !ratio.is_finite() {
            return domain(format!("similarity ratio must be positive, got {ratio}"));
        }
        if rotation.len() != n * n {
            return domain(format!("rotation must be {n}x{n}"));
        }
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| rotation[k * n + i] * rotation[k * n + j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-9 {
                    return domain("rotation is not orthogonal");
                }
            }
        }
        Ok(Self {
            ratio,
            rotation,
            translation,
        })
    }

    /// `x ↦ ratio · x + translation`.
    pub fn scaling(ratio: f64, translation: Vec<f64>) -> Result<Self> {
        let n = translation.len();
        Self::new(ratio, identity_matrix(n), translation)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            ratio: 1.0,
            rotation: identity_matrix(dim),
            translation: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn rotation(&self) -> &[f64] {
        &self.rotation
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let rx: f64 = (0..n).map(|k| self.rotation[i * n + k] * x[k]).sum();
                self.ratio * rx + self.translation[i]
            })
            .collect()
    }

    pub fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let rt: f64 = (0..n)
                    .map(|k| self.rotation[k * n + i] * (y[k] - self.translation[k]))
                    .sum();
                rt / self.ratio
            })
            .collect()
    }

    /// `self ∘ inner`.
    pub fn then_inner(&self, inner: &Similarity) -> Similarity {
        let n = self.dim();
        let mut rotation = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                rotation[i * n + j] = (0..n)
                    .map(|k| self.rotation[i * n + k] * inner.rotation[k * n + j])
                    .sum();
            }
        }
        Similarity {
            ratio: self.ratio * inner.ratio,
            rotation,
            translation: self.apply(&inner.translation),
        }
    }
}

fn identity_matrix(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// A conformal contraction: a Euclidean similarity, or a similarity of the
/// disk conjugated onto the hemisphere, `φ⁻¹ ∘ f ∘ φ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ConformalMap {
    Similarity(Similarity),
    Conjugated {
        base: Similarity,
        chart: StereographicChart,
    },
}

impl ConformalMap {
    /// The underlying similarity (in chart coordinates when conjugated).
    pub fn base(&self) -> &Similarity {
        match self {
            ConformalMap::Similarity(s) => s,
            ConformalMap::Conjugated { base, .. } => base,
        }
    }

    pub fn chart(&self) -> Option<&StereographicChart> {
        match self {
            ConformalMap::Similarity(_) => None,
            ConformalMap::Conjugated { chart, .. } => Some(chart),
        }
    }

    /// Ratio of the base similarity.
    pub fn ratio(&self) -> f64 {
        self.base().ratio()
    }

    /// Evaluated as lift ∘ planar ∘ project for conjugated maps.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ConformalMap::Similarity(s) => s.apply(x),
            ConformalMap::Conjugated { base, chart } => {
                chart.inverse_raw(&base.apply(&chart.forward_raw(x)))
            }
        }
    }

    pub fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        match self {
            ConformalMap::Similarity(s) => s.apply_inverse(y),
            ConformalMap::Conjugated { base, chart } => {
                chart.inverse_raw(&base.apply_inverse(&chart.forward_raw(y)))
            }
        }
    }

    /// `self ∘ inner`; both maps must have the same form and chart.
    pub fn compose(&self, inner: &ConformalMap) -> Result<ConformalMap> {
        match (self, inner) {
            (ConformalMap::Similarity(a), ConformalMap::Similarity(b)) => {
                Ok(ConformalMap::Similarity(a.then_inner(b)))
            }
            (
                ConformalMap::Conjugated { base: a, chart: ca },
                ConformalMap::Conjugated { base: b, chart: cb },
            ) if ca == cb => Ok(ConformalMap::Conjugated {
                base: a.then_inner(b),
                chart: *ca,
            }),
            _ => domain("cannot compose maps of different forms or charts"),
        }
    }

    /// The identity map of the same form.
    pub fn identity_like(&self) -> ConformalMap {
        match self {
            ConformalMap::Similarity(s) => ConformalMap::Similarity(Similarity::identity(s.dim())),
            ConformalMap::Conjugated { base, chart } => ConformalMap::Conjugated {
                base: Similarity::identity(base.dim()),
                chart: *chart,
            },
        }
    }

    /// Conformal factor `|S'(x)|` (the derivative is a scaled isometry).
    pub fn scale_at(&self, x: &[f64]) -> f64 {
        match self {
            ConformalMap::Similarity(s) => s.ratio(),
            ConformalMap::Conjugated { base, chart } => {
                let u = chart.forward_raw(x);
                chart.inverse_scale(&base.apply(&u)) * base.ratio() * chart.forward_scale(x)
            }
        }
    }

    /// Fixed point by iteration from `start`.
    pub fn fixed_point(&self, start: &[f64]) -> Vec<f64> {
        let mut x = start.to_vec();
        for _ in 0..100_000 {
            let next = self.apply(&x);
            let step = next
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            x = next;
            if step <= 1e-16 {
                break;
            }
        }
        x
    }
}
