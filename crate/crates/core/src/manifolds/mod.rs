//! Stereographic charts, systems conjugated onto the lower hemisphere,
//! distortion-band probes and the transfer of the doubling property from
//! the disk to the sphere.

mod chart;

pub use chart::StereographicChart;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::{Ball, Space};
use crate::ifs::{ConformalMap, IfsSpec, SeedSet};
use crate::measure::AtomicMeasure;

/// Support of lifted systems must stay at height `x_{n+1} <= -EQUATOR_MARGIN`.
pub const EQUATOR_MARGIN: f64 = 0.1;

/// A map between spaces used to push measures forward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChartMap {
    Identity,
    /// Disk to hemisphere, `φ⁻¹`.
    Lift(StereographicChart),
    /// Hemisphere to disk, `φ`.
    Project(StereographicChart),
}

impl ChartMap {
    /// Target space and a Lipschitz bound used to rescale the resolution.
    pub(crate) fn target(&self, source: &Space) -> Result<(Space, f64)> {
        match (self, source) {
            (ChartMap::Identity, s) => Ok((s.clone(), 1.0)),
            (ChartMap::Lift(c), Space::Euclidean { dim }) if *dim == c.dim() => {
                Ok((Space::sphere(c.dim()), 2.0))
            }
            (ChartMap::Project(c), Space::SphereGeodesic { dim }) if *dim == c.dim() => {
                Ok((Space::euclidean(c.dim()), 1.0))
            }
            _ => domain("chart does not apply to this space"),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            ChartMap::Identity => Ok(x.to_vec()),
            ChartMap::Lift(c) => c.inverse(x),
            ChartMap::Project(c) => c.forward(x),
        }
    }
}

/// Conjugates a planar similarity system on the disk onto the lower
/// hemisphere: `S_i = φ⁻¹ ∘ f_i ∘ φ`, with the default equator margin.
pub fn conjugate_ifs(planar: &IfsSpec, chart: StereographicChart) -> Result<IfsSpec> {
    conjugate_ifs_with_margin(planar, chart, EQUATOR_MARGIN)
}

pub fn conjugate_ifs_with_margin(
    planar: &IfsSpec,
    chart: StereographicChart,
    margin: f64,
) -> Result<IfsSpec> {
    let SeedSet::Ball(seed) = planar.seed() else {
        return domain("planar system must have a seed ball");
    };
    if !matches!(planar.space(), Space::Euclidean { dim } if *dim == chart.dim()) {
        return domain("planar system must live in the chart's Euclidean space");
    }
    let reach = crate::geometry::space_norm(&seed.center) + seed.radius;
    if reach >= 1.0 {
        return domain(format!(
            "seed ball reaches |u| = {reach}; the chart blows up at the disk boundary"
        ));
    }
    let allowed = StereographicChart::disk_radius_for_margin(margin);
    if reach > allowed {
        return domain(format!(
            "seed ball reaches |u| = {reach}, beyond {allowed} required by the equator margin {margin}"
        ));
    }
    let maps = planar
        .maps()
        .iter()
        .map(|m| ConformalMap::Conjugated {
            base: m.base().clone(),
            chart,
        })
        .collect();
    IfsSpec::new(
        Space::sphere(chart.dim()),
        maps,
        planar.probs().to_vec(),
        SeedSet::Lifted {
            planar: seed.clone(),
            chart,
        },
        planar.gamma(),
    )
}

/// Bounds `d1 <= r1/r <= r2/r <= d2` where `B_{r1}(φx) ⊂ φ(B_r(x)) ⊂ B_{r2}(φx)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionBand {
    pub d1: f64,
    pub d2: f64,
}

impl DistortionBand {
    /// The band of `r / r'` (sphere radius over planar radius).
    pub fn inverse_ratio_band(&self) -> (f64, f64) {
        (1.0 / self.d2, 1.0 / self.d1)
    }

    /// Smallest `m >= 0` with `2^m >= d2 / d1`.
    pub fn doubling_steps(&self) -> u32 {
        let ratio = self.d2 / self.d1;
        if ratio <= 1.0 + 1e-12 {
            0
        } else {
            ratio.log2().ceil() as u32
        }
    }
}

/// Measures the distortion band of `φ` on geodesic balls of the sphere
/// (centers in ambient coordinates, radii as arc lengths). The chart image
/// of a ball is sampled on its boundary; the inscribed and circumscribed
/// radii around `φ(center)` are the extreme boundary distances.
pub fn distortion_probe(chart: &StereographicChart, balls: &[Ball], margin: f64) -> Result<DistortionBand> {
    if balls.is_empty() {
        return domain("distortion probe needs at least one ball");
    }
    let n = chart.dim();
    let max_polar = margin.clamp(-1.0, 1.0).acos();
    let mut d1 = f64::INFINITY;
    let mut d2 = 0.0f64;
    for (k, ball) in balls.iter().enumerate() {
        let x = &ball.center;
        Space::sphere(n).validate_point(x)?;
        let polar = (-x[n]).clamp(-1.0, 1.0).acos();
        if polar + ball.radius > max_polar {
            return domain(format!(
                "ball {k} reaches polar angle {} beyond the margin limit {max_polar}",
                polar + ball.radius
            ));
        }
        let centre = chart.forward_raw(x);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for v in tangent_directions(x) {
            let y: Vec<f64> = x
                .iter()
                .zip(&v)
                .map(|(a, b)| ball.radius.cos() * a + ball.radius.sin() * b)
                .collect();
            let d = crate::geometry::space_euclid(&chart.forward_raw(&y), &centre);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        d1 = d1.min(lo / ball.radius);
        d2 = d2.max(hi / ball.radius);
    }
    Ok(DistortionBand { d1, d2 })
}

// Unit tangent vectors at x: a fine circle in every coordinate plane of an
// orthonormal tangent frame.
fn tangent_directions(x: &[f64]) -> Vec<Vec<f64>> {
    let dim = x.len();
    let mut frame: Vec<Vec<f64>> = Vec::new();
    for axis in 0..dim {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        let mut basis = vec![x.to_vec()];
        basis.extend(frame.iter().cloned());
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(p, q)| p * q).sum();
            v.iter_mut().zip(b).for_each(|(p, q)| *p -= dot * q);
        }
        let norm = crate::geometry::space_norm(&v);
        if norm > 1e-6 {
            frame.push(v.iter().map(|c| c / norm).collect());
        }
        if frame.len() == dim - 1 {
            break;
        }
    }
    let steps = 256;
    let mut out = Vec::new();
    for i in 0..frame.len() {
        for j in i + 1..frame.len() {
            for s in 0..steps {
                let a = std::f64::consts::TAU * s as f64 / steps as f64;
                out.push(
                    frame[i]
                        .iter()
                        .zip(&frame[j])
                        .map(|(p, q)| a.cos() * p + a.sin() * q)
                        .collect(),
                );
            }
        }
    }
    if frame.len() == 1 {
        out.push(frame[0].clone());
        out.push(frame[0].iter().map(|c| -c).collect());
    }
    out
}

/// Outcome of comparing doubling constants across a chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingTransferReport {
    pub c_plane: f64,
    pub c_sphere: f64,
    pub band: DistortionBand,
    pub m: u32,
    /// `c_plane^(m+1)`.
    pub bound: f64,
    pub holds: bool,
    pub sphere_scales: Vec<f64>,
    pub plane_scales: Vec<f64>,
}

/// Measures the doubling constant of the pushforward and checks it against
/// `C_plane^(m+1)` with `2^m >= d2/d1`. Sphere scales are `scales`; the
/// planar constant is measured at `d1 · r · 2^j`, `j = 0..=m`, the radii
/// the transfer argument passes through.
pub fn doubling_transfer_check(
    mu_plane: &AtomicMeasure,
    chart: &ChartMap,
    scales: &[f64],
    probes: usize,
) -> Result<DoublingTransferReport> {
    let lifted = mu_plane.pushforward(chart)?;
    let band = match chart {
        ChartMap::Identity => DistortionBand { d1: 1.0, d2: 1.0 },
        ChartMap::Lift(c) => {
            let mut balls = Vec::new();
            for &i in &lifted.probe_ids(probes.min(64)) {
                for &r in scales {
                    balls.push(Ball::new(lifted.point(i).to_vec(), r)?);
                }
            }
            distortion_probe(c, &balls, EQUATOR_MARGIN)?
        }
        ChartMap::Project(_) => return domain("transfer check expects a planar source measure"),
    };
    let m = band.doubling_steps();
    let c_sphere = lifted.doubling_constant(scales, probes)?.c_hat;
    let plane_scales: Vec<f64> = scales
        .iter()
        .flat_map(|&r| (0..=m).map(move |j| band.d1 * r * 2f64.powi(j as i32)))
        .collect();
    let c_plane = mu_plane.doubling_constant(&plane_scales, probes)?.c_hat;
    let bound = c_plane.powi(m as i32 + 1);
    Ok(DoublingTransferReport {
        c_plane,
        c_sphere,
        band,
        m,
        bound,
        holds: c_sphere <= bound * (1.0 + 1e-9),
        sphere_scales: scales.to_vec(),
        plane_scales,
    })
}

/// Writes atoms as `x,y,z,mass` (or `x0,..,mass` in other dimensions).
pub fn write_lifted_csv<W: std::io::Write>(out: W, mu: &AtomicMeasure) -> Result<()> {
    let n = mu.space().ambient_dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = if n == 3 {
        ["x", "y", "z"].map(String::from).to_vec()
    } else {
        (0..n).map(|k| format!("x{k}")).collect()
    };
    header.push("mass".into());
    w.write_record(&header)?;
    for i in 0..mu.len() {
        let mut row: Vec<String> = mu.point(i).iter().map(|v| v.to_string()).collect();
        row.push(mu.masses()[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
