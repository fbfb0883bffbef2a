use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::map::{ConformalMap, Similarity};
use crate::error::{Error, Result};
use crate::geometry::{Ball, Space};
use crate::manifolds::StereographicChart;

/// The compact set `W` every map sends into itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedSet {
    /// A closed metric ball of the ambient space.
    Ball(Ball),
    /// The lift `φ⁻¹(B)` of a closed disk ball `B`.
    Lifted {
        planar: Ball,
        chart: StereographicChart,
    },
}

impl SeedSet {
    pub fn contains(&self, space: &Space, x: &[f64]) -> bool {
        const TOL: f64 = 1e-9;
        match self {
            SeedSet::Ball(b) => space.distance(&b.center, x) <= b.radius + TOL,
            SeedSet::Lifted { planar, chart } => {
                if x[chart.dim()] >= 0.0 {
                    return false;
                }
                let u = chart.forward_raw(x);
                crate::geometry::space_euclid(&planar.center, &u) <= planar.radius + TOL
            }
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            SeedSet::Ball(b) => b.center.clone(),
            SeedSet::Lifted { planar, chart } => chart.inverse_raw(&planar.center),
        }
    }

    /// Deterministic sample of points of the seed set: the center, the
    /// extreme points along each axis and `extra` random interior points.
    pub fn sample(&self, space: &Space, extra: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            SeedSet::Ball(b) if !space.is_sphere() => euclidean_ball_sample(b, extra, &mut rng),
            SeedSet::Ball(b) => {
                // Geodesic ball: exp map along random tangent directions.
                let c = &b.center;
                let mut out = vec![c.clone()];
                for _ in 0..extra {
                    let v: Vec<f64> = (0..c.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let dot: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                    let t: Vec<f64> = v.iter().zip(c).map(|(a, b)| a - dot * b).collect();
                    let tn = t.iter().map(|a| a * a).sum::<f64>().sqrt();
                    if tn < 1e-9 {
                        continue;
                    }
                    let a = rng.gen_range(0.0..=b.radius);
                    out.push(
                        c.iter()
                            .zip(&t)
                            .map(|(ci, ti)| a.cos() * ci + a.sin() * ti / tn)
                            .collect(),
                    );
                }
                out
            }
            SeedSet::Lifted { planar, chart } => euclidean_ball_sample(planar, extra, &mut rng)
                .iter()
                .map(|u| chart.inverse_raw(u))
                .collect(),
        }
    }
}

fn euclidean_ball_sample(b: &Ball, extra: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = b.center.len();
    let mut out = vec![b.center.clone()];
    for d in 0..n {
        for sign in [-1.0, 1.0] {
            let mut p = b.center.clone();
            p[d] += sign * b.radius;
            out.push(p);
        }
    }
    while out.len() < 1 + 2 * n + extra {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().map(|a| a * a).sum::<f64>() <= 1.0 {
            out.push(b.center.iter().zip(&v).map(|(c, a)| c + b.radius * a).collect());
        }
    }
    out
}

/// A conformal iterated function system with its probability vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IfsSpec {
    space: Space,
    maps: Vec<ConformalMap>,
    probs: Vec<f64>,
    seed: SeedSet,
    gamma: Option<f64>,
    diameter: f64,
    diam_scale: f64,
    anchor: Vec<f64>,
}

fn invalid<T>(field: &str, message: impl Into<String>) -> Result<T> {
    Err(Error::InvalidSpec {
        field: field.to_string(),
        message: message.into(),
    })
}

impl IfsSpec {
    /// Validates the system and estimates `diam(K)`.
    pub fn new(
        space: Space,
        maps: Vec<ConformalMap>,
        probs: Vec<f64>,
        seed: SeedSet,
        gamma: Option<f64>,
    ) -> Result<Self> {
        if maps.len() < 2 {
            return invalid("maps", format!("need at least 2 maps, got {}", maps.len()));
        }
        if probs.len() != maps.len() {
            return invalid(
                "probs",
                format!("{} probabilities for {} maps", probs.len(), maps.len()),
            );
        }
        if let Some(i) = probs.iter().position(|p| !(*p > 0.0) || !p.is_finite()) {
            return invalid("probs", format!("probs[{i}] = {} is not positive", probs[i]));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return invalid("probs", format!("probabilities sum to {total}, expected 1"));
        }
        if let Some(g) = gamma {
            if !(g > 0.0 && g < 1.0) {
                return invalid("gamma", format!("Hölder exponent {g} outside (0, 1)"));
            }
        }
        match (&space, &seed) {
            (Space::Euclidean { dim }, SeedSet::Ball(b)) => {
                if b.center.len() != *dim {
                    return invalid("seed_ball", "center dimension does not match the space");
                }
                for (i, m) in maps.iter().enumerate() {
                    match m {
                        ConformalMap::Similarity(s) if s.dim() == *dim => {}
                        ConformalMap::Similarity(_) => {
                            return invalid(&format!("maps[{i}]"), "dimension does not match the space")
                        }
                        ConformalMap::Conjugated { .. } => {
                            return invalid(
                                &format!("maps[{i}]"),
                                "conjugated maps need a sphere space",
                            )
                        }
                    }
                }
            }
            (Space::SphereGeodesic { dim }, SeedSet::Lifted { planar, chart }) => {
                if chart.dim() != *dim || planar.center.len() != *dim {
                    return invalid("chart", "chart dimension does not match the sphere");
                }
                let reach = crate::geometry::space_norm(&planar.center) + planar.radius;
                if reach >= 1.0 {
                    return invalid(
                        "seed_ball",
                        format!("planar seed reaches |u| = {reach}, the chart blows up at the disk boundary"),
                    );
                }
                for (i, m) in maps.iter().enumerate() {
                    match m {
                        ConformalMap::Conjugated { base, chart: c } if c == chart && base.dim() == *dim => {}
                        _ => {
                            return invalid(
                                &format!("maps[{i}]"),
                                "sphere systems need maps conjugated by the seed chart",
                            )
                        }
                    }
                }
            }
            _ => return invalid("space", "unsupported combination of space and seed set"),
        }
        for (i, m) in maps.iter().enumerate() {
            let r = m.ratio();
            if !(r > 0.0 && r < 1.0) {
                return invalid(&format!("maps[{i}].ratio"), format!("ratio {r} outside (0, 1)"));
            }
        }
        for (i, m) in maps.iter().enumerate() {
            for p in seed.sample(&space, 64, i as u64) {
                let image = m.apply(&p);
                if !seed.contains(&space, &image) {
                    return invalid(
                        &format!("maps[{i}]"),
                        format!("map sends seed point {p:?} to {image:?}, outside the seed set"),
                    );
                }
            }
        }

        let anchor = maps[0].fixed_point(&seed.center());
        let diameter = cloud_diameter(&space, &maps);
        let diam_scale = match &seed {
            SeedSet::Ball(_) => diameter,
            SeedSet::Lifted { planar, .. } => {
                let bases: Vec<ConformalMap> = maps
                    .iter()
                    .map(|m| ConformalMap::Similarity(m.base().clone()))
                    .collect();
                let planar_diam = cloud_diameter(&Space::euclidean(planar.center.len()), &bases);
                let gap = (crate::geometry::space_norm(&planar.center) - planar.radius).max(0.0);
                // Sup of the conformal factor of φ⁻¹ over the (convex) planar seed.
                let lip = 2.0 / (1.0 + gap * gap);
                lip * planar_diam
            }
        };
        Ok(Self {
            space,
            maps,
            probs,
            seed,
            gamma,
            diameter,
            diam_scale,
            anchor,
        })
    }

    /// Similarity system in Euclidean space with seed ball `seed`.
    pub fn euclidean(maps: Vec<Similarity>, probs: Vec<f64>, seed: Ball) -> Result<Self> {
        let dim = seed.center.len();
        Self::new(
            Space::euclidean(dim),
            maps.into_iter().map(ConformalMap::Similarity).collect(),
            probs,
            SeedSet::Ball(seed),
            None,
        )
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn maps(&self) -> &[ConformalMap] {
        &self.maps
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn seed(&self) -> &SeedSet {
        &self.seed
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Estimate of `diam(K)`, also the diameter assigned to the empty word.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Factor with `diam(K_u) <= ratio_u * diam_scale` for every nonempty word.
    pub fn diam_scale(&self) -> f64 {
        self.diam_scale
    }

    /// Fixed point of the first map; every atom is the image of this point.
    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    /// The chart when the maps are conjugated similarities of the disk.
    pub fn chart(&self) -> Option<StereographicChart> {
        match &self.seed {
            SeedSet::Lifted { chart, .. } => Some(*chart),
            SeedSet::Ball(_) => None,
        }
    }

    /// The planar system behind a conjugated one.
    pub fn planar(&self) -> Option<IfsSpec> {
        match &self.seed {
            SeedSet::Lifted { planar, .. } => Some(
                IfsSpec::euclidean(
                    self.maps.iter().map(|m| m.base().clone()).collect(),
                    self.probs.clone(),
                    planar.clone(),
                )
                .expect("planar part of a validated system is valid"),
            ),
            SeedSet::Ball(_) => None,
        }
    }

    /// Intrinsic dimension `n` (the exponent in `|det S'| = |S'|^n`).
    pub fn intrinsic_dim(&self) -> usize {
        match &self.space {
            Space::Euclidean { dim } | Space::SphereGeodesic { dim } => *dim,
            Space::Chart { chart, .. } => chart.dim(),
        }
    }
}

// Diameter of the images of all fixed points under all words of a fixed
// depth. Every such point lies in K, so this never overestimates diam(K);
// it converges geometrically in the depth.
fn cloud_diameter(space: &Space, maps: &[ConformalMap]) -> f64 {
    let l = maps.len();
    let mut depth = 0;
    while l.pow(depth + 2) <= 4096 {
        depth += 1;
    }
    let start = match maps[0].chart() {
        Some(chart) => chart.inverse_raw(&vec![0.0; chart.dim()]),
        None => vec![0.0; maps[0].base().dim()],
    };
    let mut cloud: Vec<Vec<f64>> = maps.iter().map(|m| m.fixed_point(&start)).collect();
    for _ in 0..depth {
        cloud = maps
            .iter()
            .flat_map(|m| cloud.iter().map(move |p| m.apply(p)))
            .collect();
    }
    let mut diam = 0.0f64;
    for i in 0..cloud.len() {
        for j in i + 1..cloud.len() {
            diam = diam.max(space.distance(&cloud[i], &cloud[j]));
        }
    }
    diam
}
