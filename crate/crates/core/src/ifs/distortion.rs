use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cutset::{attractor_atoms_depth, WORD_BUDGET};
use super::spec::IfsSpec;
use super::word::Word;
use crate::error::{domain, Result};

/// Empirical bounded-distortion constants of a system.
///
/// `d1` bounds the ratio `|det S'_u(x)| / |det S'_u(y)|`; `d2` bounds
/// `d(S_u x, S_u y) / (|S'_u| d(x, y))` from both sides where `|S'_u|` is
/// the sup of the conformal factor. Both are lower bounds on the true
/// constants since they come from samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionConstants {
    pub d1: f64,
    pub d2: f64,
    /// `max(d2 · diam(K), d2 / diam(K))`.
    pub d3: f64,
    /// Smallest `|det S'_i(x)|` over the maps and sampled seed points.
    pub lambda_min: f64,
}

/// Probes `probe_count` random (word, point pair) samples.
pub fn distortion_constants(spec: &IfsSpec, probe_count: usize, seed: u64) -> Result<DistortionConstants> {
    if probe_count < 2 {
        return domain("distortion probe needs at least 2 probes");
    }
    let n = spec.intrinsic_dim() as i32;
    let space = spec.space();
    let sample_depth = {
        let mut d = 1;
        while spec.len().pow(d as u32 + 1) <= 512 {
            d += 1;
        }
        d
    };
    let cloud = attractor_atoms_depth(spec, sample_depth, WORD_BUDGET)?;
    let points: Vec<&[f64]> = (0..cloud.len()).map(|i| cloud.point(i)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d1 = 1.0f64;
    let mut d2 = 1.0f64;
    for _ in 0..probe_count {
        let len = rng.gen_range(1..=6);
        let symbols: Vec<usize> = (0..len).map(|_| rng.gen_range(0..spec.len())).collect();
        let word = Word::from_symbols(spec, &symbols)?;
        let map = word.map();
        let x = points[rng.gen_range(0..points.len())];
        let y = points[rng.gen_range(0..points.len())];
        let (sx, sy) = (map.scale_at(x), map.scale_at(y));
        d1 = d1.max((sx / sy).powi(n)).max((sy / sx).powi(n));
        let sup = points.iter().map(|p| map.scale_at(p)).fold(0.0, f64::max);
        let dxy = space.distance(x, y);
        if dxy > 0.0 {
            let ratio = space.distance(&map.apply(x), &map.apply(y)) / (sup * dxy);
            d2 = d2.max(ratio).max(1.0 / ratio);
        }
    }
    let d2 = d2.max(d1);
    let diam = spec.diameter();
    let d3 = (d2 * diam).max(d2 / diam).max(1.0);

    let seed_points = spec.seed().sample(space, 64, seed);
    let lambda_min = spec
        .maps()
        .iter()
        .flat_map(|m| seed_points.iter().map(move |p| m.scale_at(p).powi(n)))
        .fold(f64::INFINITY, f64::min);
    Ok(DistortionConstants {
        d1,
        d2,
        d3,
        lambda_min,
    })
}
