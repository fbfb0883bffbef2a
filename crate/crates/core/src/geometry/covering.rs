use serde::{Deserialize, Serialize};

use super::index::SpatialIndex;
use super::space::Space;
use crate::error::{domain, Result};

/// Empirical doubling data of a point cloud.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingProbe {
    /// Largest number of `r`-balls a greedy net needed to cover a `2r`-ball.
    pub n0_hat: usize,
    /// Fitted constants of the power bound `N(R, r) <= D0 (R / r)^p`.
    pub d0_hat: f64,
    pub p_hat: f64,
    pub scales: Vec<f64>,
}

/// Greedy-net upper bound on the number of `r`-balls needed to cover
/// `sample ∩ B_R(x)`, maximized over probe centers `x` from the sample.
///
/// The net is seeded with the probe center and then walks the remaining
/// points by increasing distance from it.
pub fn covering_probe(space: &Space, sample: &[f64], big_r: f64, r: f64) -> Result<usize> {
    if sample.is_empty() {
        return domain("covering probe needs a nonempty sample");
    }
    if !(r > 0.0) || big_r < r {
        return domain(format!("covering probe needs R >= r > 0, got R={big_r}, r={r}"));
    }
    let index = SpatialIndex::build(space, sample, r)?;
    Ok(covering_with(&index, big_r, r))
}

pub(crate) fn covering_with(index: &SpatialIndex, big_r: f64, r: f64) -> usize {
    let space = index.space();
    (0..index.len())
        .map(|c| {
            let x = index.point(c);
            let mut members: Vec<(f64, usize)> = index
                .within(x, big_r)
                .into_iter()
                .map(|id| (space.distance(x, index.point(id)), id))
                .collect();
            members.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut net: Vec<usize> = vec![c];
            for &(_, id) in &members {
                let p = index.point(id);
                if net.iter().all(|&k| space.distance(index.point(k), p) > r) {
                    net.push(id);
                }
            }
            net.len()
        })
        .max()
        .unwrap_or(0)
}

/// Measures `N0` (covering a `2r`-ball by `r`-balls) at every scale and fits
/// `D0`, `p` from the counts at ratios `R / r` in {2, 4, 8}.
pub fn doubling_probe(space: &Space, sample: &[f64], scales: &[f64]) -> Result<DoublingProbe> {
    if scales.is_empty() {
        return domain("doubling probe needs at least one scale");
    }
    let ratios = [2.0f64, 4.0, 8.0];
    let mut worst = [1usize; 3];
    let mut n0_hat = 1;
    for &r in scales {
        if sample.is_empty() {
            return domain("covering probe needs a nonempty sample");
        }
        let index = SpatialIndex::build(space, sample, r)?;
        for (k, ratio) in ratios.iter().enumerate() {
            let count = covering_with(&index, ratio * r, r);
            worst[k] = worst[k].max(count);
            if k == 0 {
                n0_hat = n0_hat.max(count);
            }
        }
    }
    let xs: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = worst.iter().map(|&n| (n as f64).ln()).collect();
    let p_hat = crate::spectra::least_squares_slope(&xs, &ys).max(1e-6);
    let d0_hat = ratios
        .iter()
        .zip(&worst)
        .map(|(ratio, &n)| n as f64 / ratio.powf(p_hat))
        .fold(1.0f64, f64::max);
    Ok(DoublingProbe {
        n0_hat,
        d0_hat,
        p_hat,
        scales: scales.to_vec(),
    })
}
