use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dyadic;
use crate::error::{domain, Result};
use crate::ifs::{cut_set, IfsSpec, WORD_BUDGET};
use crate::measure::AtomicMeasure;
use crate::packing::{
    heavy_maximal_packing, maximal_partition, pullback_assignment, random_maximal_packing, Packing,
};

/// `τ*(α) = min_q (α q - τ(q))` over the sampled grid, for each `α`.
pub fn legendre(qs: &[f64], taus: &[f64], alphas: &[f64]) -> Result<Vec<f64>> {
    if qs.is_empty() || qs.len() != taus.len() {
        return domain("legendre needs one τ value per q");
    }
    Ok(alphas
        .iter()
        .map(|a| {
            qs.iter()
                .zip(taus)
                .map(|(q, t)| a * q - t)
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicativityReport {
    pub q: f64,
    pub pairs: Vec<(u32, u32)>,
    /// `log S*` per level used.
    pub log_sums: Vec<(u32, f64)>,
    /// Smallest `L >= 1` with `S_{s+t} <= L S_s S_t` on all pairs.
    pub l_sub: f64,
    /// Smallest `L >= 1` with `S_{s+t} >= S_s S_t / L` on all pairs.
    pub l_super: f64,
    /// `l_sub` for `q >= 1`, `l_super` for `0 < q < 1`.
    pub l_hat: f64,
}

/// Measures how far `t ↦ S*_{2^{-t}}(q)` is from sub- or super-
/// multiplicative over all pairs `s <= t` of the given levels.
pub fn multiplicativity_check(mu: &AtomicMeasure, q: f64, levels: &[u32]) -> Result<MultiplicativityReport> {
    if !(q > 0.0) {
        return domain(format!("multiplicativity needs q > 0, got {q}"));
    }
    if levels.is_empty() {
        return domain("no levels given");
    }
    let mut pairs = Vec::new();
    for (i, &s) in levels.iter().enumerate() {
        for &t in &levels[i..] {
            pairs.push((s.min(t), s.max(t)));
        }
    }
    let mut needed: Vec<u32> = levels.to_vec();
    needed.extend(pairs.iter().map(|(s, t)| s + t));
    needed.sort_unstable();
    needed.dedup();
    for &t in &needed {
        mu.check_scale(dyadic(t))?;
    }
    let logs: BTreeMap<u32, f64> = needed
        .par_iter()
        .map(|&t| Ok((t, heavy_maximal_packing(mu, dyadic(t))?.power_sum(mu, q).ln())))
        .collect::<Result<_>>()?;
    let (mut sub, mut sup) = (0.0f64, 0.0f64);
    for &(s, t) in &pairs {
        let gap = logs[&(s + t)] - logs[&s] - logs[&t];
        sub = sub.max(gap);
        sup = sup.max(-gap);
    }
    let (l_sub, l_super) = (sub.exp(), sup.exp());
    Ok(MultiplicativityReport {
        q,
        pairs,
        log_sums: logs.into_iter().collect(),
        l_sub,
        l_super,
        l_hat: if q >= 1.0 { l_sub } else { l_super },
    })
}

/// Heavy-packing sum against the best of it and `samples` random maximal
/// packings at the same scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub delta: f64,
    pub q: f64,
    pub s_star: f64,
    pub s_best: f64,
    /// `s_best / s_star`.
    pub c2_hat: f64,
}

pub fn packing_sandwich(mu: &AtomicMeasure, delta: f64, q: f64, samples: usize, seed: u64) -> Result<Sandwich> {
    let s_star = heavy_maximal_packing(mu, delta)?.power_sum(mu, q);
    let sums: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            Ok(random_maximal_packing(mu, delta, &mut rng)?.power_sum(mu, q))
        })
        .collect::<Result<_>>()?;
    let s_best = sums.iter().copied().fold(s_star, f64::max);
    Ok(Sandwich { delta, q, s_star, s_best, c2_hat: s_best / s_star })
}

/// Cut-word masses seen by the doubled balls of a packing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutMassProfile {
    pub t: u32,
    /// `Σ p_u` over cut words whose cylinder may meet `2B`.
    pub p_plus: Vec<f64>,
    pub q: Option<f64>,
    /// `Σ p_u` over words assigned to the ball by the q-heavy rule.
    pub p_minus: Option<Vec<f64>>,
    /// Ball chosen for every cut word.
    pub heavy_ball: Option<Vec<usize>>,
}

impl CutMassProfile {
    pub fn plus_power_sum(&self, q: f64) -> f64 {
        self.p_plus.iter().map(|p| p.powf(q)).sum()
    }
}

/// `P_+` for every ball of `packing` (at `2^{-t}`) and, when `q` is given,
/// `P_-` from assigning each `u ∈ W_t` to the ball maximizing
/// `Σ_{cells meeting 2B} μ(S_u^{-1}(cell))^q`, ties to the lowest index.
/// The cells come from the heavy maximal partition at `2^{-t-s}`.
pub fn cut_mass_profile(
    mu: &AtomicMeasure,
    spec: &IfsSpec,
    t: u32,
    packing: &Packing,
    q: Option<f64>,
    s: u32,
) -> Result<CutMassProfile> {
    let delta = dyadic(t);
    if (packing.radius / delta - 1.0).abs() > 1e-12 {
        return domain(format!("packing radius {} does not match 2^-{t}", packing.radius));
    }
    let space = mu.space();
    let words = cut_set(spec, t, WORD_BUDGET)?.words;
    let reps: Vec<Vec<f64>> = words.iter().map(|u| u.representative(spec)).collect();
    let p_plus = packing
        .centers
        .iter()
        .map(|c| {
            words
                .iter()
                .zip(&reps)
                .filter(|(u, x)| space.distance(c, x) <= 2.0 * delta + u.diam_bound())
                .map(|(u, _)| u.weight())
                .sum()
        })
        .collect();
    let Some(q) = q else {
        return Ok(CutMassProfile { t, p_plus, q: None, p_minus: None, heavy_ball: None });
    };
    let fine = heavy_maximal_packing(mu, dyadic(t + s))?;
    let partition = maximal_partition(&fine, mu)?;
    // Partition cells with an atom inside each doubled ball.
    let meets: Vec<Vec<usize>> = packing
        .centers
        .iter()
        .map(|c| {
            let mut cells: Vec<usize> = mu
                .atoms_within(c, 2.0 * delta)
                .iter()
                .map(|&a| partition.assignment[a])
                .collect();
            cells.sort_unstable();
            cells.dedup();
            cells
        })
        .collect();
    let heavy_ball: Vec<usize> = words
        .par_iter()
        .map(|u| {
            let mut pulled = vec![0.0; partition.len()];
            for (a, cell) in pullback_assignment(&partition, u, mu).into_iter().enumerate() {
                if let Some(j) = cell {
                    pulled[j] += mu.masses()[a];
                }
            }
            let mut best = (f64::NEG_INFINITY, 0usize);
            for (b, cells) in meets.iter().enumerate() {
                let w: f64 = cells.iter().filter(|&&j| pulled[j] > 0.0).map(|&j| pulled[j].powf(q)).sum();
                if w > best.0 {
                    best = (w, b);
                }
            }
            best.1
        })
        .collect();
    let mut p_minus = vec![0.0; packing.len()];
    for (u, &b) in words.iter().zip(&heavy_ball) {
        p_minus[b] += u.weight();
    }
    Ok(CutMassProfile {
        t,
        p_plus,
        q: Some(q),
        p_minus: Some(p_minus),
        heavy_ball: Some(heavy_ball),
    })
}
