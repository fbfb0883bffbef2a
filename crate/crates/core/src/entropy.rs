//! Partition entropy, the `h*_t` functional over maximal partitions, the
//! entropy dimension and the diagnostics around them.
//!
//! All entropies use natural logarithms. Minima over generated candidate
//! partitions are upper bounds for the corresponding infima.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::measure::{AtomicMeasure, DoublingConstantEstimate};
use crate::packing::{grid_partition, heavy_maximal_packing, maximal_partition, randomized_heavy_packing};
use crate::spectra::least_squares_slope;

/// Default number of candidate partitions per level.
pub const DEFAULT_RESTARTS: usize = 8;

/// Default cap on the measured doubling constant before entropy runs refuse.
pub const DEFAULT_MAX_DOUBLING: f64 = 256.0;

fn dyadic(t: u32) -> f64 {
    2f64.powi(-(t as i32))
}

/// `-Σ μ(P) log μ(P)` over cells of atom ids, with `0 log 0 = 0`.
pub fn partition_entropy(mu: &AtomicMeasure, cells: &[Vec<usize>]) -> Result<f64> {
    let mut owner = vec![usize::MAX; mu.len()];
    for (j, cell) in cells.iter().enumerate() {
        for &a in cell {
            if a >= mu.len() {
                return domain(format!("cell {j} names atom {a}, but there are {} atoms", mu.len()));
            }
            if owner[a] != usize::MAX {
                return domain(format!("atom {a} lies in cells {} and {j}", owner[a]));
            }
            owner[a] = j;
        }
    }
    if let Some(a) = owner.iter().position(|&o| o == usize::MAX) {
        return domain(format!("atom {a} is in no cell"));
    }
    let masses: Vec<f64> = cells
        .iter()
        .map(|c| c.iter().map(|&a| mu.masses()[a]).sum::<f64>() / mu.total_mass())
        .collect();
    Ok(entropy_of(&masses))
}

fn entropy_of(masses: &[f64]) -> f64 {
    -masses.iter().filter(|&&m| m > 0.0).map(|m| m * m.ln()).sum::<f64>()
}

fn candidate_entropy(mu: &AtomicMeasure, radius: f64, restart: usize, seed: u64) -> Result<f64> {
    let packing = if restart == 0 {
        heavy_maximal_packing(mu, radius)?
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        randomized_heavy_packing(mu, radius, &mut rng)?
    };
    let part = maximal_partition(&packing, mu)?;
    Ok(entropy_of(&part.cell_masses(mu)))
}

/// Minimum of the partition entropy over `restarts` maximal partitions built
/// from `2^{-t}`-packings, so that every cell has diameter at most `4 · 2^{-t}`.
/// Restart 0 is the deterministic heavy packing; the others draw each center
/// among the near-heaviest uncovered atoms.
pub fn h_star_t(mu: &AtomicMeasure, t: u32, restarts: usize, seed: u64) -> Result<f64> {
    if restarts == 0 {
        return domain("restarts must be at least 1");
    }
    mu.check_scale(dyadic(t))?;
    let radius = dyadic(t);
    let values: Vec<f64> = (0..restarts)
        .into_par_iter()
        .map(|k| candidate_entropy(mu, radius, k, seed))
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold(f64::INFINITY, f64::min))
}

/// `-Σ m_a log μ(B_{2^{-t}}(a))`.
pub fn ball_log_integral(mu: &AtomicMeasure, t: u32) -> Result<f64> {
    let delta = dyadic(t);
    mu.check_scale(delta)?;
    let total = mu.total_mass();
    Ok(-mu
        .ball_masses(delta)
        .iter()
        .zip(mu.masses())
        .map(|(b, m)| m / total * (b / total).ln())
        .sum::<f64>())
}

/// Entropy over candidate partitions of diameter at most `d`: maximal
/// partitions at packing radius `d/4` and the `(1/2, d/2)`-grid partition.
pub fn h_upper(mu: &AtomicMeasure, d: f64, restarts: usize, seed: u64) -> Result<f64> {
    let mut best = entropy_of(&grid_partition(mu, 0.5, d / 2.0)?.cell_masses(mu));
    for k in 0..restarts.max(1) {
        best = best.min(candidate_entropy(mu, d / 4.0, k, seed)?);
    }
    Ok(best)
}

/// `h*_t` and the ball-log integral over a range of levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyTrace {
    pub t_grid: Vec<u32>,
    pub h_star: Vec<f64>,
    pub ball_log_integral: Vec<f64>,
    /// Least-squares slope of `h*_t` against `t log 2`.
    pub dim_e_hat: f64,
    pub restarts: usize,
    pub seed: u64,
}

pub fn entropy_trace(mu: &AtomicMeasure, t_grid: &[u32], restarts: usize, seed: u64) -> Result<EntropyTrace> {
    if t_grid.len() < 3 {
        return domain(format!("entropy dimension needs at least 3 levels, got {}", t_grid.len()));
    }
    let rows: Vec<(f64, f64)> = t_grid
        .iter()
        .map(|&t| Ok((h_star_t(mu, t, restarts, seed)?, ball_log_integral(mu, t)?)))
        .collect::<Result<_>>()?;
    let h_star: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let xs: Vec<f64> = t_grid.iter().map(|&t| t as f64 * std::f64::consts::LN_2).collect();
    Ok(EntropyTrace {
        t_grid: t_grid.to_vec(),
        dim_e_hat: least_squares_slope(&xs, &h_star),
        h_star,
        ball_log_integral: rows.iter().map(|r| r.1).collect(),
        restarts,
        seed,
    })
}

/// Least-squares slope of `h*_t` against `t log 2`.
pub fn entropy_dimension(mu: &AtomicMeasure, t_grid: &[u32], restarts: usize, seed: u64) -> Result<f64> {
    Ok(entropy_trace(mu, t_grid, restarts, seed)?.dim_e_hat)
}

impl EntropyTrace {
    /// `t,h_star,ball_log_integral,dim_e_hat`; the fitted slope repeats on
    /// every row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "h_star", "ball_log_integral", "dim_e_hat"])?;
        for i in 0..self.t_grid.len() {
            w.write_record([
                self.t_grid[i].to_string(),
                self.h_star[i].to_string(),
                self.ball_log_integral[i].to_string(),
                self.dim_e_hat.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// `max - min` over levels of `h*_t - ball_log_integral(t)`.
    pub fn gap_band(&self) -> f64 {
        let gaps: Vec<f64> = self.h_star.iter().zip(&self.ball_log_integral).map(|(h, b)| h - b).collect();
        gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - gaps.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Largest `|h*_t - ball_log_integral(t)|`.
    pub fn c4_hat(&self) -> f64 {
        self.h_star
            .iter()
            .zip(&self.ball_log_integral)
            .map(|(h, b)| (h - b).abs())
            .fold(0.0, f64::max)
    }

    /// Checks `h*_{t+1} <= h*_t + C^{log2 10}` on consecutive levels.
    pub fn allowance(&self, c_hat: f64) -> AllowanceReport {
        let bound = c_hat.powf(10f64.log2());
        let mut violations = Vec::new();
        for i in 1..self.t_grid.len() {
            if self.t_grid[i] == self.t_grid[i - 1] + 1 && self.h_star[i] > self.h_star[i - 1] + bound {
                violations.push(self.t_grid[i]);
            }
        }
        AllowanceReport { c_hat, bound, holds: violations.is_empty(), violations }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllowanceReport {
    pub c_hat: f64,
    /// `c_hat^{log2 10}`.
    pub bound: f64,
    pub holds: bool,
    /// Levels `t + 1` where the step exceeds the allowance.
    pub violations: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperadditivityReport {
    pub pairs: Vec<(u32, u32)>,
    pub h_star: Vec<(u32, f64)>,
    /// Smallest `L >= 0` with `h*_{s+t} >= h*_s + h*_t - L` on all pairs.
    pub l_hat: f64,
}

pub fn superadditivity_check(
    mu: &AtomicMeasure,
    levels: &[u32],
    restarts: usize,
    seed: u64,
) -> Result<SuperadditivityReport> {
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
    let h: Vec<(u32, f64)> = needed
        .iter()
        .map(|&t| Ok((t, h_star_t(mu, t, restarts, seed)?)))
        .collect::<Result<_>>()?;
    let get = |t: u32| h.iter().find(|(s, _)| *s == t).map(|p| p.1).unwrap_or(f64::NAN);
    let l_hat = pairs
        .iter()
        .map(|&(s, t)| get(s) + get(t) - get(s + t))
        .fold(0.0, f64::max);
    Ok(SuperadditivityReport { pairs, h_star: h, l_hat })
}

/// Outcome of the doubling pre-check run before entropy estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingGate {
    pub estimate: DoublingConstantEstimate,
    pub max_c: f64,
    /// The deeper half of the per-scale constants averages more than twice
    /// the shallower half.
    pub drifting: bool,
    pub passed: bool,
    pub reason: Option<String>,
}

/// Measures the doubling constant at `2^{-t}`, `t` in `t_grid`, and decides
/// whether the measure looks doubling: no upward drift across scales and a
/// constant no larger than `max_c`.
pub fn doubling_gate(mu: &AtomicMeasure, t_grid: &[u32], probes: usize, max_c: f64) -> Result<DoublingGate> {
    let scales: Vec<f64> = t_grid.iter().map(|&t| dyadic(t)).collect();
    let estimate = mu.doubling_constant(&scales, probes)?;
    let per = &estimate.per_scale;
    let half = per.len() / 2;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len().max(1) as f64;
    let drifting = half > 0 && mean(&per[per.len() - half..]) > 2.0 * mean(&per[..half]);
    let reason = if drifting {
        Some(format!("doubling ratios grow toward small scales: {per:?}"))
    } else if estimate.c_hat > max_c {
        Some(format!(
            "measured doubling constant {} exceeds the cap {max_c} (at r = {})",
            estimate.c_hat, estimate.worst_scale
        ))
    } else {
        None
    };
    Ok(DoublingGate { passed: reason.is_none(), estimate, max_c, drifting, reason })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Space;
    use crate::ifs::{attractor_atoms_depth, WORD_BUDGET};
    use crate::systems;

    const DIM_CANTOR: f64 = 0.6309297535714574;

    fn atoms(points: &[f64], masses: &[f64]) -> AtomicMeasure {
        AtomicMeasure::new(Space::euclidean(1), points.to_vec(), masses.to_vec(), 1e-4).unwrap()
    }

    #[test]
    fn elementary_entropies() {
        let mu = atoms(&[0.0, 0.3, 0.6, 0.9], &[1.0 / 16.0, 3.0 / 16.0, 3.0 / 16.0, 9.0 / 16.0]);
        assert_eq!(partition_entropy(&mu, &[vec![0, 1, 2, 3]]).unwrap(), 0.0);
        let h = partition_entropy(&mu, &[vec![0], vec![1], vec![2], vec![3]]).unwrap();
        assert!((h - 1.1247).abs() < 1e-4, "{h}");
        let two = atoms(&[0.0, 1.0], &[0.5, 0.5]);
        let h = partition_entropy(&two, &[vec![0], vec![1]]).unwrap();
        assert!((h - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn non_partitions_are_rejected() {
        let mu = atoms(&[0.0, 1.0], &[0.5, 0.5]);
        let err = partition_entropy(&mu, &[vec![0, 1], vec![1]]).unwrap_err().to_string();
        assert!(err.contains("atom 1"), "{err}");
        let err = partition_entropy(&mu, &[vec![0]]).unwrap_err().to_string();
        assert!(err.contains("atom 1 is in no cell"), "{err}");
    }

    #[test]
    fn ball_log_integral_cases() {
        assert_eq!(ball_log_integral(&atoms(&[0.2], &[1.0]), 4).unwrap(), 0.0);
        let v = ball_log_integral(&atoms(&[0.0, 1.0], &[0.5, 0.5]), 4).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn single_restart_is_the_heavy_partition() {
        let mu = attractor_atoms_depth(&systems::biased_cantor(), 10, WORD_BUDGET).unwrap();
        let packing = heavy_maximal_packing(&mu, dyadic(5)).unwrap();
        let part = maximal_partition(&packing, &mu).unwrap();
        let direct = partition_entropy(&mu, &part.cells).unwrap();
        assert!((h_star_t(&mu, 5, 1, 9).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn more_restarts_never_increase() {
        let mu = attractor_atoms_depth(&systems::biased_cantor(), 10, WORD_BUDGET).unwrap();
        let mut last = f64::INFINITY;
        for r in [1, 2, 4, 8] {
            let h = h_star_t(&mu, 6, r, 5).unwrap();
            assert!(h <= last + 1e-15);
            last = h;
        }
    }

    #[test]
    fn entropy_dimensions() {
        let levels: Vec<u32> = (4..=10).collect();
        let cantor = attractor_atoms_depth(&systems::fair_cantor(), 12, WORD_BUDGET).unwrap();
        let d = entropy_dimension(&cantor, &levels, DEFAULT_RESTARTS, 1).unwrap();
        assert!((d - DIM_CANTOR).abs() < 0.05, "{d}");
        let biased = attractor_atoms_depth(&systems::biased_cantor(), 12, WORD_BUDGET).unwrap();
        let d = entropy_dimension(&biased, &levels, DEFAULT_RESTARTS, 1).unwrap();
        let oracle = (0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln()) / (1.0f64 / 3.0).ln();
        assert!((d - oracle).abs() < 0.05, "{d} vs {oracle}");
        let uniform = attractor_atoms_depth(&systems::uniform_interval(), 14, WORD_BUDGET).unwrap();
        let d = entropy_dimension(&uniform, &levels, DEFAULT_RESTARTS, 1).unwrap();
        assert!((d - 1.0).abs() < 0.05, "{d}");
        assert!(entropy_dimension(&cantor, &[4, 5], 2, 1).is_err());
    }

    #[test]
    fn trace_bounds_and_gap() {
        let mu = attractor_atoms_depth(&systems::fair_cantor(), 12, WORD_BUDGET).unwrap();
        let levels: Vec<u32> = (4..=9).collect();
        let trace = entropy_trace(&mu, &levels, 4, 2).unwrap();
        for &h in &trace.h_star {
            assert!(h >= 0.0);
        }
        assert!(trace.gap_band() <= 2.0, "{trace:?}");
        let gate = doubling_gate(&mu, &levels, 512, DEFAULT_MAX_DOUBLING).unwrap();
        assert!(gate.passed, "{gate:?}");
        assert!(trace.allowance(gate.estimate.c_hat).holds);
    }

    #[test]
    fn coarser_candidates_bound_h_star() {
        let mu = attractor_atoms_depth(&systems::biased_cantor(), 12, WORD_BUDGET).unwrap();
        for t in 4..=8 {
            let h = h_star_t(&mu, t, 4, 3).unwrap();
            let d = dyadic(t + 1);
            assert!(h_upper(&mu, 8.0 * d, 4, 3).unwrap() <= h + 1e-12, "t={t}");
        }
    }

    #[test]
    fn refinement_raises_entropy() {
        let mu = attractor_atoms_depth(&systems::biased_cantor(), 8, WORD_BUDGET).unwrap();
        let fine: Vec<Vec<usize>> = (0..mu.len()).map(|a| vec![a]).collect();
        let coarse: Vec<Vec<usize>> = (0..mu.len()).collect::<Vec<_>>().chunks(8).map(|c| c.to_vec()).collect();
        assert!(partition_entropy(&mu, &fine).unwrap() >= partition_entropy(&mu, &coarse).unwrap());
    }

    #[test]
    fn additive_trace_has_zero_constant() {
        // One atom: h*_t = 0 for every t.
        let mu = atoms(&[0.0], &[1.0]);
        let r = superadditivity_check(&mu, &[2, 3, 4], 2, 0).unwrap();
        assert_eq!(r.l_hat, 0.0);
        let cantor = attractor_atoms_depth(&systems::fair_cantor(), 12, WORD_BUDGET).unwrap();
        let r = superadditivity_check(&cantor, &[3, 4, 5], 4, 0).unwrap();
        assert!(r.l_hat.is_finite());
    }

    #[test]
    fn gate_refuses_under_a_tight_cap() {
        let mu = attractor_atoms_depth(&systems::fair_cantor(), 10, WORD_BUDGET).unwrap();
        let gate = doubling_gate(&mu, &[4, 5, 6], 256, 1.5).unwrap();
        assert!(!gate.passed && gate.reason.is_some());
    }
}
