//! Packing sums, grid sums and the generalized-dimension integral across
//! scales; slope fits for τ(q) and the dimensions derived from them.

mod diagnostics;
mod oracle;
mod table;

pub use diagnostics::{
    cut_mass_profile, legendre, multiplicativity_check, packing_sandwich, CutMassProfile, MultiplicativityReport,
    Sandwich,
};
pub use oracle::{lemma_powersum_check, moran_tau};
pub use table::{spectrum_level, spectrum_table, FitMethod, QFit, SpectrumEntry, SpectrumTable};

use crate::error::{domain, Result};
use crate::measure::AtomicMeasure;
use crate::packing::{grid_partition, heavy_maximal_packing};

/// Default q grid for tables.
pub const DEFAULT_Q_GRID: [f64; 7] = [0.25, 0.5, 0.75, 1.5, 2.0, 3.0, 4.0];

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        return 0.0;
    }
    sxy / sxx
}

/// Slope of `ys` against `xs` over the last `window` points, and the
/// largest deviation of a consecutive two-point slope inside the window
/// from it.
pub fn windowed_fit(xs: &[f64], ys: &[f64], window: usize) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return domain("fit needs as many abscissae as values");
    }
    if xs.len() < 3 || window < 2 {
        return domain(format!("a fit needs at least 3 scales, got {}", xs.len()));
    }
    let w = window.min(xs.len());
    let (xs, ys) = (&xs[xs.len() - w..], &ys[ys.len() - w..]);
    let slope = least_squares_slope(xs, ys);
    let residual = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| ((y[1] - y[0]) / (x[1] - x[0]) - slope).abs())
        .fold(0.0, f64::max);
    Ok((slope, residual))
}

/// `S*_δ(q) = Σ μ(B_δ(x_j))^q` over the heavy maximal δ-packing.
pub fn packing_sum(mu: &AtomicMeasure, delta: f64, q: f64) -> Result<f64> {
    Ok(heavy_maximal_packing(mu, delta)?.power_sum(mu, q))
}

/// `Σ μ(P_i)^q` over the constructed `(λ, δ)`-grid partition.
pub fn renyi_sum(mu: &AtomicMeasure, lambda: f64, delta: f64, q: f64) -> Result<f64> {
    let grid = grid_partition(mu, lambda, delta)?;
    Ok(grid.cell_masses(mu).iter().map(|m| m.powf(q)).sum())
}

/// `τ̂ / (q - 1)`.
pub fn dimension_q(tau_hat: f64, q: f64) -> Result<f64> {
    if q == 1.0 {
        return domain("dimension_q is undefined at q = 1; use the entropy module");
    }
    Ok(tau_hat / (q - 1.0))
}

/// Least-squares slope of `log lq_sum(δ)` against `(q - 1) log δ`.
pub fn gd_dimension(mu: &AtomicMeasure, q: f64, scales: &[f64]) -> Result<f64> {
    if q == 1.0 {
        return domain("gd_dimension is undefined at q = 1; use the entropy module");
    }
    if !(q > 0.0) {
        return domain(format!("gd_dimension needs q > 0, got {q}"));
    }
    if scales.len() < 2 {
        return domain("gd_dimension needs at least two scales");
    }
    let mut xs = Vec::with_capacity(scales.len());
    let mut ys = Vec::with_capacity(scales.len());
    for &d in scales {
        ys.push(mu.lq_sum(d, q)?.ln());
        xs.push((q - 1.0) * d.ln());
    }
    Ok(least_squares_slope(&xs, &ys))
}

pub(crate) fn dyadic(t: u32) -> f64 {
    2f64.powi(-(t as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{attractor_atoms_depth, WORD_BUDGET};
    use crate::systems;

    const DIM_CANTOR: f64 = std::f64::consts::LN_2 / 1.0986122886681098;

    #[test]
    fn exact_power_law_fit() {
        let c = 0.37;
        let xs: Vec<f64> = (3..=9).map(|t| -(t as f64) * std::f64::consts::LN_2).collect();
        let ys: Vec<f64> = xs.iter().map(|x| c * x).collect();
        let (s, r) = windowed_fit(&xs, &ys, 7).unwrap();
        assert!((s - c).abs() < 1e-12 && r < 1e-12);
        assert!(windowed_fit(&xs[..2], &ys[..2], 3).is_err());
    }

    #[test]
    fn dimension_from_tau() {
        assert!((dimension_q(0.6309, 2.0).unwrap() - 0.6309).abs() < 1e-12);
        assert!((dimension_q(-0.2840, 0.5).unwrap() - 0.5680).abs() < 1e-12);
        assert_eq!(dimension_q(0.0, 2.0).unwrap(), 0.0);
        assert!(dimension_q(0.3, 1.0).is_err());
    }

    #[test]
    fn packing_sum_diagnostics() {
        let mu = attractor_atoms_depth(&systems::fair_cantor(), 12, WORD_BUDGET).unwrap();
        let delta = dyadic(6);
        let p = heavy_maximal_packing(&mu, delta).unwrap();
        assert_eq!(packing_sum(&mu, delta, 0.0).unwrap(), p.len() as f64);
        assert!(packing_sum(&mu, delta, 1.0).unwrap() <= 1.0 + 1e-12);
        let s = packing_sum(&mu, delta, 2.0).unwrap();
        let local = s.ln() / (-6.0 * std::f64::consts::LN_2);
        assert!((local - DIM_CANTOR).abs() < 0.1, "{local}");
    }

    #[test]
    fn renyi_sum_diagnostics() {
        let mu = attractor_atoms_depth(&systems::fair_cantor(), 10, WORD_BUDGET).unwrap();
        let delta = dyadic(5);
        assert!((renyi_sum(&mu, 0.5, delta, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let g = grid_partition(&mu, 0.5, delta).unwrap();
        assert_eq!(renyi_sum(&mu, 0.5, delta, 0.0).unwrap(), g.len() as f64);
    }

    #[test]
    fn gd_dimension_cases() {
        let scales: Vec<f64> = (4..=10).map(dyadic).collect();
        let mu = attractor_atoms_depth(&systems::fair_cantor(), 12, WORD_BUDGET).unwrap();
        for q in [0.5, 2.0] {
            let d = gd_dimension(&mu, q, &scales).unwrap();
            assert!((d - DIM_CANTOR).abs() < 0.05, "q={q}: {d}");
        }
        let uni = attractor_atoms_depth(&systems::uniform_interval(), 14, WORD_BUDGET).unwrap();
        let d = gd_dimension(&uni, 2.0, &scales).unwrap();
        assert!((d - 1.0).abs() < 0.05, "{d}");
        assert!(gd_dimension(&mu, 1.0, &scales).is_err());
    }
}
