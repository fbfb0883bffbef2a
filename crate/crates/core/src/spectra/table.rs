use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dyadic, windowed_fit};
use crate::error::{domain, Result};
use crate::measure::AtomicMeasure;
use crate::packing::{grid_partition, heavy_maximal_packing};

/// Sums at one `(q, t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub q: f64,
    pub t: u32,
    pub s_heavy: f64,
    pub s_grid: f64,
    /// `lq_sum`; absent at `q = 1`.
    pub i_gd: Option<f64>,
    /// Relative change of `i_gd` under a shell-width radius shift.
    pub i_gd_rel_error: Option<f64>,
}

/// Fitted exponents for one `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QFit {
    pub q: f64,
    pub tau_hat: f64,
    pub residual: f64,
    /// Absent at `q = 1`.
    pub dim_hat: Option<f64>,
    pub gd_dim: Option<f64>,
    pub error_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub q_grid: Vec<f64>,
    pub t_grid: Vec<u32>,
    pub lambda: f64,
    pub window: usize,
    /// Ordered by `q`, then `t`, following the grids.
    pub entries: Vec<SpectrumEntry>,
    pub fits: Vec<QFit>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMethod {
    /// Local estimate `log S / (-t log 2)` at the deepest level.
    Endpoint,
    /// Slope over the deepest `window` levels.
    LeastSquares,
}

/// Evaluates heavy-packing sums, grid sums and `lq_sum` on the grid and fits
/// `τ̂(q)` over the deepest `window` levels.
pub fn spectrum_table(
    mu: &AtomicMeasure,
    q_grid: &[f64],
    t_grid: &[u32],
    lambda: f64,
    window: usize,
) -> Result<SpectrumTable> {
    if q_grid.is_empty() {
        return domain("q grid is empty");
    }
    if t_grid.len() < 3 {
        return domain(format!("a spectrum table needs at least 3 levels, got {}", t_grid.len()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return domain("levels must be strictly increasing");
    }
    for &t in t_grid {
        mu.check_scale(dyadic(t))?;
    }
    let per_level: Vec<Vec<SpectrumEntry>> = t_grid
        .par_iter()
        .map(|&t| spectrum_level(mu, q_grid, t, lambda))
        .collect::<Result<_>>()?;
    SpectrumTable::from_levels(q_grid, lambda, window, per_level)
}

impl SpectrumTable {
    /// Assembles a table from per-level entries (each as returned by
    /// [`spectrum_level`] for the same q grid) and fits every `q`. With
    /// fewer than 3 levels the table is kept without fits.
    pub fn from_levels(q_grid: &[f64], lambda: f64, window: usize, per_level: Vec<Vec<SpectrumEntry>>) -> Result<Self> {
        let t_grid: Vec<u32> = per_level.iter().map(|l| l.first().map_or(0, |e| e.t)).collect();
        let mut entries = Vec::with_capacity(q_grid.len() * t_grid.len());
        for qi in 0..q_grid.len() {
            for level in &per_level {
                entries.push(level[qi].clone());
            }
        }
        let mut table = SpectrumTable {
            q_grid: q_grid.to_vec(),
            t_grid,
            lambda,
            window: window.max(2),
            entries,
            fits: Vec::new(),
        };
        if table.t_grid.len() >= 3 {
            table.fits = q_grid
                .iter()
                .map(|&q| fit_q(&table, q))
                .collect::<Result<_>>()?;
        }
        Ok(table)
    }
}

/// Heavy-packing sums, grid sums and `lq_sum` at level `t` for every `q`.
pub fn spectrum_level(mu: &AtomicMeasure, q_grid: &[f64], t: u32, lambda: f64) -> Result<Vec<SpectrumEntry>> {
    let delta = dyadic(t);
    let heavy = heavy_maximal_packing(mu, delta)?.center_masses(mu);
    let grid = grid_partition(mu, lambda, delta)?.cell_masses(mu);
    q_grid
        .iter()
        .map(|&q| {
            let (i_gd, rel) = if q == 1.0 {
                (None, None)
            } else {
                let (v, e) = mu.lq_sum_with_error(delta, q)?;
                (Some(v), Some(e / v))
            };
            Ok(SpectrumEntry {
                q,
                t,
                s_heavy: heavy.iter().map(|m| m.powf(q)).sum(),
                s_grid: grid.iter().map(|m| m.powf(q)).sum(),
                i_gd,
                i_gd_rel_error: rel,
            })
        })
        .collect()
}

impl SpectrumTable {
    pub fn entries_for(&self, q: f64) -> Vec<&SpectrumEntry> {
        self.entries.iter().filter(|e| e.q == q).collect()
    }

    pub fn fit_for(&self, q: f64) -> Option<&QFit> {
        self.fits.iter().find(|f| f.q == q)
    }

    /// `(τ̂, residual)` for `q` from the heavy-packing sums.
    pub fn tau_fit(&self, q: f64, method: FitMethod) -> Result<(f64, f64)> {
        let rows = self.entries_for(q);
        if rows.is_empty() {
            return domain(format!("q = {q} is not in the table"));
        }
        if rows.len() < 3 {
            return domain(format!("a fit needs at least 3 scales, got {}", rows.len()));
        }
        let xs: Vec<f64> = rows.iter().map(|e| -(e.t as f64) * std::f64::consts::LN_2).collect();
        let ys: Vec<f64> = rows.iter().map(|e| e.s_heavy.ln()).collect();
        match method {
            FitMethod::LeastSquares => windowed_fit(&xs, &ys, self.window),
            FitMethod::Endpoint => {
                let n = xs.len();
                let last = ys[n - 1] / xs[n - 1];
                let prev = ys[n - 2] / xs[n - 2];
                Ok((last, (last - prev).abs()))
            }
        }
    }

    /// Writes `q,t,S_heavy,S_grid,I_gd,tau_hat,dim_hat,error_bound`, one row
    /// per entry; fitted columns repeat the fit of the row's `q` and are
    /// empty where undefined.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["q", "t", "S_heavy", "S_grid", "I_gd", "tau_hat", "dim_hat", "error_bound"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &self.entries {
            let fit = self.fit_for(e.q);
            w.write_record([
                e.q.to_string(),
                e.t.to_string(),
                e.s_heavy.to_string(),
                e.s_grid.to_string(),
                opt(e.i_gd),
                opt(fit.map(|f| f.tau_hat)),
                opt(fit.and_then(|f| f.dim_hat)),
                opt(fit.and_then(|f| f.error_bound)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

// error_bound = (fit residual + slope shift from shell errors) / |q - 1|,
// the shell term being the largest relative lq_sum error in the window
// spread over the window's log-scale span.
fn fit_q(table: &SpectrumTable, q: f64) -> Result<QFit> {
    let (tau_hat, residual) = table.tau_fit(q, FitMethod::LeastSquares)?;
    if q == 1.0 {
        return Ok(QFit { q, tau_hat, residual, dim_hat: None, gd_dim: None, error_bound: None });
    }
    let rows = table.entries_for(q);
    let w = table.window.min(rows.len());
    let tail = &rows[rows.len() - w..];
    let xs: Vec<f64> = tail.iter().map(|e| (q - 1.0) * -(e.t as f64) * std::f64::consts::LN_2).collect();
    let ys: Vec<f64> = tail.iter().map(|e| e.i_gd.unwrap_or(f64::NAN).ln()).collect();
    let gd_dim = super::least_squares_slope(&xs, &ys);
    let span = (tail[w - 1].t - tail[0].t) as f64 * std::f64::consts::LN_2;
    let shell = tail
        .iter()
        .filter_map(|e| e.i_gd_rel_error)
        .fold(0.0, f64::max)
        .ln_1p();
    let error_bound = (residual + 2.0 * shell / span) / (q - 1.0).abs();
    Ok(QFit {
        q,
        tau_hat,
        residual,
        dim_hat: Some(tau_hat / (q - 1.0)),
        gd_dim: Some(gd_dim),
        error_bound: Some(error_bound),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{attractor_atoms_depth, WORD_BUDGET};
    use crate::spectra::moran_tau;
    use crate::systems;

    fn cantor_table(q_grid: &[f64]) -> SpectrumTable {
        let mu = attractor_atoms_depth(&systems::fair_cantor(), 12, WORD_BUDGET).unwrap();
        let t: Vec<u32> = (4..=10).collect();
        spectrum_table(&mu, q_grid, &t, 0.5, t.len()).unwrap()
    }

    #[test]
    fn fair_cantor_tau() {
        let table = cantor_table(&[0.0, 1.0, 2.0]);
        let oracle = moran_tau(&[0.5, 0.5], &[1.0 / 3.0; 2], 2.0).unwrap();
        let (tau, _) = table.tau_fit(2.0, FitMethod::LeastSquares).unwrap();
        assert!((tau - oracle).abs() <= 0.05, "{tau} vs {oracle}");
        let (end, _) = table.tau_fit(2.0, FitMethod::Endpoint).unwrap();
        assert!((end - oracle).abs() <= 0.1, "{end}");
        for e in table.entries_for(1.0) {
            assert!(e.s_heavy <= 1.0 + 1e-12);
            assert!(e.i_gd.is_none());
        }
        assert!(table.fit_for(1.0).unwrap().dim_hat.is_none());
    }

    #[test]
    fn biased_cantor_tau() {
        let mu = attractor_atoms_depth(&systems::biased_cantor(), 12, WORD_BUDGET).unwrap();
        let t: Vec<u32> = (4..=10).collect();
        let table = spectrum_table(&mu, &[2.0], &t, 0.5, t.len()).unwrap();
        let (tau, _) = table.tau_fit(2.0, FitMethod::LeastSquares).unwrap();
        assert!((tau - 0.4278).abs() <= 0.05, "{tau}");
    }

    #[test]
    fn log_sum_is_convex_in_q() {
        let qs = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0];
        let table = cantor_table(&qs);
        for &t in &table.t_grid {
            let logs: Vec<f64> = qs
                .iter()
                .map(|&q| table.entries.iter().find(|e| e.q == q && e.t == t).unwrap().s_heavy.ln())
                .collect();
            for i in 1..qs.len() - 1 {
                let (a, b, c) = (qs[i - 1], qs[i], qs[i + 1]);
                let interp = logs[i - 1] + (logs[i + 1] - logs[i - 1]) * (b - a) / (c - a);
                assert!(logs[i] <= interp + 1e-9, "t={t}, q={b}");
            }
        }
    }

    #[test]
    fn csv_columns_and_blank_cells() {
        let table = cantor_table(&[1.0, 2.0]);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "q,t,S_heavy,S_grid,I_gd,tau_hat,dim_hat,error_bound");
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "1");
        assert_eq!(first[4], "");
        assert_eq!(first[6], "");
        let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
        assert!(!last[7].is_empty());
    }

    #[test]
    fn too_few_levels() {
        let mu = attractor_atoms_depth(&systems::fair_cantor(), 8, WORD_BUDGET).unwrap();
        assert!(spectrum_table(&mu, &[2.0], &[3, 4], 0.5, 3).is_err());
    }
}
