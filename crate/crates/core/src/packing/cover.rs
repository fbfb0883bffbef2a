use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::partition::MaximalPartition;
use crate::error::{Error, Result};
use crate::ifs::Word;
use crate::measure::AtomicMeasure;

/// Limits a pulled-back cover must respect to be certified good.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodCoverCaps {
    pub q_cap: f64,
    pub d_cap: usize,
}

impl Default for GoodCoverCaps {
    fn default() -> Self {
        Self { q_cap: 64.0, d_cap: 32 }
    }
}

/// A cover of the atoms with measured constants `Q` and `D` at scale `δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodCover {
    pub radius: f64,
    /// Nonempty atom-id sets, ascending.
    pub cells: Vec<Vec<usize>>,
    /// Largest cell diameter divided by `δ`.
    pub q_hat: f64,
    /// Most cells met by a δ-ball centered at an atom.
    pub d_hat: usize,
    pub worst_cell: usize,
    pub worst_ball: usize,
}

/// Pulls a maximal partition at scale `2^{-s-t}` back through the cut word
/// `u ∈ W_t`: atom `a` joins cell `j` when `S_u(a)` falls in `ℰ_j`.
pub fn pullback_good_cover(
    partition: &MaximalPartition,
    u: &Word,
    mu: &AtomicMeasure,
    s: u32,
    caps: GoodCoverCaps,
) -> Result<GoodCover> {
    let located = pullback_assignment(partition, u, mu);
    let mut cells = vec![Vec::new(); partition.len()];
    for (a, cell) in located.iter().enumerate() {
        let j = cell.ok_or_else(|| Error::Invariant {
            invariant: "pullback coverage".into(),
            witness: format!("image of atom {a} under the word {:?} lies in no cell", u.symbols()),
        })?;
        cells[j].push(a);
    }
    cells.retain(|c| !c.is_empty());
    let delta = 2f64.powi(-(s as i32));
    let diameters: Vec<f64> = cells.par_iter().map(|c| cell_diameter(mu, c)).collect();
    let (worst_cell, max_diam) = diameters
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
    let q_hat = max_diam / delta;
    let mut owner = vec![0usize; mu.len()];
    for (j, c) in cells.iter().enumerate() {
        for &a in c {
            owner[a] = j;
        }
    }
    let index = mu.index_for(delta);
    let counts: Vec<usize> = (0..mu.len())
        .into_par_iter()
        .map(|a| {
            let mut met: Vec<usize> = index.within(mu.point(a), delta).iter().map(|&b| owner[b]).collect();
            met.sort_unstable();
            met.dedup();
            met.len()
        })
        .collect();
    let (worst_ball, d_hat) = counts
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
    if q_hat > caps.q_cap {
        return Err(Error::Invariant {
            invariant: "good cover Q".into(),
            witness: format!("cell {worst_cell} has diameter {max_diam} = {q_hat} δ > {}", caps.q_cap),
        });
    }
    if d_hat > caps.d_cap {
        return Err(Error::Invariant {
            invariant: "good cover D".into(),
            witness: format!("δ-ball at atom {worst_ball} meets {d_hat} cells > {}", caps.d_cap),
        });
    }
    Ok(GoodCover {
        radius: delta,
        cells,
        q_hat,
        d_hat,
        worst_cell,
        worst_ball,
    })
}

/// Cell of `S_u(a)` for every atom `a`. Images are located through their
/// nearest atom within the atom resolution, falling back to the partition
/// rule with that slack.
pub(crate) fn pullback_assignment(partition: &MaximalPartition, u: &Word, mu: &AtomicMeasure) -> Vec<Option<usize>> {
    let space = mu.space();
    let slack = mu.resolution() * (1.0 + 1e-9) + 1e-15;
    (0..mu.len())
        .into_par_iter()
        .map(|a| {
            let y = u.map().apply(mu.point(a));
            let nearest = mu
                .atoms_within(&y, slack)
                .into_iter()
                .map(|b| (space.distance(&y, mu.point(b)), b))
                .min_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
            match nearest {
                Some((_, b)) => Some(partition.assignment[b]),
                None => partition.locate(mu, &y, slack),
            }
        })
        .collect()
}

// Exact for modest cells, twice the radius around the first atom otherwise.
pub(crate) fn cell_diameter(mu: &AtomicMeasure, cell: &[usize]) -> f64 {
    let space = mu.space();
    if cell.len() > 20_000 {
        let c = mu.point(cell[0]);
        return 2.0 * cell.iter().map(|&a| space.distance(c, mu.point(a))).fold(0.0, f64::max);
    }
    let mut d = 0.0f64;
    for (k, &a) in cell.iter().enumerate() {
        for &b in &cell[k + 1..] {
            d = d.max(space.distance(mu.point(a), mu.point(b)));
        }
    }
    d
}
