use serde::{Deserialize, Serialize};

use super::{heavy_unchecked, Packing};
use crate::error::{domain, Error, Result};
use crate::geometry::SpatialIndex;
use crate::measure::AtomicMeasure;

/// Partition of the atoms into cells `ℰ_j` generated by a maximal packing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaximalPartition {
    pub radius: f64,
    pub centers: Vec<Vec<f64>>,
    /// Atom ids per cell, ascending.
    pub cells: Vec<Vec<usize>>,
    /// Cell index of every atom.
    pub assignment: Vec<usize>,
    #[serde(skip)]
    centers_index: Option<SpatialIndex>,
}

impl MaximalPartition {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_masses(&self, mu: &AtomicMeasure) -> Vec<f64> {
        cell_masses(&self.cells, mu)
    }

    /// Cell of an arbitrary point under the same rule used for atoms, or
    /// `None` if it lies farther than `2δ + slack` from every center.
    pub fn locate(&self, mu: &AtomicMeasure, x: &[f64], slack: f64) -> Option<usize> {
        let space = mu.space();
        let index = self.centers_index.as_ref()?;
        let near = index.within(x, 2.0 * self.radius + slack);
        near.iter()
            .copied()
            .find(|&j| space.distance(x, &self.centers[j]) <= self.radius)
            .or_else(|| near.first().copied())
    }

    /// `max_j μ(cell_j) / μ(B_δ(x_j))`.
    pub fn c1_hat(&self, mu: &AtomicMeasure) -> f64 {
        self.cell_masses(mu)
            .iter()
            .zip(&self.centers)
            .map(|(m, c)| m / mu.ball_mass(c, self.radius))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn cell_masses(cells: &[Vec<usize>], mu: &AtomicMeasure) -> Vec<f64> {
    cells
        .iter()
        .map(|cell| cell.iter().map(|&i| mu.masses()[i]).sum())
        .collect()
}

fn center_index(mu: &AtomicMeasure, centers: &[Vec<f64>], radius: f64) -> Result<SpatialIndex> {
    let flat: Vec<f64> = centers.iter().flatten().copied().collect();
    let width = mu.space().embedded_radius(2.0 * radius);
    SpatialIndex::build(mu.space(), &flat, width)
}

/// Assigns each atom inside some `B_δ(x_j)` to `j`, and every other atom to
/// the first center in packing order whose `2δ`-ball contains it.
pub fn maximal_partition(packing: &Packing, mu: &AtomicMeasure) -> Result<MaximalPartition> {
    if packing.is_empty() {
        return domain("packing has no centers");
    }
    let delta = packing.radius;
    let space = mu.space();
    let index = center_index(mu, &packing.centers, delta)?;
    let mut cells = vec![Vec::new(); packing.len()];
    let mut assignment = Vec::with_capacity(mu.len());
    for a in 0..mu.len() {
        let x = mu.point(a);
        let near = index.within(x, 2.0 * delta);
        let j = near
            .iter()
            .copied()
            .find(|&j| space.distance(x, &packing.centers[j]) <= delta)
            .or_else(|| near.first().copied())
            .ok_or_else(|| Error::Invariant {
                invariant: "maximality".into(),
                witness: format!("atom {a} at {x:?} is farther than 2δ = {} from every center", 2.0 * delta),
            })?;
        cells[j].push(a);
        assignment.push(j);
    }
    Ok(MaximalPartition {
        radius: delta,
        centers: packing.centers.clone(),
        cells,
        assignment,
        centers_index: Some(index),
    })
}

/// A `(λ, δ)`-grid partition of the atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPartition {
    pub lambda: f64,
    pub radius: f64,
    pub centers: Vec<Vec<f64>>,
    pub cells: Vec<Vec<usize>>,
    pub assignment: Vec<usize>,
}

impl GridPartition {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_masses(&self, mu: &AtomicMeasure) -> Vec<f64> {
        cell_masses(&self.cells, mu)
    }
}

/// Centers form a heavy maximal λδ-packing; atoms go to the nearest center,
/// ties to the lowest index.
pub fn grid_partition(mu: &AtomicMeasure, lambda: f64, delta: f64) -> Result<GridPartition> {
    if !(lambda > 0.0 && lambda <= 0.5) {
        return domain(format!("λ must lie in (0, 1/2], got {lambda}"));
    }
    mu.check_scale(delta)?;
    let inner = lambda * delta;
    let packing = heavy_unchecked(mu, inner);
    let index = center_index(mu, &packing.centers, inner)?;
    let space = mu.space();
    let mut cells = vec![Vec::new(); packing.len()];
    let mut assignment = Vec::with_capacity(mu.len());
    for a in 0..mu.len() {
        let x = mu.point(a);
        let mut best: Option<(f64, usize)> = None;
        for j in index.within(x, 2.0 * inner) {
            let d = space.distance(x, &packing.centers[j]);
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, j));
            }
        }
        let (_, j) = best.ok_or_else(|| Error::Invariant {
            invariant: "grid coverage".into(),
            witness: format!("atom {a} is not within 2λδ of a center"),
        })?;
        cells[j].push(a);
        assignment.push(j);
    }
    Ok(GridPartition {
        lambda,
        radius: delta,
        centers: packing.centers,
        cells,
        assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{heavy_maximal_packing, verify_grid_partition, verify_partition};
    use super::*;
    use crate::geometry::Space;
    use crate::ifs::{attractor_atoms_depth, WORD_BUDGET};
    use crate::systems;

    fn line(points: &[f64], masses: &[f64], res: f64) -> AtomicMeasure {
        AtomicMeasure::new(Space::euclidean(1), points.to_vec(), masses.to_vec(), res).unwrap()
    }

    #[test]
    fn single_center_takes_everything() {
        let mu = line(&[0.0, 0.05, 0.1], &[0.2, 0.3, 0.5], 1e-3);
        let p = Packing { centers: vec![vec![0.05]], radius: 0.06, maximal: true, heavy: false };
        let part = maximal_partition(&p, &mu).unwrap();
        assert_eq!(part.cells, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn ambiguous_atom_goes_to_first_center() {
        let delta = 0.1;
        let mu = line(&[0.0, 0.15, 0.3], &[0.4, 0.2, 0.4], 1e-3);
        let p = Packing { centers: vec![vec![0.3], vec![0.0]], radius: delta, maximal: true, heavy: false };
        let part = maximal_partition(&p, &mu).unwrap();
        assert_eq!(part.assignment, vec![1, 0, 0]);
    }

    #[test]
    fn uncovered_atom_is_an_invariant_error() {
        let mu = line(&[0.0, 1.0], &[0.5, 0.5], 1e-3);
        let p = Packing { centers: vec![vec![0.0]], radius: 0.1, maximal: true, heavy: false };
        assert!(matches!(maximal_partition(&p, &mu), Err(Error::Invariant { .. })));
    }

    #[test]
    fn cantor_partition_invariants_and_c1() {
        let mu = attractor_atoms_depth(&systems::fair_cantor(), 12, WORD_BUDGET).unwrap();
        let mut c1 = Vec::new();
        for t in 3..=8 {
            let p = heavy_maximal_packing(&mu, 2f64.powi(-t)).unwrap();
            let part = maximal_partition(&p, &mu).unwrap();
            let report = verify_partition(&part, &mu);
            assert!(report.passed(), "{report:?}");
            c1.push(part.c1_hat(&mu));
        }
        let hi = c1.iter().cloned().fold(0.0, f64::max);
        assert!(hi < 10.0, "{c1:?}");
    }

    #[test]
    fn far_atoms_get_their_own_grid_cells() {
        let mu = line(&[0.0, 1.0], &[0.5, 0.5], 1e-3);
        let g = grid_partition(&mu, 0.5, 0.2).unwrap();
        assert_eq!(g.cells, vec![vec![0], vec![1]]);
    }

    #[test]
    fn single_atom_grid() {
        let mu = line(&[0.3], &[1.0], 1e-3);
        let g = grid_partition(&mu, 0.5, 0.2).unwrap();
        assert_eq!(g.cells, vec![vec![0]]);
    }

    #[test]
    fn lambda_out_of_range() {
        let mu = line(&[0.3], &[1.0], 1e-3);
        assert!(grid_partition(&mu, 0.6, 0.2).is_err());
        assert!(grid_partition(&mu, 0.0, 0.2).is_err());
    }

    #[test]
    fn uniform_grid_inclusions() {
        let pts: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
        let masses = vec![1.0 / 101.0; 101];
        let mu = line(&pts, &masses, 0.005);
        let g = grid_partition(&mu, 0.5, 0.1).unwrap();
        for (c, cell) in g.centers.iter().zip(&g.cells) {
            for a in mu.atoms_within(c, 0.05) {
                assert!(cell.contains(&a));
            }
        }
        assert!(verify_grid_partition(&g, &mu).passed());
    }
}
