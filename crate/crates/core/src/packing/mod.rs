//! δ-packings of atom clouds: heavy maximal packings, randomized maximal
//! packings, maximal partitions, grid partitions and good covers pulled
//! back through cut words, plus invariant checks for all of them.

mod cover;
mod export;
mod partition;
mod verify;

pub(crate) use cover::pullback_assignment;
pub use cover::{pullback_good_cover, GoodCover, GoodCoverCaps};
pub use export::{write_membership_csv, write_packing_csv};
pub use partition::{grid_partition, maximal_partition, GridPartition, MaximalPartition};
pub use verify::{
    verify_good_cover, verify_grid_partition, verify_packing, verify_partition, CheckResult, VerifyReport,
};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measure::AtomicMeasure;

/// Centers of disjoint closed δ-balls, in construction order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Packing {
    pub centers: Vec<Vec<f64>>,
    pub radius: f64,
    pub maximal: bool,
    pub heavy: bool,
}

impl Packing {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// `μ(B_δ(x_j))` for every center.
    pub fn center_masses(&self, mu: &AtomicMeasure) -> Vec<f64> {
        self.centers.iter().map(|c| mu.ball_mass(c, self.radius)).collect()
    }

    /// `Σ_j μ(B_δ(x_j))^q`.
    pub fn power_sum(&self, mu: &AtomicMeasure, q: f64) -> f64 {
        self.center_masses(mu).iter().map(|m| m.powf(q)).sum()
    }
}

/// Greedy heavy maximal δ-packing: the next center is the heaviest atom
/// (by δ-ball mass, ties to the lowest id) not yet inside a chosen `2δ`-ball.
pub fn heavy_maximal_packing(mu: &AtomicMeasure, delta: f64) -> Result<Packing> {
    mu.check_scale(delta)?;
    Ok(heavy_unchecked(mu, delta))
}

pub(crate) fn heavy_unchecked(mu: &AtomicMeasure, delta: f64) -> Packing {
    let masses = mu.ball_masses(delta);
    let ids = heavy_ids(mu, delta, &masses);
    from_ids(mu, &ids, delta, true)
}

fn heavy_ids(mu: &AtomicMeasure, delta: f64, masses: &[f64]) -> Vec<usize> {
    let order = by_mass(masses);
    greedy(mu, delta, order.into_iter())
}

fn by_mass(masses: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..masses.len()).collect();
    order.sort_by(|&a, &b| masses[b].total_cmp(&masses[a]).then(a.cmp(&b)));
    order
}

// Takes atoms in the given order, skipping those already covered.
fn greedy(mu: &AtomicMeasure, delta: f64, order: impl Iterator<Item = usize>) -> Vec<usize> {
    let index = mu.index_for(2.0 * delta);
    let mut covered = vec![false; mu.len()];
    let mut chosen = Vec::new();
    for i in order {
        if covered[i] {
            continue;
        }
        chosen.push(i);
        for j in index.within(mu.point(i), 2.0 * delta) {
            covered[j] = true;
        }
    }
    chosen
}

fn from_ids(mu: &AtomicMeasure, ids: &[usize], delta: f64, heavy: bool) -> Packing {
    Packing {
        centers: ids.iter().map(|&i| mu.point(i).to_vec()).collect(),
        radius: delta,
        maximal: true,
        heavy,
    }
}

/// Maximal δ-packing built greedily over a uniformly random atom order.
pub fn random_maximal_packing<R: Rng>(mu: &AtomicMeasure, delta: f64, rng: &mut R) -> Result<Packing> {
    mu.check_scale(delta)?;
    let mut order: Vec<usize> = (0..mu.len()).collect();
    order.shuffle(rng);
    let ids = greedy(mu, delta, order.into_iter());
    Ok(from_ids(mu, &ids, delta, false))
}

/// Heavy maximal δ-packing whose every pick is drawn uniformly among the
/// uncovered atoms with δ-ball mass at least half the current maximum.
/// The factor two in the heaviness condition leaves that much freedom.
pub fn randomized_heavy_packing<R: Rng>(mu: &AtomicMeasure, delta: f64, rng: &mut R) -> Result<Packing> {
    mu.check_scale(delta)?;
    let masses = mu.ball_masses(delta);
    let order = by_mass(&masses);
    let index = mu.index_for(2.0 * delta);
    let mut covered = vec![false; mu.len()];
    let mut head = 0;
    let mut chosen = Vec::new();
    let mut candidates = Vec::new();
    loop {
        while head < order.len() && covered[order[head]] {
            head += 1;
        }
        if head == order.len() {
            break;
        }
        let floor = 0.5 * masses[order[head]];
        candidates.clear();
        for &i in &order[head..] {
            if masses[i] < floor {
                break;
            }
            if !covered[i] {
                candidates.push(i);
            }
        }
        let pick = candidates[rng.gen_range(0..candidates.len())];
        chosen.push(pick);
        for j in index.within(mu.point(pick), 2.0 * delta) {
            covered[j] = true;
        }
    }
    Ok(from_ids(mu, &chosen, delta, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Space;
    use crate::ifs::{attractor_atoms_depth, WORD_BUDGET};
    use crate::systems;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(points: &[f64], masses: &[f64]) -> AtomicMeasure {
        AtomicMeasure::new(Space::euclidean(1), points.to_vec(), masses.to_vec(), 1e-3).unwrap()
    }

    #[test]
    fn symmetric_pair_gives_two_centers() {
        let mu = line(&[0.0, 1.0], &[0.5, 0.5]);
        let p = heavy_maximal_packing(&mu, 0.1).unwrap();
        assert_eq!(p.centers, vec![vec![0.0], vec![1.0]]);
    }

    #[test]
    fn heavier_atom_is_first() {
        let mu = line(&[0.0, 1.0], &[0.1, 0.9]);
        let p = heavy_maximal_packing(&mu, 0.1).unwrap();
        assert_eq!(p.centers[0], vec![1.0]);
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn below_floor_is_rejected() {
        let mu = line(&[0.0, 1.0], &[0.5, 0.5]);
        assert!(heavy_maximal_packing(&mu, 1e-3).is_err());
    }

    // Centers are more than 2δ = 1/8 apart and every atom is within 1/8 of
    // one. Each generation-1 third spans 1/3 > 1/4 and the thirds are 1/3
    // apart, so covering by windows of width 1/4 needs 4 centers; the eight
    // generation-3 intervals (length 1/27, gaps >= 1/27) each hold at most
    // one center, so at most 8.
    #[test]
    fn cantor_center_count() {
        let mu = attractor_atoms_depth(&systems::fair_cantor(), 12, WORD_BUDGET).unwrap();
        let p = heavy_maximal_packing(&mu, 1.0 / 16.0).unwrap();
        assert!((4..=8).contains(&p.len()), "{}", p.len());
        let report = verify_packing(&p, &mu);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn q_one_sum_is_at_most_one() {
        let mu = attractor_atoms_depth(&systems::biased_cantor(), 10, WORD_BUDGET).unwrap();
        for t in 2..8 {
            let p = heavy_maximal_packing(&mu, 2f64.powi(-t)).unwrap();
            assert!(p.power_sum(&mu, 1.0) <= 1.0 + 1e-12);
            assert_eq!(p.power_sum(&mu, 0.0), p.len() as f64);
        }
    }

    #[test]
    fn randomized_packings_are_valid() {
        let mu = attractor_atoms_depth(&systems::fair_cantor(), 10, WORD_BUDGET).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let p = random_maximal_packing(&mu, 1.0 / 32.0, &mut rng).unwrap();
            let r = verify_packing(&p, &mu);
            assert!(r.passed(), "{r:?}");
            let h = randomized_heavy_packing(&mu, 1.0 / 32.0, &mut rng).unwrap();
            let r = verify_packing(&h, &mu);
            assert!(r.passed(), "{r:?}");
        }
    }
}
