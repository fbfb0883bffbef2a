use serde::{Deserialize, Serialize};

use super::cover::{cell_diameter, GoodCover, GoodCoverCaps};
use super::partition::{GridPartition, MaximalPartition};
use super::Packing;
use crate::measure::AtomicMeasure;

const TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    /// Empirical constant measured by the check, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl CheckResult {
    fn pass(name: &str) -> Self {
        Self { name: name.into(), passed: true, witness: None, value: None }
    }

    fn from(name: &str, witness: Option<String>) -> Self {
        Self { name: name.into(), passed: witness.is_none(), witness, value: None }
    }

    fn with_value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }
}

/// Pass/fail entries for every invariant of one object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub object: String,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub fn verify_packing(p: &Packing, mu: &AtomicMeasure) -> VerifyReport {
    let space = mu.space();
    let delta = p.radius;
    let mut checks = Vec::new();
    let radius_ok = delta > 0.0 && delta.is_finite();
    checks.push(CheckResult::from(
        "radius",
        (!radius_ok).then(|| format!("radius {delta} is not positive")),
    ));
    if !radius_ok {
        return VerifyReport { object: "packing".into(), checks };
    }
    let mut valid = None;
    for (j, c) in p.centers.iter().enumerate() {
        if let Err(e) = space.validate_point(c) {
            valid = Some(format!("center {j}: {e}"));
            break;
        }
    }
    checks.push(CheckResult::from("centers", valid.clone()));
    if valid.is_some() {
        return VerifyReport { object: "packing".into(), checks };
    }

    let mut overlap = None;
    'outer: for i in 0..p.len() {
        for j in i + 1..p.len() {
            let d = space.distance(&p.centers[i], &p.centers[j]);
            if d <= 2.0 * delta {
                overlap = Some(format!("centers {i} and {j} at distance {d} <= 2δ = {}", 2.0 * delta));
                break 'outer;
            }
        }
    }
    checks.push(CheckResult::from("disjoint", overlap));

    // First center whose 2δ-ball holds each atom.
    let first_cover: Vec<Option<usize>> = (0..mu.len())
        .map(|a| {
            p.centers
                .iter()
                .position(|c| space.distance(c, mu.point(a)) <= 2.0 * delta)
        })
        .collect();
    if p.maximal {
        let miss = first_cover.iter().position(|c| c.is_none());
        checks.push(CheckResult::from(
            "maximal",
            miss.map(|a| format!("atom {a} is farther than 2δ from every center")),
        ));
    }
    if p.heavy {
        let center_mass = p.center_masses(mu);
        let mut prefix_min = Vec::with_capacity(center_mass.len());
        let mut m = f64::INFINITY;
        for &c in &center_mass {
            m = m.min(c);
            prefix_min.push(m);
        }
        let masses = mu.ball_masses(delta);
        let mut witness = None;
        for a in 0..mu.len() {
            // Atom a lies outside the double balls of centers before k.
            let k = first_cover[a].unwrap_or(p.len().saturating_sub(1));
            if p.is_empty() {
                break;
            }
            if masses[a] > 2.0 * prefix_min[k] * (1.0 + TOL) {
                let j = center_mass[..=k]
                    .iter()
                    .position(|&c| c == prefix_min[k])
                    .unwrap_or(0);
                witness = Some(format!(
                    "atom {a} has δ-ball mass {} > 2 · {} of center {j}",
                    masses[a], prefix_min[k]
                ));
                break;
            }
        }
        checks.push(CheckResult::from("heavy", witness));
    }
    VerifyReport { object: "packing".into(), checks }
}

fn partition_check(cells: &[Vec<usize>], n: usize) -> CheckResult {
    let mut owner = vec![usize::MAX; n];
    for (j, cell) in cells.iter().enumerate() {
        for &a in cell {
            if a >= n {
                return CheckResult::from("partition", Some(format!("cell {j} names unknown atom {a}")));
            }
            if owner[a] != usize::MAX {
                return CheckResult::from(
                    "partition",
                    Some(format!("atom {a} lies in cells {} and {j}", owner[a])),
                );
            }
            owner[a] = j;
        }
    }
    let missing = owner.iter().position(|&o| o == usize::MAX);
    CheckResult::from("partition", missing.map(|a| format!("atom {a} is in no cell")))
}

// B_inner(x_j) ∩ atoms ⊆ cell_j ⊆ B_outer(x_j) ∩ atoms.
fn inclusion_checks(
    centers: &[Vec<f64>],
    cells: &[Vec<usize>],
    mu: &AtomicMeasure,
    inner: f64,
    outer: f64,
) -> (CheckResult, CheckResult) {
    let space = mu.space();
    let mut lower = None;
    let mut upper = None;
    for (j, (c, cell)) in centers.iter().zip(cells).enumerate() {
        if lower.is_none() {
            if let Some(a) = mu.atoms_within(c, inner).into_iter().find(|a| cell.binary_search(a).is_err()) {
                lower = Some(format!("atom {a} is within {inner} of center {j} but outside its cell"));
            }
        }
        if upper.is_none() {
            if let Some(&a) = cell.iter().find(|&&a| space.distance(c, mu.point(a)) > outer * (1.0 + TOL)) {
                upper = Some(format!("atom {a} of cell {j} is farther than {outer} from its center"));
            }
        }
    }
    (CheckResult::from("inner ball", lower), CheckResult::from("outer ball", upper))
}

pub fn verify_partition(part: &MaximalPartition, mu: &AtomicMeasure) -> VerifyReport {
    let delta = part.radius;
    let mut checks = vec![partition_check(&part.cells, mu.len())];
    let (inner, outer) = inclusion_checks(&part.centers, &part.cells, mu, delta, 2.0 * delta);
    checks.push(inner);
    checks.push(outer);
    let mut wide = None;
    for (j, cell) in part.cells.iter().enumerate() {
        let d = cell_diameter(mu, cell);
        if d > 4.0 * delta * (1.0 + TOL) {
            wide = Some(format!("cell {j} has diameter {d} > 4δ"));
            break;
        }
    }
    checks.push(CheckResult::from("diameter", wide));
    checks.push(CheckResult::pass("cell mass ratio").with_value(part.c1_hat(mu)));
    VerifyReport { object: "maximal partition".into(), checks }
}

pub fn verify_grid_partition(grid: &GridPartition, mu: &AtomicMeasure) -> VerifyReport {
    let mut checks = vec![partition_check(&grid.cells, mu.len())];
    let (inner, outer) = inclusion_checks(&grid.centers, &grid.cells, mu, grid.lambda * grid.radius, grid.radius);
    checks.push(inner);
    checks.push(outer);
    VerifyReport { object: "grid partition".into(), checks }
}

pub fn verify_good_cover(cover: &GoodCover, mu: &AtomicMeasure, caps: GoodCoverCaps) -> VerifyReport {
    let mut checks = vec![partition_check(&cover.cells, mu.len())];
    let empty = cover.cells.iter().position(|c| c.is_empty());
    checks.push(CheckResult::from("meets support", empty.map(|j| format!("cell {j} is empty"))));
    checks.push(
        CheckResult::from(
            "Q",
            (cover.q_hat > caps.q_cap).then(|| format!("cell {} gives Q = {}", cover.worst_cell, cover.q_hat)),
        )
        .with_value(cover.q_hat),
    );
    checks.push(
        CheckResult::from(
            "D",
            (cover.d_hat > caps.d_cap).then(|| format!("ball at atom {} meets {} cells", cover.worst_ball, cover.d_hat)),
        )
        .with_value(cover.d_hat as f64),
    );
    VerifyReport { object: "good cover".into(), checks }
}
