//! Reference systems with closed-form spectra, used by tests, benches and
//! the CLI's bundled examples.

use crate::geometry::Ball;
use crate::ifs::{IfsSpec, Similarity};
use crate::manifolds::{conjugate_ifs, StereographicChart};

fn on_line(ratios: &[f64], shifts: &[f64], probs: &[f64]) -> IfsSpec {
    let maps = ratios
        .iter()
        .zip(shifts)
        .map(|(&r, &b)| Similarity::scaling(r, vec![b]).expect("valid similarity"))
        .collect();
    let seed = Ball::new(vec![0.5], 0.5).expect("positive radius");
    IfsSpec::euclidean(maps, probs.to_vec(), seed).expect("valid reference system")
}

/// Middle-thirds Cantor measure with equal weights.
pub fn fair_cantor() -> IfsSpec {
    on_line(&[1.0 / 3.0; 2], &[0.0, 2.0 / 3.0], &[0.5, 0.5])
}

/// Middle-thirds Cantor set with weights `(1/4, 3/4)`.
pub fn biased_cantor() -> IfsSpec {
    on_line(&[1.0 / 3.0; 2], &[0.0, 2.0 / 3.0], &[0.25, 0.75])
}

/// Lebesgue measure on `[0, 1]` as the attractor of `x/2`, `x/2 + 1/2`.
pub fn uniform_interval() -> IfsSpec {
    on_line(&[0.5; 2], &[0.0, 0.5], &[0.5, 0.5])
}

/// Two maps with different ratios, `x/2` and `x/4 + 3/4`, weights `(0.3, 0.7)`.
pub fn mixed_ratio() -> IfsSpec {
    on_line(&[0.5, 0.25], &[0.0, 0.75], &[0.3, 0.7])
}

/// Fair Cantor measure on the segment `[-w, w] × {0}` of the plane.
pub fn planar_cantor_on(w: f64) -> IfsSpec {
    let shift = 2.0 * w / 3.0;
    let maps = vec![
        Similarity::scaling(1.0 / 3.0, vec![-shift, 0.0]).expect("valid similarity"),
        Similarity::scaling(1.0 / 3.0, vec![shift, 0.0]).expect("valid similarity"),
    ];
    let seed = Ball::new(vec![0.0, 0.0], w).expect("positive radius");
    IfsSpec::euclidean(maps, vec![0.5, 0.5], seed).expect("valid reference system")
}

/// Fair Cantor measure on `[-0.4, 0.4] × {0}`.
pub fn planar_cantor() -> IfsSpec {
    planar_cantor_on(0.4)
}

/// [`planar_cantor`] conjugated onto the lower hemisphere of `S^2`.
pub fn sphere_cantor() -> IfsSpec {
    let chart = StereographicChart::new(2).expect("dimension 2");
    conjugate_ifs(&planar_cantor(), chart).expect("support stays below the equator margin")
}
