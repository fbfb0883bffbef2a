use std::collections::HashMap;
use std::hash::BuildHasherDefault;
use std::collections::hash_map::DefaultHasher;

use super::space::Space;
use crate::error::{domain, Result};

type CellMap = HashMap<Vec<i64>, Vec<usize>, BuildHasherDefault<DefaultHasher>>;

/// Uniform bucket grid over the embedded coordinates of an immutable point set.
///
/// Queries prefilter by cell, then test the exact metric distance, so the
/// answer is exactly the closed metric ball for every space. Sphere points
/// are bucketed by ambient coordinates and filtered by arc length.
#[derive(Clone, Debug)]
pub struct SpatialIndex {
    space: Space,
    width: f64,
    dim: usize,
    points: Vec<f64>,
    cells: CellMap,
}

impl SpatialIndex {
    /// Builds the index over the flat coordinate buffer `points`.
    pub fn build(space: &Space, points: &[f64], width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return domain(format!("cell width must be positive, got {width}"));
        }
        let n = space.ambient_dim();
        if n == 0 || points.len() % n != 0 {
            return domain("point buffer length is not a multiple of the dimension");
        }
        let dim = space.embedded_dim();
        let mut cells = CellMap::default();
        for (id, p) in points.chunks_exact(n).enumerate() {
            space.validate_point(p)?;
            cells.entry(key(&space.embed(p), width)).or_default().push(id);
        }
        Ok(Self {
            space: space.clone(),
            width,
            dim,
            points: points.to_vec(),
            cells,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.space.ambient_dim()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn point(&self, id: usize) -> &[f64] {
        let n = self.space.ambient_dim();
        &self.points[id * n..(id + 1) * n]
    }

    /// Same point set, different bucket width.
    pub fn rebuilt(&self, width: f64) -> Result<Self> {
        Self::build(&self.space, &self.points, width)
    }

    /// Ids of the points within closed distance `r` of `x`, ascending.
    pub fn range_query(&self, x: &[f64], r: f64) -> Result<Vec<usize>> {
        if !(r > 0.0) {
            return domain(format!("query radius must be positive, got {r}"));
        }
        self.space.validate_point(x)?;
        Ok(self.within(x, r))
    }

    /// Unchecked variant of [`range_query`](Self::range_query) for hot loops.
    pub(crate) fn within(&self, x: &[f64], r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_candidate(x, r, |id| {
            if self.space.distance(x, self.point(id)) <= r {
                out.push(id);
            }
        });
        out.sort_unstable();
        out
    }

    fn for_each_candidate(&self, x: &[f64], r: f64, mut f: impl FnMut(usize)) {
        let ex = self.space.embed(x);
        let er = self.space.embedded_radius(r);
        let reach = (er / self.width).ceil() as i64;
        let span = (2 * reach + 1) as f64;
        let neighbourhood = span.powi(self.dim as i32);
        let centre = key(&ex, self.width);
        if neighbourhood > self.cells.len() as f64 {
            // Wide query: cheaper to walk the occupied cells.
            for (k, ids) in &self.cells {
                if k.iter().zip(&centre).all(|(a, b)| (a - b).abs() <= reach) {
                    ids.iter().for_each(|&id| f(id));
                }
            }
            return;
        }
        let mut offset = vec![-reach; self.dim];
        let mut probe = vec![0i64; self.dim];
        loop {
            for d in 0..self.dim {
                probe[d] = centre[d] + offset[d];
            }
            if let Some(ids) = self.cells.get(&probe) {
                ids.iter().for_each(|&id| f(id));
            }
            let mut d = 0;
            loop {
                if d == self.dim {
                    return;
                }
                offset[d] += 1;
                if offset[d] <= reach {
                    break;
                }
                offset[d] = -reach;
                d += 1;
            }
        }
    }
}

fn key(e: &[f64], width: f64) -> Vec<i64> {
    e.iter().map(|c| (c / width).floor() as i64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn line_queries() {
        let idx = SpatialIndex::build(&Space::euclidean(1), &[0.0, 0.1, 0.5], 0.1).unwrap();
        assert_eq!(idx.range_query(&[0.0], 0.15).unwrap(), vec![0, 1]);
        assert_eq!(idx.range_query(&[0.0], 0.05).unwrap(), vec![0]);
        assert!(idx.range_query(&[0.0], 0.0).is_err());
    }

    #[test]
    fn closed_ball_boundary_is_included() {
        let idx = SpatialIndex::build(&Space::euclidean(1), &[0.0, 0.25], 0.01).unwrap();
        assert_eq!(idx.range_query(&[0.0], 0.25).unwrap(), vec![0, 1]);
    }

    fn linear_scan(space: &Space, pts: &[f64], x: &[f64], r: f64) -> Vec<usize> {
        let n = space.ambient_dim();
        pts.chunks_exact(n)
            .enumerate()
            .filter(|(_, p)| space.distance(x, p) <= r)
            .map(|(i, _)| i)
            .collect()
    }

    #[test]
    fn matches_linear_scan_on_the_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let space = Space::euclidean(1);
        let pts: Vec<f64> = (0..1000).map(|_| rng.gen_range(0.0..1.0)).collect();
        let idx = SpatialIndex::build(&space, &pts, 0.02).unwrap();
        for _ in 0..500 {
            let x = [rng.gen_range(0.0..1.0)];
            let r = rng.gen_range(1e-4..1.0);
            assert_eq!(idx.range_query(&x, r).unwrap(), linear_scan(&space, &pts, &x, r));
        }
    }

    #[test]
    fn matches_linear_scan_in_the_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let space = Space::euclidean(2);
        let pts: Vec<f64> = (0..2000).map(|_| rng.gen_range(0.0..1.0)).collect();
        for width in [0.01, 0.07, 0.5] {
            let idx = SpatialIndex::build(&space, &pts, width).unwrap();
            for _ in 0..200 {
                let x = [rng.gen_range(-0.2..1.2), rng.gen_range(-0.2..1.2)];
                let r = rng.gen_range(0.001..0.8);
                assert_eq!(idx.range_query(&x, r).unwrap(), linear_scan(&space, &pts, &x, r));
            }
        }
    }

    #[test]
    fn matches_linear_scan_on_the_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let space = Space::sphere(2);
        let mut pts = Vec::new();
        for _ in 0..1000 {
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            pts.extend(v.iter().map(|c| c / r));
        }
        let idx = SpatialIndex::build(&space, &pts, 0.1).unwrap();
        for i in 0..200 {
            let x = idx.point(i).to_vec();
            let r = rng.gen_range(0.01..3.5);
            assert_eq!(idx.range_query(&x, r).unwrap(), linear_scan(&space, &pts, &x, r));
        }
    }
}
