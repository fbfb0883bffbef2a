//! Metric spaces, closed balls, a bucket-grid spatial index and the
//! covering probes used to measure the doubling property of a point cloud.

mod covering;
mod index;
mod space;

pub use covering::{covering_probe, doubling_probe, DoublingProbe};
pub use index::SpatialIndex;
pub use space::{Ball, Space, SPHERE_TOL};
pub(crate) use space::{euclid as space_euclid, norm as space_norm};
