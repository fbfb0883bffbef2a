//! Numerical estimation of `L^q`-spectra, generalized and entropy
//! dimensions of self-conformal measures from packings of their attractors.
//!
//! The pipeline: describe an iterated function system ([`ifs::IfsSpec`]),
//! atomize its measure ([`ifs::attractor_atoms`]), then evaluate packing
//! sums, grid sums and ball integrals across dyadic scales ([`spectra`],
//! [`entropy`]). Systems on the sphere are obtained by conjugating planar
//! ones through a stereographic chart ([`manifolds`]).

pub mod entropy;
pub mod error;
pub mod geometry;
pub mod ifs;
pub mod io;
pub mod manifolds;
pub mod measure;
pub mod packing;
pub mod spectra;
pub mod systems;

pub use error::{Error, Result};
pub use geometry::{Ball, Space};
pub use ifs::{attractor_atoms, attractor_atoms_depth, cut_set, ConformalMap, IfsSpec, Similarity, Word};
pub use measure::AtomicMeasure;
pub use packing::{heavy_maximal_packing, maximal_partition, Packing};
pub use spectra::{spectrum_table, SpectrumTable};
