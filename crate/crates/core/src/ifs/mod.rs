//! Conformal iterated function systems: maps, words and cylinders, cut
//! sets, bounded-distortion probes and atomic approximations of the
//! self-conformal measure.

mod cutset;
mod distortion;
mod map;
mod spec;
mod word;

pub use cutset::{
    attractor_atoms, attractor_atoms_depth, cut_set, cut_set_at, words_of_length, CutSet,
    WORD_BUDGET,
};
pub use distortion::{distortion_constants, DistortionConstants};
pub use map::{ConformalMap, Similarity};
pub use spec::{IfsSpec, SeedSet};
pub use word::Word;
