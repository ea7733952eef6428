//! Absorbing structures: star tuples that can swap in arbitrary targets, the
//! immersion of those stars into a tree embedding, and the absorbing sets
//! that let a leftover vertex set be finished off at the end.
mod extend;
mod immerse;
mod sets;
mod tuples;

pub use extend::extend_with_absorbers;
pub use immerse::{immerse_embed, is_immersed};
pub use tuples::{find_absorber_family, is_absorbing_tuple, AbsorberFamily, AbsorbingTuple, StarTuple, TargetCheck, TwoStar};
pub use sets::{absorbing_set, absorbing_set_bare, absorbing_set_leaves, AbsorbingSet, ResumeState};
pub(crate) use sets::{absorb_capacity, absorbing_set_with};
