//! Exact computations around Pontryagin duality for subgroups of `Z(2)^ω`
//! and characterized subgroups of the circle.
//!
//! - [`gf2`]: supports, characters, evaluation, density and thinness.
//! - [`witness`]: pivoted selection and witness elements refuting convergence.
//! - [`annihilators`]: window-exact annihilators, diagonal images, separation.
//! - [`measure`]: the `O_{m,N}` family, denseness, Haar estimates.
//! - [`circle`]: membership in `C_B` for rational and high-precision points.
//! - [`format`]: character files and JSON supports and sequences.

pub mod annihilators;
pub mod circle;
pub mod format;
pub mod gf2;
pub mod measure;
pub mod sampling;
pub mod sequence;
pub mod witness;

pub use gf2::{Character, Coord, Sign, SupportSpec};
pub use sequence::Family;
