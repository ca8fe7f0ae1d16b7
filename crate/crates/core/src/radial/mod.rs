//! Radial profiles, growth functions and the three basic quantities:
//! Dirichlet energy, mass and `G(phi)`.

mod functional;
mod gspec;
mod profile;

pub use functional::SplitHints;
pub use gspec::{GKind, GSpec, TailClass, TailEstimate};
pub use profile::{Interp, LeftExtension, RadialProfile, RightExtension};
