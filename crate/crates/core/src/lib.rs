//! A desk-scale numerical laboratory for the fractional dissipative operator
//! `d/dt + (-Delta)^alpha` on the periodic torus.
//!
//! The crate evaluates the semigroup kernel (closed forms at the Gaussian and
//! Poisson endpoints, spectral synthesis in between), applies the Duhamel
//! potential and its exact discrete adjoint, measures mixed space-time
//! Lebesgue norms, computes space-time capacities of compact grid sets by
//! convex optimization with primal/dual certificates, and bounds parabolic
//! Hausdorff content by covering search. Experiment drivers reproduce the
//! scaling laws that connect these quantities.
//!
//! Data-parallel inner loops use rayon behind the `parallel` feature (on by
//! default); disabling it yields a sequential build with identical output.

pub mod capacity;
pub mod error;
pub mod evolve;
pub mod fit;
pub mod grid;
pub mod hausdorff;
pub mod io;
pub mod kernel;
pub mod norms;
pub mod regularity;

mod fft;
mod par;

pub use error::{Error, Result};
pub use grid::{ball_mask, ball_mask_clipped, integrate, integrate_slice, make_grid};
pub use grid::{Field, FieldKind, ParabolicBall, SpaceTimeGrid};
pub use par::parallel_enabled;
