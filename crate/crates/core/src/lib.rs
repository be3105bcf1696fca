//! Numerical laboratory for rarefaction waves of the rate-type viscoelastic
//! relaxation system with periodic far-field perturbations.

// `!(x > 0.0)` rejects NaN as well; keep it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod characteristic;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod linesolver;
pub mod material;
pub mod periodic;
pub mod pipeline;
pub mod quadrature;
pub mod rarefaction;
pub mod roots;
pub mod spectral;

pub use error::{LabError, Result};
pub use material::{Branch, MaterialModel};
pub use rarefaction::{BurgersWave, RiemannEndStates, SmoothRarefaction};
