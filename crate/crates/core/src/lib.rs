//! Kinetic Fokker-Planck dynamics of particles in a Stokes fluid, their
//! hydrodynamic mobility tensors, and the diffusive (Smoluchowski) limit.
//!
//! The crate is organised around the objects of the ε-scaled kinetic problem
//!
//! ```text
//! ∂t f + (1/ε)(v·∇x f − ∇V·∇v f) − (1/ε²)∇v·(G(x)(∇v f + v f)) = 0
//! ```
//!
//! * [`mobility`]: Oseen, Rotne-Prager-Yamakawa and isotropic tensors.
//! * [`potentials`]: confining potentials and Gibbs quantities.
//! * [`kinetic`]: a phase-space grid solver (n = 1) and a stochastic
//!   particle ensemble for the associated Langevin SDE.
//! * [`smoluchowski`]: the limiting drift-diffusion equation.
//! * [`diagnostics`]: moments, entropies, dissipation and remainder terms.
//! * [`assumptions`]: sampled certification of the structural hypotheses.
//! * [`harness`]: configuration, ε-sweeps, order fitting and CSV output.

// `!(x > 0.0)` is the NaN-rejecting form used throughout for validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assumptions;
pub mod diagnostics;
mod error;
pub mod grid;
pub mod harness;
pub mod kinetic;
pub mod linalg;
pub mod mobility;
pub mod potentials;
pub mod smoluchowski;

pub use error::{Error, Result};
pub use grid::UniformGrid;
