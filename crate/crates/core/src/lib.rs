//! Perturbative (PT) regions of energy eigenfunctions on unperturbed bases.
//!
//! The crate builds three collective quantum models (three-orbital LMG,
//! single-mode Dicke in the Holstein-Primakoff representation, three-site
//! Bose-Hubbard), diagonalizes them, and for each eigenstate searches the
//! largest set of unperturbed basis states on which the generalized
//! Brillouin-Wigner expansion converges. The classical counterparts of the
//! models give classically-forbidden masks on the same action lattice, and
//! the [`analysis`] module measures how close the two borders are.
//!
//! Module map:
//!
//! * [`models`] – Hamiltonian pairs `H = H0 + λV` and the model registry.
//! * [`spectral`] – exact diagonalization and state selection.
//! * [`gbwpe`] – `W_S` construction, its spectrum, the convergence check,
//!   the PT-region search and the series itself.
//! * [`classical`] – action-angle counterparts, torus energy ranges,
//!   forbidden masks, coherent-state overlaps.
//! * [`analysis`] – averaged eigenfunction shapes, borders and distances.

pub mod analysis;
pub mod classical;
pub mod error;
pub mod gbwpe;
pub mod models;
pub mod spectral;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
