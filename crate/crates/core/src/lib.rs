//! Numerical toolkit for the weighted-Dirichlet-form model of fermions with
//! point interactions.
//!
//! The interaction enters only through the weight
//! `g(x) = Σ_{i<j} 1/|x_i − x_j|` of the quadratic form
//! `Σ_i ∫ g² |∇_i ψ|²` on `L²(g² dx)`. The crate computes finite-size spectra
//! and free energies of this model next to those of the free Fermi gas, and
//! evaluates every localization, Hardy, counting and entropy bound that
//! relates the two.
//!
//! Module map:
//! - [`geometry`]: box partitions, occupation vectors, `K₋`, `K₊`, `V`.
//! - [`weight`]: the weight `g`, its localization bounds and the effective
//!   scattering length.
//! - [`freefermi`]: cube spectra, canonical and thermodynamic free energies.
//! - [`hardy`]: finite-element Rayleigh quotients for the local Hardy
//!   inequalities.
//! - [`spectral2`]: the two-body radial form and the boxed `N = 2` model.
//! - [`bounds`]: norm sandwich, occupation and entropy bounds, the final
//!   free-energy ledger.
//! - [`cache`]: fingerprinted on-disk cache for two-body spectra.

pub mod bounds;
pub mod cache;
pub mod combin;
pub mod error;
pub mod freefermi;
pub mod geometry;
pub mod grid;
pub mod hardy;
pub mod linalg;
pub mod par;
pub mod spectral2;
pub mod quad;
pub mod weight;

pub use error::{Error, Result};
