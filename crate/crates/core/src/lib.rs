//! Finite-element solver for a stochastically forced Cahn-Hilliard model of
//! tumor growth coupled to a nutrient field.
//!
//! The crate is organized bottom-up:
//!
//! - [`constitutive`]: potentials, mobilities, growth terms, Yosida
//!   regularization of the potential derivative.
//! - [`mesh`]: structured bilinear quadrilateral grids on a rectangle.
//! - [`assembly`]: CSR sparse matrices and Q1 mass/stiffness assembly,
//!   including field-weighted variants.
//! - [`linalg`]: restarted GMRES with ILU(0) preconditioning, a dense LU
//!   reference solver, and block-system composition.
//! - [`noise`]: counter-based deterministic Gaussian streams and assembled
//!   stochastic load vectors.
//! - [`stepper`]: the semi-implicit Euler-Maruyama time step and trajectory
//!   integration.
//! - [`ensemble`]: Monte Carlo sampling over independent noise realizations.
//! - [`postproc`]: integrals, energies, contour extraction, CSV/VTK output.
//! - [`verify`]: self-contained numerical checks (oracles, conservation,
//!   dissipation, regularization, convergence).
//! - [`config`]: flat-key JSON run configuration.

pub mod assembly;
pub mod config;
pub mod constitutive;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod noise;
pub mod postproc;
pub mod stepper;
pub mod verify;

pub use error::SimError;
