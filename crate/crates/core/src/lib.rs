//! Numerics for an impurity coupled to a Bogoliubov phonon bath on the unit
//! torus: momentum lattices, zero-energy scattering, fixed-momentum Fock
//! sectors, the cutoff Fröhlich-type Hamiltonian with its counterterms,
//! Krylov eigensolvers, and the scalars of the large-`N` energy expansion.
//!
//! Momenta live on `2πZ³`. Every lattice sum is reduced pairwise in a fixed
//! order, so results do not depend on the number of worker threads.

pub mod asymptotics;
pub mod eig;
pub mod error;
pub mod fock;
pub mod io;
pub mod lattice;
pub mod operators;
pub mod renorm;
pub mod scattering;
pub mod sum;

pub use error::{Error, Result};
pub use fock::SectorBasis;
pub use lattice::{ModelParams, MomentumLattice};
pub use operators::{hbf_operator, LinearOperator, OperatorHandle};
