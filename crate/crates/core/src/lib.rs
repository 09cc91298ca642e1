//! Thermal pairwise entanglement in the fully connected XXZ spin model.
//!
//! Four tiers compute the collective moments <S_z>, <S_z^2>, <S^2> (and from
//! them the two-spin concurrence):
//!
//! * [`bruteforce`]: dense diagonalization of the 2^n-dimensional Hamiltonian
//!   (n <= 14), used as an oracle.
//! * [`exact`]: sums over the collective (S, M) spectrum with multiplicities.
//! * [`cspa`]: static auxiliary-field integral with the RPA correction factor.
//! * [`cmfa`]: saddle point of the static integral plus Gaussian static and
//!   RPA corrections, in closed form.
//!
//! [`rpa`] holds the model-independent machinery (local diagonalizations,
//! response matrix, RPA energies, Hartree solutions) that the closed forms in
//! [`cspa`] and [`cmfa`] are checked against.

pub mod analysis;
pub mod bruteforce;
pub mod cmfa;
pub mod cspa;
pub mod derivatives;
pub mod entanglement;
pub mod error;
pub mod exact;
pub mod model;
pub mod numeric;
pub mod quadrature;
pub mod roots;
pub mod rpa;

pub use entanglement::{
    concurrence, CollectiveMoments, ConcurrenceResult, PairState, Status, Tier,
};
pub use error::{Error, Result};
pub use model::ModelParams;
