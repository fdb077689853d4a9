//! Numerics for stochastic Hamiltonian systems on truncated weighted
//! lattices: path simulation, the Onsager-Machlup action and its minimizing
//! transition paths, Freidlin-Wentzell rate-function checks by Monte Carlo,
//! Karhunen-Loève and small-ball tooling for the driving Gaussian noise, a
//! spectral model of the stochastic nonlinear Schrödinger equation with its
//! Birkhoff normal form, and small-divisor diagnostics for torus persistence.

pub mod error;
pub mod lattice;
pub mod models;
pub mod rng;
pub mod sde;
pub mod action;
pub mod gauss;
pub mod ldp;
pub mod nls;
pub mod kam;

pub use error::{HamlatError, Result};

/// Every built-in Hamiltonian at reference parameters, for registry-wide
/// verification (gradient checks, trace-defect sweeps).
pub fn builtin_models(n_sites: usize) -> Vec<Box<dyn models::Hamiltonian>> {
    vec![
        Box::new(models::Free::new(n_sites)),
        Box::new(models::HarmonicLattice::uniform(n_sites, 1.3)),
        Box::new(models::PendulumLattice::new(n_sites, 0.5)),
        Box::new(nls::NlsModeHamiltonian::new(
            nls::NlsModel::with_defaults(1.0, n_sites),
            nls::NlsDynamics::FullCubic,
        )),
    ]
}
