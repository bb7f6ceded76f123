//! Effective dimensionality and learning-rate bounds for kernel ridge
//! regression under polynomial eigenvalue decay.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`spectral`] | eigenvalue spectra, prior-family parameters, the constant `Q` |
//! | [`effdim`] | exact `N(λ)`, the corrected and historical bounds, counterexamples |
//! | [`rates`] | the five-term risk bound, its validity conditions and `λ_ℓ` schedules |
//! | [`krr`] | Gram matrices, the regularized solve, empirical `N̂(λ)` |
//! | [`synth`] | a concrete cosine-basis Mercer kernel with `μ_n = β n^{-b}` |
//! | [`experiments`] | seeded rate sweeps, power-law fits, persisted records |
//! | [`config`] | flat `key = value` run configuration |
//! | [`cli`] | the `effdim` command line |

pub mod cli;
pub mod config;
pub mod effdim;
pub mod error;
pub mod experiments;
pub mod krr;
pub mod quadrature;
pub mod rates;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
