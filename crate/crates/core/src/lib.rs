//! Simulation of an all-optical stroboscopic collision model.
//!
//! Two system modes repeatedly collide with fresh environment modes through a
//! tritter (three beam splitters) followed by phase shifters. Because every
//! element is passive and linear, Gaussian states stay Gaussian and the whole
//! dynamics is carried by the joint scattering matrix of the chain.
//!
//! The crate is organised as:
//!
//! - [`gaussian`]: quadrature conventions, symplectic form, physicality, Wigner function.
//! - [`optics`]: beam splitters, tritter, the per-collision module and the joint chain.
//! - [`propagator`]: system means and covariance along the chain, plus a dense
//!   full-joint-state oracle.
//! - [`measures`]: synchronization measures and logarithmic negativity.
//! - [`liouvillian`]: truncated-Fock adjoint Liouvillian, spectrum, dark states,
//!   master-equation integration and the two-qubit spin mapping.
//! - [`analysis`]: decay-rate fitting and oscillation frequency of trajectories.
//! - [`sweep`]: parallel parameter-space scans.
//! - [`output`]: CSV schemas shared with the plotting scripts.
//!
//! Conventions: ħ = 1, `q = (a† + a)/√2`, `p = i(a† − a)/√2`, vacuum covariance
//! `I/2`, quadratures interleaved as `[q₁, p₁, q₂, p₂, …]`.

pub mod analysis;
pub mod error;
pub mod gaussian;
pub mod liouvillian;
pub mod measures;
pub mod optics;
pub mod output;
pub mod propagator;
pub mod sweep;

pub use error::{Error, Result};
pub use num_complex::Complex64;
