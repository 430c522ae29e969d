//! Simulation and analysis core for dual-species Rydberg quantum cellular
//! automata.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. Everything that touches files, configuration documents or
//! threads lives in the companion `rydqca` crate.
//!
//! Module map:
//!
//! - [`lattice`]: chain geometry, species pattern and van-der-Waals couplings.
//! - [`statevec`]: dense state vectors over 2- and 3-level sites, Pauli
//!   strings, expectation values and projective sampling.
//! - [`qca_ideal`]: perfect-blockade unitary steps (PXP pulses, masked
//!   initialization, mediated CZ layers, graph-state steps).
//! - [`physical`]: Rydberg Hamiltonians with finite blockade, vdW tails and a
//!   quantum-trajectory noise model.
//! - [`quasiparticle`]: domain-wall detection and statistics on bitstrings.
//! - [`entanglement`]: GHZ, Bell and cluster fidelity estimators and fits.
//! - [`clifford`]: Heisenberg propagation of Pauli strings through Clifford
//!   layers.
//! - [`spam`]: tensor-product readout error model and its local inversion.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod clifford;
pub mod entanglement;
mod error;
pub mod fit;
pub mod lattice;
pub mod physical;
pub mod qca_ideal;
pub mod quasiparticle;
pub mod rng;
pub mod spam;
pub mod statevec;

pub use error::{Error, Result};
pub use lattice::{ChainSpec, Species};
pub use statevec::{PauliFactor, PauliString, QuantumState, ShotEnsemble, ShotMeta};

/// Complex amplitude type used throughout the crate.
pub type C64 = num_complex::Complex64;

pub(crate) mod prelude {
    pub use alloc::{format, string::String, string::ToString, vec, vec::Vec};
    #[allow(unused_imports)]
    pub use num_traits::Float;

    pub(crate) use crate::rem_euclid;

    pub use crate::{Error, Result, C64};
}

/// `x mod m` in `[0, m)` (core `f64` lacks `rem_euclid` without `std`).
pub(crate) fn rem_euclid(x: f64, m: f64) -> f64 {
    let r = x % m;
    if r < 0.0 {
        r + m
    } else {
        r
    }
}
