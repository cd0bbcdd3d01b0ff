//! Simulation and optimization toolkit for the three-qubit quantum absorption
//! refrigerator.
//!
//! A work qubit, a hot qubit and a cold qubit — each coupled to its own
//! thermal bath — exchange energy through a three-body interaction. Driving
//! the machine with the temperature gradient between the work and hot baths
//! pumps heat out of the cold bath: an absorption refrigerator with no moving
//! parts and no external work input.
//!
//! The crate builds the Markovian master equation of the machine in two
//! flavours — the physically consistent one, whose jump operators are global
//! eigenoperators of the interacting Hamiltonian (delocalized dissipation),
//! and the textbook idealization where each bath couples to its own qubit
//! alone (localized dissipation) — solves for stationary states, and derives
//! the observables of interest: heat currents, the coefficient of
//! performance ε = Q̇_c/Q̇_w and its Carnot ceiling, the cooling window, and
//! the stationary quantum correlations (discord, PPT test) between the
//! machine's virtual qubit and the cold qubit.
//!
//! On top of that sit the campaign drivers: cooling-power maximization over
//! the cold frequency, randomized global scans certifying the ¾·ε_C bound on
//! the COP at maximum cooling power (½·ε_C for the localized model), the
//! Lambert-W closed form of the optimal cold frequency in the
//! small-frequency limit, and correlation sweeps across the cooling window.
//!
//! See the `examples/` directory for one runnable program per capability,
//! and the thin `qar` binary for a file-in/file-out command line front end.

pub mod analysis;
pub mod cli;
pub mod correlations;
mod dd;
pub mod dynamics;
pub mod model;
pub mod rng;
pub mod thermo;

pub use model::{
    Bath, CMatrix, ModelError, RawParams, RefrigeratorFamily, RefrigeratorParams, DIM,
};
