//! Simulation of an adiabatic-passage controlled-unitary gate between two
//! tripod atoms sharing one cavity mode.
//!
//! Frequencies are angular (rad/µs) and times are in µs throughout.

pub mod darkstates;
pub mod gate;
pub mod hamiltonian;
pub mod hilbert;
pub mod propagator;
pub mod pulses;
