//! Classical simulation and pulse compilation for cubic three-wave quantum
//! interactions.
//!
//! The nonlinear bosonic problem a1 a2^dag a3^dag + h.c. conserves the
//! pairwise photon sums S2 = n1 + n3 and S3 = n1 + n2, so each conserved
//! sector is a finite tridiagonal Hamiltonian. This crate builds those
//! sectors ([`action_space`]), propagates them exactly ([`dynamics`]) and
//! under a measured transmon Lindblad model ([`open_system`]), compiles the
//! resulting three-level gates into hardware control pulses
//! ([`pulse_control`]) or two-level rotation sequences ([`gate_decomposer`]),
//! and exposes experiment presets through a CLI ([`cli`]).

pub mod action_space;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod gate_decomposer;
pub mod linalg;
pub mod open_system;
pub mod pulse_control;

pub use error::{Result, TriwaveError};
pub use num_complex::Complex64 as C64;
