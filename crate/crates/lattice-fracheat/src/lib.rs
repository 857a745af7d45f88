//! Discrete and fractional heat flow on the integer lattice and on finite
//! weighted graphs with a Dirichlet condition.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice_core`]: lattice fields, torus grids, the symbol `ω`, Fourier
//!   multipliers and the fractional Laplacian.
//! * [`kernel`]: synthesis of the heat kernel `G_t^(s)` with measured
//!   aliasing, increments and their norms.
//! * [`semigroup`]: evolution of finitely supported data and log-log rate
//!   fits.
//! * [`stable_profile`]: the Euclidean `2s`-stable profile `Φ_s`, scaling
//!   limits and optimality constants.
//! * [`counterexample`]: the slowly converging datum built from a decay
//!   profile.
//! * [`graph_dirichlet`]: restricted fractional Dirichlet operators on
//!   weighted graphs, spectral evolution and positivity.

pub mod cli;
pub mod counterexample;
pub mod graph_dirichlet;
pub mod kernel;
pub mod lattice_core;
pub mod resources;
pub mod semigroup;
pub mod stable_profile;

mod fft;
mod quadrature;

pub use kernel::{BoxRule, IncrementNorms, KernelError, KernelSlice, SynthesisOptions};
pub use lattice_core::{FracOrder, LatticeError, LatticeField, Moments, TorusGrid};
pub use semigroup::{Accuracy, EvolutionResult, FitScale, RateReport, SemigroupError};
pub use stable_profile::StableProfileEvaluator;
