//! Stochastically forced 2D Navier-Stokes on a beta-plane channel.
//!
//! A Fourier x sine pseudo-spectral simulator plus a statistics engine for
//! two-point correlations, third-order structure functions and
//! Karman-Howarth-Monin budgets of the zero-extended fields.

pub mod error;
pub mod grid;
pub mod field;
pub mod transform;
pub mod velocity;
pub mod padded;
pub mod rng;
pub mod forcing;
pub mod dynamics;
pub mod stats;
pub mod oracle;
pub mod io;
pub mod snapshot;
pub mod config;
pub mod cli;

pub use error::{Error, Result};
pub use field::{PhysicalField, SpectralField};
pub use grid::ChannelGrid;
