//! Bohmian trajectory laboratory for multi-particle scattering.
//!
//! Wave functions are sums of single-particle products propagated on periodic
//! grids; trajectories follow the guidance law and their first exits from
//! detector spheres are compared with cone integrals of the outgoing asymptote.

pub mod asymptotics;
pub mod config;
pub mod detection;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod spline;
pub mod wavepacket;

pub use error::{Error, Result};
pub use grid::GridSpec;
