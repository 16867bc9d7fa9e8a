//! N-particle wave functions as sums of single-particle products.

pub mod dump;
pub mod eval;
pub mod factor;
pub mod momentum;
pub mod potential;
pub mod propagate;
pub mod state;

pub use eval::{Amplitude, Evaluator, FactorSource, Snapshot};
pub use factor::{init_gaussian, superpose, Factor, GaussianPacket};
pub use momentum::{momentum_density, MomentumDensity};
pub use potential::{GaussianBump, PotentialSpec};
pub use propagate::{evolve_factor, evolve_state, FactorPropagator};
pub use state::{state_norm, Gram, ProductSumState};
