//! Outgoing asymptote, cone probabilities and long-time trajectory diagnostics.

pub mod cones;
pub mod outgoing;
pub mod plane_wave;
pub mod straightness;

pub use cones::{bin_tuple_label, bin_tuples, cone_probability, cone_table, cone_weights, Cone, ConeSpec, ConeTable};
pub use outgoing::{compute_psi_out, outgoing_factor, OutgoingAsymptote};
pub use plane_wave::local_plane_wave_residual;
pub use straightness::{
    asymptotic_velocity, straightness_check, straightness_statistic, velocity_bound_statistic, AsymptoticVelocity,
    SampledTrajectory, TrajectoryView,
};
