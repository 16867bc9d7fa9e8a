//! Bohmian guidance dynamics: integrator, shared snapshots and trajectories.

pub mod events;
pub mod ode;
pub mod timeline;
pub mod trajectory;
pub mod walker;

pub use events::{exit_event, ExitEvent, EVENT_TIME_TOLERANCE};
pub use ode::{DenseStep, Dopri5, IntegratorConfig};
pub use timeline::{Interpolated, Timeline, Window};
pub use trajectory::{integrate, EventHit, Trajectory, TrajectorySegment};
pub use walker::{velocity, AbortKind, Walker};
