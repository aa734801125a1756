//! Reduced-order walking control for a point-mass biped.
//!
//! The crate is `no_std` (it needs `alloc` for stride records) and is split
//! along the control stack:
//!
//! * [`alip`]: closed-form and vector-field forms of the linear inverted
//!   pendulum, with angular momentum about the contact point as rate state.
//! * [`planner`]: pole-placed step-to-step feedback plus speed and width
//!   offsets, producing touchdown commands.
//! * [`leg`]: the hold / straighten / collapse stance leg length policy.
//! * [`rolling`]: heel-to-toe center of pressure schedule.
//! * [`sim`]: hybrid closed-loop simulation with pushes and terrain drops.
//! * [`metrics`]: per-stride center of mass work and gait statistics.
//! * [`analysis`]: steady-state, push, drop and rolling A/B experiments.
//!
//! Everything is deterministic and uses `libm` for transcendental functions,
//! so results are identical across targets.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod alip;
pub mod analysis;
mod error;
pub mod geom;
pub mod leg;
pub mod metrics;
pub mod ode;
pub mod planner;
pub mod rolling;
pub mod sim;

pub use alip::{AlipState, GaitParams, Transition2};
pub use error::Error;
pub use geom::{Vec2, Vec3};
pub use leg::{LegLengthParams, LegLengthState, LegStage};
pub use metrics::{StrideMetrics, StrideRecord};
pub use planner::{FootstepCommand, Side, StepOffsets};
pub use rolling::RollingContactParams;
pub use sim::{FallEvent, Run, ScenarioSpec, SimConfig, WorldState};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Result<T, E = Error> = core::result::Result<T, E>;
