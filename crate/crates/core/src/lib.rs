//! Simulation and learning toolkit for wildfire tracking with camera-equipped
//! UAV swarms over a cell-free ground network.
//!
//! The crate is organized around the pieces of the simulation loop:
//!
//! - [`fire`]: elliptical fire-front propagation and perimeter rasterization
//! - [`sensing`]: camera field-of-view, area-per-pixel and coverage metrics
//! - [`airframe`]: UAV kinematics, rotary-wing power and energy bookkeeping
//! - [`channel`]: Rician air-to-ground links and MMSE estimation statistics
//! - [`cellfree`]: pooled MMSE SINR, its deterministic equivalent and the
//!   spectral-efficiency map
//! - [`env`]: the per-slot world update, rewards and mode switching
//! - [`learner`]: from-scratch TD3 (MLPs, analytic backprop, replay buffer)
//! - [`harness`]: seeded experiment orchestration and metric emission
//!
//! Everything is deterministic given a master seed; see [`rng::SeedTree`].

pub mod airframe;
pub mod cellfree;
pub mod channel;
pub mod config;
pub mod env;
pub mod error;
pub mod fire;
pub mod geom;
pub mod harness;
pub mod learner;
pub mod rng;
pub mod sensing;

pub use airframe::{PowerParams, UavMode, UavState};
pub use channel::{ChannelRealization, LinkGrid, LinkStats};
pub use config::ScenarioConfig;
pub use env::{Action, EpisodeLog, World};
pub use error::CoreError;
pub use fire::{DensityGrid, FireFront, SpreadParams, WindState};
pub use geom::{Vec2, Vec3};
pub use learner::{Mlp, ReplayBuffer, Td3, Td3Config};
