//! Multi-timescale platoon control with an embedded C-V2X sidelink simulation.
//!
//! The crate couples two timescales: longitudinal platoon dynamics advancing
//! every 50 ms control interval, and a sidelink communication simulation
//! advancing every 1 ms inside each control interval. Follower vehicles
//! receive their predecessor's awareness messages with a random delay that
//! emerges from the transmit-queue backlog, and learn continuous-control
//! policies on a delay-augmented state via deterministic policy gradient.
//!
//! Module map:
//! - [`dynamics`]: vehicle kinematics, headway geometry, tracking errors.
//! - [`cv2x`]: channel gains, SINR/rate computation, CAM queueing, delay.
//! - [`env`]: the coupled environment, augmented states, rewards.
//! - [`ddpg`]: from-scratch actor/critic learner and the training variants.
//! - [`verify`]: tabular checks of the augmented-state MDP construction.
//! - [`harness`]: leader profiles, configuration, metrics, CLI plumbing.

pub mod cv2x;
pub mod ddpg;
pub mod dynamics;
pub mod env;
pub mod harness;
pub mod verify;

mod error;

pub use error::{Error, Result};
