//! Robotic repositioning of a human arm under a rigid grasp, with joint-limit
//! and collision constraints, and an iterative bed-bathing coverage loop.

pub mod bathing;
pub mod config;
pub mod coupling;
pub mod csdf;
pub mod error;
pub mod follower;
pub mod geometry;
pub mod grasp;
pub mod harness;
pub mod kinematics;
pub mod par;
pub mod planner;
pub mod scene;
