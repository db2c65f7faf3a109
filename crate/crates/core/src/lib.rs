//! Monitoring planner for scenes with moving obstacles: offline FMM
//! partitioning, dynamic-area aware goal selection and path planning, a
//! reactive path follower and a deterministic simulator to evaluate it.

// `!(x > 0.0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod config;
pub mod dynamic;
pub mod fmm;
pub mod follower;
pub mod geometry;
pub mod grid;
pub mod high_level;
pub mod low_level;
pub mod mission;
pub mod partition;
pub mod render;
pub mod scenario;
pub mod sim;
pub mod world;

pub use batch::{run_sweep, write_outputs, RunRecord, Sweep};
pub use config::{MissionConfig, ObstacleSpeed, Strategy};
pub use dynamic::{DynamicArea, MemoryMode};
pub use fmm::{ScalarField, VelocityField};
pub use follower::{KinodynamicLimits, RobotState};
pub use grid::{CellPos, GridMap, ObservedMask};
pub use mission::{Mission, MissionStatus};
pub use partition::{plan_offline, OfflinePlan, Partitioning};
pub use scenario::Scenario;
pub use sim::{run_mission, MissionMetrics, TraceLine};
