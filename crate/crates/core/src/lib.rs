//! Pose-to-Doppler radar simulation.
//!
//! Human joint trajectories go in; de-chirped FMCW echoes, range-time maps,
//! Doppler-time maps and micro-Doppler ridges come out. The crate is split by
//! processing stage:
//!
//! - [`config`]: radar, wall, scenario and processing parameters
//! - [`tracking`]: bounding-box tracker (constant-velocity prediction, IoU cost, Hungarian assignment)
//! - [`pose3d`]: 2D pixel skeleton to grounded metric 3D skeleton, Kalman smoothing
//! - [`resample`]: frame-rate to PRF interpolation and Savitzky-Golay smoothing
//! - [`echo`]: wall electromagnetics, propagation paths, IF cube synthesis
//! - [`maps`]: RTM, MTI, DTM, enhancement, ridge extraction, PSNR
//! - [`gait`]: closed-form synthetic motion clips
//! - [`pipeline`]: end-to-end orchestration and run manifests

pub mod assignment;
pub mod config;
pub mod consts;
pub mod echo;
pub mod gait;
pub mod io;
pub mod maps;
pub mod pipeline;
pub mod pose;
pub mod pose3d;
pub mod resample;
pub mod tracking;

pub use config::{ProcConfig, RadarConfig, Scenario, ScenarioKind, SimConfig, WallConfig};
pub use echo::{IfCube, PathComponent, PathKind, WallEm};
pub use maps::{MapKind, RidgeSet, SpectralMap};
pub use pose::{PoseMode, PoseSequence, Skeleton2D, Skeleton3D, NUM_JOINTS};
pub use resample::JointTrajectory;
pub use tracking::{BBox, TrackSet, TrackState, TrackStatus};

pub use num_complex::Complex64;
