//! Robust transmit beamforming for coherent distributed ISAC networks.
//!
//! The pipeline: a [`scenario::ScenarioConfig`] fixes the deployment, the
//! [`channel`] and [`rcs`] modules realize channels and RCS statistics,
//! [`sensing`] turns beamformers into covariances and KLD values,
//! [`optimizer`] maximizes the expected-KLD lower bound under robust SINR
//! constraints, [`zf`] provides the zero-forcing benchmark and [`detection`]
//! evaluates beamformers by Monte-Carlo detection.

pub mod archive;
pub mod channel;
pub mod detection;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod p3;
pub mod problem;
pub mod rcs;
pub mod robust_sinr;
pub mod scenario;
pub mod sensing;
pub mod zf;

pub use error::{CoreError, Result};
pub use problem::{RobustProblem, SensingModel};
pub use scenario::ScenarioConfig;
