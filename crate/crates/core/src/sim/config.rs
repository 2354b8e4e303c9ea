use serde::{Deserialize, Serialize};

use super::{SimError, WalkerModel};
use crate::route_following::FollowerConfig;
use crate::sensors::{DepthCameraModel, PoseNoiseModel};
use crate::wayfinding::DEFAULT_PATH_SPACING;

/// Everything a scenario run needs besides the map, environment and seed.
///
/// Read from JSON; every field and sub-field is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub follower: FollowerConfig,
    pub walker: WalkerModel,
    pub camera: DepthCameraModel,
    pub pose_noise: PoseNoiseModel,
    pub path_spacing: f64,
    /// Seconds of simulated time before giving up.
    pub timeout: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            follower: FollowerConfig::default(),
            walker: WalkerModel::default(),
            camera: DepthCameraModel::default(),
            pose_noise: PoseNoiseModel::default(),
            path_spacing: DEFAULT_PATH_SPACING,
            timeout: 120.0,
        }
    }
}

impl SimConfig {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.follower.validate()?;
        self.walker.validate()?;
        self.camera.validate()?;
        if !(self.path_spacing > 0.0) || !(self.timeout >= 0.0) || !self.timeout.is_finite() {
            return Err(SimError::Walker("path_spacing must be positive and timeout finite".into()));
        }
        if !(self.pose_noise.position_sigma >= 0.0) || !(self.pose_noise.heading_sigma >= 0.0) {
            return Err(SimError::Walker("noise sigmas must be non-negative".into()));
        }
        Ok(())
    }
}
