use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::TrajectoryRecord;
use crate::geometry::{Point2, Polyline};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("trajectory has no samples")]
    Empty,
}

/// Summary of how far a walk strayed from its path (metres).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationStats {
    pub max: f64,
    pub avg: f64,
    /// Population variance.
    pub variance: f64,
    pub samples: usize,
}

/// Deviation of every position from the nearest point of `path`, measured
/// against segments rather than vertices.
pub fn deviation_stats_of(positions: &[Point2], path: &Polyline) -> Result<DeviationStats, MetricsError> {
    if positions.is_empty() {
        return Err(MetricsError::Empty);
    }
    let d: Vec<f64> = positions.iter().map(|p| path.distance_to(p)).collect();
    let n = d.len() as f64;
    let avg = d.iter().sum::<f64>() / n;
    let variance = d.iter().map(|x| (x - avg).powi(2)).sum::<f64>() / n;
    Ok(DeviationStats { max: d.iter().copied().fold(0.0, f64::max), avg, variance, samples: d.len() })
}

/// Deviation statistics of the true positions in a recorded run.
pub fn deviation_stats(record: &TrajectoryRecord, path: &Polyline) -> Result<DeviationStats, MetricsError> {
    let positions: Vec<Point2> = record.samples.iter().map(|s| s.pose.position).collect();
    deviation_stats_of(&positions, path)
}
