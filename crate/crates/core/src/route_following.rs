//! Per-tick route following.
//!
//! Each tick runs the same pipeline: find the path vertex closest to the
//! user, pick a sub-goal ahead of it, take the bearing to that sub-goal,
//! choose among the walkable directions reported by the obstacle detector,
//! and finally veto the choice if the ultrasonic rangefinder sees something
//! close inside its narrow cone.
//!
//! All functions here are pure; the only state carried between ticks is the
//! [`SubGoalState`] passed in and returned by [`guidance_step`].

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    angular_diff, expected_angle, vector_angle, GeometryError, GlobalAngle, Point2, Polyline,
    RelativeAngle,
};

pub const ULTRASONIC_MIN_RANGE: f64 = 0.03;
pub const ULTRASONIC_MAX_RANGE: f64 = 4.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FollowError {
    #[error("invalid follower config: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Point2,
    pub heading: GlobalAngle,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Result<Self, GeometryError> {
        let position = Point2::new(x, y);
        if !position.is_finite() {
            return Err(GeometryError::NonFinite(if x.is_finite() { y } else { x }));
        }
        Ok(Self { position, heading: GlobalAngle::new(heading)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FollowerConfig {
    /// Arc distance ahead of the closest point for a spaced sub-goal (m).
    pub subgoal_distance: f64,
    /// Turn angle at which a path vertex becomes a turning point (rad).
    pub turn_angle: f64,
    /// Distance to the destination that counts as arrival (m).
    pub arrival_radius: f64,
    /// Off-path distance that triggers heading correction (m).
    pub deviation_threshold: f64,
    /// Heading error that triggers heading correction (rad).
    pub heading_threshold: f64,
    /// Half-angle of the ultrasonic cone, in degrees.
    pub ultra_fov_half: f64,
    /// Ultrasonic distance at or below which the cone counts as blocked (m).
    pub ultra_obstacle_threshold: f64,
}

impl Default for FollowerConfig {
    fn default() -> Self {
        Self {
            subgoal_distance: 3.0,
            turn_angle: PI / 6.0,
            arrival_radius: 1.0,
            deviation_threshold: 1.0,
            heading_threshold: PI / 6.0,
            ultra_fov_half: 7.5,
            ultra_obstacle_threshold: 2.0,
        }
    }
}

impl FollowerConfig {
    pub fn validate(&self) -> Result<(), FollowError> {
        let fields = [
            ("subgoal_distance", self.subgoal_distance),
            ("turn_angle", self.turn_angle),
            ("arrival_radius", self.arrival_radius),
            ("deviation_threshold", self.deviation_threshold),
            ("heading_threshold", self.heading_threshold),
            ("ultra_fov_half", self.ultra_fov_half),
            ("ultra_obstacle_threshold", self.ultra_obstacle_threshold),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FollowError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.ultra_fov_half > 90.0 {
            return Err(FollowError::Config(format!(
                "ultra_fov_half must be at most 90 degrees, got {}",
                self.ultra_fov_half
            )));
        }
        Ok(())
    }

    /// A locked turning sub-goal is released once the closest path point
    /// comes within this distance of it.
    pub fn turn_reached_radius(&self) -> f64 {
        0.5 * self.arrival_radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubGoalKind {
    Spaced,
    Turning,
    Destination,
}

impl fmt::Display for SubGoalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubGoalKind::Spaced => "spaced",
            SubGoalKind::Turning => "turning",
            SubGoalKind::Destination => "destination",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubGoalState {
    pub sub_goal: Point2,
    pub kind: SubGoalKind,
    pub locked: bool,
    pub path_index: usize,
    /// Path index of the last turning point that was reached. Scans start no
    /// earlier than this so a released corner is not selected again.
    pub scan_floor: usize,
}

/// Walkable directions relative to the current heading.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateDirections(pub Vec<RelativeAngle>);

impl CandidateDirections {
    pub fn from_radians(v: &[f64]) -> Result<Self, GeometryError> {
        v.iter().map(|&a| RelativeAngle::new(a)).collect::<Result<_, _>>().map(Self)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &RelativeAngle> {
        self.0.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UltrasonicReading(f64);

impl UltrasonicReading {
    /// Clamps `distance` into the sensor range. NaN reads as nothing detected.
    pub fn new(distance: f64) -> Self {
        if distance.is_nan() {
            return Self(ULTRASONIC_MAX_RANGE);
        }
        Self(distance.clamp(ULTRASONIC_MIN_RANGE, ULTRASONIC_MAX_RANGE))
    }

    pub fn distance(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cue {
    Straight,
    SlightLeft,
    Left,
    SlightRight,
    Right,
    Stop,
    Arrived,
}

impl Cue {
    pub fn as_str(self) -> &'static str {
        match self {
            Cue::Straight => "straight",
            Cue::SlightLeft => "slight_left",
            Cue::Left => "left",
            Cue::SlightRight => "slight_right",
            Cue::Right => "right",
            Cue::Stop => "stop",
            Cue::Arrived => "arrived",
        }
    }

    pub fn parse(s: &str) -> Option<Cue> {
        Some(match s {
            "straight" => Cue::Straight,
            "slight_left" => Cue::SlightLeft,
            "left" => Cue::Left,
            "slight_right" => Cue::SlightRight,
            "right" => Cue::Right,
            "stop" => Cue::Stop,
            "arrived" => Cue::Arrived,
            _ => return None,
        })
    }
}

impl fmt::Display for Cue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceOutput {
    /// Final walking direction; `None` means stop.
    pub walk_direction: Option<RelativeAngle>,
    pub cue: Cue,
    pub distance_to_subgoal: f64,
    /// Distance from the current position to the closest path vertex.
    pub deviation: f64,
    pub arrived: bool,
    /// Sub-goal bearing relative to the current heading, when not arrived.
    pub subgoal_bearing: Option<RelativeAngle>,
}

/// Internals of one guidance tick, for debugging output.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub cls_index: usize,
    pub sub_goal: Point2,
    pub kind: SubGoalKind,
    pub theta_exp: Option<GlobalAngle>,
    pub candidates: CandidateDirections,
    pub theta_opt: Option<RelativeAngle>,
    pub d_ultra: f64,
    pub theta_walk: Option<RelativeAngle>,
}

/// Path vertex nearest to `current`, with its distance. Ties go to the
/// smaller index.
pub fn closest_point(path: &Polyline, current: Point2) -> (usize, Point2, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, p) in path.points().iter().enumerate() {
        let d = p.distance_squared(&current);
        if d < best.1 {
            best = (i, d);
        }
    }
    let p = path.points()[best.0];
    (best.0, p, best.1.sqrt())
}

/// Chooses the sub-goal for this tick.
///
/// A locked turning sub-goal is kept until the closest point reaches it
/// (within [`FollowerConfig::turn_reached_radius`]) or moves past it. Otherwise
/// vertices after the closest point are scanned in order and the first one
/// that is either a turning point (the chord from the closest point and the
/// following segment meet at `turn_angle` or more) or at least
/// `subgoal_distance` of arc away is taken, skipping vertices before the
/// previous sub-goal so the choice never moves backward. The last path vertex
/// is the destination.
pub fn select_sub_goal(
    path: &Polyline,
    cls_index: usize,
    prev: Option<&SubGoalState>,
    cfg: &FollowerConfig,
) -> SubGoalState {
    let pts = path.points();
    let last = pts.len() - 1;
    let cls_index = cls_index.min(last);
    let mut floor = prev.map_or(0, |s| s.scan_floor);

    if let Some(p) = prev.filter(|p| p.locked) {
        let reached = pts[cls_index].distance(&p.sub_goal) <= cfg.turn_reached_radius()
            || cls_index > p.path_index;
        if !reached {
            return *p;
        }
        floor = floor.max(p.path_index);
    }

    // never step back behind the previous sub-goal
    let keep_ahead = prev.map_or(0, |p| p.path_index);
    let origin = cls_index.max(floor).min(last);
    let o = pts[origin];
    let mut arc = 0.0;
    for s in origin + 1..=last {
        arc += pts[s - 1].distance(&pts[s]);
        if s == last {
            break;
        }
        if s < keep_ahead {
            continue;
        }
        let chord = (pts[s].x - o.x, pts[s].y - o.y);
        let next = (pts[s + 1].x - pts[s].x, pts[s + 1].y - pts[s].y);
        if vector_angle(chord, next) >= cfg.turn_angle {
            return SubGoalState {
                sub_goal: pts[s],
                kind: SubGoalKind::Turning,
                locked: true,
                path_index: s,
                scan_floor: floor,
            };
        }
        if arc >= cfg.subgoal_distance {
            return SubGoalState {
                sub_goal: pts[s],
                kind: SubGoalKind::Spaced,
                locked: false,
                path_index: s,
                scan_floor: floor,
            };
        }
    }
    SubGoalState {
        sub_goal: pts[last],
        kind: SubGoalKind::Destination,
        locked: false,
        path_index: last,
        scan_floor: floor,
    }
}

/// Picks the walking direction from the candidates.
///
/// With no candidates the result is `None`. When the user is off the path by
/// more than `deviation_threshold`, or facing at least `heading_threshold` away
/// from the sub-goal, the candidate whose global direction is closest to the
/// sub-goal bearing wins. Otherwise the straightest candidate wins. Ties
/// prefer the smaller turn, then the left one.
pub fn optimal_direction(
    candidates: &CandidateDirections,
    theta_exp: GlobalAngle,
    pose: &Pose,
    deviation: f64,
    cfg: &FollowerConfig,
) -> Option<RelativeAngle> {
    let off = angular_diff(theta_exp, pose.heading);
    let correcting = deviation > cfg.deviation_threshold || off.abs() >= cfg.heading_threshold;
    let cost = |theta: RelativeAngle| {
        if correcting {
            // off − θ, wrapped; mirror-image candidates tie exactly
            RelativeAngle::new(off.value() - theta.value()).map_or(f64::INFINITY, |r| r.abs())
        } else {
            theta.abs()
        }
    };
    let key = |theta: RelativeAngle| (cost(theta), theta.abs(), theta.value() < 0.0);
    candidates.iter().copied().min_by(|a, b| {
        let (ka, kb) = (key(*a), key(*b));
        ka.0.total_cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(ka.2.cmp(&kb.2))
    })
}

/// Ultrasonic veto: a direction inside the sensor cone (boundary included)
/// passes only if the measured distance strictly exceeds the threshold.
pub fn fuse_ultrasonic(
    opt: Option<RelativeAngle>,
    reading: UltrasonicReading,
    cfg: &FollowerConfig,
) -> Option<RelativeAngle> {
    let theta = opt?;
    let inside_cone = theta.abs() <= cfg.ultra_fov_half.to_radians();
    if !inside_cone || reading.distance() > cfg.ultra_obstacle_threshold {
        Some(theta)
    } else {
        None
    }
}

const STRAIGHT_DEG: f64 = 7.5;
const SLIGHT_DEG: f64 = 30.0;

pub fn render_cue(direction: Option<RelativeAngle>, arrived: bool) -> Cue {
    if arrived {
        return Cue::Arrived;
    }
    let Some(dir) = direction else {
        return Cue::Stop;
    };
    let deg = dir.value();
    if deg.abs() < STRAIGHT_DEG.to_radians() {
        Cue::Straight
    } else if deg.abs() < SLIGHT_DEG.to_radians() {
        if deg > 0.0 {
            Cue::SlightLeft
        } else {
            Cue::SlightRight
        }
    } else if deg > 0.0 {
        Cue::Left
    } else {
        Cue::Right
    }
}

/// One full guidance tick. See [`guidance_step_traced`].
pub fn guidance_step(
    pose: &Pose,
    path: &Polyline,
    candidates: &CandidateDirections,
    reading: UltrasonicReading,
    state: Option<&SubGoalState>,
    cfg: &FollowerConfig,
) -> Result<(GuidanceOutput, SubGoalState), FollowError> {
    let (out, st, _) = guidance_step_traced(pose, path, candidates, reading, state, cfg)?;
    Ok((out, st))
}

pub fn guidance_step_traced(
    pose: &Pose,
    path: &Polyline,
    candidates: &CandidateDirections,
    reading: UltrasonicReading,
    state: Option<&SubGoalState>,
    cfg: &FollowerConfig,
) -> Result<(GuidanceOutput, SubGoalState, StepTrace), FollowError> {
    let (cls_index, _, deviation) = closest_point(path, pose.position);
    let next = select_sub_goal(path, cls_index, state, cfg);
    let distance_to_subgoal = pose.position.distance(&next.sub_goal);
    let mut trace = StepTrace {
        cls_index,
        sub_goal: next.sub_goal,
        kind: next.kind,
        theta_exp: None,
        candidates: candidates.clone(),
        theta_opt: None,
        d_ultra: reading.distance(),
        theta_walk: None,
    };

    if pose.position.distance(&path.last()) < cfg.arrival_radius {
        let out = GuidanceOutput {
            walk_direction: None,
            cue: Cue::Arrived,
            distance_to_subgoal,
            deviation,
            arrived: true,
            subgoal_bearing: None,
        };
        return Ok((out, next, trace));
    }

    let theta_exp = expected_angle(pose.position, next.sub_goal)?;
    let theta_opt = optimal_direction(candidates, theta_exp, pose, deviation, cfg);
    let theta_walk = fuse_ultrasonic(theta_opt, reading, cfg);
    trace.theta_exp = Some(theta_exp);
    trace.theta_opt = theta_opt;
    trace.theta_walk = theta_walk;

    let out = GuidanceOutput {
        walk_direction: theta_walk,
        cue: render_cue(theta_walk, false),
        distance_to_subgoal,
        deviation,
        arrived: false,
        subgoal_bearing: Some(angular_diff(theta_exp, pose.heading)),
    };
    Ok((out, next, trace))
}
