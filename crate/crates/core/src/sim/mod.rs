//! Closed-loop simulation: a simulated walker follows the guidance produced
//! from simulated sensors until it arrives, collides or runs out of time.

mod config;
mod metrics;
pub mod scenarios;
mod trajectory_csv;

pub use config::SimConfig;
pub use metrics::{deviation_stats, deviation_stats_of, DeviationStats, MetricsError};
pub use trajectory_csv::{read_trajectory_csv, trace_csv, trajectory_csv, CsvError, TrajectoryRow};

use std::f64::consts::FRAC_PI_2;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blind_road::PoIGraph;
use crate::geometry::{angular_diff, expected_angle, GeometryError, GlobalAngle, RelativeAngle};
use crate::route_following::{guidance_step_traced, FollowError, GuidanceOutput, Pose, StepTrace, SubGoalState};
use crate::sensors::{
    candidate_directions, noisy_pose, tick_rng, ultrasonic_reading, Environment, SensorError,
};
use crate::wayfinding::{expand_path, plan_by_label, GlobalPath, NodeRoute, WayfindingError};

/// Salt separating the walker's noise stream from the localisation stream.
const WALKER_STREAM_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Wayfinding(#[from] WayfindingError),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Follow(#[from] FollowError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid walker model: {0}")]
    Walker(String),
}

/// Simulated user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkerModel {
    /// Walking speed (m/s).
    pub speed: f64,
    /// Fastest heading change (rad/s).
    pub max_turn_rate: f64,
    /// Tick length (s).
    pub dt: f64,
    /// Std of the heading error on each executed step (rad).
    pub compliance_noise: f64,
    /// In-place rotation rate while told to stop (rad/s).
    pub scan_rate: f64,
}

impl Default for WalkerModel {
    fn default() -> Self {
        Self {
            speed: 0.8,
            max_turn_rate: FRAC_PI_2,
            dt: 0.1,
            compliance_noise: 0.05,
            scan_rate: std::f64::consts::FRAC_PI_4,
        }
    }
}

impl WalkerModel {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = [self.speed, self.max_turn_rate, self.dt, self.scan_rate]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite())
            && self.compliance_noise >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(SimError::Walker("speed, rates and dt must be positive".into()))
        }
    }
}

/// Walker pose plus the little it remembers between ticks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkerState {
    pub pose: Pose,
    /// Heading of a commanded turn still being carried out.
    pub target: Option<GlobalAngle>,
    /// Side (+1 left, −1 right) the sub-goal was last reported on.
    pub last_side: f64,
    /// Sweep in progress while stopped: current direction and rotation
    /// relative to the heading the walker stopped at.
    pub sweep: Option<(f64, f64)>,
}

impl WalkerState {
    pub fn new(pose: Pose) -> Self {
        Self { pose, target: None, last_side: 1.0, sweep: None }
    }
}

/// Widest a stopped walker turns away from where it stopped.
const SWEEP_LIMIT: f64 = std::f64::consts::PI;

/// Advances the walker by one tick in response to `guidance`.
///
/// A commanded direction sets a target heading, which the walker keeps
/// turning toward (rate limited) until reached; a straight-ahead command does
/// not cancel a turn in progress. Each tick the walker then steps forward
/// along its new heading, perturbed by the compliance noise.
///
/// A stop command cancels any turn. The walker then rotates in place toward
/// the side the sub-goal was on when it stopped, sweeping back and forth up
/// to a half turn either way until it is told to walk again.
pub fn walker_step(
    state: &WalkerState,
    guidance: &GuidanceOutput,
    model: &WalkerModel,
    tick: u64,
    seed: u64,
) -> WalkerState {
    if guidance.arrived {
        return *state;
    }
    let mut next = *state;

    let Some(dir) = guidance.walk_direction else {
        next.target = None;
        let (mut sign, offset) = state.sweep.unwrap_or_else(|| {
            let side = match guidance.subgoal_bearing {
                Some(b) if b.value() != 0.0 => b.value().signum(),
                _ => state.last_side,
            };
            (side, 0.0)
        });
        if (offset + sign * model.scan_rate * model.dt).abs() > SWEEP_LIMIT {
            sign = -sign;
        }
        let step = sign * model.scan_rate * model.dt;
        next.sweep = Some((sign, offset + step));
        next.last_side = sign;
        next.pose.heading = rotate(state.pose.heading, step);
        return next;
    };

    next.sweep = None;
    if let Some(b) = guidance.subgoal_bearing {
        if b.value() != 0.0 {
            next.last_side = b.value().signum();
        }
    }
    if dir.value() != 0.0 {
        next.target = Some(state.pose.heading.rotate(dir));
    }
    let max_step = model.max_turn_rate * model.dt;
    if let Some(target) = next.target {
        let diff = angular_diff(target, state.pose.heading).value();
        let step = diff.clamp(-max_step, max_step);
        next.pose.heading = rotate(state.pose.heading, step);
        if step == diff {
            next.target = None;
        }
    }

    let mut executed = next.pose.heading.value();
    if model.compliance_noise > 0.0 {
        let mut rng = tick_rng(seed ^ WALKER_STREAM_SALT, tick);
        let n: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(&mut rng);
        executed += model.compliance_noise * n;
    }
    next.pose.position = next.pose.position.offset(executed, model.speed * model.dt);
    next
}

fn rotate(heading: GlobalAngle, by: f64) -> GlobalAngle {
    heading.rotate(RelativeAngle::new(by).expect("finite rotation"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Arrived,
    Timeout,
    Collision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub tick: u64,
    pub pose: Pose,
    pub guidance: GuidanceOutput,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub samples: Vec<Sample>,
    pub outcome: Outcome,
    pub route: NodeRoute,
    pub path: GlobalPath,
    pub trace: Vec<StepTrace>,
}

/// Plans a route between two labels and walks it.
///
/// Each tick moves dynamic obstacles, checks the walker's true position for a
/// collision, senses from the true pose, guides from the noisy pose and then
/// lets the walker react. The run is a pure function of its inputs and `seed`.
pub fn run_scenario(
    env: &Environment,
    graph: &PoIGraph,
    start_label: &str,
    goal_label: &str,
    cfg: &SimConfig,
    seed: u64,
) -> Result<TrajectoryRecord, SimError> {
    cfg.validate()?;
    let route = plan_by_label(graph, start_label, goal_label)?;
    let path = expand_path(graph, &route, cfg.path_spacing)?;
    let w = &path.points;

    let start = w.first();
    let heading = if w.len() > 1 {
        expected_angle(start, w.points()[1])?
    } else {
        GlobalAngle::default()
    };
    let mut walker = WalkerState::new(Pose { position: start, heading });
    let mut world = env.world()?;
    let noise = crate::sensors::PoseNoiseModel { seed, ..cfg.pose_noise.clone() };
    let dt = cfg.walker.dt;
    let max_ticks = (cfg.timeout / dt).ceil() as u64;

    let mut samples = Vec::new();
    let mut trace = Vec::new();
    let mut sub_goal: Option<SubGoalState> = None;
    let mut outcome = Outcome::Timeout;

    for tick in 0..=max_ticks {
        world.advance_to(tick as f64 * dt);
        let grid = world.grid();
        if grid.is_occupied(&walker.pose.position) {
            outcome = Outcome::Collision;
            break;
        }
        let sensed = noisy_pose(&walker.pose, &noise, tick);
        let candidates = candidate_directions(grid, &walker.pose, &cfg.camera);
        let reading = ultrasonic_reading(grid, &walker.pose);
        let (out, state, step_trace) =
            guidance_step_traced(&sensed, w, &candidates, reading, sub_goal.as_ref(), &cfg.follower)?;
        sub_goal = Some(state);
        samples.push(Sample { tick, pose: walker.pose, guidance: out });
        trace.push(step_trace);
        if out.arrived {
            outcome = Outcome::Arrived;
            break;
        }
        if tick == max_ticks {
            break;
        }
        walker = walker_step(&walker, &out, &cfg.walker, tick, seed);
    }
    Ok(TrajectoryRecord { samples, outcome, route, path, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::route_following::Cue;
    use std::f64::consts::PI;

    fn guidance(dir: Option<f64>, arrived: bool) -> GuidanceOutput {
        let walk_direction = dir.map(|d| RelativeAngle::new(d).unwrap());
        GuidanceOutput {
            walk_direction,
            cue: crate::route_following::render_cue(walk_direction, arrived),
            distance_to_subgoal: 3.0,
            deviation: 0.0,
            arrived,
            subgoal_bearing: if arrived { None } else { Some(RelativeAngle::ZERO) },
        }
    }

    fn quiet() -> WalkerModel {
        WalkerModel { compliance_noise: 0.0, ..Default::default() }
    }

    #[test]
    fn straight_step_advances() {
        let s = WalkerState::new(Pose::new(0.0, 0.0, 0.0).unwrap());
        let n = walker_step(&s, &guidance(Some(0.0), false), &quiet(), 0, 1);
        assert!((n.pose.position.x - 0.08).abs() < 1e-12);
        assert_eq!(n.pose.position.y, 0.0);
        assert_eq!(n.pose.heading, s.pose.heading);
    }

    #[test]
    fn turn_is_rate_limited() {
        let s = WalkerState::new(Pose::new(0.0, 0.0, 0.0).unwrap());
        let n = walker_step(&s, &guidance(Some(PI), false), &quiet(), 0, 1);
        assert!((n.pose.heading.value() - 0.05 * PI).abs() < 1e-12);
    }

    #[test]
    fn commanded_turn_survives_straight_cue() {
        let s = WalkerState::new(Pose::new(0.0, 0.0, 0.0).unwrap());
        let m = quiet();
        let mut n = walker_step(&s, &guidance(Some(0.5), false), &m, 0, 1);
        for t in 1..10 {
            n = walker_step(&n, &guidance(Some(0.0), false), &m, t, 1);
        }
        assert!((n.pose.heading.value() - 0.5).abs() < 1e-12);
        assert!(n.target.is_none());
    }

    #[test]
    fn stop_holds_position() {
        let s = WalkerState::new(Pose::new(1.0, 2.0, 0.3).unwrap());
        let g = guidance(None, false);
        assert_eq!(g.cue, Cue::Stop);
        let n = walker_step(&s, &g, &WalkerModel::default(), 0, 1);
        assert_eq!(n.pose.position, s.pose.position);
        assert!(n.pose.heading != s.pose.heading);
    }

    #[test]
    fn stopped_sweep_keeps_side_then_reverses() {
        let mut g = guidance(None, false);
        g.subgoal_bearing = Some(RelativeAngle::new(-0.1).unwrap());
        let m = WalkerModel::default();
        let step = m.scan_rate * m.dt;
        let start = WalkerState::new(Pose::new(0.0, 0.0, 0.0).unwrap());
        let mut w = walker_step(&start, &g, &m, 0, 1);
        // later readings put the sub-goal on the other side; the sweep holds
        g.subgoal_bearing = Some(RelativeAngle::new(0.1).unwrap());
        let mut offset = -step;
        let mut reversed_at = None;
        for t in 1..60 {
            let n = walker_step(&w, &g, &m, t, 1);
            let d = angular_diff(n.pose.heading, w.pose.heading).value();
            assert!((d.abs() - step).abs() < 1e-9);
            offset += d;
            if d > 0.0 && reversed_at.is_none() {
                reversed_at = Some(offset);
            }
            assert!(offset >= -PI - 1e-9);
            w = n;
        }
        assert!(reversed_at.unwrap() > -PI);
        assert!(offset > -PI + 1.0);
    }

    #[test]
    fn arrived_is_frozen() {
        let s = WalkerState::new(Pose::new(1.0, 2.0, 0.3).unwrap());
        assert_eq!(walker_step(&s, &guidance(None, true), &WalkerModel::default(), 0, 1), s);
    }

    #[test]
    fn noise_is_seeded() {
        let s = WalkerState::new(Pose::new(0.0, 0.0, 0.0).unwrap());
        let m = WalkerModel::default();
        let g = guidance(Some(0.0), false);
        assert_eq!(walker_step(&s, &g, &m, 5, 9), walker_step(&s, &g, &m, 5, 9));
        assert_ne!(walker_step(&s, &g, &m, 5, 9), walker_step(&s, &g, &m, 5, 10));
    }
}
