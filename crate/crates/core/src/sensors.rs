//! Simulated sensing: an occupancy-grid world, a ray-cast depth camera that
//! reports walkable directions, an ultrasonic cone, and a noisy pose source.

use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GlobalAngle, Point2, RelativeAngle};
use crate::route_following::{CandidateDirections, Pose, UltrasonicReading, ULTRASONIC_MAX_RANGE};

/// Relative angles (degrees) sampled across the ultrasonic cone.
const ULTRASONIC_RAYS_DEG: [f64; 5] = [-7.5, -3.75, 0.0, 3.75, 7.5];

#[derive(Debug, Error)]
pub enum SensorError {
    #[error("malformed environment document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid environment: {0}")]
    Invalid(String),
}

/// Boolean occupancy raster. Cell `(ix, iy)` covers
/// `[origin.x + ix·res, origin.x + (ix+1)·res) × [origin.y + iy·res, …)`.
/// Anything outside the raster is occupied.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    origin: Point2,
    resolution: f64,
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(origin: Point2, resolution: f64, width: usize, height: usize) -> Result<Self, SensorError> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(SensorError::Invalid(format!("resolution {resolution} must be positive")));
        }
        if width == 0 || height == 0 {
            return Err(SensorError::Invalid("grid must have at least one cell".into()));
        }
        if !origin.is_finite() {
            return Err(SensorError::Invalid("origin must be finite".into()));
        }
        Ok(Self { origin, resolution, width, height, cells: vec![false; width * height] })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    fn grid_coords(&self, p: &Point2) -> (f64, f64) {
        ((p.x - self.origin.x) / self.resolution, (p.y - self.origin.y) / self.resolution)
    }

    fn index(&self, ix: i64, iy: i64) -> Option<usize> {
        if ix < 0 || iy < 0 || ix as usize >= self.width || iy as usize >= self.height {
            None
        } else {
            Some(iy as usize * self.width + ix as usize)
        }
    }

    pub fn cell_occupied(&self, ix: i64, iy: i64) -> bool {
        self.index(ix, iy).map_or(true, |i| self.cells[i])
    }

    pub fn is_occupied(&self, p: &Point2) -> bool {
        if !p.is_finite() {
            return true;
        }
        let (gx, gy) = self.grid_coords(p);
        self.cell_occupied(gx.floor() as i64, gy.floor() as i64)
    }

    pub fn set_cell(&mut self, ix: usize, iy: usize, occupied: bool) {
        if ix < self.width && iy < self.height {
            self.cells[iy * self.width + ix] = occupied;
        }
    }

    fn cell_center(&self, ix: usize, iy: usize) -> Point2 {
        Point2::new(
            self.origin.x + (ix as f64 + 0.5) * self.resolution,
            self.origin.y + (iy as f64 + 0.5) * self.resolution,
        )
    }

    /// Cell index ranges whose centres may fall in `[x0, x1] × [y0, y1]`.
    fn cell_range(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> (usize, usize, usize, usize) {
        let clamp_x = |v: f64| (v.max(0.0) as usize).min(self.width);
        let clamp_y = |v: f64| (v.max(0.0) as usize).min(self.height);
        let (gx0, gy0) = self.grid_coords(&Point2::new(x0, y0));
        let (gx1, gy1) = self.grid_coords(&Point2::new(x1, y1));
        (
            clamp_x((gx0 - 0.5).floor()),
            clamp_x((gx1 + 0.5).ceil()),
            clamp_y((gy0 - 0.5).floor()),
            clamp_y((gy1 + 0.5).ceil()),
        )
    }

    /// Cells whose centre lies inside `shape`.
    pub fn shape_cells(&self, shape: &Shape) -> Vec<usize> {
        let (x0, y0, x1, y1) = shape.bounds();
        let (ix0, ix1, iy0, iy1) = self.cell_range(x0, y0, x1, y1);
        let mut out = Vec::new();
        for iy in iy0..iy1 {
            for ix in ix0..ix1 {
                if shape.contains(&self.cell_center(ix, iy)) {
                    out.push(iy * self.width + ix);
                }
            }
        }
        out
    }

    pub fn fill(&mut self, shape: &Shape) {
        for i in self.shape_cells(shape) {
            self.cells[i] = true;
        }
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    /// Axis-aligned rectangle with lower-left corner `(x, y)`.
    Rect { x: f64, y: f64, w: f64, h: f64 },
    Circle { x: f64, y: f64, r: f64 },
}

impl Shape {
    fn bounds(&self) -> (f64, f64, f64, f64) {
        match *self {
            Shape::Rect { x, y, w, h } => (x, y, x + w, y + h),
            Shape::Circle { x, y, r } => (x - r, y - r, x + r, y + r),
        }
    }

    pub fn contains(&self, p: &Point2) -> bool {
        match *self {
            Shape::Rect { x, y, w, h } => p.x >= x && p.x <= x + w && p.y >= y && p.y <= y + h,
            Shape::Circle { x, y, r } => p.distance_squared(&Point2::new(x, y)) <= r * r,
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Shape {
        match *self {
            Shape::Rect { x, y, w, h } => Shape::Rect { x: x + dx, y: y + dy, w, h },
            Shape::Circle { x, y, r } => Shape::Circle { x: x + dx, y: y + dy, r },
        }
    }

    fn validate(&self) -> Result<(), SensorError> {
        let ok = match *self {
            Shape::Rect { x, y, w, h } => [x, y, w, h].iter().all(|v| v.is_finite()) && w > 0.0 && h > 0.0,
            Shape::Circle { x, y, r } => [x, y, r].iter().all(|v| v.is_finite()) && r > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(SensorError::Invalid(format!("bad obstacle {self:?}")))
        }
    }
}

/// Distance along a ray to the first occupied cell, or `max_range` if none is
/// met. Walks every cell the ray passes through, so thin walls are never
/// skipped. Starting inside an occupied cell returns 0.
pub fn ray_cast(grid: &OccupancyGrid, from: Point2, angle: GlobalAngle, max_range: f64) -> f64 {
    if !(max_range > 0.0) {
        return 0.0;
    }
    let (gx, gy) = grid.grid_coords(&from);
    let (mut ix, mut iy) = (gx.floor() as i64, gy.floor() as i64);
    if grid.cell_occupied(ix, iy) {
        return 0.0;
    }
    let (dx, dy) = (angle.value().cos(), angle.value().sin());
    let res = grid.resolution;
    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    let (mut t_max_x, t_delta_x) = if dx.abs() < 1e-15 {
        (f64::INFINITY, f64::INFINITY)
    } else if dx > 0.0 {
        ((ix as f64 + 1.0 - gx) * res / dx, res / dx)
    } else {
        ((gx - ix as f64) * res / -dx, res / -dx)
    };
    let (mut t_max_y, t_delta_y) = if dy.abs() < 1e-15 {
        (f64::INFINITY, f64::INFINITY)
    } else if dy > 0.0 {
        ((iy as f64 + 1.0 - gy) * res / dy, res / dy)
    } else {
        ((gy - iy as f64) * res / -dy, res / -dy)
    };

    loop {
        let t = t_max_x.min(t_max_y);
        if t >= max_range {
            return max_range;
        }
        if t_max_x == t_max_y {
            // passing exactly through a cell corner: both neighbours count
            if grid.cell_occupied(ix + step_x, iy) || grid.cell_occupied(ix, iy + step_y) {
                return t;
            }
            ix += step_x;
            iy += step_y;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        } else if t_max_x < t_max_y {
            ix += step_x;
            t_max_x += t_delta_x;
        } else {
            iy += step_y;
            t_max_y += t_delta_y;
        }
        if grid.cell_occupied(ix, iy) {
            return t;
        }
    }
}

/// Depth camera stand-in. Angles are in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DepthCameraModel {
    pub half_fov: f64,
    pub max_depth: f64,
    /// Free distance a direction needs to count as walkable.
    pub clear_depth: f64,
    /// Half-width of the body corridor checked along each direction.
    pub corridor_halfwidth: f64,
    pub angular_step: f64,
}

impl Default for DepthCameraModel {
    fn default() -> Self {
        Self {
            half_fov: 45f64.to_radians(),
            max_depth: 4.0,
            clear_depth: 1.5,
            corridor_halfwidth: 0.35,
            angular_step: 5f64.to_radians(),
        }
    }
}

impl DepthCameraModel {
    pub fn validate(&self) -> Result<(), SensorError> {
        let all_pos = [self.half_fov, self.max_depth, self.clear_depth, self.corridor_halfwidth, self.angular_step]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if !all_pos {
            return Err(SensorError::Invalid("camera parameters must be positive".into()));
        }
        if self.angular_step >= self.half_fov {
            return Err(SensorError::Invalid("angular_step must be smaller than half_fov".into()));
        }
        Ok(())
    }

    /// Sampled relative directions `k · angular_step` within the field of view.
    pub fn lattice(&self) -> Vec<RelativeAngle> {
        let m = (self.half_fov / self.angular_step + 1e-9).floor() as i64;
        (-m..=m)
            .map(|k| RelativeAngle::new(k as f64 * self.angular_step).expect("finite"))
            .collect()
    }
}

/// Directions whose body-width corridor is free for `clear_depth`. Each
/// corridor is probed by a centre ray and two rays offset sideways by
/// `corridor_halfwidth`.
pub fn candidate_directions(grid: &OccupancyGrid, pose: &Pose, cam: &DepthCameraModel) -> CandidateDirections {
    let range = cam.clear_depth.min(cam.max_depth);
    let dirs = cam
        .lattice()
        .into_iter()
        .filter(|theta| {
            let bearing = pose.heading.rotate(*theta);
            let side = bearing.value() + FRAC_PI_2;
            [0.0, cam.corridor_halfwidth, -cam.corridor_halfwidth].iter().all(|off| {
                let origin = pose.position.offset(side, *off);
                ray_cast(grid, origin, bearing, range) >= range
            })
        })
        .collect();
    CandidateDirections(dirs)
}

pub fn ultrasonic_reading(grid: &OccupancyGrid, pose: &Pose) -> UltrasonicReading {
    let d = ULTRASONIC_RAYS_DEG
        .iter()
        .map(|deg| {
            let bearing = pose.heading.rotate(RelativeAngle::from_degrees(*deg).expect("finite"));
            ray_cast(grid, pose.position, bearing, ULTRASONIC_MAX_RANGE)
        })
        .fold(f64::INFINITY, f64::min);
    UltrasonicReading::new(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoseNoiseModel {
    pub position_sigma: f64,
    pub heading_sigma: f64,
    pub seed: u64,
}

impl Default for PoseNoiseModel {
    fn default() -> Self {
        Self { position_sigma: 0.03, heading_sigma: 0.01, seed: 0 }
    }
}

/// Deterministic generator for one `(seed, tick)` pair.
pub(crate) fn tick_rng(seed: u64, tick: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tick);
    rng
}

/// Localisation stand-in: the true pose plus Gaussian noise drawn from a
/// stream fixed by `(seed, tick)`.
pub fn noisy_pose(true_pose: &Pose, noise: &PoseNoiseModel, tick: u64) -> Pose {
    if noise.position_sigma == 0.0 && noise.heading_sigma == 0.0 {
        return *true_pose;
    }
    let mut rng = tick_rng(noise.seed, tick);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let (nx, ny, nh): (f64, f64, f64) =
        (std_normal.sample(&mut rng), std_normal.sample(&mut rng), std_normal.sample(&mut rng));
    Pose {
        position: Point2::new(
            true_pose.position.x + noise.position_sigma * nx,
            true_pose.position.y + noise.position_sigma * ny,
        ),
        heading: true_pose.heading.rotate(RelativeAngle::new(noise.heading_sigma * nh).expect("finite")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSpec {
    #[serde(flatten)]
    pub shape: Shape,
    /// Loop followed by the shape's reference point, starting at the first
    /// waypoint. Empty for static obstacles.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub waypoints: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub speed: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl ObstacleSpec {
    pub fn fixed(shape: Shape) -> Self {
        Self { shape, waypoints: Vec::new(), speed: 0.0 }
    }

    pub fn is_dynamic(&self) -> bool {
        self.waypoints.len() >= 2 && self.speed > 0.0
    }

    /// Shape at simulated time `t`.
    pub fn shape_at(&self, t: f64) -> Shape {
        if !self.is_dynamic() {
            return self.shape;
        }
        let pts: Vec<Point2> = self.waypoints.iter().map(|&[x, y]| Point2::new(x, y)).collect();
        let legs: Vec<(Point2, Point2, f64)> = (0..pts.len())
            .map(|i| {
                let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
                (a, b, a.distance(&b))
            })
            .collect();
        let perimeter: f64 = legs.iter().map(|l| l.2).sum();
        if perimeter <= 0.0 {
            return self.shape;
        }
        let mut s = (self.speed * t).rem_euclid(perimeter);
        let mut at = pts[0];
        for (a, b, len) in legs {
            if s <= len {
                at = if len > 0.0 { a.lerp(&b, s / len) } else { a };
                break;
            }
            s -= len;
        }
        self.shape.translated(at.x - pts[0].x, at.y - pts[0].y)
    }
}

/// Environment file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    pub origin: [f64; 2],
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
}

impl Environment {
    pub fn from_json(s: &str) -> Result<Self, SensorError> {
        let env: Environment = serde_json::from_str(s)?;
        for o in &env.obstacles {
            o.shape.validate()?;
            if o.speed < 0.0 || !o.speed.is_finite() {
                return Err(SensorError::Invalid(format!("obstacle speed {} invalid", o.speed)));
            }
        }
        OccupancyGrid::new(Point2::new(env.origin[0], env.origin[1]), env.resolution, env.width, env.height)?;
        Ok(env)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("environment serializes")
    }

    pub fn world(&self) -> Result<World, SensorError> {
        World::new(self)
    }
}

/// Rasterised environment whose moving obstacles are re-stamped each tick.
#[derive(Debug, Clone)]
pub struct World {
    base: OccupancyGrid,
    grid: OccupancyGrid,
    dynamic: Vec<ObstacleSpec>,
    stamped: Vec<usize>,
}

impl World {
    pub fn new(env: &Environment) -> Result<Self, SensorError> {
        let mut base = OccupancyGrid::new(
            Point2::new(env.origin[0], env.origin[1]),
            env.resolution,
            env.width,
            env.height,
        )?;
        let mut dynamic = Vec::new();
        for o in &env.obstacles {
            if o.is_dynamic() {
                dynamic.push(o.clone());
            } else {
                base.fill(&o.shape);
            }
        }
        let mut world = Self { grid: base.clone(), base, dynamic, stamped: Vec::new() };
        world.advance_to(0.0);
        Ok(world)
    }

    /// Moves dynamic obstacles to their positions at time `t`.
    pub fn advance_to(&mut self, t: f64) {
        for &i in &self.stamped {
            self.grid.cells[i] = self.base.cells[i];
        }
        self.stamped.clear();
        for o in &self.dynamic {
            for i in self.grid.shape_cells(&o.shape_at(t)) {
                if !self.grid.cells[i] {
                    self.grid.cells[i] = true;
                    self.stamped.push(i);
                }
            }
        }
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn has_dynamic(&self) -> bool {
        !self.dynamic.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn empty(w: usize, h: usize) -> OccupancyGrid {
        OccupancyGrid::new(Point2::new(0.0, 0.0), 0.05, w, h).unwrap()
    }

    fn ga(v: f64) -> GlobalAngle {
        GlobalAngle::new(v).unwrap()
    }

    #[test]
    fn ray_cast_empty_and_inside() {
        let mut g = empty(200, 200);
        assert_eq!(ray_cast(&g, Point2::new(5.0, 5.0), ga(0.3), 3.0), 3.0);
        g.fill(&Shape::Rect { x: 4.9, y: 4.9, w: 0.2, h: 0.2 });
        assert_eq!(ray_cast(&g, Point2::new(5.0, 5.0), ga(0.3), 3.0), 0.0);
    }

    #[test]
    fn ray_cast_wall_distance() {
        let mut g = empty(200, 200);
        g.fill(&Shape::Rect { x: 3.0, y: 0.0, w: 0.5, h: 10.0 });
        let d = ray_cast(&g, Point2::new(1.0, 5.0), ga(0.0), 4.0);
        assert!((d - 2.0).abs() <= 0.071, "{d}");
        // oblique: analytic distance 2 / cos(0.4)
        let d = ray_cast(&g, Point2::new(1.0, 5.0), ga(0.4), 4.0);
        assert!((d - 2.0 / 0.4f64.cos()).abs() <= 0.071, "{d}");
        // leaving the raster counts as a hit
        let d = ray_cast(&g, Point2::new(1.0, 5.0), ga(PI), 4.0);
        assert!((d - 1.0).abs() <= 0.071, "{d}");
    }

    #[test]
    fn ray_cast_no_corner_tunnelling() {
        // diagonal wall of single cells touching only at corners
        let mut g = empty(100, 100);
        for i in 0..100 {
            g.set_cell(i, 99 - i, true);
        }
        let d = ray_cast(&g, Point2::new(0.5, 0.5), ga(PI / 4.0), 10.0);
        assert!(d < 10.0);
    }

    #[test]
    fn candidates_open_room() {
        let g = empty(400, 400);
        let cam = DepthCameraModel::default();
        let pose = Pose::new(10.0, 10.0, 0.7).unwrap();
        let d = candidate_directions(&g, &pose, &cam);
        assert_eq!(d.0.len(), cam.lattice().len());
        assert!(d.0.contains(&RelativeAngle::ZERO));
    }

    #[test]
    fn candidates_wall_ahead() {
        let mut g = empty(400, 400);
        g.fill(&Shape::Rect { x: 10.5, y: 0.0, w: 0.3, h: 20.0 });
        let pose = Pose::new(10.0, 10.0, 0.0).unwrap();
        assert!(candidate_directions(&g, &pose, &DepthCameraModel::default()).is_empty());
    }

    #[test]
    fn ultrasonic_examples() {
        let mut g = empty(400, 400);
        let pose = Pose::new(10.0, 10.0, 0.0).unwrap();
        assert_eq!(ultrasonic_reading(&g, &pose).distance(), 4.25);
        g.fill(&Shape::Rect { x: 11.0, y: 9.0, w: 0.5, h: 2.0 });
        assert!((ultrasonic_reading(&g, &pose).distance() - 1.0).abs() < 0.071);
        let close = Pose::new(10.99, 10.0, 0.0).unwrap();
        assert_eq!(ultrasonic_reading(&g, &close).distance(), 0.03);
    }

    #[test]
    fn noisy_pose_deterministic() {
        let p = Pose::new(1.0, 2.0, 0.5).unwrap();
        let zero = PoseNoiseModel { position_sigma: 0.0, heading_sigma: 0.0, seed: 4 };
        assert_eq!(noisy_pose(&p, &zero, 9), p);
        let n = PoseNoiseModel::default();
        assert_eq!(noisy_pose(&p, &n, 3), noisy_pose(&p, &n, 3));
        assert_ne!(noisy_pose(&p, &n, 3), noisy_pose(&p, &n, 4));
    }

    #[test]
    fn noisy_pose_statistics() {
        let p = Pose::new(0.0, 0.0, 0.0).unwrap();
        let n = PoseNoiseModel { position_sigma: 0.03, heading_sigma: 0.01, seed: 11 };
        let xs: Vec<f64> = (0..10_000).map(|t| noisy_pose(&p, &n, t).position.x).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((var.sqrt() - 0.03).abs() < 0.003, "std {}", var.sqrt());
        assert!(mean.abs() < 0.003);
    }

    #[test]
    fn environment_parse_and_dynamic_motion() {
        let doc = r#"{"resolution":0.05,"width":100,"height":100,"origin":[0,0],
            "obstacles":[{"type":"rect","x":1,"y":1,"w":0.5,"h":0.5},
                         {"type":"circle","x":3,"y":3,"r":0.2,"waypoints":[[3,3],[4,3]],"speed":0.5}]}"#;
        let env = Environment::from_json(doc).unwrap();
        assert!(env.obstacles[1].is_dynamic());
        let mut w = env.world().unwrap();
        assert!(w.grid().is_occupied(&Point2::new(3.0, 3.0)));
        w.advance_to(1.0);
        assert!(!w.grid().is_occupied(&Point2::new(3.0, 3.0)));
        assert!(w.grid().is_occupied(&Point2::new(3.5, 3.0)));
        assert!(w.grid().is_occupied(&Point2::new(1.2, 1.2)));
        // loop closes: back at the start after one perimeter (2 m at 0.5 m/s)
        w.advance_to(4.0);
        assert!(w.grid().is_occupied(&Point2::new(3.0, 3.0)));
        assert_eq!(Environment::from_json(&env.to_json()).unwrap(), env);
    }

    #[test]
    fn environment_rejects_bad_shapes() {
        let doc = r#"{"resolution":0.05,"width":10,"height":10,"origin":[0,0],
            "obstacles":[{"type":"circle","x":1,"y":1,"r":-1}]}"#;
        assert!(Environment::from_json(doc).is_err());
        assert!(Environment::from_json(r#"{"resolution":0.05}"#).is_err());
    }
}
