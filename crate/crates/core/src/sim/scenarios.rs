//! Authored office fixtures: corridor maps, their recorded roads and the
//! matching occupancy environments.

use crate::blind_road::{MapBuilder, PoIGraph, RoadError, VirtualBlindRoad, DEFAULT_MIN_RECORD_SPACING, DEFAULT_SNAP_RADIUS};
use crate::geometry::Point2;
use crate::sensors::{Environment, ObstacleSpec, Shape};

/// Grid cell size of every fixture (m).
pub const FIXTURE_RESOLUTION: f64 = 0.05;
/// Walls are assembled from blocks of this size, so free space must align to it.
const BLOCK: f64 = 0.5;
/// Spacing of the simulated recording walk (m).
const RECORD_STEP: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub graph: PoIGraph,
    pub road: VirtualBlindRoad,
    pub env: Environment,
    pub from: String,
    pub to: String,
}

/// Free-space rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy)]
pub struct Free(pub f64, pub f64, pub f64, pub f64);

/// Walks the corner list at roughly [`RECORD_STEP`], keeping every corner.
pub fn record_walk(corners: &[(f64, f64)]) -> VirtualBlindRoad {
    let mut road = VirtualBlindRoad::new(DEFAULT_MIN_RECORD_SPACING);
    let Some(&(x0, y0)) = corners.first() else { return road };
    road.record_point(Point2::new(x0, y0));
    for w in corners.windows(2) {
        let (a, b) = (Point2::new(w[0].0, w[0].1), Point2::new(w[1].0, w[1].1));
        let n = (a.distance(&b) / RECORD_STEP).ceil().max(1.0) as usize;
        for k in 1..=n {
            road.record_point(a.lerp(&b, k as f64 / n as f64));
        }
    }
    road
}

/// Environment whose free space is the union of `free`; everything else in
/// the `width × height` area is wall.
pub fn corridor_env(width: f64, height: f64, free: &[Free]) -> Environment {
    let cols = (width / BLOCK).round() as usize;
    let rows = (height / BLOCK).round() as usize;
    let is_free = |i: usize, j: usize| {
        let (cx, cy) = ((i as f64 + 0.5) * BLOCK, (j as f64 + 0.5) * BLOCK);
        free.iter().any(|f| cx > f.0 && cx < f.1 && cy > f.2 && cy < f.3)
    };
    let mut obstacles = Vec::new();
    for j in 0..rows {
        let mut i = 0;
        while i < cols {
            if is_free(i, j) {
                i += 1;
                continue;
            }
            let start = i;
            while i < cols && !is_free(i, j) {
                i += 1;
            }
            obstacles.push(ObstacleSpec::fixed(Shape::Rect {
                x: start as f64 * BLOCK,
                y: j as f64 * BLOCK,
                w: (i - start) as f64 * BLOCK,
                h: BLOCK,
            }));
        }
    }
    Environment {
        resolution: FIXTURE_RESOLUTION,
        width: (width / FIXTURE_RESOLUTION).round() as usize,
        height: (height / FIXTURE_RESOLUTION).round() as usize,
        origin: [0.0, 0.0],
        obstacles,
    }
}

fn build_map(walks: &[&[(f64, f64)]], tags: &[(&str, f64, f64)]) -> Result<(PoIGraph, VirtualBlindRoad), RoadError> {
    let tags: Vec<(String, Point2)> = tags.iter().map(|&(l, x, y)| (l.to_owned(), Point2::new(x, y))).collect();
    let mut builder = MapBuilder::new(DEFAULT_MIN_RECORD_SPACING, DEFAULT_SNAP_RADIUS);
    for walk in walks {
        builder.add_recording(&record_walk(walk), &tags)?;
    }
    builder.finish()
}

fn scenario(
    name: &'static str,
    walks: &[&[(f64, f64)]],
    tags: &[(&str, f64, f64)],
    env: Environment,
    from: &str,
    to: &str,
) -> Scenario {
    let (graph, road) = build_map(walks, tags).expect("fixture map is valid");
    Scenario { name, graph, road, env, from: from.into(), to: to.into() }
}

fn with_obstacles(mut s: Scenario, name: &'static str, extra: Vec<ObstacleSpec>) -> Scenario {
    s.name = name;
    s.env.obstacles.extend(extra);
    s
}

fn boxed(cx: f64, cy: f64, side: f64) -> ObstacleSpec {
    ObstacleSpec::fixed(Shape::Rect { x: cx - side / 2.0, y: cy - side / 2.0, w: side, h: side })
}

/// A person stepping back and forth between two points.
fn pacing(a: (f64, f64), b: (f64, f64), r: f64, speed: f64) -> ObstacleSpec {
    ObstacleSpec {
        shape: Shape::Circle { x: a.0, y: a.1, r },
        waypoints: vec![[a.0, a.1], [b.0, b.1]],
        speed,
    }
}

/// Trivial 2 m corridor.
pub fn short_corridor() -> Scenario {
    scenario(
        "short",
        &[&[(1.0, 2.0), (3.0, 2.0)]],
        &[("door", 1.0, 2.0), ("desk", 3.0, 2.0)],
        corridor_env(6.0, 4.0, &[Free(0.5, 5.5, 0.5, 3.5)]),
        "door",
        "desk",
    )
}

/// 22 m straight corridor.
pub fn straight_corridor() -> Scenario {
    scenario(
        "straight",
        &[&[(2.0, 2.0), (24.0, 2.0)]],
        &[("Entrance", 2.0, 2.0), ("Office 101", 9.0, 2.0), ("Printer", 16.0, 2.0), ("Meeting Room", 24.0, 2.0)],
        corridor_env(26.0, 4.0, &[Free(0.5, 25.5, 0.5, 3.5)]),
        "Entrance",
        "Meeting Room",
    )
}

/// 27 m corridor with one left turn.
pub fn l_corridor() -> Scenario {
    scenario(
        "l_turn",
        &[&[(2.0, 2.0), (18.0, 2.0), (18.0, 13.0)]],
        &[("Hall", 2.0, 2.0), ("Lab", 10.0, 2.0), ("Washroom", 18.0, 13.0)],
        corridor_env(20.0, 15.0, &[Free(0.5, 19.5, 0.5, 3.5), Free(16.5, 19.5, 0.5, 14.5)]),
        "Hall",
        "Washroom",
    )
}

/// Corridor loop with four junctions; the 23 m route turns left then right.
pub fn office_loop() -> Scenario {
    scenario(
        "office_loop",
        &[
            &[(2.0, 2.0), (26.0, 2.0)],
            &[(8.0, 2.0), (8.0, 13.0)],
            &[(8.0, 13.0), (20.0, 13.0)],
            &[(20.0, 2.0), (20.0, 13.0)],
        ],
        &[
            ("Lounge", 2.0, 2.0),
            ("J1", 8.0, 2.0),
            ("J2", 20.0, 2.0),
            ("Stairs", 26.0, 2.0),
            ("J3", 8.0, 13.0),
            ("Bar", 14.0, 13.0),
            ("J4", 20.0, 13.0),
        ],
        corridor_env(
            28.0,
            15.0,
            &[
                Free(0.5, 27.5, 0.5, 3.5),
                Free(6.5, 9.5, 0.5, 14.5),
                Free(18.5, 21.5, 0.5, 14.5),
                Free(6.5, 21.5, 11.5, 14.5),
            ],
        ),
        "Lounge",
        "Bar",
    )
}

/// The three obstacle-free routes.
pub fn clear_routes() -> Vec<Scenario> {
    vec![straight_corridor(), l_corridor(), office_loop()]
}

/// The same routes with boxes on or beside the path and one pacing person.
pub fn obstructed_routes() -> Vec<Scenario> {
    vec![
        with_obstacles(
            straight_corridor(),
            "straight_obstacles",
            vec![boxed(7.0, 2.0, 0.6), boxed(12.0, 2.5, 0.6), boxed(18.0, 1.6, 0.6), pacing((21.0, 3.1), (21.0, 2.1), 0.25, 0.3)],
        ),
        with_obstacles(
            l_corridor(),
            "l_turn_obstacles",
            vec![boxed(8.0, 2.0, 0.6), boxed(18.0, 7.0, 0.6), pacing((12.5, 0.9), (12.5, 1.9), 0.25, 0.3)],
        ),
        with_obstacles(
            office_loop(),
            "office_loop_obstacles",
            vec![boxed(5.0, 2.0, 0.6), boxed(8.0, 7.0, 0.6), boxed(11.0, 13.4, 0.6), pacing((16.5, 12.1), (16.5, 13.1), 0.25, 0.3)],
        ),
    ]
}

/// Straight corridor sealed by a wall halfway along.
pub fn walled_corridor() -> Scenario {
    with_obstacles(
        straight_corridor(),
        "walled",
        vec![ObstacleSpec::fixed(Shape::Rect { x: 12.5, y: 0.0, w: 1.0, h: 4.0 })],
    )
}

/// Junction office with a diagonal passage, so the shortest route from `J`
/// to `Room3311` is J, I, K, H, Room3311. Its environment is open floor.
pub fn junction_office() -> Scenario {
    scenario(
        "junction_office",
        &[
            &[(2.0, 12.0), (16.0, 12.0), (16.0, 6.0)],
            &[(2.0, 12.0), (2.0, 6.0)],
            &[(2.0, 6.0), (16.0, 6.0), (16.0, 2.0)],
            &[(6.0, 12.0), (8.0, 6.0)],
        ],
        &[
            ("J", 2.0, 12.0),
            ("I", 6.0, 12.0),
            ("F", 16.0, 12.0),
            ("G", 2.0, 6.0),
            ("K", 8.0, 6.0),
            ("H", 16.0, 6.0),
            ("Room3311", 16.0, 2.0),
        ],
        corridor_env(18.0, 14.0, &[Free(0.5, 17.5, 0.5, 13.5)]),
        "J",
        "Room3311",
    )
}
