//! Shortest routes over the PoI graph and their expansion into a dense path.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blind_road::{NodeId, PoIGraph};
use crate::geometry::{resample, GeometryError, Point2, Polyline, COINCIDENT_EPS};

pub const DEFAULT_PATH_SPACING: f64 = 0.25;

/// Largest graph the exhaustive oracle accepts.
pub const BRUTE_FORCE_MAX_NODES: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WayfindingError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("no path from {0} to {1}")]
    NoPath(NodeId, NodeId),
    #[error("graph has {0} nodes; exhaustive search is limited to {BRUTE_FORCE_MAX_NODES}")]
    TooLarge(usize),
    #[error("route step {0}-{1} has no edge")]
    MissingEdge(NodeId, NodeId),
    #[error("edge {0}-{1} segment does not start or end at {0}")]
    Orientation(NodeId, NodeId),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRoute {
    pub node_ids: Vec<NodeId>,
    pub total_cost: f64,
}

/// Dense planned path from the start node to the destination node.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalPath {
    pub points: Polyline,
}

#[derive(Serialize, Deserialize)]
struct PathDoc {
    points: Vec<[f64; 2]>,
}

impl GlobalPath {
    pub fn destination(&self) -> Point2 {
        self.points.last()
    }

    pub fn to_json(&self) -> String {
        let doc = PathDoc { points: self.points.points().iter().map(|p| [p.x, p.y]).collect() };
        serde_json::to_string(&doc).expect("path serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, PathParseError> {
        let doc: PathDoc = serde_json::from_str(s)?;
        let points = Polyline::new(doc.points.iter().map(|&[x, y]| Point2::new(x, y)).collect())?;
        Ok(Self { points })
    }
}

#[derive(Debug, Error)]
pub enum PathParseError {
    #[error("malformed path document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid path: {0}")]
    Geometry(#[from] GeometryError),
}

struct Frontier {
    f: f64,
    g: f64,
    path: Vec<NodeId>,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    // reversed so BinaryHeap pops the smallest (f, path) first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.path.cmp(&self.path))
    }
}

/// A* search with the straight-line distance to the goal as heuristic.
///
/// Equal-cost routes are resolved by comparing their node-id sequences
/// lexicographically, so the result is unique. Frontier entries are ordered by
/// `(f, route)` and a node's label is replaced whenever a cheaper route, or an
/// equally cheap but lexicographically smaller one, reaches it.
pub fn astar(graph: &PoIGraph, start: &NodeId, goal: &NodeId) -> Result<NodeRoute, WayfindingError> {
    graph.node(start).ok_or_else(|| WayfindingError::UnknownNode(start.clone()))?;
    let goal_pos = graph
        .node(goal)
        .ok_or_else(|| WayfindingError::UnknownNode(goal.clone()))?
        .position;
    let h = |id: &NodeId| graph.node(id).expect("known node").position.distance(&goal_pos);

    let mut best: BTreeMap<NodeId, (f64, Vec<NodeId>)> = BTreeMap::new();
    let mut open = BinaryHeap::new();
    best.insert(start.clone(), (0.0, vec![start.clone()]));
    open.push(Frontier { f: h(start), g: 0.0, path: vec![start.clone()] });

    while let Some(Frontier { g, path, .. }) = open.pop() {
        let node = path.last().expect("non-empty").clone();
        match best.get(&node) {
            Some((bg, bp)) if *bg == g && *bp == path => {}
            _ => continue,
        }
        if &node == goal {
            return Ok(NodeRoute { node_ids: path, total_cost: g });
        }
        for edge in graph.incident(&node) {
            let next = edge.other(&node).expect("incident edge");
            if path.contains(next) {
                continue;
            }
            let g2 = g + edge.weight;
            let mut p2 = path.clone();
            p2.push(next.clone());
            let better = match best.get(next) {
                None => true,
                Some((bg, bp)) => g2 < *bg || (g2 == *bg && p2 < *bp),
            };
            if better {
                best.insert(next.clone(), (g2, p2.clone()));
                open.push(Frontier { f: g2 + h(next), g: g2, path: p2 });
            }
        }
    }
    Err(WayfindingError::NoPath(start.clone(), goal.clone()))
}

/// Exhaustive enumeration of simple paths. Test oracle for [`astar`].
pub fn brute_force_shortest(
    graph: &PoIGraph,
    start: &NodeId,
    goal: &NodeId,
) -> Result<NodeRoute, WayfindingError> {
    if graph.nodes().len() > BRUTE_FORCE_MAX_NODES {
        return Err(WayfindingError::TooLarge(graph.nodes().len()));
    }
    for id in [start, goal] {
        graph.node(id).ok_or_else(|| WayfindingError::UnknownNode(id.clone()))?;
    }

    fn dfs(
        graph: &PoIGraph,
        goal: &NodeId,
        path: &mut Vec<NodeId>,
        cost: f64,
        best: &mut Option<(f64, Vec<NodeId>)>,
    ) {
        let node = path.last().expect("non-empty").clone();
        if &node == goal {
            let better = match best {
                None => true,
                Some((bc, bp)) => cost < *bc || (cost == *bc && path < bp),
            };
            if better {
                *best = Some((cost, path.clone()));
            }
            return;
        }
        for edge in graph.incident(&node) {
            let next = edge.other(&node).expect("incident edge");
            if path.contains(next) {
                continue;
            }
            path.push(next.clone());
            dfs(graph, goal, path, cost + edge.weight, best);
            path.pop();
        }
    }

    let mut best = None;
    dfs(graph, goal, &mut vec![start.clone()], 0.0, &mut best);
    best.map(|(total_cost, node_ids)| NodeRoute { node_ids, total_cost })
        .ok_or_else(|| WayfindingError::NoPath(start.clone(), goal.clone()))
}

/// Plans between two labels.
pub fn plan_by_label(graph: &PoIGraph, from: &str, to: &str) -> Result<NodeRoute, WayfindingError> {
    let a = graph
        .node_by_label(from)
        .ok_or_else(|| WayfindingError::UnknownLabel(from.to_string()))?;
    let b = graph
        .node_by_label(to)
        .ok_or_else(|| WayfindingError::UnknownLabel(to.to_string()))?;
    astar(graph, &a.id, &b.id)
}

/// Concatenates the route's road pieces, each oriented away from the previous
/// node, and resamples the result at `path_spacing`.
pub fn expand_path(
    graph: &PoIGraph,
    route: &NodeRoute,
    path_spacing: f64,
) -> Result<GlobalPath, WayfindingError> {
    let first = route
        .node_ids
        .first()
        .ok_or(WayfindingError::Geometry(GeometryError::EmptyPolyline))?;
    let first_pos = graph
        .node(first)
        .ok_or_else(|| WayfindingError::UnknownNode(first.clone()))?
        .position;

    let mut points = vec![first_pos];
    for w in route.node_ids.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let edge = graph
            .edge_between(a, b)
            .ok_or_else(|| WayfindingError::MissingEdge(a.clone(), b.clone()))?;
        let a_pos = graph.node(a).expect("edge endpoint").position;
        let seg = &edge.segment;
        let oriented: Vec<Point2> = if seg.first().distance(&a_pos) <= COINCIDENT_EPS {
            seg.points().to_vec()
        } else if seg.last().distance(&a_pos) <= COINCIDENT_EPS {
            seg.points().iter().rev().copied().collect()
        } else {
            return Err(WayfindingError::Orientation(a.clone(), b.clone()));
        };
        // the junction point is already the last vertex
        points.extend_from_slice(&oriented[1..]);
    }
    let raw = Polyline::from_points_dedup(points)?;
    Ok(GlobalPath { points: resample(&raw, path_spacing)? })
}
