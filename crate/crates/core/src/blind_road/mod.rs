//! Virtual blind road recording, PoI tagging and the PoI graph.
//!
//! A road is the trail walked once by a sighted guide. Tagging labelled
//! places on it and cutting the trail between consecutive tags yields an
//! undirected graph whose edges carry the road piece they stand for.

mod map_file;

pub use map_file::{load_map, save_map, MapError, MAP_VERSION};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Point2, Polyline, COINCIDENT_EPS};

pub const DEFAULT_MIN_RECORD_SPACING: f64 = 0.1;
pub const DEFAULT_SNAP_RADIUS: f64 = 0.5;

/// Slack allowed between an edge weight and its segment's arc length.
/// Grows with the vertex count because stored coordinates are rounded.
fn weight_tolerance(segment_points: usize) -> f64 {
    1e-6 * (1 + segment_points) as f64
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoadError {
    #[error("label {0:?} is already tagged")]
    DuplicateLabel(String),
    #[error("{label:?} is {distance:.3} m from the road (snap radius {snap_radius} m)")]
    TooFarFromRoad { label: String, distance: f64, snap_radius: f64 },
    #[error("road has {0} points, need at least 2")]
    RoadTooShort(usize),
    #[error("a graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("nodes {0} and {1} share trail index {2}")]
    SharedTrailIndex(NodeId, NodeId, usize),
    #[error("duplicate node id {0}")]
    DuplicateId(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("edge {from}-{to}: {reason}")]
    BadEdge { from: NodeId, to: NodeId, reason: String },
    #[error("label {label:?} positions disagree by {distance:.3} m across recordings")]
    MergeConflict { label: String, distance: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(s: impl Into<String>) -> Self {
        NodeId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn numbered(n: usize) -> Self {
        NodeId(format!("p{n:03}"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A trail recorded as the guide walks. Points closer than `min_spacing` to
/// the previous kept point are discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualBlindRoad {
    points: Vec<Point2>,
    min_spacing: f64,
}

impl VirtualBlindRoad {
    pub fn new(min_spacing: f64) -> Self {
        Self { points: Vec::new(), min_spacing }
    }

    /// Rebuilds a road from stored points without re-applying the spacing
    /// filter.
    pub fn from_points(points: Vec<Point2>, min_spacing: f64) -> Self {
        Self { points, min_spacing }
    }

    pub fn record_point(&mut self, p: Point2) -> bool {
        if !p.is_finite() {
            return false;
        }
        match self.points.last() {
            Some(last) if last.distance(&p) < self.min_spacing => false,
            _ => {
                self.points.push(p);
                true
            }
        }
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min_spacing(&self) -> f64 {
        self.min_spacing
    }

    pub fn trail(&self) -> Result<Polyline, RoadError> {
        if self.points.len() < 2 {
            return Err(RoadError::RoadTooShort(self.points.len()));
        }
        Ok(Polyline::new(self.points.clone())?)
    }

    /// Nearest trail vertex to `p`; ties go to the smaller index.
    pub fn nearest_vertex(&self, p: &Point2) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in self.points.iter().enumerate() {
            let d = v.distance_squared(p);
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, d)| (i, d.sqrt()))
    }

    /// Tags `label` at the trail vertex nearest `position`. `tagged` holds the
    /// nodes already placed, for label uniqueness and id assignment.
    pub fn tag_poi(
        &self,
        tagged: &[PoINode],
        position: Point2,
        label: &str,
        snap_radius: f64,
    ) -> Result<PoINode, RoadError> {
        if tagged.iter().any(|n| n.label == label) {
            return Err(RoadError::DuplicateLabel(label.to_string()));
        }
        let (index, distance) = self
            .nearest_vertex(&position)
            .ok_or(RoadError::RoadTooShort(0))?;
        if distance > snap_radius {
            return Err(RoadError::TooFarFromRoad {
                label: label.to_string(),
                distance,
                snap_radius,
            });
        }
        Ok(PoINode {
            id: NodeId::numbered(tagged.len()),
            label: label.to_string(),
            position: self.points[index],
            trail_index: index,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoINode {
    pub id: NodeId,
    pub label: String,
    pub position: Point2,
    pub trail_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoIEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub segment: Polyline,
    pub weight: f64,
}

impl PoIEdge {
    /// Edge whose weight is the arc length of `segment`.
    pub fn along(from: NodeId, to: NodeId, segment: Polyline) -> Self {
        let weight = segment.total_length();
        Self { from, to, segment, weight }
    }

    pub fn other(&self, id: &NodeId) -> Option<&NodeId> {
        if &self.from == id {
            Some(&self.to)
        } else if &self.to == id {
            Some(&self.from)
        } else {
            None
        }
    }
}

/// Undirected PoI graph. Nodes are kept sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct PoIGraph {
    nodes: Vec<PoINode>,
    edges: Vec<PoIEdge>,
    adjacency: BTreeMap<NodeId, Vec<usize>>,
}

impl PoIGraph {
    /// Validates and indexes a graph.
    ///
    /// Every edge must join two known nodes, start and end exactly on them,
    /// weigh its segment's arc length, and weigh no less than the straight
    /// line between its endpoints (the planner's heuristic relies on it).
    pub fn new(mut nodes: Vec<PoINode>, edges: Vec<PoIEdge>) -> Result<Self, RoadError> {
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        for w in nodes.windows(2) {
            if w[0].id == w[1].id {
                return Err(RoadError::DuplicateId(w[0].id.clone()));
            }
        }
        let mut labels = BTreeSet::new();
        for n in &nodes {
            if !labels.insert(n.label.as_str()) {
                return Err(RoadError::DuplicateLabel(n.label.clone()));
            }
        }

        let mut adjacency: BTreeMap<NodeId, Vec<usize>> =
            nodes.iter().map(|n| (n.id.clone(), Vec::new())).collect();
        let find = |id: &NodeId| nodes.binary_search_by(|n| n.id.cmp(id)).ok().map(|i| &nodes[i]);

        for (k, e) in edges.iter().enumerate() {
            let bad = |reason: String| RoadError::BadEdge {
                from: e.from.clone(),
                to: e.to.clone(),
                reason,
            };
            let a = find(&e.from).ok_or_else(|| RoadError::UnknownNode(e.from.clone()))?;
            let b = find(&e.to).ok_or_else(|| RoadError::UnknownNode(e.to.clone()))?;
            if a.id == b.id {
                return Err(bad("self loop".into()));
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(bad(format!("weight {} not positive", e.weight)));
            }
            let arc = e.segment.total_length();
            if (arc - e.weight).abs() > weight_tolerance(e.segment.len()) {
                return Err(bad(format!("weight {} != segment length {arc}", e.weight)));
            }
            if e.segment.first().distance(&a.position) > COINCIDENT_EPS
                || e.segment.last().distance(&b.position) > COINCIDENT_EPS
            {
                return Err(bad("segment endpoints do not match node positions".into()));
            }
            let chord = a.position.distance(&b.position);
            if e.weight < chord - weight_tolerance(e.segment.len()) {
                return Err(bad(format!("weight {} below straight-line distance {chord}", e.weight)));
            }
            adjacency.get_mut(&e.from).expect("known").push(k);
            adjacency.get_mut(&e.to).expect("known").push(k);
        }
        Ok(Self { nodes, edges, adjacency })
    }

    pub fn nodes(&self) -> &[PoINode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[PoIEdge] {
        &self.edges
    }

    pub fn node(&self, id: &NodeId) -> Option<&PoINode> {
        self.nodes
            .binary_search_by(|n| n.id.cmp(id))
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn node_by_label(&self, label: &str) -> Option<&PoINode> {
        self.nodes.iter().find(|n| n.label == label)
    }

    /// Edges incident to `id`, in insertion order.
    pub fn incident(&self, id: &NodeId) -> impl Iterator<Item = &PoIEdge> {
        self.adjacency
            .get(id)
            .into_iter()
            .flatten()
            .map(move |&k| &self.edges[k])
    }

    /// Cheapest edge directly joining `a` and `b`.
    pub fn edge_between(&self, a: &NodeId, b: &NodeId) -> Option<&PoIEdge> {
        self.incident(a)
            .filter(|e| e.other(a) == Some(b))
            .fold(None, |best: Option<&PoIEdge>, e| match best {
                Some(x) if x.weight <= e.weight => Some(x),
                _ => Some(e),
            })
    }
}

/// Builds the graph for a single road: tagged nodes become vertices and each
/// pair of trail-consecutive nodes is joined by the trail piece between them.
pub fn build_graph(road: &VirtualBlindRoad, nodes: &[PoINode]) -> Result<PoIGraph, RoadError> {
    if nodes.len() < 2 {
        return Err(RoadError::TooFewNodes(nodes.len()));
    }
    let trail = road.trail()?;
    let mut sorted = nodes.to_vec();
    sorted.sort_by_key(|n| n.trail_index);
    for w in sorted.windows(2) {
        if w[0].trail_index == w[1].trail_index {
            return Err(RoadError::SharedTrailIndex(
                w[0].id.clone(),
                w[1].id.clone(),
                w[0].trail_index,
            ));
        }
    }
    let mut edges = Vec::with_capacity(sorted.len() - 1);
    for w in sorted.windows(2) {
        let segment = trail.slice(w[0].trail_index, w[1].trail_index)?;
        edges.push(PoIEdge::along(w[0].id.clone(), w[1].id.clone(), segment));
    }
    PoIGraph::new(sorted, edges)
}

/// Accumulates several recordings into one graph, merging nodes that share a
/// label. The stored road is the concatenation of all recordings; node trail
/// indices refer to it.
#[derive(Debug)]
pub struct MapBuilder {
    snap_radius: f64,
    min_spacing: f64,
    points: Vec<Point2>,
    nodes: Vec<PoINode>,
    edges: Vec<PoIEdge>,
}

impl MapBuilder {
    pub fn new(min_spacing: f64, snap_radius: f64) -> Self {
        Self {
            snap_radius,
            min_spacing,
            points: Vec::new(),
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    /// Tags every `(label, position)` that lies within the snap radius of
    /// `road`, builds that recording's edges and merges them in. Tags farther
    /// than the snap radius are skipped, so one tag list can serve several
    /// recordings. Returns the labels tagged on this recording.
    pub fn add_recording(
        &mut self,
        road: &VirtualBlindRoad,
        tags: &[(String, Point2)],
    ) -> Result<Vec<String>, RoadError> {
        let mut local: Vec<PoINode> = Vec::new();
        for (label, pos) in tags {
            match road.tag_poi(&local, *pos, label, self.snap_radius) {
                Ok(n) => local.push(n),
                Err(RoadError::TooFarFromRoad { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        let graph = build_graph(road, &local)?;
        let offset = self.points.len();

        let mut rename: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        for n in graph.nodes() {
            if let Some(existing) = self.nodes.iter().find(|m| m.label == n.label) {
                let distance = existing.position.distance(&n.position);
                if distance > self.snap_radius {
                    return Err(RoadError::MergeConflict { label: n.label.clone(), distance });
                }
                rename.insert(n.id.clone(), existing.id.clone());
            } else {
                let id = NodeId::numbered(self.nodes.len());
                rename.insert(n.id.clone(), id.clone());
                self.nodes.push(PoINode {
                    id,
                    label: n.label.clone(),
                    position: n.position,
                    trail_index: n.trail_index + offset,
                });
            }
        }
        for e in graph.edges() {
            let from = rename[&e.from].clone();
            let to = rename[&e.to].clone();
            let start = self.position_of(&from);
            let end = self.position_of(&to);
            // snap the cut points onto the merged node positions
            let mut pts = e.segment.points().to_vec();
            let last = pts.len() - 1;
            pts[0] = start;
            pts[last] = end;
            let segment = Polyline::from_points_dedup(pts)?;
            self.edges.push(PoIEdge::along(from, to, segment));
        }
        self.points.extend_from_slice(road.points());
        Ok(graph.nodes().iter().map(|n| n.label.clone()).collect())
    }

    fn position_of(&self, id: &NodeId) -> Point2 {
        self.nodes.iter().find(|n| &n.id == id).expect("merged node").position
    }

    pub fn finish(self) -> Result<(PoIGraph, VirtualBlindRoad), RoadError> {
        let graph = PoIGraph::new(self.nodes, self.edges)?;
        Ok((graph, VirtualBlindRoad::from_points(self.points, self.min_spacing)))
    }
}
