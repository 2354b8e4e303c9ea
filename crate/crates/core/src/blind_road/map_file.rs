//! JSON map documents.
//!
//! ```json
//! { "version": 1,
//!   "road":  { "spacing": 0.1, "points": [[x, y], ...] },
//!   "nodes": [ { "id": "p000", "label": "bar", "index": 12, "x": 1.2, "y": 0.0 } ],
//!   "edges": [ { "from": "p000", "to": "p001", "weight": 4.5, "segment": [[x, y], ...] } ] }
//! ```
//!
//! Numbers are written with at most 9 significant digits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{NodeId, PoIEdge, PoIGraph, PoINode, RoadError, VirtualBlindRoad};
use crate::geometry::{Point2, Polyline};

pub const MAP_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("malformed map document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported map version {0}, expected {MAP_VERSION}")]
    Version(String),
    #[error("invalid map: {0}")]
    Invalid(#[from] RoadError),
    #[error("invalid map: {0}")]
    Field(String),
}

#[derive(Serialize, Deserialize)]
struct MapDoc {
    version: u64,
    road: RoadDoc,
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
}

#[derive(Serialize, Deserialize)]
struct RoadDoc {
    spacing: f64,
    points: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: String,
    label: String,
    index: usize,
    x: f64,
    y: f64,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    from: String,
    to: String,
    weight: f64,
    segment: Vec<[f64; 2]>,
}

/// Rounds to 9 significant decimal digits.
pub(crate) fn sig9(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.8e}").parse().expect("formatted float parses")
}

fn pt(p: &Point2) -> [f64; 2] {
    [sig9(p.x), sig9(p.y)]
}

pub fn save_map(graph: &PoIGraph, road: &VirtualBlindRoad) -> String {
    let doc = MapDoc {
        version: MAP_VERSION,
        road: RoadDoc {
            spacing: sig9(road.min_spacing()),
            points: road.points().iter().map(pt).collect(),
        },
        nodes: graph
            .nodes()
            .iter()
            .map(|n| NodeDoc {
                id: n.id.0.clone(),
                label: n.label.clone(),
                index: n.trail_index,
                x: sig9(n.position.x),
                y: sig9(n.position.y),
            })
            .collect(),
        edges: graph
            .edges()
            .iter()
            .map(|e| EdgeDoc {
                from: e.from.0.clone(),
                to: e.to.0.clone(),
                weight: sig9(e.weight),
                segment: e.segment.points().iter().map(pt).collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("map document serializes")
}

pub fn load_map(document: &str) -> Result<(PoIGraph, VirtualBlindRoad), MapError> {
    let value: serde_json::Value = serde_json::from_str(document)?;
    match value.get("version") {
        Some(v) if v.as_u64() == Some(MAP_VERSION) => {}
        Some(v) => return Err(MapError::Version(v.to_string())),
        None => return Err(MapError::Version("<missing>".into())),
    }
    let doc: MapDoc = serde_json::from_value(value)?;

    let points: Vec<Point2> = doc.road.points.iter().map(|&[x, y]| Point2::new(x, y)).collect();
    if points.len() < 2 {
        return Err(RoadError::RoadTooShort(points.len()).into());
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(MapError::Field("road.points contains a non-finite coordinate".into()));
    }
    if !(doc.road.spacing > 0.0) {
        return Err(MapError::Field(format!("road.spacing {} not positive", doc.road.spacing)));
    }
    let road = VirtualBlindRoad::from_points(points, doc.road.spacing);

    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for n in doc.nodes {
        let position = Point2::new(n.x, n.y);
        match road.points().get(n.index) {
            Some(p) if *p == position => {}
            Some(_) => {
                return Err(MapError::Field(format!(
                    "nodes[{}].index {} does not match its position",
                    n.id, n.index
                )))
            }
            None => {
                return Err(MapError::Field(format!(
                    "nodes[{}].index {} out of range",
                    n.id, n.index
                )))
            }
        }
        nodes.push(PoINode { id: NodeId(n.id), label: n.label, position, trail_index: n.index });
    }

    let mut edges = Vec::with_capacity(doc.edges.len());
    for e in doc.edges {
        let segment = Polyline::new(e.segment.iter().map(|&[x, y]| Point2::new(x, y)).collect())
            .map_err(|err| MapError::Field(format!("edges[{}-{}].segment: {err}", e.from, e.to)))?;
        edges.push(PoIEdge { from: NodeId(e.from), to: NodeId(e.to), segment, weight: e.weight });
    }
    Ok((PoIGraph::new(nodes, edges)?, road))
}
