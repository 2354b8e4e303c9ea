#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vroad::blind_road::{NodeId, PoIEdge, PoIGraph, PoINode};
use vroad::geometry::{Point2, Polyline};

pub fn node(id: &str, x: f64, y: f64) -> PoINode {
    PoINode { id: NodeId::new(id), label: id.to_uppercase(), position: Point2::new(x, y), trail_index: 0 }
}

/// Edge from `a` to `b` bowed sideways by `bulge`, so its length is at least
/// the straight-line distance.
pub fn bowed_edge(a: &PoINode, b: &PoINode, bulge: f64) -> PoIEdge {
    let (pa, pb) = (a.position, b.position);
    let c = pa.distance(&pb);
    let mut pts = vec![pa];
    if bulge.abs() > 1e-9 {
        let (nx, ny) = (-(pb.y - pa.y) / c, (pb.x - pa.x) / c);
        let m = pa.lerp(&pb, 0.5);
        pts.push(Point2::new(m.x + nx * bulge, m.y + ny * bulge));
    }
    pts.push(pb);
    PoIEdge::along(a.id.clone(), b.id.clone(), Polyline::new(pts).unwrap())
}

/// Random connected graph with 2..=`max_nodes` nodes: a random spanning tree
/// plus a few extra edges, each bowed by a random amount.
pub fn random_graph(seed: u64, max_nodes: usize) -> PoIGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_nodes);
    let mut nodes: Vec<PoINode> = Vec::new();
    while nodes.len() < n {
        let (x, y) = (rng.random_range(0.0..20.0), rng.random_range(0.0..20.0));
        if nodes.iter().all(|m| m.position.distance(&Point2::new(x, y)) > 0.5) {
            nodes.push(node(&format!("n{}", nodes.len()), x, y));
        }
    }
    let mut pairs = Vec::new();
    for i in 1..n {
        pairs.push((rng.random_range(0..i), i));
    }
    for _ in 0..rng.random_range(0..=n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            pairs.push((a.min(b), a.max(b)));
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(a, b)| {
            let bulge = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(-4.0..4.0) };
            bowed_edge(&nodes[a], &nodes[b], bulge)
        })
        .collect();
    PoIGraph::new(nodes, edges).unwrap()
}

/// Unit-spaced `w × h` lattice with straight unit edges; full of equal-cost
/// routes.
pub fn lattice_graph(w: usize, h: usize) -> PoIGraph {
    let id = |i: usize, j: usize| format!("g{}{}", j, i);
    let mut nodes = Vec::new();
    for j in 0..h {
        for i in 0..w {
            nodes.push(node(&id(i, j), i as f64, j as f64));
        }
    }
    let at = |i: usize, j: usize| nodes[j * w + i].clone();
    let mut edges = Vec::new();
    for j in 0..h {
        for i in 0..w {
            if i + 1 < w {
                edges.push(bowed_edge(&at(i, j), &at(i + 1, j), 0.0));
            }
            if j + 1 < h {
                edges.push(bowed_edge(&at(i, j), &at(i, j + 1), 0.0));
            }
        }
    }
    PoIGraph::new(nodes, edges).unwrap()
}

/// Every simple path from `start` to `goal`, enumerated depth first. Returns
/// the cheapest, ties broken by the lexicographically smallest id sequence.
pub fn enumerate_shortest(g: &PoIGraph, start: &NodeId, goal: &NodeId) -> Option<(f64, Vec<NodeId>)> {
    fn go(
        g: &PoIGraph,
        goal: &NodeId,
        path: &mut Vec<NodeId>,
        cost: f64,
        best: &mut Option<(f64, Vec<NodeId>)>,
    ) {
        let here = path.last().unwrap().clone();
        if &here == goal {
            let better = match best {
                None => true,
                Some((c, p)) => cost < *c || (cost == *c && path < p),
            };
            if better {
                *best = Some((cost, path.clone()));
            }
            return;
        }
        for e in g.edges() {
            let next = if e.from == here {
                &e.to
            } else if e.to == here {
                &e.from
            } else {
                continue;
            };
            if path.contains(next) {
                continue;
            }
            path.push(next.clone());
            go(g, goal, path, cost + e.weight, best);
            path.pop();
        }
    }
    let mut best = None;
    go(g, goal, &mut vec![start.clone()], 0.0, &mut best);
    best
}

/// Bearing of `(dx, dy)` in `[0, 2π)` found without `atan2`: pick the best of
/// 720 sampled directions, then bisect on the sign of the cross product.
pub fn bearing_by_search(dx: f64, dy: f64) -> f64 {
    use std::f64::consts::TAU;
    let dot = |phi: f64| phi.cos() * dx + phi.sin() * dy;
    let cross = |phi: f64| phi.cos() * dy - phi.sin() * dx;
    let n = 720;
    let step = TAU / n as f64;
    let k = (0..n).max_by(|a, b| dot(*a as f64 * step).total_cmp(&dot(*b as f64 * step))).unwrap();
    let (mut lo, mut hi) = ((k as f64 - 1.0) * step, (k as f64 + 1.0) * step);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cross(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).rem_euclid(TAU)
}

/// Shortest angular distance between two bearings.
pub fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

/// Direction choice evaluated by scoring every candidate and sorting:
/// off-path or misaligned users get the candidate closest to the sub-goal
/// bearing, everyone else the straightest; ties go to the smaller turn, then
/// to the left.
pub fn best_direction_exhaustive(
    d: &[f64],
    exp: f64,
    heading: f64,
    deviation: f64,
    cfg: &vroad::route_following::FollowerConfig,
) -> Option<f64> {
    use std::f64::consts::{PI, TAU};
    let wrap = |a: f64| if a > PI { a - TAU } else if a <= -PI { a + TAU } else { a };
    let off = wrap(exp - heading);
    let correcting = deviation > cfg.deviation_threshold || off.abs() >= cfg.heading_threshold;
    let mut scored: Vec<(f64, f64, bool, f64)> = d
        .iter()
        .map(|&t| {
            let cost = if correcting { wrap(off - t).abs() } else { t.abs() };
            (cost, t.abs(), t < 0.0, t)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    scored.first().map(|s| s.3)
}
