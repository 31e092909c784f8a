//! Neighbor graphs over scattered points.

use std::collections::BTreeSet;

use volbias_core::graph::{gaussian_distance_weight, Edge, GraphKind, NeighborGraph};

/// Neighbors used when the points admit no triangulation.
pub const FALLBACK_NEIGHBORS: usize = 6;

pub struct PointGraph {
    pub graph: NeighborGraph,
    pub warning: Option<String>,
}

fn weighted(points: &[[f64; 2]], pairs: BTreeSet<(usize, usize)>, scale: f64, kind: GraphKind) -> NeighborGraph {
    let edges = pairs
        .into_iter()
        .map(|(p, q)| Edge { p, q, weight: gaussian_distance_weight(points[p], points[q], scale) })
        .collect();
    NeighborGraph::new(points.len(), edges, kind).expect("pairs are distinct and in range")
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Positive when `d` lies inside the circumcircle of the counter-clockwise triangle `abc`.
fn incircle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    let (ax, ay, bx, by, cx, cy) = (a[0] - d[0], a[1] - d[1], b[0] - d[0], b[1] - d[1], c[0] - d[0], c[1] - d[1]);
    (ax * ax + ay * ay) * (bx * cy - by * cx) - (bx * bx + by * by) * (ax * cy - ay * cx) + (cx * cx + cy * cy) * (ax * by - ay * bx)
}

/// Vertex at infinity closing every hull edge into a ghost triangle.
const GHOST: usize = usize::MAX;

/// Delaunay triangles (Bowyer-Watson with ghost triangles) as
/// counter-clockwise index triples. Repeated points are skipped; collinear
/// input gives no triangles.
pub fn delaunay_triangles(points: &[[f64; 2]]) -> Vec<[usize; 3]> {
    let mut seen = std::collections::HashSet::new();
    let mut order: Vec<usize> = (0..points.len()).filter(|&i| seen.insert(points[i].map(f64::to_bits))).collect();
    if order.len() < 3 {
        return Vec::new();
    }
    let (p0, p1) = (points[order[0]], points[order[1]]);
    let Some(third) = (2..order.len()).find(|&k| orient(p0, p1, points[order[k]]) != 0.0) else {
        return Vec::new();
    };
    order.swap(2, third);
    let (a, mut b, mut c) = (order[0], order[1], order[2]);
    if orient(points[a], points[b], points[c]) < 0.0 {
        std::mem::swap(&mut b, &mut c);
    }
    let mut tris: Vec<[usize; 3]> = vec![[a, b, c], [b, a, GHOST], [c, b, GHOST], [a, c, GHOST]];

    let conflicts = |t: &[usize; 3], q: [f64; 2]| {
        if t[2] == GHOST {
            let (u, v) = (points[t[0]], points[t[1]]);
            let o = orient(u, v, q);
            // on the hull edge itself: strictly between its endpoints
            o > 0.0 || (o == 0.0 && (q[0] - u[0]) * (q[0] - v[0]) + (q[1] - u[1]) * (q[1] - v[1]) < 0.0)
        } else {
            incircle(points[t[0]], points[t[1]], points[t[2]], q) > 0.0
        }
    };
    for &p in &order[3..] {
        let q = points[p];
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        tris.retain(|t| {
            let bad = conflicts(t, q);
            if bad {
                boundary.extend([(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]);
            }
            !bad
        });
        // edges shared by two removed triangles appear in both directions
        let edges: std::collections::HashSet<(usize, usize)> = boundary.iter().copied().collect();
        for &(u, v) in &boundary {
            if !edges.contains(&(v, u)) {
                tris.push(match (u, v) {
                    (GHOST, _) => [v, p, GHOST],
                    (_, GHOST) => [p, u, GHOST],
                    _ => [u, v, p],
                });
            }
        }
    }
    tris.retain(|t| t[2] != GHOST);
    tris
}

/// Delaunay edges weighted by `exp(-d²/scale²)`; collinear or too few points
/// fall back to a symmetric k-nearest-neighbor graph with a warning.
pub fn delaunay_graph(points: &[[f64; 2]], scale: f64) -> PointGraph {
    let triangles = delaunay_triangles(points);
    if triangles.is_empty() {
        if points.len() < 2 {
            return PointGraph { graph: NeighborGraph::empty(points.len()), warning: None };
        }
        return PointGraph {
            graph: knn_graph(points, FALLBACK_NEIGHBORS, scale),
            warning: Some(format!("points admit no triangulation; using a {FALLBACK_NEIGHBORS}-nearest-neighbor graph")),
        };
    }
    let mut pairs = BTreeSet::new();
    for t in &triangles {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    // duplicate points are left out of the triangulation; tie them to a twin
    let mut covered = vec![false; points.len()];
    for &(a, b) in &pairs {
        covered[a] = true;
        covered[b] = true;
    }
    for (i, p) in points.iter().enumerate() {
        if !covered[i] {
            if let Some(j) = (0..points.len()).find(|&j| j != i && covered[j] && points[j] == *p) {
                pairs.insert((i.min(j), i.max(j)));
            }
        }
    }
    PointGraph { graph: weighted(points, pairs, scale, GraphKind::Delaunay), warning: None }
}

/// Symmetric k-nearest-neighbor graph; ties broken by index.
pub fn knn_graph(points: &[[f64; 2]], k: usize, scale: f64) -> NeighborGraph {
    let mut pairs = BTreeSet::new();
    for (i, p) in points.iter().enumerate() {
        let mut others: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2), j))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in others.iter().take(k) {
            pairs.insert((i.min(j), i.max(j)));
        }
    }
    weighted(points, pairs, scale, GraphKind::NearestNeighbors)
}
