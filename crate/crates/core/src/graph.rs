//! Weighted neighborhood systems for the Potts smoothness term.

use alloc::vec::Vec;

use crate::math::{exp, sq, sqrt};
use crate::model::Datum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Grid4,
    Grid8,
    Delaunay,
    NearestNeighbors,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub p: usize,
    pub q: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    pub num_elements: usize,
    pub edges: Vec<Edge>,
    pub kind: GraphKind,
}

impl NeighborGraph {
    pub fn new(num_elements: usize, edges: Vec<Edge>, kind: GraphKind) -> Result<Self> {
        for e in &edges {
            if e.p == e.q {
                return Err(Error::Invalid("self-loop in neighbor graph"));
            }
            if e.p >= num_elements || e.q >= num_elements {
                return Err(Error::Invalid("edge references a missing element"));
            }
            if !(e.weight >= 0.0) || !e.weight.is_finite() {
                return Err(Error::Invalid("edge weights must be finite and nonnegative"));
            }
        }
        Ok(Self { num_elements, edges, kind })
    }

    /// A graph without edges.
    pub fn empty(num_elements: usize) -> Self {
        Self { num_elements, edges: Vec::new(), kind: GraphKind::Custom }
    }

    /// 4-connected grid with unit weights.
    pub fn grid4(width: usize, height: usize) -> Self {
        let mut edges = Vec::new();
        for y in 0..height {
            for x in 0..width {
                let p = y * width + x;
                if x + 1 < width {
                    edges.push(Edge { p, q: p + 1, weight: 1.0 });
                }
                if y + 1 < height {
                    edges.push(Edge { p, q: p + width, weight: 1.0 });
                }
            }
        }
        Self { num_elements: width * height, edges, kind: GraphKind::Grid4 }
    }

    /// 8-connected grid with contrast-sensitive weights
    /// `exp(-β‖I_p - I_q‖²) / dist(p, q)`, where `β = 1 / (2⟨‖I_p - I_q‖²⟩)`.
    pub fn grid8_contrast(width: usize, height: usize, pixels: &[Datum]) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Invalid("pixel count does not match grid size"));
        }
        let offsets: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (-1, 1)];
        let mut pairs = Vec::new();
        for y in 0..height as isize {
            for x in 0..width as isize {
                for &(dx, dy) in &offsets {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                        continue;
                    }
                    let p = (y as usize) * width + x as usize;
                    let q = (ny as usize) * width + nx as usize;
                    let dist = if dx != 0 && dy != 0 { core::f64::consts::SQRT_2 } else { 1.0 };
                    pairs.push((p, q, dist, color_dist_sq(&pixels[p], &pixels[q])?));
                }
            }
        }
        let mean = if pairs.is_empty() {
            0.0
        } else {
            pairs.iter().map(|t| t.3).sum::<f64>() / pairs.len() as f64
        };
        let beta = if mean > 0.0 { 1.0 / (2.0 * mean) } else { 0.0 };
        let edges = pairs
            .into_iter()
            .map(|(p, q, dist, d2)| Edge { p, q, weight: exp(-beta * d2) / dist })
            .collect();
        Ok(Self { num_elements: width * height, edges, kind: GraphKind::Grid8 })
    }

    /// Adjacency lists `(neighbor, weight)` per element.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = alloc::vec![Vec::new(); self.num_elements];
        for e in &self.edges {
            adj[e.p].push((e.q, e.weight));
            adj[e.q].push((e.p, e.weight));
        }
        adj
    }
}

fn color_dist_sq(a: &Datum, b: &Datum) -> Result<f64> {
    match (a, b) {
        (Datum::Gray(u), Datum::Gray(v)) => Ok((u - v) * (u - v)),
        (Datum::Color(u), Datum::Color(v)) => Ok((0..3).map(|i| (u[i] - v[i]) * (u[i] - v[i])).sum()),
        (Datum::Point(u), Datum::Point(v)) => Ok(sq(u[0] - v[0]) + sq(u[1] - v[1])),
        _ => Err(Error::TypeMismatch),
    }
}

/// Smoothness weight `exp(-d²/s²)` for two points at distance `d`.
pub fn gaussian_distance_weight(a: [f64; 2], b: [f64; 2], scale: f64) -> f64 {
    let d2 = sq(a[0] - b[0]) + sq(a[1] - b[1]);
    exp(-d2 / (scale * scale))
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    sqrt(sq(a[0] - b[0]) + sq(a[1] - b[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn grid_edge_counts() {
        assert_eq!(NeighborGraph::grid4(2, 2).edges.len(), 4);
        assert_eq!(NeighborGraph::grid4(3, 2).edges.len(), 7);
        let px = vec![Datum::Gray(0.5); 9];
        let g = NeighborGraph::grid8_contrast(3, 3, &px).unwrap();
        // 6 horizontal + 6 vertical + 4 + 4 diagonal
        assert_eq!(g.edges.len(), 20);
        assert!(g.edges.iter().all(|e| e.weight == 1.0 || (e.weight - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15));
    }

    #[test]
    fn contrast_weights_drop_across_edges() {
        let px: Vec<Datum> = (0..16).map(|i| Datum::Gray(if i % 4 < 2 { 0.0 } else { 1.0 })).collect();
        let g = NeighborGraph::grid8_contrast(4, 4, &px).unwrap();
        let w = |p: usize, q: usize| g.edges.iter().find(|e| e.p == p && e.q == q).unwrap().weight;
        assert!(w(0, 1) > w(1, 2));
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(NeighborGraph::new(2, vec![Edge { p: 0, q: 0, weight: 1.0 }], GraphKind::Custom).is_err());
        assert!(NeighborGraph::new(2, vec![Edge { p: 0, q: 2, weight: 1.0 }], GraphKind::Custom).is_err());
        assert!(NeighborGraph::new(2, vec![Edge { p: 0, q: 1, weight: -1.0 }], GraphKind::Custom).is_err());
    }
}
