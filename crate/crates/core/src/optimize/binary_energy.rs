//! Pseudo-boolean energies with unary and submodular pairwise terms,
//! minimized exactly by one s/t min-cut after integer quantization.

use alloc::vec;
use alloc::vec::Vec;

use crate::entropy_approx::PairwiseEnergyFragment;
use crate::math::round;
use crate::maxflow::FlowGraph;
use crate::{Error, Result};

/// The capacity quantum is this fraction of the sum of all finite
/// capacities, which keeps every cut value below `2^51` in integer units.
pub const QUANTUM_FRACTION: f64 = 1.0 / (1u64 << 50) as f64;

/// Pairwise terms may be this far from submodular and still be accepted
/// (rounding in callers); the excess is clamped to zero.
const SUBMODULAR_SLACK: f64 = 1e-9;

/// `E(x) = constant + Σ_v unary[v][x_v] + Σ_(u,v) cut costs`.
///
/// An edge `(u, v, c_uv, c_vu)` costs `c_uv` when `x_u = 0, x_v = 1` and
/// `c_vu` when `x_u = 1, x_v = 0`. Unary potentials may be `+inf`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BinaryEnergy {
    pub constant: f64,
    unary: Vec<[f64; 2]>,
    edges: Vec<(u32, u32, f64, f64)>,
}

/// Integer version of a [`BinaryEnergy`] in units of `quantum`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedEnergy {
    pub quantum: f64,
    /// Real-valued offset: the energy constant plus per-variable minima.
    pub offset: f64,
    /// `(cost when x = 1, cost when x = 0)` per variable.
    pub tlinks: Vec<(i64, i64)>,
    pub edges: Vec<(u32, u32, i64, i64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub x: Vec<bool>,
    /// Quantized minimum (equals the max-flow value).
    pub quantized_value: i64,
    /// Real-valued energy of `x`.
    pub value: f64,
}

impl BinaryEnergy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vars(n: usize) -> Self {
        Self { constant: 0.0, unary: vec![[0.0; 2]; n], edges: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.unary.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn add_var(&mut self) -> usize {
        self.unary.push([0.0; 2]);
        self.unary.len() - 1
    }

    #[inline]
    pub fn add_unary(&mut self, v: usize, e: [f64; 2]) {
        self.unary[v][0] += e[0];
        self.unary[v][1] += e[1];
    }

    /// Cut costs on an edge; both must be nonnegative.
    pub fn add_edge(&mut self, u: usize, v: usize, c_uv: f64, c_vu: f64) -> Result<()> {
        if u == v || u >= self.num_vars() || v >= self.num_vars() {
            return Err(Error::Invalid("bad pairwise variables"));
        }
        if !(c_uv >= 0.0 && c_vu >= 0.0) {
            return Err(Error::NotSubmodular);
        }
        if c_uv > 0.0 || c_vu > 0.0 {
            self.edges.push((u as u32, v as u32, c_uv, c_vu));
        }
        Ok(())
    }

    /// General pairwise potential `θ[x_u][x_v]`.
    pub fn add_pairwise(&mut self, u: usize, v: usize, t: [[f64; 2]; 2]) -> Result<()> {
        let (a, b, c, d) = (t[0][0], t[0][1], t[1][0], t[1][1]);
        let mut w = b + c - a - d;
        let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs()).max(1.0);
        if w < 0.0 {
            if w < -SUBMODULAR_SLACK * scale {
                return Err(Error::NotSubmodular);
            }
            w = 0.0;
        }
        // θ = A + (C - A) x_u + (D - C) x_v + w (1 - x_u) x_v
        self.constant += a;
        self.add_unary(u, [0.0, c - a]);
        self.add_unary(v, [0.0, d - c]);
        self.add_edge(u, v, w, 0.0)
    }

    /// Adds a fragment; `var_of` maps element ids to variables. The auxiliary
    /// variable, if any, is created here and returned.
    pub fn add_fragment(&mut self, f: &PairwiseEnergyFragment, var_of: impl Fn(usize) -> usize) -> Result<Option<usize>> {
        if !f.is_submodular() {
            return Err(Error::NotSubmodular);
        }
        self.constant += f.constant;
        for &p in &f.elements {
            self.add_unary(var_of(p), f.element_unary);
        }
        if !f.has_aux {
            return Ok(None);
        }
        let z = self.add_var();
        self.add_unary(z, f.aux_unary);
        let t = f.pairwise;
        let all_zero = t.iter().flatten().all(|&v| v == 0.0);
        if !all_zero {
            for &p in &f.elements {
                self.add_pairwise(z, var_of(p), t)?;
            }
        }
        Ok(Some(z))
    }

    pub fn value(&self, x: &[bool]) -> f64 {
        let mut e = self.constant;
        for (u, x) in self.unary.iter().zip(x) {
            e += u[*x as usize];
        }
        for &(u, v, cuv, cvu) in &self.edges {
            match (x[u as usize], x[v as usize]) {
                (false, true) => e += cuv,
                (true, false) => e += cvu,
                _ => {}
            }
        }
        e
    }

    /// Minimum over the variables after `prefix`, which must not share edges.
    pub fn min_over_rest(&self, prefix: &[bool]) -> Result<f64> {
        let m = prefix.len();
        let mut local = vec![[0.0f64; 2]; self.unary.len() - m];
        let mut e = self.constant;
        for (v, u) in self.unary.iter().enumerate() {
            if v < m {
                e += u[prefix[v] as usize];
            } else {
                local[v - m] = *u;
            }
        }
        for &(u, v, a, b) in &self.edges {
            let (u, v) = (u as usize, v as usize);
            match (u < m, v < m) {
                (true, true) => match (prefix[u], prefix[v]) {
                    (false, true) => e += a,
                    (true, false) => e += b,
                    _ => {}
                },
                (true, false) => {
                    if prefix[u] {
                        local[v - m][0] += b;
                    } else {
                        local[v - m][1] += a;
                    }
                }
                (false, true) => {
                    if prefix[v] {
                        local[u - m][0] += a;
                    } else {
                        local[u - m][1] += b;
                    }
                }
                (false, false) => return Err(Error::Invalid("free variables share an edge")),
            }
        }
        Ok(e + local.iter().map(|l| l[0].min(l[1])).sum::<f64>())
    }

    pub fn quantize(&self) -> QuantizedEnergy {
        let mut offset = self.constant;
        let mut diffs = Vec::with_capacity(self.unary.len());
        let mut total = 0.0f64;
        for u in &self.unary {
            let (d1, d0) = match (u[0].is_finite(), u[1].is_finite()) {
                (true, true) => {
                    let m = u[0].min(u[1]);
                    offset += m;
                    (u[1] - m, u[0] - m)
                }
                (true, false) => {
                    offset += u[0];
                    (f64::INFINITY, 0.0)
                }
                (false, true) => {
                    offset += u[1];
                    (0.0, f64::INFINITY)
                }
                (false, false) => {
                    offset = f64::INFINITY;
                    (0.0, 0.0)
                }
            };
            for c in [d1, d0] {
                if c.is_finite() {
                    total += c;
                }
            }
            diffs.push((d1, d0));
        }
        for e in &self.edges {
            total += e.2 + e.3;
        }
        let quantum = if total > 0.0 { total * QUANTUM_FRACTION } else { 1.0 };
        let q = |c: f64| round(c / quantum) as i64;
        let mut finite_sum: i64 = 0;
        let edges: Vec<(u32, u32, i64, i64)> = self
            .edges
            .iter()
            .map(|&(u, v, a, b)| {
                let (a, b) = (q(a), q(b));
                finite_sum += a + b;
                (u, v, a, b)
            })
            .collect();
        for &(d1, d0) in &diffs {
            for c in [d1, d0] {
                if c.is_finite() {
                    finite_sum += q(c);
                }
            }
        }
        let hard = finite_sum + 1;
        let tlinks = diffs
            .iter()
            .map(|&(d1, d0)| {
                let f = |c: f64| if c.is_finite() { q(c) } else { hard };
                (f(d1), f(d0))
            })
            .collect();
        QuantizedEnergy { quantum, offset, tlinks, edges }
    }

    /// Exact minimizer of the quantized energy.
    pub fn minimize(&self) -> Result<BinarySolution> {
        if self.unary.is_empty() {
            return Ok(BinarySolution { x: Vec::new(), quantized_value: 0, value: self.constant });
        }
        let qe = self.quantize();
        let flow = qe.solve()?;
        let x: Vec<bool> = flow.source_side.iter().map(|&s| !s).collect();
        let value = self.value(&x);
        Ok(BinarySolution { x, quantized_value: flow.flow, value })
    }
}

impl QuantizedEnergy {
    pub fn to_flow_graph(&self) -> Result<FlowGraph> {
        let mut g = FlowGraph::with_capacity(self.tlinks.len(), self.edges.len());
        g.add_nodes(self.tlinks.len())?;
        for (v, &(c1, c0)) in self.tlinks.iter().enumerate() {
            // source side means x = 0: the source link is cut when x = 1
            g.add_tweights(v, c1, c0)?;
        }
        for &(u, v, a, b) in &self.edges {
            g.add_edge(u as usize, v as usize, a, b)?;
        }
        Ok(g)
    }

    pub fn solve(&self) -> Result<crate::maxflow::MaxFlow> {
        Ok(self.to_flow_graph()?.solve())
    }

    pub fn value(&self, x: &[bool]) -> i64 {
        let mut e = 0;
        for (&(c1, c0), &xv) in self.tlinks.iter().zip(x) {
            e += if xv { c1 } else { c0 };
        }
        for &(u, v, a, b) in &self.edges {
            match (x[u as usize], x[v as usize]) {
                (false, true) => e += a,
                (true, false) => e += b,
                _ => {}
            }
        }
        e
    }

    /// Minimum over the variables after `prefix`, which must not share edges.
    pub fn min_over_rest(&self, prefix: &[bool]) -> Result<i64> {
        let m = prefix.len();
        let n = self.tlinks.len();
        let mut local = vec![[0i64; 2]; n - m];
        let mut e = 0;
        for (v, &(c1, c0)) in self.tlinks.iter().enumerate() {
            if v < m {
                e += if prefix[v] { c1 } else { c0 };
            } else {
                local[v - m] = [c0, c1];
            }
        }
        for &(u, v, a, b) in &self.edges {
            let (u, v) = (u as usize, v as usize);
            match (u < m, v < m) {
                (true, true) => match (prefix[u], prefix[v]) {
                    (false, true) => e += a,
                    (true, false) => e += b,
                    _ => {}
                },
                (true, false) => {
                    // u fixed, v free: a when x_v = 1 and x_u = 0; b when x_v = 0 and x_u = 1
                    if prefix[u] {
                        local[v - m][0] += b;
                    } else {
                        local[v - m][1] += a;
                    }
                }
                (false, true) => {
                    if prefix[v] {
                        local[u - m][0] += a;
                    } else {
                        local[u - m][1] += b;
                    }
                }
                (false, false) => return Err(Error::Invalid("free variables share an edge")),
            }
        }
        Ok(e + local.iter().map(|l| l[0].min(l[1])).sum::<i64>())
    }
}
