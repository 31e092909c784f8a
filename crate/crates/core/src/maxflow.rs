//! Exact s/t max-flow / min-cut on sparse graphs with integer capacities.
//!
//! Nodes carry terminal capacities (source and sink t-links) and are joined by
//! directed edge pairs. [`FlowGraph::solve`] runs Dinic's algorithm and reports
//! the canonical minimum cut: a node is on the source side iff it is reachable
//! from the source in the final residual graph.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct FlowGraph {
    source_caps: Vec<i64>,
    sink_caps: Vec<i64>,
    edges: Vec<(u32, u32, i64, i64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxFlow {
    pub flow: i64,
    /// `true` for nodes on the source side of the minimum cut.
    pub source_side: Vec<bool>,
}

impl FlowGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(nodes: usize, edges: usize) -> Self {
        Self {
            source_caps: Vec::with_capacity(nodes),
            sink_caps: Vec::with_capacity(nodes),
            edges: Vec::with_capacity(edges),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.source_caps.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Adds `n` fresh nodes and returns their ids.
    pub fn add_nodes(&mut self, n: usize) -> Result<Range<usize>> {
        if n == 0 {
            return Err(Error::ZeroNodes);
        }
        let start = self.source_caps.len();
        self.source_caps.resize(start + n, 0);
        self.sink_caps.resize(start + n, 0);
        Ok(start..start + n)
    }

    /// Adds terminal capacities; repeated calls accumulate.
    pub fn add_tweights(&mut self, node: usize, cap_source: i64, cap_sink: i64) -> Result<()> {
        self.check_node(node)?;
        for c in [cap_source, cap_sink] {
            if c < 0 {
                return Err(Error::NegativeCapacity(c));
            }
        }
        self.source_caps[node] += cap_source;
        self.sink_caps[node] += cap_sink;
        Ok(())
    }

    /// Adds an edge `u → v` with capacity `cap` and `v → u` with `rev_cap`.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: i64, rev_cap: i64) -> Result<()> {
        self.check_node(u)?;
        self.check_node(v)?;
        if u == v {
            return Err(Error::SelfEdge(u));
        }
        for c in [cap, rev_cap] {
            if c < 0 {
                return Err(Error::NegativeCapacity(c));
            }
        }
        if cap > 0 || rev_cap > 0 {
            self.edges.push((u as u32, v as u32, cap, rev_cap));
        }
        Ok(())
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.source_caps.len() {
            Err(Error::InvalidNode(node))
        } else {
            Ok(())
        }
    }

    pub fn solve(&self) -> MaxFlow {
        Dinic::build(self).run()
    }
}

struct Dinic {
    num_nodes: usize,
    source: usize,
    sink: usize,
    head: Vec<usize>,
    to: Vec<u32>,
    cap: Vec<i64>,
    rev: Vec<usize>,
    base_flow: i64,
}

impl Dinic {
    fn build(g: &FlowGraph) -> Self {
        let n = g.num_nodes();
        let (source, sink) = (n, n + 1);
        let total = n + 2;

        // Flow pushed straight through s → v → t needs no search.
        let mut base_flow = 0;
        let mut arcs: Vec<(u32, u32, i64, i64)> = Vec::with_capacity(g.edges.len() + n);
        for v in 0..n {
            let m = g.source_caps[v].min(g.sink_caps[v]);
            base_flow += m;
            let (cs, ct) = (g.source_caps[v] - m, g.sink_caps[v] - m);
            if cs > 0 {
                arcs.push((source as u32, v as u32, cs, 0));
            }
            if ct > 0 {
                arcs.push((v as u32, sink as u32, ct, 0));
            }
        }
        arcs.extend_from_slice(&g.edges);

        let mut degree = vec![0usize; total + 1];
        for &(u, v, _, _) in &arcs {
            degree[u as usize + 1] += 1;
            degree[v as usize + 1] += 1;
        }
        for i in 0..total {
            degree[i + 1] += degree[i];
        }
        let head = degree.clone();
        let mut fill = degree;
        let m = arcs.len() * 2;
        let mut to = vec![0u32; m];
        let mut cap = vec![0i64; m];
        let mut rev_of = vec![0usize; m];
        for &(u, v, c, rc) in &arcs {
            let (iu, iv) = (fill[u as usize], fill[v as usize]);
            fill[u as usize] += 1;
            fill[v as usize] += 1;
            to[iu] = v;
            cap[iu] = c;
            to[iv] = u;
            cap[iv] = rc;
            rev_of[iu] = iv;
            rev_of[iv] = iu;
        }
        Self { num_nodes: total, source, sink, head, to, cap, rev: rev_of, base_flow }
    }

    fn run(mut self) -> MaxFlow {
        let rev = core::mem::take(&mut self.rev);
        let n = self.num_nodes;
        let mut level = vec![-1i32; n];
        let mut iter = vec![0usize; n];
        let mut flow = self.base_flow;
        let mut queue = VecDeque::new();
        let mut path: Vec<usize> = Vec::new();
        loop {
            level.iter_mut().for_each(|l| *l = -1);
            level[self.source] = 0;
            queue.clear();
            queue.push_back(self.source);
            while let Some(u) = queue.pop_front() {
                for a in self.head[u]..self.head[u + 1] {
                    let v = self.to[a] as usize;
                    if self.cap[a] > 0 && level[v] < 0 {
                        level[v] = level[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            if level[self.sink] < 0 {
                break;
            }
            iter.copy_from_slice(&self.head[..n]);
            // iterative blocking-flow search
            path.clear();
            let mut u = self.source;
            loop {
                if u == self.sink {
                    let bottleneck = path.iter().map(|&a| self.cap[a]).min().unwrap_or(0);
                    let mut cut_at = path.len();
                    for (i, &a) in path.iter().enumerate() {
                        self.cap[a] -= bottleneck;
                        self.cap[rev[a]] += bottleneck;
                        if self.cap[a] == 0 && cut_at == path.len() {
                            cut_at = i;
                        }
                    }
                    flow += bottleneck;
                    path.truncate(cut_at);
                    u = match path.last() {
                        Some(&a) => self.to[a] as usize,
                        None => self.source,
                    };
                    continue;
                }
                let mut advanced = false;
                while iter[u] < self.head[u + 1] {
                    let a = iter[u];
                    let v = self.to[a] as usize;
                    if self.cap[a] > 0 && level[v] == level[u] + 1 {
                        path.push(a);
                        u = v;
                        advanced = true;
                        break;
                    }
                    iter[u] += 1;
                }
                if advanced {
                    continue;
                }
                // dead end
                level[u] = -1;
                match path.pop() {
                    Some(a) => {
                        u = self.to[rev[a]] as usize;
                        iter[u] += 1;
                    }
                    None => break,
                }
            }
        }

        let mut reach = vec![false; n];
        reach[self.source] = true;
        queue.clear();
        queue.push_back(self.source);
        while let Some(u) = queue.pop_front() {
            for a in self.head[u]..self.head[u + 1] {
                let v = self.to[a] as usize;
                if self.cap[a] > 0 && !reach[v] {
                    reach[v] = true;
                    queue.push_back(v);
                }
            }
        }
        reach.truncate(n - 2);
        MaxFlow { flow, source_side: reach }
    }
}
