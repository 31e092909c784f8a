//! Random instances and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use volbias_core::energy::{CostTable, EnergyConfig, Labeling, TargetWeights, WeightMode, OUTLIER};
use volbias_core::graph::{Edge, GraphKind, NeighborGraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `-c ln(c / n)`, written out independently of the library.
pub fn g(c: f64, n: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        -c * (c / n).ln()
    }
}

/// Piecewise-linear interpolation of `g` through `breakpoints`.
pub fn interpolant(breakpoints: &[usize], c: f64, n: f64) -> f64 {
    for w in breakpoints.windows(2) {
        let (a, b) = (w[0] as f64, w[1] as f64);
        if c >= a && c <= b {
            let t = (c - a) / (b - a);
            return (1.0 - t) * g(a, n) + t * g(b, n);
        }
    }
    panic!("cardinality {c} outside the breakpoints");
}

pub fn random_simplex(r: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| r.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

pub fn random_weights(r: &mut ChaCha8Rng, k: usize) -> TargetWeights {
    let w = random_simplex(r, k);
    let s: f64 = w.iter().sum();
    TargetWeights::new(w.iter().map(|v| v / s).collect()).unwrap()
}

pub fn random_graph(r: &mut ChaCha8Rng, n: usize, density: f64) -> NeighborGraph {
    let mut edges = Vec::new();
    for p in 0..n {
        for q in p + 1..n {
            if r.random_bool(density) {
                edges.push(Edge { p, q, weight: r.random_range(0.0..1.5) });
            }
        }
    }
    NeighborGraph::new(n, edges, GraphKind::Custom).unwrap()
}

pub fn random_labeling(r: &mut ChaCha8Rng, n: usize, k: usize, outliers: bool) -> Labeling {
    let labels = (0..n)
        .map(|_| {
            if outliers && r.random_bool(0.2) {
                OUTLIER
            } else {
                r.random_range(0..k)
            }
        })
        .collect();
    Labeling::new(labels, k).unwrap()
}

pub struct Instance {
    pub costs: CostTable,
    pub graph: NeighborGraph,
    pub cfg: EnergyConfig,
    pub outliers: bool,
}

/// Random unaries, Potts weights, label cost and volume mode.
pub fn random_instance(r: &mut ChaCha8Rng, n: usize, k: usize, outliers: bool) -> Instance {
    let costs: Vec<f64> = (0..n * k).map(|_| r.random_range(-1.0..4.0)).collect();
    let outlier_cost = r.random_range(0.0..3.0);
    let costs = CostTable::from_raw(n, k, costs, outlier_cost).unwrap();
    let graph = random_graph(r, n, 0.35);
    let outliers_in_volume = outliers && r.random_bool(0.5);
    let cats = k + outliers_in_volume as usize;
    let weight_mode = match r.random_range(0..4) {
        0 => WeightMode::Uniform,
        1 => WeightMode::Fixed(random_weights(r, cats)),
        _ => WeightMode::Reestimated,
    };
    let cfg = EnergyConfig {
        lambda: r.random_range(0.0..2.0),
        gamma: r.random_range(0.2..2.0),
        label_cost: if r.random_bool(0.5) { r.random_range(0.0..3.0) } else { 0.0 },
        outlier_cost,
        weight_mode,
        outliers_in_volume,
    };
    Instance { costs, graph, cfg, outliers }
}

/// Every labeling of `n` elements with labels `0..k` (plus the outlier label).
pub fn all_labelings(n: usize, k: usize, outliers: bool) -> Vec<Vec<usize>> {
    let alphabet: Vec<usize> = (0..k).chain(outliers.then_some(OUTLIER)).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                alphabet.iter().map(move |&l| {
                    let mut v = prefix.clone();
                    v.push(l);
                    v
                })
            })
            .collect();
    }
    out
}

/// Direct evaluation of the objective the moves minimize, for a labeling
/// reached from `s_t` by expanding `alpha`: exact data, Potts and label costs,
/// linear volume costs, or the interpolated entropy per category plus the
/// chord of `γ·n ln(n/N)` over the inlier counts the move can reach.
pub fn move_surrogate(inst: &Instance, breakpoints: &[usize], s_t: &Labeling, alpha: Option<usize>, s: &Labeling) -> f64 {
    let n = s.len();
    let nf = n as f64;
    let cfg = &inst.cfg;
    let k = inst.costs.num_labels;
    let mut e = 0.0;
    for p in 0..n {
        e += inst.costs.cost(p, s.get(p));
    }
    for edge in &inst.graph.edges {
        if s.get(edge.p) != s.get(edge.q) {
            e += cfg.lambda * edge.weight;
        }
    }
    let counts = s.counts();
    e += cfg.label_cost * counts.iter().filter(|&&c| c > 0).count() as f64;
    let outl = s.labels().iter().filter(|&&l| l == OUTLIER).count();
    let mut cats = counts.clone();
    if cfg.outliers_in_volume {
        cats.push(outl);
    }
    match &cfg.weight_mode {
        WeightMode::Uniform => e += cats.iter().sum::<usize>() as f64 * (cats.len() as f64).ln(),
        WeightMode::Fixed(w) => {
            for (c, w) in cats.iter().zip(w.as_slice()) {
                e -= *c as f64 * w.ln();
            }
        }
        WeightMode::Reestimated => {
            for &c in &cats {
                e += cfg.gamma * interpolant(breakpoints, c as f64, nf);
            }
            if !cfg.outliers_in_volume {
                let rho = |m: f64| if m == 0.0 { 0.0 } else { m * (m / nf).ln() };
                let n_in = (n - outl) as f64;
                match alpha {
                    None => e += cfg.gamma * rho(n_in),
                    Some(a) => {
                        let n_t = s_t.labels().iter().filter(|&&l| l != OUTLIER).count() as f64;
                        let movable = s_t
                            .labels()
                            .iter()
                            .filter(|&&l| l != a && ((l == OUTLIER) != (a == OUTLIER)))
                            .count() as f64;
                        let (lo, hi) = if a == OUTLIER { (n_t - movable, n_t) } else { (n_t, n_t + movable) };
                        let chord = if hi > lo { rho(lo) + (rho(hi) - rho(lo)) * (n_in - lo) / (hi - lo) } else { rho(n_t) };
                        e += cfg.gamma * chord;
                    }
                }
            }
        }
    }
    let _ = k;
    e
}

/// Exact energy, written out independently of the library.
pub fn exact_energy(inst: &Instance, s: &Labeling) -> f64 {
    let cfg = &inst.cfg;
    let n = s.len();
    let mut e = 0.0;
    for p in 0..n {
        e += inst.costs.cost(p, s.get(p));
    }
    for edge in &inst.graph.edges {
        if s.get(edge.p) != s.get(edge.q) {
            e += cfg.lambda * edge.weight;
        }
    }
    let counts = s.counts();
    e += cfg.label_cost * counts.iter().filter(|&&c| c > 0).count() as f64;
    let mut cats = counts;
    if cfg.outliers_in_volume {
        cats.push(s.labels().iter().filter(|&&l| l == OUTLIER).count());
    }
    let total: usize = cats.iter().sum();
    match &cfg.weight_mode {
        WeightMode::Uniform => e += total as f64 * (cats.len() as f64).ln(),
        WeightMode::Fixed(w) => {
            for (c, w) in cats.iter().zip(w.as_slice()) {
                e -= *c as f64 * w.ln();
            }
        }
        WeightMode::Reestimated => {
            for &c in &cats {
                e += cfg.gamma * g(c as f64, total as f64);
            }
        }
    }
    e
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
