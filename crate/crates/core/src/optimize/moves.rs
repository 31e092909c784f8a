//! Graph-cut moves: the global binary cut and α-expansion, each built as a
//! [`BinaryEnergy`] over unary, Potts and triangle-term fragments.

use alloc::vec;
use alloc::vec::Vec;

use super::binary_energy::{BinaryEnergy, BinarySolution};
use crate::energy::{scaled_entropy, CostTable, EnergyBreakdown, EnergyConfig, Labeling, WeightMode, OUTLIER};
use crate::entropy_approx::{build_approximation, reduce_binary, reduce_expansion, PolygonalApprox, TriangleTerm};
use crate::graph::NeighborGraph;
use crate::math::{ln, sat_add, xlogx};
use crate::{Error, Result};

/// How the volume part of the energy enters the graph.
#[derive(Debug, Clone, PartialEq)]
pub enum VolumeSurrogate {
    /// Cost per element of each volume category (`-ln w_k`, possibly scaled
    /// and possibly `+inf`).
    Linear(Vec<f64>),
    /// `γ·|Ω_in|·H`, approximated by γ-scaled triangle terms in moves.
    Entropy { gamma: f64, approx: PolygonalApprox },
}

/// Unary costs, neighborhood and energy settings for one labeling problem.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub costs: &'a CostTable,
    pub graph: &'a NeighborGraph,
    pub config: &'a EnergyConfig,
    pub volume: VolumeSurrogate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    BinaryGlobal,
    Expansion(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Move {
    pub kind: MoveKind,
    pub labeling: Labeling,
    pub energy_before: f64,
    pub energy_after: f64,
    pub accepted: bool,
}

/// An expansion move as a binary energy; variable `i < elements.len()` is
/// `x_p` for `p = elements[i]`, later variables are auxiliary.
#[derive(Debug, Clone)]
pub struct ExpansionEnergy {
    pub alpha: usize,
    pub energy: BinaryEnergy,
    pub elements: Vec<usize>,
}

impl ExpansionEnergy {
    pub fn apply(&self, s_t: &Labeling, x: &[bool]) -> Labeling {
        let mut s = s_t.clone();
        for (i, &p) in self.elements.iter().enumerate() {
            if x[i] {
                s.set(p, self.alpha);
            }
        }
        s
    }
}

impl<'a> Problem<'a> {
    /// Problem for the energy selected by `config.weight_mode`.
    pub fn new(costs: &'a CostTable, graph: &'a NeighborGraph, config: &'a EnergyConfig, num_breakpoints: usize) -> Result<Self> {
        config.validate()?;
        check_sizes(costs, graph)?;
        let cats = num_categories(costs.num_labels, config);
        let volume = match &config.weight_mode {
            WeightMode::Uniform => VolumeSurrogate::Linear(vec![ln(cats as f64); cats]),
            WeightMode::Fixed(w) => {
                if w.len() != cats {
                    return Err(Error::Invalid("weights do not match the number of volume categories"));
                }
                VolumeSurrogate::Linear(w.as_slice().iter().map(|&v| -ln(v)).collect())
            }
            WeightMode::Reestimated => VolumeSurrogate::Entropy {
                gamma: config.gamma,
                approx: build_approximation(costs.num_elements, num_breakpoints)?.scaled(config.gamma),
            },
        };
        Ok(Self { costs, graph, config, volume })
    }

    /// Problem with a per-category linear cost `-scale·ln w_k`; zero weights
    /// give `+inf`, which freezes the category.
    pub fn with_weights(costs: &'a CostTable, graph: &'a NeighborGraph, config: &'a EnergyConfig, weights: &[f64], scale: f64) -> Result<Self> {
        config.validate()?;
        check_sizes(costs, graph)?;
        if weights.len() != num_categories(costs.num_labels, config) {
            return Err(Error::Invalid("weights do not match the number of volume categories"));
        }
        let lin = weights.iter().map(|&w| if w > 0.0 { -scale * ln(w) } else { f64::INFINITY }).collect();
        Ok(Self { costs, graph, config, volume: VolumeSurrogate::Linear(lin) })
    }

    pub fn num_elements(&self) -> usize {
        self.costs.num_elements
    }

    pub fn num_labels(&self) -> usize {
        self.costs.num_labels
    }

    fn category(&self, k: usize) -> Option<usize> {
        if k == OUTLIER {
            self.config.outliers_in_volume.then_some(self.num_labels())
        } else {
            Some(k)
        }
    }

    /// Per-element volume cost of label `k` in the linear case.
    #[inline]
    fn linear_cost(&self, lin: &[f64], k: usize) -> f64 {
        self.category(k).map_or(0.0, |c| lin[c])
    }

    #[inline]
    fn unary(&self, p: usize, k: usize) -> f64 {
        let d = self.costs.cost(p, k);
        match &self.volume {
            VolumeSurrogate::Linear(lin) => sat_add(d, self.linear_cost(lin, k)),
            VolumeSurrogate::Entropy { .. } => d,
        }
    }

    /// Exact energy of `s`, with the volume part given by the surrogate kind
    /// (linear weights or exact entropy).
    pub fn energy(&self, s: &Labeling) -> Result<EnergyBreakdown> {
        if s.len() != self.num_elements() || s.num_labels() != self.num_labels() {
            return Err(Error::Invalid("labeling does not match the problem"));
        }
        let data = self.costs.data_term(s);
        let counts = s.category_counts(self.config.outliers_in_volume);
        let volume = match &self.volume {
            VolumeSurrogate::Linear(lin) => counts
                .iter()
                .zip(lin)
                .map(|(&c, &w)| if c == 0 { 0.0 } else { c as f64 * w })
                .fold(0.0, sat_add),
            VolumeSurrogate::Entropy { gamma, .. } => gamma * scaled_entropy(&counts),
        };
        let smoothness = crate::energy::smoothness_term(s, self.graph, self.config.lambda);
        let label_cost = crate::energy::label_cost_term(s, self.config.label_cost);
        let total = [volume, smoothness, label_cost].into_iter().fold(data, sat_add);
        Ok(EnergyBreakdown { data, volume, smoothness, label_cost, total })
    }

    /// The objective minimized by the graph cuts, evaluated on a full
    /// labeling: entropy replaced by its polygonal approximation, everything
    /// else exact.
    pub fn surrogate_energy(&self, s: &Labeling) -> Result<f64> {
        let e = self.energy(s)?;
        match &self.volume {
            VolumeSurrogate::Linear(_) => Ok(e.total),
            VolumeSurrogate::Entropy { gamma, approx } => {
                let counts = s.category_counts(self.config.outliers_in_volume);
                let n_in: usize = counts.iter().sum();
                let approx_part: f64 = counts.iter().map(|&c| approx.evaluate(c as f64)).sum::<f64>()
                    + gamma * rho(n_in, self.num_elements());
                Ok(e.total - e.volume + approx_part)
            }
        }
    }

    /// Binary energy with `x_p = [S_p = 1]` for a two-label problem.
    pub fn binary_energy(&self) -> Result<BinaryEnergy> {
        let k = self.num_labels();
        if k != 2 {
            return Err(Error::NotBinary(k));
        }
        let n = self.num_elements();
        let mut e = BinaryEnergy::with_vars(n);
        for p in 0..n {
            e.add_unary(p, [self.unary(p, 0), self.unary(p, 1)]);
        }
        let lambda = self.config.lambda;
        if lambda > 0.0 {
            for edge in &self.graph.edges {
                let c = lambda * edge.weight;
                e.add_edge(edge.p, edge.q, c, c)?;
            }
        }
        let mut triangles: Vec<TriangleTerm> = Vec::new();
        if self.config.label_cost > 0.0 {
            triangles.push(TriangleTerm::label_cost(self.config.label_cost, n));
        }
        if let VolumeSurrogate::Entropy { approx, .. } = &self.volume {
            triangles.extend_from_slice(&approx.terms);
        }
        for t in &triangles {
            for label in 0..2 {
                let f = reduce_binary(t, label, n)?;
                e.add_fragment(&f, |p| p)?;
            }
        }
        Ok(e)
    }

    /// Binary energy for expanding label `alpha` from `s_t`.
    pub fn expansion_energy(&self, s_t: &Labeling, alpha: usize) -> Result<ExpansionEnergy> {
        let n = self.num_elements();
        let k_labels = self.num_labels();
        if alpha != OUTLIER && alpha >= k_labels {
            return Err(Error::Invalid("expansion label out of range"));
        }
        let mut var_of = vec![usize::MAX; n];
        let mut elements = Vec::new();
        let mut e = BinaryEnergy::new();
        for p in 0..n {
            let l = s_t.get(p);
            if l == alpha {
                e.constant = sat_add(e.constant, self.unary(p, alpha));
            } else {
                var_of[p] = elements.len();
                elements.push(p);
                let v = e.add_var();
                e.add_unary(v, [self.unary(p, l), self.unary(p, alpha)]);
            }
        }

        let lambda = self.config.lambda;
        if lambda > 0.0 {
            for edge in &self.graph.edges {
                let c = lambda * edge.weight;
                if c == 0.0 {
                    continue;
                }
                let (vp, vq) = (var_of[edge.p], var_of[edge.q]);
                match (vp == usize::MAX, vq == usize::MAX) {
                    (true, true) => {}
                    (true, false) => e.add_unary(vq, [c, 0.0]),
                    (false, true) => e.add_unary(vp, [c, 0.0]),
                    (false, false) => {
                        let same = s_t.get(edge.p) == s_t.get(edge.q);
                        e.add_pairwise(vp, vq, [[if same { 0.0 } else { c }, c], [c, 0.0]])?;
                    }
                }
            }
        }

        // labels whose cardinality can be nonzero before or after the move
        let mut counts = s_t.counts();
        counts.push(s_t.outlier_count());
        let relevant = |k: usize| {
            let c = if k == OUTLIER { counts[k_labels] } else { counts[k] };
            k == alpha || c > 0
        };
        let map = |p: usize| var_of[p];

        if self.config.label_cost > 0.0 {
            let t = TriangleTerm::label_cost(self.config.label_cost, n);
            for k in (0..k_labels).filter(|&k| relevant(k)) {
                let f = reduce_expansion(&t, k, alpha, s_t)?;
                e.add_fragment(&f, map)?;
            }
        }

        if let VolumeSurrogate::Entropy { gamma, approx } = &self.volume {
            let mut cats: Vec<usize> = (0..k_labels).filter(|&k| relevant(k)).collect();
            if self.config.outliers_in_volume && relevant(OUTLIER) {
                cats.push(OUTLIER);
            }
            for &k in &cats {
                for t in &approx.terms {
                    let f = reduce_expansion(t, k, alpha, s_t)?;
                    e.add_fragment(&f, map)?;
                }
            }
            if !self.config.outliers_in_volume && *gamma > 0.0 {
                self.add_inlier_count_chord(&mut e, s_t, alpha, &elements, *gamma);
            }
        }
        Ok(ExpansionEnergy { alpha, energy: e, elements })
    }

    /// Replaces the convex `γ·n ln(n/N)` part of the entropy (`n` inliers)
    /// by its chord over the inlier counts the move can reach.
    fn add_inlier_count_chord(&self, e: &mut BinaryEnergy, s_t: &Labeling, alpha: usize, elements: &[usize], gamma: f64) {
        let big_n = self.num_elements();
        let n_t = s_t.inlier_count();
        let movable = elements.iter().filter(|&&p| (s_t.get(p) == OUTLIER) != (alpha == OUTLIER)).count();
        e.constant += gamma * rho(n_t, big_n);
        if movable == 0 {
            return;
        }
        let (lo, hi, sign) = if alpha == OUTLIER { (n_t - movable, n_t, -1.0) } else { (n_t, n_t + movable, 1.0) };
        let slope = gamma * (rho(hi, big_n) - rho(lo, big_n)) / (hi - lo) as f64;
        for (i, &p) in elements.iter().enumerate() {
            if (s_t.get(p) == OUTLIER) != (alpha == OUTLIER) {
                e.add_unary(i, [0.0, sign * slope]);
            }
        }
    }

    /// Global optimum of the binary surrogate.
    pub fn binary_segment(&self) -> Result<(Labeling, BinarySolution)> {
        let e = self.binary_energy()?;
        let sol = e.minimize()?;
        let labels = sol.x[..self.num_elements()].iter().map(|&b| b as usize).collect();
        Ok((Labeling::new(labels, 2)?, sol))
    }

    /// Optimal expansion of `alpha` under the surrogate; kept only if the
    /// exact energy strictly decreases.
    pub fn expand(&self, s_t: &Labeling, alpha: usize) -> Result<Move> {
        let before = self.energy(s_t)?.total;
        let null = |before| Move {
            kind: MoveKind::Expansion(alpha),
            labeling: s_t.clone(),
            energy_before: before,
            energy_after: before,
            accepted: false,
        };
        let ee = self.expansion_energy(s_t, alpha)?;
        if ee.elements.is_empty() {
            return Ok(null(before));
        }
        let sol = ee.energy.minimize()?;
        if !sol.x[..ee.elements.len()].iter().any(|&b| b) {
            return Ok(null(before));
        }
        let s = ee.apply(s_t, &sol.x);
        let after = self.energy(&s)?.total;
        if improves(after, before) {
            Ok(Move { kind: MoveKind::Expansion(alpha), labeling: s, energy_before: before, energy_after: after, accepted: true })
        } else {
            Ok(null(before))
        }
    }

    /// Expansion sweeps over `labels` (fixed order) until a sweep accepts no
    /// move or `max_sweeps` is reached. Returns the labeling and the number of
    /// accepted moves.
    pub fn expansion_sweeps(&self, s0: &Labeling, labels: &[usize], max_sweeps: usize) -> Result<(Labeling, usize)> {
        let mut s = s0.clone();
        let mut accepted = 0;
        for _ in 0..max_sweeps {
            let mut changed = false;
            for &alpha in labels {
                let m = self.expand(&s, alpha)?;
                if m.accepted {
                    s = m.labeling;
                    accepted += 1;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Ok((s, accepted))
    }
}

/// Strict decrease, ignoring differences at the level of rounding noise.
pub fn improves(after: f64, before: f64) -> bool {
    if !after.is_finite() {
        return false;
    }
    if !before.is_finite() {
        return true;
    }
    after < before - 1e-12 * before.abs().max(1.0)
}

/// `n ln(n / N)`, the part of `n·H` not captured by `Σ_k g_N(c_k)`.
fn rho(n: usize, big_n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        let (n, bn) = (n as f64, big_n as f64);
        bn * xlogx(n / bn)
    }
}

fn num_categories(k: usize, config: &EnergyConfig) -> usize {
    k + config.outliers_in_volume as usize
}

fn check_sizes(costs: &CostTable, graph: &NeighborGraph) -> Result<()> {
    if costs.num_elements != graph.num_elements {
        return Err(Error::Invalid("cost table and graph differ in size"));
    }
    if costs.num_elements == 0 {
        return Err(Error::Invalid("empty domain"));
    }
    Ok(())
}

/// Binary segmentation with fixed costs; the global optimum of the surrogate.
pub fn binary_segment_costs(costs: &CostTable, g: &NeighborGraph, cfg: &EnergyConfig, num_breakpoints: usize) -> Result<Labeling> {
    Ok(Problem::new(costs, g, cfg, num_breakpoints)?.binary_segment()?.0)
}
