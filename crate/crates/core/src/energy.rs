//! Exact evaluation of data terms, volume terms, smoothness and label costs.
//!
//! All logarithms are natural. Elements labeled [`OUTLIER`] pay a flat
//! `outlier_cost` and are left out of the volume distribution unless
//! [`EnergyConfig::outliers_in_volume`] is set, in which case the outlier
//! label is treated as one more volume category (index `K`).

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::NeighborGraph;
use crate::math::{ln, sat_add, xlogx};
use crate::model::{neg_log_likelihood, Datum, Model};
use crate::{Error, Result};

/// Label of elements explained by no model.
pub const OUTLIER: usize = usize::MAX;

/// Tolerance for simplex membership checks.
const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Labeling {
    labels: Vec<usize>,
    num_labels: usize,
}

impl Labeling {
    pub fn new(labels: Vec<usize>, num_labels: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Invalid("labeling needs at least one element"));
        }
        if labels.iter().any(|&l| l != OUTLIER && l >= num_labels) {
            return Err(Error::Invalid("label index out of range"));
        }
        Ok(Self { labels, num_labels })
    }

    pub fn constant(n: usize, label: usize, num_labels: usize) -> Result<Self> {
        Self::new(vec![label; n], num_labels)
    }

    #[inline]
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, p: usize) -> usize {
        self.labels[p]
    }

    #[inline]
    pub fn set(&mut self, p: usize, label: usize) {
        debug_assert!(label == OUTLIER || label < self.num_labels);
        self.labels[p] = label;
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// Segment sizes `|S^k|` for `k < K`.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.num_labels];
        for &l in &self.labels {
            if l != OUTLIER {
                c[l] += 1;
            }
        }
        c
    }

    pub fn outlier_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == OUTLIER).count()
    }

    pub fn inlier_count(&self) -> usize {
        self.len() - self.outlier_count()
    }

    /// Sizes per volume category: `K` entries, plus the outlier count when
    /// `outliers_in_volume` is set.
    pub fn category_counts(&self, outliers_in_volume: bool) -> Vec<usize> {
        let mut c = self.counts();
        if outliers_in_volume {
            c.push(self.outlier_count());
        }
        c
    }

    /// Labels with nonempty support, excluding the outlier label.
    pub fn active_labels(&self) -> usize {
        self.counts().iter().filter(|&&c| c > 0).count()
    }

    /// Members of segment `k` (or of the outlier set for `OUTLIER`).
    pub fn members(&self, k: usize) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, &l)| l == k).map(|(p, _)| p).collect()
    }
}

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeDistribution(Vec<f64>);

impl VolumeDistribution {
    pub fn new(volumes: Vec<f64>) -> Result<Self> {
        if volumes.is_empty() || volumes.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Invalid("volumes must be nonnegative"));
        }
        if (volumes.iter().sum::<f64>() - 1.0).abs() > SIMPLEX_TOL * volumes.len() as f64 {
            return Err(Error::Invalid("volumes must sum to one"));
        }
        Ok(Self(volumes))
    }

    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyInlierSet);
        }
        Ok(Self(counts.iter().map(|&c| c as f64 / total as f64).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Target volume distribution `W`; strictly positive entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetWeights(Vec<f64>);

impl TargetWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Invalid("target weights must be strictly positive"));
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid("target weights must sum to one"));
        }
        Ok(Self(weights))
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightMode {
    /// Standard likelihoods; equivalent to `Fixed` with uniform weights.
    Uniform,
    /// Weighted likelihoods with given target volumes.
    Fixed(TargetWeights),
    /// Weights optimized out: the entropy-corrected data term, scaled by γ.
    Reestimated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyConfig {
    pub lambda: f64,
    pub gamma: f64,
    pub label_cost: f64,
    pub outlier_cost: f64,
    pub weight_mode: WeightMode,
    pub outliers_in_volume: bool,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            gamma: 1.0,
            label_cost: 0.0,
            outlier_cost: 0.0,
            weight_mode: WeightMode::Uniform,
            outliers_in_volume: false,
        }
    }
}

impl EnergyConfig {
    pub fn validate(&self) -> Result<()> {
        for v in [self.lambda, self.gamma, self.label_cost, self.outlier_cost] {
            if !(v >= 0.0) {
                return Err(Error::Invalid("lambda, gamma, label cost and outlier cost must be nonnegative"));
            }
        }
        Ok(())
    }
}

/// Volume distribution over non-outlier elements.
pub fn volume_distribution(s: &Labeling) -> Result<VolumeDistribution> {
    VolumeDistribution::from_counts(&s.counts())
}

pub fn entropy(v: &VolumeDistribution) -> f64 {
    -v.0.iter().map(|&x| xlogx(x)).sum::<f64>()
}

pub fn kl_to_target(v: &VolumeDistribution, w: &TargetWeights) -> f64 {
    v.0.iter()
        .zip(&w.0)
        .map(|(&p, &q)| if p > 0.0 { p * ln(p / q) } else { 0.0 })
        .sum()
}

pub fn cross_entropy(v: &VolumeDistribution, w: &TargetWeights) -> f64 {
    -v.0.iter().zip(&w.0).map(|(&p, &q)| if p > 0.0 { p * ln(q) } else { 0.0 }).sum::<f64>()
}

/// `|Ω|·H` written in counts: `Σ_k g(c_k)` with `g(c) = -c ln(c / n)`.
pub fn scaled_entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts.iter().map(|&c| -xlogx(c as f64 / n) * n).sum()
}

/// `-Σ_k c_k ln w_k`; zero weights are allowed and cost `+inf` when used.
pub fn weight_cost(counts: &[usize], weights: &[f64]) -> f64 {
    counts
        .iter()
        .zip(weights)
        .map(|(&c, &w)| {
            if c == 0 {
                0.0
            } else if w > 0.0 {
                -(c as f64) * ln(w)
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, sat_add)
}

/// Conditional entropy `H(S|I)` for data quantized to `bins` (diagnostic).
pub fn conditional_entropy(s: &Labeling, bins: &[usize]) -> f64 {
    let nb = bins.iter().copied().max().map_or(0, |m| m + 1);
    let k = s.num_labels();
    let mut joint = vec![0usize; nb * (k + 1)];
    let mut marg = vec![0usize; nb];
    for (p, &b) in bins.iter().enumerate() {
        let l = s.get(p);
        let l = if l == OUTLIER { k } else { l };
        joint[b * (k + 1) + l] += 1;
        marg[b] += 1;
    }
    let n = bins.len() as f64;
    let mut h = 0.0;
    for b in 0..nb {
        if marg[b] == 0 {
            continue;
        }
        let mb = marg[b] as f64;
        for l in 0..=k {
            let c = joint[b * (k + 1) + l] as f64;
            if c > 0.0 {
                h -= c / n * ln(c / mb);
            }
        }
    }
    h
}

/// Per-element label costs `-ln P^k(I_p)` and the flat outlier cost.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    pub num_elements: usize,
    pub num_labels: usize,
    costs: Vec<f64>,
    pub outlier_cost: f64,
}

impl CostTable {
    pub fn from_models(models: &[Model], data: &[Datum], outlier_cost: f64) -> Result<Self> {
        let k = models.len();
        let mut costs = Vec::with_capacity(data.len() * k);
        for d in data {
            for m in models {
                costs.push(neg_log_likelihood(m, d)?);
            }
        }
        Ok(Self { num_elements: data.len(), num_labels: k, costs, outlier_cost })
    }

    pub fn from_raw(num_elements: usize, num_labels: usize, costs: Vec<f64>, outlier_cost: f64) -> Result<Self> {
        if costs.len() != num_elements * num_labels {
            return Err(Error::Invalid("cost table has the wrong size"));
        }
        Ok(Self { num_elements, num_labels, costs, outlier_cost })
    }

    /// Cost of giving element `p` label `k` (which may be [`OUTLIER`]).
    #[inline]
    pub fn cost(&self, p: usize, k: usize) -> f64 {
        if k == OUTLIER {
            self.outlier_cost
        } else {
            self.costs[p * self.num_labels + k]
        }
    }

    /// Recomputes the column of label `k` for a new model.
    pub fn update_label(&mut self, k: usize, model: &Model, data: &[Datum]) -> Result<()> {
        for (p, d) in data.iter().enumerate() {
            self.costs[p * self.num_labels + k] = neg_log_likelihood(model, d)?;
        }
        Ok(())
    }

    pub fn data_term(&self, s: &Labeling) -> f64 {
        s.labels().iter().enumerate().map(|(p, &l)| self.cost(p, l)).fold(0.0, sat_add)
    }
}

pub fn data_term(s: &Labeling, models: &[Model], data: &[Datum], outlier_cost: f64) -> Result<f64> {
    check_dims(s, models, data)?;
    let mut total = 0.0;
    for (p, &l) in s.labels().iter().enumerate() {
        let c = if l == OUTLIER { outlier_cost } else { neg_log_likelihood(&models[l], &data[p])? };
        total = sat_add(total, c);
    }
    Ok(total)
}

pub fn weighted_data_term(
    s: &Labeling,
    models: &[Model],
    data: &[Datum],
    w: &TargetWeights,
    outlier_cost: f64,
) -> Result<f64> {
    if w.len() != models.len() {
        return Err(Error::Invalid("weights and models differ in length"));
    }
    let d = data_term(s, models, data, outlier_cost)?;
    Ok(sat_add(d, weight_cost(&s.counts(), w.as_slice())))
}

pub fn unbiased_data_term(s: &Labeling, models: &[Model], data: &[Datum], outlier_cost: f64) -> Result<f64> {
    let d = data_term(s, models, data, outlier_cost)?;
    Ok(sat_add(d, scaled_entropy(&s.counts())))
}

pub fn smoothness_term(s: &Labeling, g: &NeighborGraph, lambda: f64) -> f64 {
    lambda * g.edges.iter().filter(|e| s.get(e.p) != s.get(e.q)).map(|e| e.weight).sum::<f64>()
}

pub fn label_cost_term(s: &Labeling, h: f64) -> f64 {
    h * s.active_labels() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    /// Likelihood part, including outlier costs.
    pub data: f64,
    /// Weight, uniform-constant, or entropy part, depending on the mode.
    pub volume: f64,
    pub smoothness: f64,
    pub label_cost: f64,
    pub total: f64,
}

/// The volume part of the energy for the given counts per category.
pub fn volume_term(category_counts: &[usize], mode: &WeightMode, gamma: f64) -> Result<f64> {
    let n: usize = category_counts.iter().sum();
    match mode {
        WeightMode::Uniform => Ok(n as f64 * ln(category_counts.len() as f64)),
        WeightMode::Fixed(w) => {
            if w.len() != category_counts.len() {
                return Err(Error::Invalid("weights do not match the number of volume categories"));
            }
            Ok(weight_cost(category_counts, w.as_slice()))
        }
        WeightMode::Reestimated => Ok(gamma * scaled_entropy(category_counts)),
    }
}

pub fn total_energy_costs(s: &Labeling, costs: &CostTable, g: &NeighborGraph, cfg: &EnergyConfig) -> Result<EnergyBreakdown> {
    let data = costs.data_term(s);
    let volume = volume_term(&s.category_counts(cfg.outliers_in_volume), &cfg.weight_mode, cfg.gamma)?;
    let smoothness = smoothness_term(s, g, cfg.lambda);
    let label_cost = label_cost_term(s, cfg.label_cost);
    let total = [volume, smoothness, label_cost].into_iter().fold(data, sat_add);
    Ok(EnergyBreakdown { data, volume, smoothness, label_cost, total })
}

pub fn total_energy(
    s: &Labeling,
    models: &[Model],
    data: &[Datum],
    g: &NeighborGraph,
    cfg: &EnergyConfig,
) -> Result<EnergyBreakdown> {
    check_dims(s, models, data)?;
    let costs = CostTable::from_models(models, data, cfg.outlier_cost)?;
    total_energy_costs(s, &costs, g, cfg)
}

fn check_dims(s: &Labeling, models: &[Model], data: &[Datum]) -> Result<()> {
    if s.len() != data.len() {
        return Err(Error::Invalid("labeling and data differ in length"));
    }
    if s.num_labels() != models.len() {
        return Err(Error::Invalid("labeling and models differ in label count"));
    }
    Ok(())
}
