//! Block-coordinate descent over labelings and models.

use alloc::vec;
use alloc::vec::Vec;

use super::moves::{improves, Move, Problem};
use super::{IterationRecord, SolveReport, SolverOptions, Termination};
use crate::energy::{CostTable, EnergyBreakdown, EnergyConfig, Labeling, TargetWeights, VolumeDistribution, WeightMode};
use crate::graph::NeighborGraph;
use crate::model::{neg_log_likelihood, Datum, Model, ModelFamily};
use crate::{Error, Result};

/// Energy optimized by [`segment_pipeline`].
#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    /// Standard likelihoods (uniform target weights).
    Standard,
    /// Likelihoods weighted by fixed target volumes.
    FixedW(TargetWeights),
    /// Entropy-corrected likelihoods, minimized through bound steps.
    Bound,
    /// Entropy-corrected likelihoods, minimized with triangle terms.
    HighOrder,
}

impl Variant {
    /// The energy configuration this variant minimizes.
    pub fn config(&self, base: &EnergyConfig) -> EnergyConfig {
        let weight_mode = match self {
            Variant::Standard => WeightMode::Uniform,
            Variant::FixedW(w) => WeightMode::Fixed(w.clone()),
            Variant::Bound | Variant::HighOrder => WeightMode::Reestimated,
        };
        EnergyConfig { weight_mode, ..base.clone() }
    }
}

/// Initial segmentation.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Labeling(Labeling),
    /// Row-major image of `width × height`; pixels in the half-open box
    /// `[x0, x1) × [y0, y1)` start as foreground (label 1), the rest as
    /// background (label 0).
    Boxes { width: usize, height: usize, inner: [usize; 4] },
}

impl Init {
    pub fn labeling(&self) -> Result<Labeling> {
        match self {
            Init::Labeling(s) => Ok(s.clone()),
            &Init::Boxes { width, height, inner: [x0, y0, x1, y1] } => {
                if x0 >= x1 || y0 >= y1 || x1 > width || y1 > height {
                    return Err(Error::Invalid("inner box is empty or outside the image"));
                }
                let labels = (0..width * height)
                    .map(|i| {
                        let (x, y) = (i % width, i / width);
                        (x >= x0 && x < x1 && y >= y0 && y < y1) as usize
                    })
                    .collect();
                Labeling::new(labels, 2)
            }
        }
    }
}

pub(crate) fn record(e: EnergyBreakdown, s: &Labeling, outliers_in_volume: bool, moves_accepted: usize) -> IterationRecord {
    let volumes = VolumeDistribution::from_counts(&s.category_counts(outliers_in_volume))
        .map(|v| v.as_slice().to_vec())
        .unwrap_or_default();
    IterationRecord { energy: e.total, breakdown: e, volumes, active_labels: s.active_labels(), moves_accepted }
}

/// Re-estimates the model of every nonempty segment, keeping a new model only
/// if it lowers that segment's data cost. Returns whether any model changed.
pub(crate) fn refit_models(data: &[Datum], s: &Labeling, models: &mut [Model], costs: &mut CostTable) -> Result<bool> {
    let mut changed = false;
    for (k, model) in models.iter_mut().enumerate() {
        let members = s.members(k);
        if members.is_empty() {
            continue;
        }
        let Ok(candidate) = model.refit(data, &members) else {
            continue;
        };
        let old: f64 = members.iter().map(|&p| costs.cost(p, k)).sum();
        let mut new = 0.0;
        for &p in &members {
            new += neg_log_likelihood(&candidate, &data[p])?;
        }
        if improves(new, old) {
            costs.update_label(k, &candidate, data)?;
            *model = candidate;
            changed = true;
        }
    }
    Ok(changed)
}

fn optimize_labels(problem: &Problem, s: &Labeling, opts: &SolverOptions) -> Result<(Labeling, usize)> {
    if problem.num_labels() == 2 && s.outlier_count() == 0 {
        let (cut, _) = problem.binary_segment()?;
        Ok((cut, 1))
    } else {
        let labels: Vec<usize> = (0..problem.num_labels()).collect();
        problem.expansion_sweeps(s, &labels, opts.max_iters)
    }
}

fn check_init(s: &Labeling, data: &[Datum], g: &NeighborGraph) -> Result<()> {
    if s.len() != data.len() || g.num_elements != data.len() {
        return Err(Error::Invalid("initial labeling, data and graph differ in size"));
    }
    if s.counts().contains(&0) {
        return Err(Error::EmptySegment);
    }
    Ok(())
}

/// Alternates model fitting and labeling updates under the variant's energy.
pub fn segment_pipeline(
    data: &[Datum],
    family: &ModelFamily,
    g: &NeighborGraph,
    base: &EnergyConfig,
    init: &Init,
    variant: &Variant,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let s0 = init.labeling()?;
    check_init(&s0, data, g)?;
    let models = (0..s0.num_labels()).map(|k| family.fit(data, &s0.members(k))).collect::<Result<Vec<_>>>()?;
    let cfg = variant.config(base);
    if let Variant::Bound = variant {
        return bound_optimize(data, &models, g, &cfg, &s0, opts);
    }
    descend(data, models, g, &cfg, s0, opts)
}

fn descend(data: &[Datum], mut models: Vec<Model>, g: &NeighborGraph, cfg: &EnergyConfig, mut s: Labeling, opts: &SolverOptions) -> Result<SolveReport> {
    let mut costs = CostTable::from_models(&models, data, cfg.outlier_cost)?;
    let mut energy = Problem::new(&costs, g, cfg, opts.num_breakpoints)?.energy(&s)?;
    let mut iterations = vec![record(energy, &s, cfg.outliers_in_volume, 0)];
    let mut termination = Termination::MaxIterations;
    for _ in 0..opts.max_iters {
        let problem = Problem::new(&costs, g, cfg, opts.num_breakpoints)?;
        let (candidate, moves) = optimize_labels(&problem, &s, opts)?;
        let labels_changed = candidate != s && improves(problem.energy(&candidate)?.total, energy.total);
        if labels_changed {
            s = candidate;
        }
        let models_changed = refit_models(data, &s, &mut models, &mut costs)?;
        let previous = energy.total;
        energy = Problem::new(&costs, g, cfg, opts.num_breakpoints)?.energy(&s)?;
        iterations.push(record(energy, &s, cfg.outliers_in_volume, moves));
        if !labels_changed && !models_changed {
            termination = Termination::LabelingFixed;
            break;
        }
        if previous - energy.total <= opts.rel_tol * previous.abs() {
            termination = Termination::Converged;
            break;
        }
    }
    Ok(SolveReport { iterations, labeling: s, models, termination, warning: None, wall_time_secs: None })
}

/// Bound optimization of the entropy-corrected energy: each step minimizes
/// the weighted energy with `W_t = V_{S_t}`, which bounds it from above and
/// touches it at `S_t`; then models are re-estimated. Empty segments get
/// weight zero and stay empty.
pub fn bound_optimize(
    data: &[Datum],
    models0: &[Model],
    g: &NeighborGraph,
    cfg: &EnergyConfig,
    init: &Labeling,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    if cfg.weight_mode != WeightMode::Reestimated {
        return Err(Error::Invalid("bound optimization needs re-estimated weights"));
    }
    if init.len() != data.len() || init.num_labels() != models0.len() {
        return Err(Error::Invalid("initial labeling does not match data and models"));
    }
    let mut models = models0.to_vec();
    let mut s = init.clone();
    let mut costs = CostTable::from_models(&models, data, cfg.outlier_cost)?;
    let mut energy = Problem::new(&costs, g, cfg, opts.num_breakpoints)?.energy(&s)?;
    let mut iterations = vec![record(energy, &s, cfg.outliers_in_volume, 0)];
    let mut termination = Termination::MaxIterations;
    for _ in 0..opts.max_iters {
        let Ok(w) = VolumeDistribution::from_counts(&s.category_counts(cfg.outliers_in_volume)) else {
            termination = Termination::LabelingFixed;
            break;
        };
        let step = Problem::with_weights(&costs, g, cfg, w.as_slice(), cfg.gamma)?;
        let (candidate, moves) = optimize_labels(&step, &s, opts)?;
        let exact = Problem::new(&costs, g, cfg, opts.num_breakpoints)?;
        let labels_changed = candidate != s && improves(exact.energy(&candidate)?.total, energy.total);
        if labels_changed {
            s = candidate;
        }
        let models_changed = refit_models(data, &s, &mut models, &mut costs)?;
        let previous = energy.total;
        energy = Problem::new(&costs, g, cfg, opts.num_breakpoints)?.energy(&s)?;
        iterations.push(record(energy, &s, cfg.outliers_in_volume, moves));
        if !labels_changed && !models_changed {
            termination = Termination::LabelingFixed;
            break;
        }
        if previous - energy.total <= opts.rel_tol * previous.abs() {
            termination = Termination::Converged;
            break;
        }
    }
    Ok(SolveReport { iterations, labeling: s, models, termination, warning: None, wall_time_secs: None })
}

/// Global binary segmentation for two fixed models.
pub fn binary_segment(data: &[Datum], models: &[Model], g: &NeighborGraph, cfg: &EnergyConfig, opts: &SolverOptions) -> Result<Labeling> {
    if models.len() != 2 {
        return Err(Error::NotBinary(models.len()));
    }
    let costs = CostTable::from_models(models, data, cfg.outlier_cost)?;
    Ok(Problem::new(&costs, g, cfg, opts.num_breakpoints)?.binary_segment()?.0)
}

/// One α-expansion move for fixed models.
pub fn expand(s_t: &Labeling, alpha: usize, data: &[Datum], models: &[Model], g: &NeighborGraph, cfg: &EnergyConfig, opts: &SolverOptions) -> Result<Move> {
    let costs = CostTable::from_models(models, data, cfg.outlier_cost)?;
    Problem::new(&costs, g, cfg, opts.num_breakpoints)?.expand(s_t, alpha)
}
