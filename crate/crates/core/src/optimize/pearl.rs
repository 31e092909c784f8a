//! Propose, expand and re-estimate labels for multi-model fitting.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::moves::Problem;
use super::pipeline::{record, refit_models};
use super::{SolveReport, SolverOptions, Termination};
use crate::energy::{CostTable, EnergyConfig, Labeling, OUTLIER};
use crate::graph::NeighborGraph;
use crate::model::{Datum, Model, ModelFamily};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PearlOptions {
    pub num_proposals: usize,
    pub seed: u64,
    /// Failed minimal-sample fits allowed per requested proposal.
    pub attempts_per_proposal: usize,
    pub solver: SolverOptions,
}

impl Default for PearlOptions {
    fn default() -> Self {
        Self { num_proposals: 200, seed: 0, attempts_per_proposal: 10, solver: SolverOptions::default() }
    }
}

/// Models fitted to random minimal subsets of the data.
pub fn propose_models(data: &[Datum], family: &ModelFamily, num: usize, attempts_per_proposal: usize, rng: &mut ChaCha8Rng) -> Vec<Model> {
    let m = family.minimal_sample();
    let mut out = Vec::with_capacity(num);
    if data.len() < m {
        return out;
    }
    let mut attempts = 0;
    while out.len() < num && attempts < num * attempts_per_proposal.max(1) {
        attempts += 1;
        let idx = sample(rng, data.len(), m).into_vec();
        if let Ok(model) = family.fit(data, &idx) {
            out.push(model);
        }
    }
    out
}

/// Multi-model fitting: expansion sweeps over all proposals and the outlier
/// label, followed by re-estimation of the models in use, until neither step
/// lowers the energy.
pub fn pearl_fit(data: &[Datum], family: &ModelFamily, g: &NeighborGraph, cfg: &EnergyConfig, opts: &PearlOptions) -> Result<SolveReport> {
    if opts.num_proposals == 0 {
        return Err(Error::Invalid("need at least one proposal"));
    }
    if data.is_empty() || g.num_elements != data.len() {
        return Err(Error::Invalid("data and graph differ in size"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut models = propose_models(data, family, opts.num_proposals, opts.attempts_per_proposal, &mut rng);
    let k = models.len();
    let mut s = Labeling::constant(data.len(), OUTLIER, k)?;
    if k == 0 {
        let costs = CostTable::from_raw(data.len(), 0, Vec::new(), cfg.outlier_cost)?;
        let e = Problem::new(&costs, g, cfg, opts.solver.num_breakpoints)?.energy(&s)?;
        return Ok(SolveReport {
            iterations: vec![record(e, &s, cfg.outliers_in_volume, 0)],
            labeling: s,
            models,
            termination: Termination::NoProposals,
            warning: Some(String::from("no proposal could be fitted; all data labeled as outliers")),
            wall_time_secs: None,
        });
    }

    let mut costs = CostTable::from_models(&models, data, cfg.outlier_cost)?;
    let mut energy = Problem::new(&costs, g, cfg, opts.solver.num_breakpoints)?.energy(&s)?;
    let mut iterations = vec![record(energy, &s, cfg.outliers_in_volume, 0)];
    let mut termination = Termination::MaxIterations;
    let mut labels: Vec<usize> = (0..k).collect();
    labels.push(OUTLIER);
    for _ in 0..opts.solver.max_iters {
        let problem = Problem::new(&costs, g, cfg, opts.solver.num_breakpoints)?;
        let (next, moves) = problem.expansion_sweeps(&s, &labels, 1)?;
        s = next;
        let models_changed = refit_models(data, &s, &mut models, &mut costs)?;
        energy = Problem::new(&costs, g, cfg, opts.solver.num_breakpoints)?.energy(&s)?;
        iterations.push(record(energy, &s, cfg.outliers_in_volume, moves));
        if moves == 0 && !models_changed {
            termination = Termination::Converged;
            break;
        }
    }
    let warning = (s.active_labels() == 0).then(|| String::from("no proposal survived; all data labeled as outliers"));
    Ok(SolveReport { iterations, labeling: s, models, termination, warning, wall_time_secs: None })
}
