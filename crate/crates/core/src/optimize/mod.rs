//! Optimizers: global binary cuts, α-expansion with triangle-term entropy
//! fragments, bound optimization, segmentation pipelines and PEARL fitting.

use alloc::string::String;
use alloc::vec::Vec;

use crate::energy::{EnergyBreakdown, Labeling};
use crate::entropy_approx::DEFAULT_BREAKPOINTS;
use crate::model::Model;

pub mod binary_energy;
pub mod moves;
pub mod pearl;
pub mod pipeline;

pub use binary_energy::{BinaryEnergy, BinarySolution, QuantizedEnergy};
pub use moves::{binary_segment_costs, improves, ExpansionEnergy, Move, MoveKind, Problem, VolumeSurrogate};
pub use pearl::{pearl_fit, PearlOptions};
pub use pipeline::{binary_segment, bound_optimize, expand, segment_pipeline, Init, Variant};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub num_breakpoints: usize,
    pub max_iters: usize,
    /// Outer loops stop when the energy decreases by less than this fraction.
    pub rel_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { num_breakpoints: DEFAULT_BREAKPOINTS, max_iters: 100, rel_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub energy: f64,
    pub breakdown: EnergyBreakdown,
    /// Volume distribution over the categories (empty if there are no inliers).
    pub volumes: Vec<f64>,
    pub active_labels: usize,
    pub moves_accepted: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    LabelingFixed,
    MaxIterations,
    NoProposals,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Entry 0 is the initial state.
    pub iterations: Vec<IterationRecord>,
    pub labeling: Labeling,
    pub models: Vec<Model>,
    pub termination: Termination,
    pub warning: Option<String>,
    /// Filled in by callers that measure time.
    pub wall_time_secs: Option<f64>,
}

impl SolveReport {
    pub fn final_energy(&self) -> f64 {
        self.iterations.last().map_or(f64::NAN, |r| r.energy)
    }

    pub fn energies(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.energy).collect()
    }
}
