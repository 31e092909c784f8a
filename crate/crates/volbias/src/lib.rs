//! Files, synthetic data, metrics and experiment drivers around `volbias-core`.

pub mod cli;
pub mod experiments;
pub mod graphs;
pub mod io;
pub mod metrics;
pub mod report;
pub mod svg;
pub mod synth;
