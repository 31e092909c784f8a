//! Run reports: line-oriented `key=value` text and JSON.
//!
//! JSON reports hold only quantities determined by the inputs and the seed,
//! so repeated runs produce identical bytes; wall time goes to the text form.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;
use volbias_core::energy::{kl_to_target, TargetWeights, VolumeDistribution};
use volbias_core::optimize::{SolveReport, Termination};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Breakdown {
    pub data: f64,
    pub volume: f64,
    pub smoothness: f64,
    pub label_cost: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub settings: Value,
    pub final_energy: f64,
    pub breakdown: Breakdown,
    /// Volume category of each entry of `volumes`: a label index or `outlier`.
    pub volume_labels: Vec<String>,
    /// Volume distribution over the volume categories at convergence.
    pub volumes: Vec<f64>,
    pub kl_to_uniform: f64,
    pub weights: Option<Vec<f64>>,
    pub kl_to_target: Option<f64>,
    pub iterations: usize,
    pub energies: Vec<f64>,
    pub active_labels: usize,
    pub termination: String,
    pub warning: Option<String>,
    pub metrics: Value,
}

pub fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Converged => "converged",
        Termination::LabelingFixed => "labeling-fixed",
        Termination::MaxIterations => "max-iterations",
        Termination::NoProposals => "no-proposals",
    }
}

impl RunReport {
    /// With `active_only`, empty categories are left out of `volumes` and of
    /// the uniform reference (used for runs with hundreds of proposals).
    pub fn new(command: &str, settings: Value, r: &SolveReport, weights: Option<&TargetWeights>, metrics: Value, active_only: bool) -> Self {
        let last = r.iterations.last().expect("reports start with the initial state");
        let b = last.breakdown;
        let k = r.labeling.num_labels();
        let name = |i: usize| if i == k { String::from("outlier") } else { i.to_string() };
        let keep: Vec<usize> = (0..last.volumes.len()).filter(|&i| !active_only || last.volumes[i] > 0.0).collect();
        let volume_labels: Vec<String> = keep.iter().map(|&i| name(i)).collect();
        let volumes: Vec<f64> = keep.iter().map(|&i| last.volumes[i]).collect();
        let kl_u = VolumeDistribution::new(volumes.clone())
            .map(|v| kl_to_target(&v, &TargetWeights::uniform(volumes.len())))
            .unwrap_or(f64::NAN);
        let kl_w = weights.and_then(|w| {
            let v = VolumeDistribution::new(volumes.clone()).ok()?;
            (w.len() == volumes.len()).then(|| kl_to_target(&v, w))
        });
        Self {
            command: command.to_string(),
            settings,
            final_energy: r.final_energy(),
            breakdown: Breakdown { data: b.data, volume: b.volume, smoothness: b.smoothness, label_cost: b.label_cost, total: b.total },
            volume_labels,
            volumes,
            kl_to_uniform: kl_u,
            weights: weights.map(|w| w.as_slice().to_vec()),
            kl_to_target: kl_w,
            iterations: r.iterations.len() - 1,
            energies: r.energies(),
            active_labels: last.active_labels,
            termination: termination_name(r.termination).to_string(),
            warning: r.warning.clone(),
            metrics,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self, wall_time_secs: Option<f64>) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "command={}", self.command);
        let _ = writeln!(s, "final_energy={:.6}", self.final_energy);
        let b = &self.breakdown;
        let _ = writeln!(s, "energy.data={:.6}", b.data);
        let _ = writeln!(s, "energy.volume={:.6}", b.volume);
        let _ = writeln!(s, "energy.smoothness={:.6}", b.smoothness);
        let _ = writeln!(s, "energy.label_cost={:.6}", b.label_cost);
        let _ = writeln!(s, "volume_labels={}", self.volume_labels.join(","));
        let _ = writeln!(s, "volumes={}", list(&self.volumes));
        let _ = writeln!(s, "kl_to_uniform={:.6}", self.kl_to_uniform);
        if let Some(w) = &self.weights {
            let _ = writeln!(s, "weights={}", list(w));
        }
        if let Some(k) = self.kl_to_target {
            let _ = writeln!(s, "kl_to_target={k:.6}");
        }
        let _ = writeln!(s, "iterations={}", self.iterations);
        let _ = writeln!(s, "active_labels={}", self.active_labels);
        let _ = writeln!(s, "termination={}", self.termination);
        if let Some(w) = &self.warning {
            let _ = writeln!(s, "warning={w}");
        }
        if let Value::Object(m) = &self.metrics {
            for (k, v) in m {
                let _ = writeln!(s, "{k}={}", scalar_text(v));
            }
        }
        for (i, e) in self.energies.iter().enumerate() {
            let _ = writeln!(s, "energy[{i}]={e:.6}");
        }
        if let Some(t) = wall_time_secs {
            let _ = writeln!(s, "wall_time_secs={t:.3}");
        }
        s
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), |f| if f.fract() == 0.0 && f.abs() < 1e15 { format!("{f}") } else { format!("{f:.6}") }),
        other => other.to_string(),
    }
}
