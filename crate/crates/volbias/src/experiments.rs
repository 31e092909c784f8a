//! Experiment drivers shared by the command line and the acceptance suite.

use serde::Serialize;
use volbias_core::energy::{EnergyConfig, TargetWeights, WeightMode, OUTLIER};
use volbias_core::graph::NeighborGraph;
use volbias_core::model::{CovarianceMode, Datum, ModelFamily, DEFAULT_HISTOGRAM_EPSILON};
use volbias_core::optimize::{pearl_fit, segment_pipeline, Init, PearlOptions, SolveReport, SolverOptions, Variant};
use volbias_core::Result;

use crate::graphs::delaunay_graph;
use crate::io::Image;
use crate::metrics::{matched_accuracy, misclassification};
use crate::synth::{lines, region_image, LineData, LineSynthConfig, RegionImageConfig};

/// Settings of an image segmentation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentSettings {
    pub lambda: f64,
    pub gamma: f64,
    pub label_cost: f64,
    /// Histogram bins per channel for color images.
    pub bins: usize,
    /// Shared standard deviation of the Gaussian models for gray images.
    pub sigma: f64,
    pub breakpoints: usize,
    pub max_iters: usize,
}

impl Default for SegmentSettings {
    fn default() -> Self {
        Self { lambda: 1.0, gamma: 1.0, label_cost: 0.0, bins: 16, sigma: 0.1, breakpoints: 16, max_iters: 100 }
    }
}

impl SegmentSettings {
    pub fn solver(&self) -> SolverOptions {
        SolverOptions { num_breakpoints: self.breakpoints, max_iters: self.max_iters, ..SolverOptions::default() }
    }

    pub fn energy(&self) -> EnergyConfig {
        EnergyConfig { lambda: self.lambda, gamma: self.gamma, label_cost: self.label_cost, ..EnergyConfig::default() }
    }
}

/// Gaussian means for gray images, color histograms otherwise.
pub fn image_family(image: &Image, s: &SegmentSettings) -> ModelFamily {
    match image {
        Image::Gray(_) => ModelFamily::Gaussian { sigma: s.sigma },
        Image::Color(_) => ModelFamily::Histogram { bins_per_channel: s.bins, smoothing_epsilon: DEFAULT_HISTOGRAM_EPSILON },
    }
}

pub fn image_graph(image: &Image, data: &[Datum]) -> Result<NeighborGraph> {
    NeighborGraph::grid8_contrast(image.width(), image.height(), data)
}

pub fn segment_image(image: &Image, init: &Init, variant: &Variant, s: &SegmentSettings) -> Result<SolveReport> {
    let data = image.data();
    let g = image_graph(image, &data)?;
    segment_pipeline(&data, &image_family(image, s), &g, &s.energy(), init, variant, &s.solver())
}

/// Settings of the overlapping-region comparison: no smoothness, so the
/// volume terms alone decide between the two Gaussian models.
pub fn bias_settings() -> SegmentSettings {
    SegmentSettings { lambda: 0.0, ..SegmentSettings::default() }
}

/// Inner box used to start the overlapping-region runs: the left 40% of the
/// image, a loose box around the 25% foreground strip.
pub fn overlap_init(width: usize, height: usize) -> Init {
    Init::Boxes { width, height, inner: [0, 0, (width * 2) / 5, height] }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariantOutcome {
    /// Final foreground volume `|S^1| / |Ω|`.
    pub foreground_volume: f64,
    pub error: f64,
    pub energy: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasTrial {
    pub seed: u64,
    pub standard: VariantOutcome,
    pub high_order: VariantOutcome,
    pub fixed_w: VariantOutcome,
}

fn outcome(report: &SolveReport, fg_truth: &[usize]) -> VariantOutcome {
    let labels = report.labeling.labels();
    let fg = labels.iter().filter(|&&l| l == 1).count() as f64 / labels.len() as f64;
    VariantOutcome {
        foreground_volume: fg,
        error: crate::metrics::xor_error(labels, fg_truth),
        energy: report.final_energy(),
        iterations: report.iterations.len() - 1,
    }
}

/// Standard, entropy-corrected and true-weight runs on one overlapping-region
/// image. Label 1 is the foreground (the left strip).
pub fn bias_trial(cfg: &RegionImageConfig, seed: u64, s: &SegmentSettings) -> Result<BiasTrial> {
    let r = region_image(cfg, seed);
    let image = Image::Gray(r.image);
    let fg_truth: Vec<usize> = r.truth.iter().map(|&k| (k == 0) as usize).collect();
    let init = overlap_init(cfg.width, cfg.height);
    let fg_share = cfg.fractions[0];
    let w = TargetWeights::new(vec![1.0 - fg_share, fg_share])?;
    let run = |v: &Variant| segment_image(&image, &init, v, s).map(|rep| outcome(&rep, &fg_truth));
    Ok(BiasTrial { seed, standard: run(&Variant::Standard)?, high_order: run(&Variant::HighOrder)?, fixed_w: run(&Variant::FixedW(w))? })
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Settings of a multi-model line fitting run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSettings {
    pub sigma: f64,
    pub label_cost: f64,
    pub outlier_cost: f64,
    pub lambda: f64,
    /// Length scale of the smoothness weights `exp(-d²/scale²)`.
    pub smoothness_scale: f64,
    pub proposals: usize,
    pub seed: u64,
    pub breakpoints: usize,
    pub max_iters: usize,
    /// Re-estimated weights (entropy term) instead of fixed equal weights.
    pub variable_w: bool,
    pub gamma: f64,
    /// Counts the outlier label as a volume category.
    pub outliers_in_volume: bool,
}

impl FitSettings {
    pub fn lines(variable_w: bool, label_cost: f64, seed: u64) -> Self {
        Self {
            sigma: 0.025,
            label_cost,
            outlier_cost: 0.0,
            lambda: 0.0,
            smoothness_scale: 0.05,
            proposals: 200,
            seed,
            breakpoints: 16,
            max_iters: 100,
            variable_w,
            gamma: 1.0,
            outliers_in_volume: true,
        }
    }

    pub fn energy(&self) -> EnergyConfig {
        EnergyConfig {
            lambda: self.lambda,
            gamma: self.gamma,
            label_cost: self.label_cost,
            outlier_cost: self.outlier_cost,
            weight_mode: if self.variable_w { WeightMode::Reestimated } else { WeightMode::Uniform },
            outliers_in_volume: self.outliers_in_volume,
        }
    }

    pub fn pearl(&self) -> PearlOptions {
        PearlOptions {
            num_proposals: self.proposals,
            seed: self.seed,
            solver: SolverOptions { num_breakpoints: self.breakpoints, max_iters: self.max_iters, ..SolverOptions::default() },
            ..PearlOptions::default()
        }
    }
}

pub struct FitRun {
    pub report: SolveReport,
    pub graph_warning: Option<String>,
}

pub fn fit_points(points: &[[f64; 2]], s: &FitSettings) -> Result<FitRun> {
    let data: Vec<Datum> = points.iter().map(|&p| Datum::Point(p)).collect();
    let (g, graph_warning) = if s.lambda > 0.0 {
        let pg = delaunay_graph(points, s.smoothness_scale);
        (pg.graph, pg.warning)
    } else {
        (NeighborGraph::empty(points.len()), None)
    };
    let report = pearl_fit(&data, &ModelFamily::Line { sigma: s.sigma }, &g, &s.energy(), &s.pearl())?;
    Ok(FitRun { report, graph_warning })
}

pub fn fit_matches(matches: &[volbias_core::model::MatchPair], s: &FitSettings, variance: f64) -> Result<FitRun> {
    let data: Vec<Datum> = matches.iter().map(|&m| Datum::Match(m)).collect();
    let xs: Vec<[f64; 2]> = matches.iter().map(|m| m.x).collect();
    let pg = delaunay_graph(&xs, s.smoothness_scale);
    let family = ModelFamily::Homography { covariance_mode: CovarianceMode::Fixed(variance) };
    let report = pearl_fit(&data, &family, &pg.graph, &s.energy(), &s.pearl())?;
    Ok(FitRun { report, graph_warning: pg.warning })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineRun {
    pub label_cost: f64,
    pub variable_w: bool,
    pub active_labels: usize,
    pub accuracy: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineTrial {
    pub seed: u64,
    pub variable: LineRun,
    pub fixed: Vec<LineRun>,
}

impl LineTrial {
    pub fn best_fixed_accuracy(&self) -> f64 {
        self.fixed.iter().map(|r| r.accuracy).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn line_run(data: &LineData, s: &FitSettings) -> Result<LineRun> {
    let run = fit_points(&data.points, s)?;
    let labels = run.report.labeling.labels();
    Ok(LineRun {
        label_cost: s.label_cost,
        variable_w: s.variable_w,
        active_labels: run.report.labeling.active_labels(),
        accuracy: matched_accuracy(labels, &data.truth),
        energy: run.report.final_energy(),
    })
}

/// Variable weights with `h = variable_h` against fixed weights for each
/// `fixed_h`, all on the same generated data and proposal seed.
pub fn line_trial(cfg: &LineSynthConfig, seed: u64, variable_h: f64, fixed_h: &[f64]) -> Result<LineTrial> {
    let data = lines(cfg, seed);
    let mut base = FitSettings::lines(true, variable_h, seed);
    base.sigma = cfg.sigma;
    let variable = line_run(&data, &base)?;
    let fixed = fixed_h
        .iter()
        .map(|&h| line_run(&data, &FitSettings { variable_w: false, label_cost: h, ..base.clone() }))
        .collect::<Result<Vec<_>>>()?;
    Ok(LineTrial { seed, variable, fixed })
}

/// Initial labeling with `k` labels of (nearly) equal size, by gray-level rank.
pub fn quantile_init(data: &[Datum], k: usize) -> Init {
    let mut order: Vec<usize> = (0..data.len()).collect();
    let key = |d: &Datum| match d {
        Datum::Gray(v) => *v,
        Datum::Color(c) => c.iter().sum::<f64>(),
        _ => 0.0,
    };
    order.sort_by(|&a, &b| key(&data[a]).total_cmp(&key(&data[b])).then(a.cmp(&b)));
    let mut labels = vec![0; data.len()];
    for (rank, &p) in order.iter().enumerate() {
        labels[p] = rank * k / data.len();
    }
    Init::Labeling(volbias_core::energy::Labeling::new(labels, k).expect("labels below k"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaRun {
    pub gamma: f64,
    pub volumes: Vec<f64>,
    pub active_labels: usize,
    pub kl_to_uniform: f64,
    pub entropy: f64,
    pub error: f64,
    pub energy: f64,
}

/// High-order pipeline for one γ from `k` equal-size initial segments.
pub fn gamma_run(image: &Image, truth: Option<&[usize]>, k: usize, gamma: f64, s: &SegmentSettings) -> Result<(GammaRun, SolveReport)> {
    let data = image.data();
    let init = quantile_init(&data, k);
    let s = SegmentSettings { gamma, ..s.clone() };
    let report = segment_image(image, &init, &Variant::HighOrder, &s)?;
    let counts = report.labeling.counts();
    let n = counts.iter().sum::<usize>() as f64;
    let volumes: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let entropy = -volumes.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>();
    let run = GammaRun {
        gamma,
        kl_to_uniform: (k as f64).ln() - entropy,
        entropy,
        active_labels: report.labeling.active_labels(),
        volumes,
        error: truth.map_or(f64::NAN, |t| misclassification(report.labeling.labels(), t)),
        energy: report.final_energy(),
    };
    Ok((run, report))
}

/// Three-region image used by the γ sweep.
pub fn gamma_image(seed: u64) -> (Image, Vec<usize>) {
    let r = region_image(&RegionImageConfig::three_regions(), seed);
    (Image::Gray(r.image), r.truth)
}

/// Number of data items per label, with the outlier count last.
pub fn assignment_histogram(labels: &[usize], num_labels: usize) -> (Vec<usize>, usize) {
    let mut counts = vec![0; num_labels];
    let mut outliers = 0;
    for &l in labels {
        if l == OUTLIER {
            outliers += 1;
        } else {
            counts[l] += 1;
        }
    }
    (counts, outliers)
}
