//! Command line interface.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use volbias_core::energy::{Labeling, TargetWeights};
use volbias_core::model::MatchPair;
use volbias_core::optimize::{Init, SolveReport, Variant};

use crate::experiments::{
    assignment_histogram, fit_matches, fit_points, gamma_image, gamma_run, segment_image, FitRun, FitSettings, GammaRun, SegmentSettings,
};
use crate::io::{self, Image};
use crate::metrics::{matched_accuracy, misclassification};
use crate::report::RunReport;
use crate::svg;
use crate::synth;

#[derive(Parser, Debug)]
#[command(name = "volbias", version, about = "Segmentation and multi-model fitting with volume-bias control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Segment an image (PGM/PPM) from an initial box or labeling.
    Segment(SegmentArgs),
    /// Fit lines to 2-D points.
    Fitlines(FitLinesArgs),
    /// Fit homographies to point matches.
    Fithomography(FitHomographyArgs),
    /// Segment one image for several γ and report the volume distributions.
    GammaSweep(GammaSweepArgs),
    /// Write synthetic data.
    Synth(SynthArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentVariant {
    Standard,
    FixedW,
    Bound,
    HighOrder,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitVariant {
    /// Weights re-estimated through the entropy term.
    VariableW,
    /// Equal fixed weights.
    FixedW,
    /// Variable weights against fixed weights for each `--fixed-costs` value.
    Compare,
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    /// Directory for labels, masks, plots and `report.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the JSON report instead of `key=value` lines.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct SegmentArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Box file with an `inner` box and an optional `outer` crop box.
    #[arg(long, conflicts_with = "labels", required_unless_present = "labels")]
    pub boxes: Option<PathBuf>,
    /// Initial labeling, one label per pixel in row-major order.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "high-order")]
    pub variant: SegmentVariant,
    /// Target weights, comma separated, one per label.
    #[arg(long, value_delimiter = ',')]
    pub w: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Run every integer λ from 1 to 30 instead of a single `--lambda`.
    #[arg(long)]
    pub lambda_sweep: bool,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub label_cost: f64,
    #[arg(long, default_value_t = 16)]
    pub bins: usize,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 16)]
    pub breakpoints: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Ground truth as a label file or a PGM mask.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct FitLinesArgs {
    /// CSV with columns `x,y`.
    #[arg(long, conflicts_with = "synthesize", required_unless_present = "synthesize")]
    pub points: Option<PathBuf>,
    /// Generate four noisy lines with outliers from `--seed`.
    #[arg(long)]
    pub synthesize: bool,
    /// Ground-truth labels for `--points`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "variable-w")]
    pub variant: FitVariant,
    /// Label cost h; defaults to 5 with variable weights and 100 with fixed.
    #[arg(long)]
    pub label_cost: Option<f64>,
    /// Label costs of the fixed-weight runs in `--variant compare`.
    #[arg(long, value_delimiter = ',', default_value = "100,200,300")]
    pub fixed_costs: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub outlier_cost: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Inlier noise of the line models.
    #[arg(long, default_value_t = 0.025)]
    pub sigma: f64,
    /// Length scale of the Delaunay smoothness weights.
    #[arg(long, default_value_t = 0.05)]
    pub scale: f64,
    #[arg(long, default_value_t = 200)]
    pub proposals: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub breakpoints: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Count the outlier label as a volume category.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub outliers_in_volume: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct FitHomographyArgs {
    /// CSV with columns `x1,y1,x2,y2`.
    #[arg(long, conflicts_with = "synthesize", required_unless_present = "synthesize")]
    pub matches: Option<PathBuf>,
    /// Generate matches from two planes from `--seed`.
    #[arg(long)]
    pub synthesize: bool,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "variable-w")]
    pub variant: FitVariant,
    /// Label cost h; defaults to 5 with variable weights and 100 with fixed.
    #[arg(long)]
    pub label_cost: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "100")]
    pub fixed_costs: Vec<f64>,
    /// Outlier cost; defaults to the log of the product of both bounding-box areas.
    #[arg(long)]
    pub outlier_cost: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Fixed transfer-error variance in pixels².
    #[arg(long, default_value_t = 25.0)]
    pub variance: f64,
    /// Length scale of the Delaunay smoothness weights in pixels.
    #[arg(long, default_value_t = 5.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 200)]
    pub proposals: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub breakpoints: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub outliers_in_volume: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct GammaSweepArgs {
    /// Image to segment; a synthetic three-region image from `--seed` otherwise.
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Number of initial labels.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,1,3")]
    pub gammas: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    pub label_cost: f64,
    #[arg(long, default_value_t = 16)]
    pub bins: usize,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 16)]
    pub breakpoints: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthKind {
    /// Gray image with two overlapping regions (25% / 75%).
    Overlapping,
    /// Gray image with three regions.
    ThreeRegions,
    /// Four lines with outliers.
    Lines,
    /// Matches from two planes.
    Matches,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(value_enum)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Data file: PGM for images, CSV otherwise.
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth label file.
    #[arg(long)]
    pub truth_out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Segment(a) => segment(a),
        Command::Fitlines(a) => fitlines(a),
        Command::Fithomography(a) => fithomography(a),
        Command::GammaSweep(a) => gamma_sweep(a),
        Command::Synth(a) => synth_cmd(a),
    }
}

fn read_truth(path: &Path, len: usize) -> Result<Vec<usize>> {
    let bytes = io::read_file(path)?;
    let labels = if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        match io::parse_pnm(&bytes).with_context(|| format!("reading {}", path.display()))? {
            Image::Gray(g) => g.pixels.iter().map(|&v| v as usize).collect(),
            Image::Color(_) => bail!("truth mask {} must be a gray image", path.display()),
        }
    } else {
        io::parse_labels(&bytes).with_context(|| format!("reading {}", path.display()))?
    };
    ensure!(labels.len() == len, "truth has {} labels, expected {len}", labels.len());
    Ok(labels)
}

fn crop_labels(labels: &[usize], width: usize, [x0, y0, x1, y1]: [usize; 4]) -> Vec<usize> {
    (y0..y1).flat_map(|y| (x0..x1).map(move |x| labels[y * width + x])).collect()
}

fn emit(report: &RunReport, wall: f64, output: &Output) -> Result<()> {
    if output.json {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.to_text(Some(wall)));
    }
    if let Some(dir) = &output.out {
        io::write_file(&dir.join("report.json"), report.to_json().as_bytes())?;
        io::write_file(&dir.join("report.txt"), report.to_text(Some(wall)).as_bytes())?;
    }
    Ok(())
}

fn prepare_out(output: &Output) -> Result<()> {
    if let Some(dir) = &output.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    lambda: f64,
    energy: f64,
    iterations: usize,
    volumes: Vec<f64>,
    error: Option<f64>,
}

fn segment(a: SegmentArgs) -> Result<()> {
    prepare_out(&a.output)?;
    let full = io::read_image(&a.image).with_context(|| format!("reading {}", a.image.display()))?;
    let (w, h) = (full.width(), full.height());
    let mut truth = a.truth.as_deref().map(|p| read_truth(p, w * h)).transpose()?;
    let (image, init) = if let Some(path) = &a.boxes {
        let text = String::from_utf8(io::read_file(path)?).context("box file is not UTF-8")?;
        let b = io::parse_boxes(&text).with_context(|| format!("reading {}", path.display()))?;
        let outer = b.outer.unwrap_or([0, 0, w, h]);
        ensure!(outer[2] <= w && outer[3] <= h, "outer box exceeds the {w}×{h} image");
        let i = b.inner;
        ensure!(
            i[0] >= outer[0] && i[1] >= outer[1] && i[2] <= outer[2] && i[3] <= outer[3],
            "inner box must lie inside the outer box"
        );
        let cropped = full.crop(outer);
        truth = truth.map(|t| crop_labels(&t, w, outer));
        let inner = [i[0] - outer[0], i[1] - outer[1], i[2] - outer[0], i[3] - outer[1]];
        let init = Init::Boxes { width: cropped.width(), height: cropped.height(), inner };
        (cropped, init)
    } else {
        let path = a.labels.as_ref().expect("clap requires boxes or labels");
        let labels = io::parse_labels(&io::read_file(path)?).with_context(|| format!("reading {}", path.display()))?;
        ensure!(labels.len() == w * h, "initial labeling has {} labels, expected {}", labels.len(), w * h);
        ensure!(!labels.contains(&volbias_core::energy::OUTLIER), "image segmentation has no outlier label");
        let k = labels.iter().max().map_or(0, |m| m + 1);
        (full, Init::Labeling(Labeling::new(labels, k)?))
    };
    let num_labels = init.labeling()?.num_labels();
    let weights = a
        .w
        .as_ref()
        .map(|w| {
            ensure!(w.len() == num_labels, "--w has {} weights for {num_labels} labels", w.len());
            Ok(TargetWeights::new(w.clone())?)
        })
        .transpose()?;
    let variant = match a.variant {
        SegmentVariant::Standard => Variant::Standard,
        SegmentVariant::Bound => Variant::Bound,
        SegmentVariant::HighOrder => Variant::HighOrder,
        SegmentVariant::FixedW => Variant::FixedW(weights.clone().context("--variant fixed-w needs --w")?),
    };
    let base = SegmentSettings {
        lambda: a.lambda,
        gamma: a.gamma,
        label_cost: a.label_cost,
        bins: a.bins,
        sigma: a.sigma,
        breakpoints: a.breakpoints,
        max_iters: a.max_iters,
    };
    let error_of = |r: &SolveReport| truth.as_ref().map(|t| misclassification(r.labeling.labels(), t));

    if a.lambda_sweep {
        let rows: Vec<SweepRow> = (1..=30)
            .into_par_iter()
            .map(|l| {
                let s = SegmentSettings { lambda: l as f64, ..base.clone() };
                let r = segment_image(&image, &init, &variant, &s)?;
                let last = r.iterations.last().expect("initial state recorded");
                Ok(SweepRow { lambda: s.lambda, energy: r.final_energy(), iterations: r.iterations.len() - 1, volumes: last.volumes.clone(), error: error_of(&r) })
            })
            .collect::<Result<_>>()?;
        let json_text = serde_json::to_string_pretty(&json!({ "variant": a.variant, "rows": rows }))? + "\n";
        let mut text = String::new();
        for r in &rows {
            let vols = r.volumes.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(",");
            let err = r.error.map_or(String::new(), |e| format!(" error={e:.4}"));
            text.push_str(&format!("lambda={} energy={:.4} iterations={} volumes={vols}{err}\n", r.lambda, r.energy, r.iterations));
        }
        print!("{}", if a.output.json { &json_text } else { &text });
        if let Some(dir) = &a.output.out {
            io::write_file(&dir.join("sweep.json"), json_text.as_bytes())?;
        }
        return Ok(());
    }

    let t = Instant::now();
    let mut r = segment_image(&image, &init, &variant, &base)?;
    let wall = t.elapsed().as_secs_f64();
    r.wall_time_secs = Some(wall);
    let mut metrics = serde_json::Map::new();
    if let Some(e) = error_of(&r) {
        metrics.insert("misclassification".into(), json!(e));
    }
    let settings = json!({ "variant": a.variant, "image": { "width": image.width(), "height": image.height() }, "settings": base });
    let report = RunReport::new("segment", settings, &r, weights.as_ref(), Value::Object(metrics), false);
    if let Some(dir) = &a.output.out {
        io::write_file(&dir.join("labels.csv"), io::encode_labels(r.labeling.labels()).as_bytes())?;
        let mask = io::mask_image(image.width(), image.height(), r.labeling.labels()).map_err(anyhow::Error::msg)?;
        io::write_file(&dir.join("mask.pgm"), &io::encode_pgm(&mask))?;
    }
    emit(&report, wall, &a.output)
}

fn fit_settings_json(s: &FitSettings) -> Value {
    serde_json::to_value(s).expect("settings serialize")
}

fn default_cost(variable: bool) -> f64 {
    if variable {
        5.0
    } else {
        100.0
    }
}

fn fit_metrics(run: &FitRun, truth: Option<&[usize]>) -> Value {
    let labels = run.report.labeling.labels();
    let (counts, outliers) = assignment_histogram(labels, run.report.labeling.num_labels());
    let mut m = serde_json::Map::new();
    m.insert("outliers".into(), json!(outliers));
    m.insert("segment_sizes".into(), json!(counts.iter().copied().filter(|&c| c > 0).collect::<Vec<_>>()));
    if let Some(t) = truth {
        m.insert("accuracy".into(), json!(matched_accuracy(labels, t)));
        m.insert("misclassification".into(), json!(misclassification(labels, t)));
    }
    if let Some(w) = &run.graph_warning {
        m.insert("graph_warning".into(), json!(w));
    }
    Value::Object(m)
}

fn histogram_svg(run: &FitRun) -> String {
    let (counts, outliers) = assignment_histogram(run.report.labeling.labels(), run.report.labeling.num_labels());
    let mut bars: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
    bars.push(outliers);
    svg::histogram(&bars, true)
}

#[derive(Serialize)]
struct CompareRow {
    variable_w: bool,
    label_cost: f64,
    active_labels: usize,
    energy: f64,
    accuracy: Option<f64>,
}

fn compare_runs<F>(variable_cost: f64, fixed_costs: &[f64], truth: Option<&[usize]>, base: &FitSettings, fit: F, output: &Output) -> Result<()>
where
    F: Fn(&FitSettings) -> Result<FitRun> + Sync,
{
    let mut settings = vec![FitSettings { variable_w: true, label_cost: variable_cost, ..base.clone() }];
    settings.extend(fixed_costs.iter().map(|&h| FitSettings { variable_w: false, label_cost: h, ..base.clone() }));
    let rows: Vec<CompareRow> = settings
        .par_iter()
        .map(|s| {
            let run = fit(s)?;
            Ok(CompareRow {
                variable_w: s.variable_w,
                label_cost: s.label_cost,
                active_labels: run.report.labeling.active_labels(),
                energy: run.report.final_energy(),
                accuracy: truth.map(|t| matched_accuracy(run.report.labeling.labels(), t)),
            })
        })
        .collect::<Result<_>>()?;
    let json_text = serde_json::to_string_pretty(&json!({ "settings": fit_settings_json(base), "runs": rows }))? + "\n";
    if output.json {
        print!("{json_text}");
    } else {
        for r in &rows {
            let acc = r.accuracy.map_or(String::new(), |a| format!(" accuracy={a:.4}"));
            println!(
                "weights={} label_cost={} active_labels={} energy={:.4}{acc}",
                if r.variable_w { "variable" } else { "fixed" },
                r.label_cost,
                r.active_labels,
                r.energy
            );
        }
    }
    if let Some(dir) = &output.out {
        io::write_file(&dir.join("compare.json"), json_text.as_bytes())?;
    }
    Ok(())
}

fn fitlines(a: FitLinesArgs) -> Result<()> {
    prepare_out(&a.output)?;
    let (points, truth) = if a.synthesize {
        let d = synth::lines(&synth::LineSynthConfig::default(), a.seed);
        (d.points, Some(d.truth))
    } else {
        let path = a.points.as_ref().expect("clap requires points or synthesize");
        let pts = io::parse_points(&io::read_file(path)?).with_context(|| format!("reading {}", path.display()))?;
        let truth = a.truth.as_deref().map(|p| read_truth(p, pts.len())).transpose()?;
        (pts, truth)
    };
    ensure!(points.len() >= 2, "need at least two points");
    let variable = a.variant != FitVariant::FixedW;
    let base = FitSettings {
        sigma: a.sigma,
        label_cost: a.label_cost.unwrap_or(default_cost(variable)),
        outlier_cost: a.outlier_cost,
        lambda: a.lambda,
        smoothness_scale: a.scale,
        proposals: a.proposals,
        seed: a.seed,
        breakpoints: a.breakpoints,
        max_iters: a.max_iters,
        variable_w: variable,
        gamma: a.gamma,
        outliers_in_volume: a.outliers_in_volume,
    };
    if a.variant == FitVariant::Compare {
        return compare_runs(base.label_cost, &a.fixed_costs, truth.as_deref(), &base, |s| Ok(fit_points(&points, s)?), &a.output);
    }
    let t = Instant::now();
    let mut run = fit_points(&points, &base)?;
    let wall = t.elapsed().as_secs_f64();
    run.report.wall_time_secs = Some(wall);
    let report = RunReport::new("fitlines", fit_settings_json(&base), &run.report, None, fit_metrics(&run, truth.as_deref()), true);
    if let Some(dir) = &a.output.out {
        io::write_file(&dir.join("labels.csv"), io::encode_labels(run.report.labeling.labels()).as_bytes())?;
        io::write_file(&dir.join("scatter.svg"), svg::scatter(&points, run.report.labeling.labels(), 500.0).as_bytes())?;
        io::write_file(&dir.join("histogram.svg"), histogram_svg(&run).as_bytes())?;
    }
    emit(&report, wall, &a.output)
}

/// `ln` of the product of the bounding-box areas of both point sets.
pub fn default_match_outlier_cost(matches: &[MatchPair]) -> f64 {
    let area = |pts: &mut dyn Iterator<Item = [f64; 2]>| {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in pts {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        ((hi[0] - lo[0]) * (hi[1] - lo[1])).max(1.0)
    };
    (area(&mut matches.iter().map(|m| m.x)) * area(&mut matches.iter().map(|m| m.y))).ln()
}

fn fithomography(a: FitHomographyArgs) -> Result<()> {
    prepare_out(&a.output)?;
    let (matches, truth) = if a.synthesize {
        let d = synth::two_plane_matches(&synth::MatchSynthConfig::default(), a.seed);
        (d.matches, Some(d.truth))
    } else {
        let path = a.matches.as_ref().expect("clap requires matches or synthesize");
        let m = io::parse_matches(&io::read_file(path)?).with_context(|| format!("reading {}", path.display()))?;
        let truth = a.truth.as_deref().map(|p| read_truth(p, m.len())).transpose()?;
        (m, truth)
    };
    ensure!(matches.len() >= 4, "need at least four matches");
    ensure!(a.variance > 0.0, "--variance must be positive");
    let variable = a.variant != FitVariant::FixedW;
    let base = FitSettings {
        sigma: a.variance.sqrt(),
        label_cost: a.label_cost.unwrap_or(default_cost(variable)),
        outlier_cost: a.outlier_cost.unwrap_or_else(|| default_match_outlier_cost(&matches)),
        lambda: a.lambda,
        smoothness_scale: a.scale,
        proposals: a.proposals,
        seed: a.seed,
        breakpoints: a.breakpoints,
        max_iters: a.max_iters,
        variable_w: variable,
        gamma: a.gamma,
        outliers_in_volume: a.outliers_in_volume,
    };
    if a.variant == FitVariant::Compare {
        return compare_runs(base.label_cost, &a.fixed_costs, truth.as_deref(), &base, |s| Ok(fit_matches(&matches, s, a.variance)?), &a.output);
    }
    let t = Instant::now();
    let mut run = fit_matches(&matches, &base, a.variance)?;
    let wall = t.elapsed().as_secs_f64();
    run.report.wall_time_secs = Some(wall);
    let report = RunReport::new("fithomography", fit_settings_json(&base), &run.report, None, fit_metrics(&run, truth.as_deref()), true);
    if let Some(dir) = &a.output.out {
        io::write_file(&dir.join("labels.csv"), io::encode_labels(run.report.labeling.labels()).as_bytes())?;
        let xs: Vec<[f64; 2]> = matches.iter().map(|m| m.x).collect();
        io::write_file(&dir.join("scatter.svg"), svg::scatter(&xs, run.report.labeling.labels(), 500.0).as_bytes())?;
        io::write_file(&dir.join("histogram.svg"), histogram_svg(&run).as_bytes())?;
    }
    emit(&report, wall, &a.output)
}

fn gamma_sweep(a: GammaSweepArgs) -> Result<()> {
    prepare_out(&a.output)?;
    ensure!(a.k >= 1, "--k must be positive");
    let (image, truth) = match &a.image {
        Some(p) => {
            let img = io::read_image(p).with_context(|| format!("reading {}", p.display()))?;
            let t = a.truth.as_deref().map(|t| read_truth(t, img.width() * img.height())).transpose()?;
            (img, t)
        }
        None => {
            let (img, t) = gamma_image(a.seed);
            (img, Some(t))
        }
    };
    let s = SegmentSettings {
        lambda: a.lambda,
        gamma: 1.0,
        label_cost: a.label_cost,
        bins: a.bins,
        sigma: a.sigma,
        breakpoints: a.breakpoints,
        max_iters: a.max_iters,
    };
    let runs: Vec<GammaRun> = a
        .gammas
        .par_iter()
        .map(|&g| Ok(gamma_run(&image, truth.as_deref(), a.k, g, &s)?.0))
        .collect::<Result<_>>()?;
    let kl: Vec<f64> = runs.iter().map(|r| r.kl_to_uniform).collect();
    let kl_non_decreasing = kl.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let json_text =
        serde_json::to_string_pretty(&json!({ "k": a.k, "settings": s, "runs": runs, "kl_non_decreasing": kl_non_decreasing }))? + "\n";
    if a.output.json {
        print!("{json_text}");
    } else {
        for r in &runs {
            let vols = r.volumes.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(",");
            let err = if r.error.is_nan() { String::new() } else { format!(" error={:.4}", r.error) };
            println!("gamma={} active_labels={} kl_to_uniform={:.6} volumes={vols}{err}", r.gamma, r.active_labels, r.kl_to_uniform);
        }
        println!("kl_non_decreasing={kl_non_decreasing}");
    }
    if let Some(dir) = &a.output.out {
        io::write_file(&dir.join("gamma_sweep.json"), json_text.as_bytes())?;
    }
    Ok(())
}

fn synth_cmd(a: SynthArgs) -> Result<()> {
    let (data, truth): (Vec<u8>, Vec<usize>) = match a.kind {
        SynthKind::Overlapping | SynthKind::ThreeRegions => {
            let cfg = if a.kind == SynthKind::Overlapping {
                synth::RegionImageConfig::overlapping()
            } else {
                synth::RegionImageConfig::three_regions()
            };
            let r = synth::region_image(&cfg, a.seed);
            (io::encode_pgm(&r.image), r.truth)
        }
        SynthKind::Lines => {
            let d = synth::lines(&synth::LineSynthConfig::default(), a.seed);
            (io::encode_points(&d.points).into_bytes(), d.truth)
        }
        SynthKind::Matches => {
            let d = synth::two_plane_matches(&synth::MatchSynthConfig::default(), a.seed);
            (io::encode_matches(&d.matches).into_bytes(), d.truth)
        }
    };
    io::write_file(&a.out, &data)?;
    if let Some(t) = &a.truth_out {
        io::write_file(t, io::encode_labels(&truth).as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn box_init_requires_a_source() {
        assert!(Cli::try_parse_from(["volbias", "segment", "--image", "a.pgm"]).is_err());
        assert!(Cli::try_parse_from(["volbias", "segment", "--image", "a.pgm", "--boxes", "b", "--labels", "c"]).is_err());
        let ok = Cli::try_parse_from(["volbias", "segment", "--image", "a.pgm", "--boxes", "b", "--w", "0.75,0.25"]).unwrap();
        match ok.command {
            Command::Segment(s) => assert_eq!(s.w, Some(vec![0.75, 0.25])),
            _ => unreachable!(),
        }
    }

    #[test]
    fn crop_keeps_row_major_order() {
        let labels: Vec<usize> = (0..12).collect();
        assert_eq!(crop_labels(&labels, 4, [1, 1, 3, 3]), vec![5, 6, 9, 10]);
    }
}
