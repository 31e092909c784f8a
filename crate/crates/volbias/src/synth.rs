//! Seeded synthetic data for the segmentation and fitting experiments.
//!
//! Gray levels are quantized to 8 bits so that writing an image and reading it
//! back gives the same data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use volbias_core::energy::OUTLIER;
use volbias_core::linalg::{apply_h, Mat3};
use volbias_core::model::MatchPair;

use crate::io::GrayImage;

/// Gray image whose pixels are drawn from one normal distribution per region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionImageConfig {
    pub width: usize,
    pub height: usize,
    /// Fraction of columns per region, left to right; sums to 1.
    pub fractions: Vec<f64>,
    pub means: Vec<f64>,
    pub sigma: f64,
}

impl RegionImageConfig {
    /// 100×100, a left strip of 25% with N(0.45, 0.1), the rest N(0.55, 0.1).
    pub fn overlapping() -> Self {
        Self { width: 100, height: 100, fractions: vec![0.25, 0.75], means: vec![0.45, 0.55], sigma: 0.1 }
    }

    /// Three vertical strips of unequal width.
    pub fn three_regions() -> Self {
        Self { width: 60, height: 60, fractions: vec![0.1, 0.3, 0.6], means: vec![0.2, 0.5, 0.8], sigma: 0.12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionImage {
    pub image: GrayImage,
    /// Region index per pixel, row-major.
    pub truth: Vec<usize>,
}

pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Column boundaries of the regions.
fn region_edges(width: usize, fractions: &[f64]) -> Vec<usize> {
    let mut acc = 0.0;
    let mut edges = Vec::with_capacity(fractions.len());
    for f in fractions {
        acc += f;
        edges.push(((acc * width as f64).round() as usize).min(width));
    }
    if let Some(last) = edges.last_mut() {
        *last = width;
    }
    edges
}

pub fn region_image(cfg: &RegionImageConfig, seed: u64) -> RegionImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = region_edges(cfg.width, &cfg.fractions);
    let noise: Vec<Normal<f64>> = cfg.means.iter().map(|&m| Normal::new(m, cfg.sigma).expect("sigma is positive")).collect();
    let mut pixels = Vec::with_capacity(cfg.width * cfg.height);
    let mut truth = Vec::with_capacity(cfg.width * cfg.height);
    for _ in 0..cfg.height {
        for x in 0..cfg.width {
            let k = edges.iter().position(|&e| x < e).unwrap_or(edges.len() - 1);
            pixels.push(quantize(noise[k].sample(&mut rng)));
            truth.push(k);
        }
    }
    RegionImage { image: GrayImage { width: cfg.width, height: cfg.height, pixels }, truth }
}

/// Two-tone image: a centered rectangle at level `fg`, the rest at `bg`.
pub fn two_tone(width: usize, height: usize, fg: u8, bg: u8) -> RegionImage {
    let (x0, x1, y0, y1) = (width / 4, 3 * width / 4, height / 4, 3 * height / 4);
    let mut pixels = Vec::with_capacity(width * height);
    let mut truth = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let inside = x >= x0 && x < x1 && y >= y0 && y < y1;
            pixels.push(if inside { fg } else { bg });
            truth.push(inside as usize);
        }
    }
    RegionImage { image: GrayImage { width, height, pixels }, truth }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineSynthConfig {
    pub num_lines: usize,
    /// Sampling probability per line; normalized internally.
    pub probabilities: Vec<f64>,
    pub inliers: usize,
    pub outliers: usize,
    pub sigma: f64,
    /// Smallest angle between any two generated lines, in degrees.
    pub min_angle_deg: f64,
}

impl Default for LineSynthConfig {
    fn default() -> Self {
        Self { num_lines: 4, probabilities: vec![0.4, 0.3, 0.2, 0.1], inliers: 1000, outliers: 200, sigma: 0.025, min_angle_deg: 15.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineData {
    pub points: Vec<[f64; 2]>,
    /// Generating line per point, or [`OUTLIER`].
    pub truth: Vec<usize>,
    /// `(point, unit direction)` of each line.
    pub lines: Vec<([f64; 2], [f64; 2])>,
}

/// End points of the chord of a line through the unit square.
fn clip_to_unit_square(p: [f64; 2], d: [f64; 2]) -> Option<([f64; 2], [f64; 2])> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..2 {
        if d[i].abs() < 1e-12 {
            if p[i] < 0.0 || p[i] > 1.0 {
                return None;
            }
        } else {
            let (a, b) = ((0.0 - p[i]) / d[i], (1.0 - p[i]) / d[i]);
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
    }
    (hi > lo).then(|| ([p[0] + lo * d[0], p[1] + lo * d[1]], [p[0] + hi * d[0], p[1] + hi * d[1]]))
}

/// Points sampled from random lines crossing the unit square, with isotropic
/// Gaussian noise, plus uniform outliers. Points are shuffled.
pub fn lines(cfg: &LineSynthConfig, seed: u64) -> LineData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines: Vec<([f64; 2], [f64; 2])> = Vec::with_capacity(cfg.num_lines);
    let mut chords = Vec::with_capacity(cfg.num_lines);
    let min_angle = cfg.min_angle_deg.to_radians();
    let mut guard = 0;
    while lines.len() < cfg.num_lines {
        guard += 1;
        let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let p = [rng.random_range(0.25..0.75), rng.random_range(0.25..0.75)];
        let d = [theta.cos(), theta.sin()];
        let far_enough = lines.iter().all(|(_, e): &([f64; 2], [f64; 2])| {
            let cos = (d[0] * e[0] + d[1] * e[1]).abs().min(1.0);
            cos.acos() >= min_angle
        });
        if !far_enough && guard < 10_000 {
            continue;
        }
        if let Some(ch) = clip_to_unit_square(p, d) {
            lines.push((p, d));
            chords.push(ch);
        }
    }
    let total: f64 = cfg.probabilities.iter().take(cfg.num_lines).sum();
    let noise = Normal::new(0.0, cfg.sigma).expect("sigma is positive");
    let mut items: Vec<([f64; 2], usize)> = Vec::with_capacity(cfg.inliers + cfg.outliers);
    for _ in 0..cfg.inliers {
        let mut u = rng.random_range(0.0..total);
        let mut k = 0;
        while k + 1 < cfg.num_lines && u >= cfg.probabilities[k] {
            u -= cfg.probabilities[k];
            k += 1;
        }
        let (a, b) = chords[k];
        let t: f64 = rng.random();
        let x = [a[0] + t * (b[0] - a[0]) + noise.sample(&mut rng), a[1] + t * (b[1] - a[1]) + noise.sample(&mut rng)];
        items.push((x, k));
    }
    for _ in 0..cfg.outliers {
        items.push(([rng.random(), rng.random()], OUTLIER));
    }
    rand::seq::SliceRandom::shuffle(items.as_mut_slice(), &mut rng);
    LineData { points: items.iter().map(|i| i.0).collect(), truth: items.iter().map(|i| i.1).collect(), lines }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchSynthConfig {
    pub matches: usize,
    /// Share of matches on the first plane.
    pub split: f64,
    /// Pixel noise on the second-image points.
    pub noise: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for MatchSynthConfig {
    fn default() -> Self {
        Self { matches: 400, split: 0.7, noise: 1.0, width: 640.0, height: 480.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchData {
    pub matches: Vec<MatchPair>,
    pub truth: Vec<usize>,
    pub homographies: Vec<Mat3>,
}

/// Matches from two planes: the first covers the left part of the first image
/// and the second the right part, each mapped by its own homography.
pub fn two_plane_matches(cfg: &MatchSynthConfig, seed: u64) -> MatchData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h0: Mat3 = [[0.95, 0.03, 20.0], [-0.02, 1.02, 8.0], [2e-5, -1e-5, 1.0]];
    let h1: Mat3 = [[1.10, -0.20, -35.0], [0.12, 0.90, 30.0], [4e-4, 1e-4, 1.0]];
    let noise = Normal::new(0.0, cfg.noise.max(1e-12)).expect("noise is positive");
    let n0 = (cfg.split * cfg.matches as f64).round() as usize;
    let boundary = cfg.width * cfg.split;
    let mut matches = Vec::with_capacity(cfg.matches);
    let mut truth = Vec::with_capacity(cfg.matches);
    for i in 0..cfg.matches {
        let k = (i >= n0) as usize;
        let x = if k == 0 {
            [rng.random_range(0.0..boundary), rng.random_range(0.0..cfg.height)]
        } else {
            [rng.random_range(boundary..cfg.width), rng.random_range(0.0..cfg.height)]
        };
        let h = if k == 0 { &h0 } else { &h1 };
        let y = apply_h(h, x).expect("finite homography");
        matches.push(MatchPair { x, y: [y[0] + noise.sample(&mut rng), y[1] + noise.sample(&mut rng)] });
        truth.push(k);
    }
    MatchData { matches, truth, homographies: vec![h0, h1] }
}

/// Matches related by the identity map on a jittered grid.
pub fn identity_matches(count: usize, seed: u64) -> Vec<MatchPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x = [rng.random_range(0.0..640.0), rng.random_range(0.0..480.0)];
            MatchPair { x, y: x }
        })
        .collect()
}
