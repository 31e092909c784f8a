//! Per-segment probability models and their maximum-likelihood fits.
//!
//! Every model reports costs as negative log-likelihoods in nats.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{apply_h, det2, frobenius3, inv2, inv3, mat3_mul, sym_eigen, sym_eigen2, Mat2, Mat3};
use crate::math::{ln, sq, sqrt, LN_2PI};
use crate::{Error, Result};

/// Default mass floor for histogram bins, in units of one count.
pub const DEFAULT_HISTOGRAM_EPSILON: f64 = 1e-4;
/// Diagonal loading applied to near-singular homography covariances (px²).
pub const COVARIANCE_FLOOR: f64 = 1e-6;

/// A correspondence between a point in the first image and one in the second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPair {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

/// One observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Datum {
    /// RGB color, channels in `[0, 1]`.
    Color([f64; 3]),
    /// Gray level in `[0, 1]`.
    Gray(f64),
    Point([f64; 2]),
    Match(MatchPair),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramModel {
    pub bins_per_channel: usize,
    /// Normalized mass per bin, `bins_per_channel³` entries, red-major.
    pub masses: Vec<f64>,
    pub smoothing_epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianModel {
    pub mu: f64,
    pub sigma: f64,
}

/// A 2-D line with Gaussian perpendicular noise of known level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineModel {
    pub point: [f64; 2],
    /// Unit direction.
    pub direction: [f64; 2],
    pub sigma: f64,
}

/// How the residual covariance of a homography is obtained on refit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovarianceMode {
    Full,
    Isotropic,
    /// Variance fixed to the given value (px²) on both axes.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomographyModel {
    /// Frobenius-normalized homography mapping first-image to second-image points.
    pub h: Mat3,
    pub h_inv: Mat3,
    pub covariance: Mat2,
    pub covariance_mode: CovarianceMode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Histogram(HistogramModel),
    Gaussian(GaussianModel),
    Line(LineModel),
    Homography(HomographyModel),
}

/// Bin of a channel value: `floor(v·B)` clamped to `B-1`.
#[inline]
pub fn channel_bin(v: f64, bins: usize) -> usize {
    let b = crate::math::floor(v * bins as f64);
    if b <= 0.0 {
        0
    } else {
        (b as usize).min(bins - 1)
    }
}

#[inline]
pub fn color_bin(c: &[f64; 3], bins: usize) -> usize {
    (channel_bin(c[0], bins) * bins + channel_bin(c[1], bins)) * bins + channel_bin(c[2], bins)
}

pub fn fit_histogram(data: &[[f64; 3]], bins_per_channel: usize, smoothing_epsilon: f64) -> Result<HistogramModel> {
    if bins_per_channel == 0 {
        return Err(Error::Invalid("bins_per_channel must be at least 1"));
    }
    if !(smoothing_epsilon >= 0.0) {
        return Err(Error::Invalid("smoothing_epsilon must be nonnegative"));
    }
    if data.is_empty() {
        return Err(Error::EmptySegment);
    }
    let total_bins = bins_per_channel * bins_per_channel * bins_per_channel;
    let mut counts = vec![0.0; total_bins];
    for c in data {
        counts[color_bin(c, bins_per_channel)] += 1.0;
    }
    let denom = data.len() as f64 + smoothing_epsilon * total_bins as f64;
    let masses = counts.iter().map(|&n| (n + smoothing_epsilon) / denom).collect();
    Ok(HistogramModel { bins_per_channel, masses, smoothing_epsilon })
}

pub fn fit_gaussian_mean(data: &[f64], sigma: f64) -> Result<GaussianModel> {
    if !(sigma > 0.0) {
        return Err(Error::Invalid("sigma must be positive"));
    }
    if data.is_empty() {
        return Err(Error::EmptySegment);
    }
    // shifted by the first sample so constant data is reproduced exactly
    let first = data[0];
    let mu = first + data.iter().map(|&v| v - first).sum::<f64>() / data.len() as f64;
    Ok(GaussianModel { mu, sigma })
}

/// Total-least-squares line through the points.
pub fn fit_line(data: &[[f64; 2]], sigma: f64) -> Result<LineModel> {
    if !(sigma > 0.0) {
        return Err(Error::Invalid("sigma must be positive"));
    }
    let first = data.first().ok_or(Error::DegenerateFit("line needs two distinct points"))?;
    if !data.iter().any(|p| p != first) {
        return Err(Error::DegenerateFit("line needs two distinct points"));
    }
    let n = data.len() as f64;
    let cx = data.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = data.iter().map(|p| p[1]).sum::<f64>() / n;
    let mut scatter = [[0.0; 2]; 2];
    for p in data {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        scatter[0][0] += dx * dx;
        scatter[0][1] += dx * dy;
        scatter[1][1] += dy * dy;
    }
    scatter[1][0] = scatter[0][1];
    let (_, vecs) = sym_eigen2(&scatter);
    Ok(LineModel { point: [cx, cy], direction: canonical_direction(vecs[0]), sigma })
}

/// Line through two points, used for minimal-sample proposals.
pub fn line_through(a: [f64; 2], b: [f64; 2], sigma: f64) -> Result<LineModel> {
    fit_line(&[a, b], sigma)
}

fn canonical_direction(d: [f64; 2]) -> [f64; 2] {
    let n = sqrt(d[0] * d[0] + d[1] * d[1]);
    let d = [d[0] / n, d[1] / n];
    if d[0] < 0.0 || (d[0] == 0.0 && d[1] < 0.0) {
        [-d[0], -d[1]]
    } else {
        d
    }
}

impl LineModel {
    pub fn perpendicular_distance(&self, p: [f64; 2]) -> f64 {
        let (dx, dy) = (p[0] - self.point[0], p[1] - self.point[1]);
        (dx * self.direction[1] - dy * self.direction[0]).abs()
    }
}

/// Similarity transform moving the centroid to the origin with mean distance √2.
fn normalizing_transform(points: impl Iterator<Item = [f64; 2]> + Clone) -> Option<Mat3> {
    let n = points.clone().count() as f64;
    let (sx, sy) = points.clone().fold((0.0, 0.0), |(a, b), p| (a + p[0], b + p[1]));
    let (cx, cy) = (sx / n, sy / n);
    let mean_dist = points.map(|p| sqrt(sq(p[0] - cx) + sq(p[1] - cy))).sum::<f64>() / n;
    if !(mean_dist > 1e-300) {
        return None;
    }
    let s = core::f64::consts::SQRT_2 / mean_dist;
    Some([[s, 0.0, -s * cx], [0.0, s, -s * cy], [0.0, 0.0, 1.0]])
}

/// Normalized direct linear transform estimate of the homography `x → y`.
pub fn dlt_homography(matches: &[MatchPair]) -> Result<Mat3> {
    if matches.len() < 4 {
        return Err(Error::DegenerateFit("homography needs four matches"));
    }
    let t1 = normalizing_transform(matches.iter().map(|m| m.x)).ok_or(Error::DegenerateFit("coincident points"))?;
    let t2 = normalizing_transform(matches.iter().map(|m| m.y)).ok_or(Error::DegenerateFit("coincident points"))?;
    let mut ata = [0.0; 81];
    for m in matches {
        let p = apply_h(&t1, m.x).ok_or(Error::DegenerateFit("normalization"))?;
        let q = apply_h(&t2, m.y).ok_or(Error::DegenerateFit("normalization"))?;
        let rows = [
            [0.0, 0.0, 0.0, -p[0], -p[1], -1.0, q[1] * p[0], q[1] * p[1], q[1]],
            [p[0], p[1], 1.0, 0.0, 0.0, 0.0, -q[0] * p[0], -q[0] * p[1], -q[0]],
        ];
        for r in &rows {
            for i in 0..9 {
                for j in 0..9 {
                    ata[i * 9 + j] += r[i] * r[j];
                }
            }
        }
    }
    let (vals, vecs) = sym_eigen(&ata, 9);
    let top = vals[8].abs().max(1e-300);
    if vals[1] <= 1e-10 * top {
        return Err(Error::DegenerateFit("rank-deficient DLT system"));
    }
    let v = &vecs[0];
    let hn = [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]];
    let t2_inv = inv3(&t2).ok_or(Error::DegenerateFit("normalization"))?;
    let h = mat3_mul(&t2_inv, &mat3_mul(&hn, &t1));
    normalize_h(h)
}

fn normalize_h(h: Mat3) -> Result<Mat3> {
    let n = frobenius3(&h);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::DegenerateFit("zero homography"));
    }
    let mut out = h;
    let mut largest = 0.0f64;
    for v in out.iter_mut().flatten() {
        *v /= n;
        if v.abs() > largest.abs() {
            largest = *v;
        }
    }
    if largest < 0.0 {
        out.iter_mut().flatten().for_each(|v| *v = -*v);
    }
    if crate::linalg::det3(&out).abs() < 1e-14 {
        return Err(Error::DegenerateFit("singular homography"));
    }
    Ok(out)
}

impl HomographyModel {
    /// Builds a model from a homography and covariance, normalizing `h`.
    pub fn new(h: Mat3, covariance: Mat2, covariance_mode: CovarianceMode) -> Result<Self> {
        let h = normalize_h(h)?;
        let h_inv = inv3(&h).ok_or(Error::DegenerateFit("singular homography"))?;
        Ok(Self { h, h_inv, covariance: floor_covariance(covariance), covariance_mode })
    }

    /// Forward and backward transfer residuals `(y - Hx, x - H⁻¹y)`.
    pub fn residuals(&self, m: &MatchPair) -> Option<([f64; 2], [f64; 2])> {
        let fy = apply_h(&self.h, m.x)?;
        let bx = apply_h(&self.h_inv, m.y)?;
        Some(([m.y[0] - fy[0], m.y[1] - fy[1]], [m.x[0] - bx[0], m.x[1] - bx[1]]))
    }

    /// Squared symmetric Mahalanobis transfer distance.
    pub fn transfer_distance_sq(&self, m: &MatchPair) -> f64 {
        let Some((r1, r2)) = self.residuals(m) else {
            return f64::INFINITY;
        };
        let Some(ci) = inv2(&self.covariance) else {
            return f64::INFINITY;
        };
        quad2(&ci, r1) + quad2(&ci, r2)
    }
}

fn quad2(m: &Mat2, r: [f64; 2]) -> f64 {
    r[0] * (m[0][0] * r[0] + m[0][1] * r[1]) + r[1] * (m[1][0] * r[0] + m[1][1] * r[1])
}

fn floor_covariance(c: Mat2) -> Mat2 {
    let (vals, _) = sym_eigen2(&c);
    if vals[1] < COVARIANCE_FLOOR || !(det2(&c) > 0.0) {
        [[c[0][0] + COVARIANCE_FLOOR, c[0][1]], [c[1][0], c[1][1] + COVARIANCE_FLOOR]]
    } else {
        c
    }
}

fn residual_covariance(h: &HomographyModel, matches: &[MatchPair], mode: CovarianceMode) -> Mat2 {
    if let CovarianceMode::Fixed(var) = mode {
        return [[var, 0.0], [0.0, var]];
    }
    // likelihood maximizer for `nll`: outer products summed per match
    let mut acc = [[0.0; 2]; 2];
    let mut n = 0usize;
    for m in matches {
        if let Some((r1, r2)) = h.residuals(m) {
            for r in [r1, r2] {
                acc[0][0] += r[0] * r[0];
                acc[0][1] += r[0] * r[1];
                acc[1][1] += r[1] * r[1];
            }
            n += 1;
        }
    }
    let n = n.max(1) as f64;
    let full = [[acc[0][0] / n, acc[0][1] / n], [acc[0][1] / n, acc[1][1] / n]];
    match mode {
        CovarianceMode::Isotropic => {
            let v = 0.5 * (full[0][0] + full[1][1]);
            [[v, 0.0], [0.0, v]]
        }
        _ => full,
    }
}

/// DLT homography followed by the residual covariance selected by `mode`.
pub fn fit_homography(matches: &[MatchPair], mode: CovarianceMode) -> Result<HomographyModel> {
    let h = dlt_homography(matches)?;
    let provisional = HomographyModel::new(h, [[1.0, 0.0], [0.0, 1.0]], mode)?;
    let cov = residual_covariance(&provisional, matches, mode);
    Ok(HomographyModel { covariance: floor_covariance(cov), ..provisional })
}

impl HistogramModel {
    pub fn nll(&self, c: &[f64; 3]) -> f64 {
        let m = self.masses[color_bin(c, self.bins_per_channel)];
        if m > 0.0 {
            -ln(m)
        } else {
            f64::INFINITY
        }
    }
}

impl GaussianModel {
    pub fn nll(&self, v: f64) -> f64 {
        let d = v - self.mu;
        d * d / (2.0 * self.sigma * self.sigma) + ln(self.sigma) + 0.5 * LN_2PI
    }
}

impl LineModel {
    pub fn nll(&self, p: [f64; 2]) -> f64 {
        let d = self.perpendicular_distance(p);
        d * d / (2.0 * self.sigma * self.sigma) + ln(self.sigma) + 0.5 * LN_2PI
    }
}

impl HomographyModel {
    pub fn nll(&self, m: &MatchPair) -> f64 {
        let d2 = self.transfer_distance_sq(m);
        if !d2.is_finite() {
            return f64::INFINITY;
        }
        0.5 * d2 + LN_2PI * 2.0 + 0.5 * ln(det2(&self.covariance))
    }
}

/// `-ln P(datum | model)`; `+inf` for zero-probability data.
pub fn neg_log_likelihood(model: &Model, datum: &Datum) -> Result<f64> {
    match (model, datum) {
        (Model::Histogram(h), Datum::Color(c)) => Ok(h.nll(c)),
        (Model::Gaussian(g), Datum::Gray(v)) => Ok(g.nll(*v)),
        (Model::Line(l), Datum::Point(p)) => Ok(l.nll(*p)),
        (Model::Homography(h), Datum::Match(m)) => Ok(h.nll(m)),
        _ => Err(Error::TypeMismatch),
    }
}

impl Model {
    /// Re-estimates the model from the listed members of `data`, keeping the
    /// fixed parameters (bins, smoothing, sigma, covariance mode).
    pub fn refit(&self, data: &[Datum], members: &[usize]) -> Result<Model> {
        match self {
            Model::Histogram(h) => {
                let colors = collect(data, members, |d| match d {
                    Datum::Color(c) => Some(*c),
                    _ => None,
                })?;
                fit_histogram(&colors, h.bins_per_channel, h.smoothing_epsilon).map(Model::Histogram)
            }
            Model::Gaussian(g) => {
                let vals = collect(data, members, |d| match d {
                    Datum::Gray(v) => Some(*v),
                    _ => None,
                })?;
                fit_gaussian_mean(&vals, g.sigma).map(Model::Gaussian)
            }
            Model::Line(l) => {
                let pts = collect(data, members, |d| match d {
                    Datum::Point(p) => Some(*p),
                    _ => None,
                })?;
                if pts.is_empty() {
                    return Err(Error::EmptySegment);
                }
                fit_line(&pts, l.sigma).map(Model::Line)
            }
            Model::Homography(h) => {
                let ms = collect(data, members, |d| match d {
                    Datum::Match(m) => Some(*m),
                    _ => None,
                })?;
                if ms.is_empty() {
                    return Err(Error::EmptySegment);
                }
                fit_homography(&ms, h.covariance_mode).map(Model::Homography)
            }
        }
    }
}

/// A model class with its fixed parameters, used to fit models from scratch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelFamily {
    Histogram { bins_per_channel: usize, smoothing_epsilon: f64 },
    Gaussian { sigma: f64 },
    Line { sigma: f64 },
    Homography { covariance_mode: CovarianceMode },
}

impl ModelFamily {
    pub fn fit(&self, data: &[Datum], members: &[usize]) -> Result<Model> {
        if members.is_empty() {
            return Err(Error::EmptySegment);
        }
        let proto = match *self {
            ModelFamily::Histogram { bins_per_channel, smoothing_epsilon } => {
                Model::Histogram(HistogramModel { bins_per_channel, masses: Vec::new(), smoothing_epsilon })
            }
            ModelFamily::Gaussian { sigma } => Model::Gaussian(GaussianModel { mu: 0.0, sigma }),
            ModelFamily::Line { sigma } => Model::Line(LineModel { point: [0.0; 2], direction: [1.0, 0.0], sigma }),
            ModelFamily::Homography { covariance_mode } => {
                let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
                Model::Homography(HomographyModel { h: id, h_inv: id, covariance: [[1.0, 0.0], [0.0, 1.0]], covariance_mode })
            }
        };
        proto.refit(data, members)
    }

    /// Number of data items in a minimal sample for proposals.
    pub fn minimal_sample(&self) -> usize {
        match self {
            ModelFamily::Histogram { .. } | ModelFamily::Gaussian { .. } => 1,
            ModelFamily::Line { .. } => 2,
            ModelFamily::Homography { .. } => 4,
        }
    }
}

fn collect<T>(data: &[Datum], members: &[usize], f: impl Fn(&Datum) -> Option<T>) -> Result<Vec<T>> {
    members.iter().map(|&i| f(&data[i]).ok_or(Error::TypeMismatch)).collect()
}
