//! Hypothesis evaluation by geometric consistency, and the search over
//! orientation/bias hypotheses.
//!
//! Under a hypothesis `(alpha, bias)` every path sample yields a segment that
//! must contain the UE. The error metric is the mean pairwise distance
//! between the segments of different paths (same sample index), and the UE
//! distribution is the mean and covariance of the pairwise closest-approach
//! midpoints.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{aoa_endpoint, segment_closest, ue_segment, wrap_angle, PairPoint, Point3, Segment3};
use crate::measurement::{draw_samples, MeasurementSampleSet, PathMeasurement};

pub type Matrix3 = [[f64; 3]; 3];

/// Candidate UE orientation (radians) and clock bias (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub alpha: f64,
    pub bias: f64,
}

impl Hypothesis {
    /// Builds a hypothesis with `alpha` wrapped into `[0, 2π)`.
    pub fn new(alpha: f64, bias: f64) -> Self {
        Self { alpha: wrap_angle(alpha), bias }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisEvaluation {
    /// Mean pair distance over the feasible pairs; `+∞` when none survive.
    pub metric: f64,
    /// Mean of the pair midpoints. Equal to the BS position for infeasible
    /// hypotheses.
    pub mu_ue: Point3,
    /// Population covariance of the pair midpoints.
    pub sigma_ue: Matrix3,
    pub pair_points: Vec<PairPoint>,
    /// Fraction of the `N_s · L(L-1)/2` pairs that were feasible.
    pub feasible_fraction: f64,
}

impl HypothesisEvaluation {
    pub fn is_feasible(&self) -> bool {
        self.metric.is_finite()
    }
}

/// Builds the segment table `segs[n][l]`; `None` marks an infeasible sample.
fn segment_table(samples: &MeasurementSampleSet, bs: Point3, h: &Hypothesis) -> Vec<Vec<Option<Segment3>>> {
    (0..samples.n_s)
        .map(|n| {
            samples
                .samples
                .iter()
                .map(|path| ue_segment(bs, &path[n], h).ok())
                .collect()
        })
        .collect()
}

fn check_paths(samples: &MeasurementSampleSet) -> Result<()> {
    let l = samples.n_paths();
    if l < 2 {
        return Err(Error::Config(format!("at least two paths are required, got {l}")));
    }
    if samples.n_s == 0 || samples.samples.iter().any(|p| p.len() != samples.n_s) {
        return Err(Error::Config("sample set is empty or ragged".into()));
    }
    Ok(())
}

/// Visits every feasible pair in a fixed order (sample, then `l < l'`).
/// Returns the number of pairs visited and the total pair count.
fn for_each_pair(
    samples: &MeasurementSampleSet,
    bs: Point3,
    h: &Hypothesis,
    mut f: impl FnMut(PairPoint),
) -> (usize, usize) {
    let table = segment_table(samples, bs, h);
    let l = samples.n_paths();
    let mut used = 0;
    for (n, segs) in table.iter().enumerate() {
        for i in 0..l {
            let Some(p) = &segs[i] else { continue };
            for j in i + 1..l {
                let Some(q) = &segs[j] else { continue };
                let mut pp = segment_closest(p, q);
                pp.pair = (i, j);
                pp.sample_index = n;
                f(pp);
                used += 1;
            }
        }
    }
    (used, samples.n_s * l * (l - 1) / 2)
}

/// Metric only; bit-identical to `evaluate(..).metric`.
pub fn evaluate_metric(samples: &MeasurementSampleSet, bs: Point3, h: &Hypothesis) -> Result<(f64, f64)> {
    check_paths(samples)?;
    let mut sum = 0.0;
    let (used, total) = for_each_pair(samples, bs, h, |pp| sum += pp.distance);
    if used == 0 {
        return Ok((f64::INFINITY, 0.0));
    }
    Ok((sum / used as f64, used as f64 / total as f64))
}

/// Error metric and UE distribution under hypothesis `h`.
pub fn evaluate(samples: &MeasurementSampleSet, bs: Point3, h: &Hypothesis) -> Result<HypothesisEvaluation> {
    check_paths(samples)?;
    let mut points = Vec::new();
    let mut sum = 0.0;
    let (used, total) = for_each_pair(samples, bs, h, |pp| {
        sum += pp.distance;
        points.push(pp);
    });
    if used == 0 {
        return Ok(HypothesisEvaluation {
            metric: f64::INFINITY,
            mu_ue: bs,
            sigma_ue: [[0.0; 3]; 3],
            pair_points: points,
            feasible_fraction: 0.0,
        });
    }
    let k = used as f64;
    let mut mu = Point3::ORIGIN;
    for p in &points {
        mu = mu + p.midpoint;
    }
    mu = mu * (1.0 / k);
    let mut sigma = [[0.0; 3]; 3];
    for p in &points {
        let d = (p.midpoint - mu).to_array();
        for r in 0..3 {
            for c in 0..3 {
                sigma[r][c] += d[r] * d[c];
            }
        }
    }
    for row in sigma.iter_mut() {
        for v in row.iter_mut() {
            *v /= k;
        }
    }
    Ok(HypothesisEvaluation {
        metric: sum / k,
        mu_ue: mu,
        sigma_ue: sigma,
        pair_points: points,
        feasible_fraction: k / total as f64,
    })
}

/// Uniform grid `start:stop:count`, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::Config("grid must have at least one node".into()));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::Config("grid bounds must be finite".into()));
        }
        if self.count == 1 {
            return Ok(vec![self.start]);
        }
        if self.stop <= self.start {
            return Err(Error::Config("grid stop must exceed start".into()));
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        Ok((0..self.count).map(|i| self.start + step * i as f64).collect())
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;

    /// Parses `start:stop:count`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<_> = s.split(':').collect();
        let bad = || Error::Config(format!("grid spec must be start:stop:count, got `{s}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let g = GridSpec {
            start: parts[0].trim().parse().map_err(|_| bad())?,
            stop: parts[1].trim().parse().map_err(|_| bad())?,
            count: parts[2].trim().parse().map_err(|_| bad())?,
        };
        g.values()?;
        Ok(g)
    }
}

pub const DEFAULT_ALPHA_NODES: usize = 72;
pub const DEFAULT_BIAS_NODES: usize = 41;

/// `count` nodes uniformly covering `[0, 2π)`.
pub fn default_alpha_grid(count: usize) -> Vec<f64> {
    (0..count).map(|i| TAU * i as f64 / count as f64).collect()
}

/// Bias window `[max(0, τ_min − 2R), τ_min − 0.1]`: every path length must
/// stay positive, and the range `R` is the only prior on the geometry.
pub fn default_bias_grid(min_toa: f64, range_r: f64, count: usize) -> Result<Vec<f64>> {
    let hi = min_toa - 0.1;
    let lo = (min_toa - 2.0 * range_r).max(0.0);
    if !(hi > lo) {
        return Err(Error::Config(format!(
            "empty bias window [{lo}, {hi}] for min TOA {min_toa} and range {range_r}"
        )));
    }
    GridSpec { start: lo, stop: hi, count }.values()
}

/// Metric over a hypothesis grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSurface {
    pub alpha_grid: Vec<f64>,
    pub bias_grid: Vec<f64>,
    /// `metric[i][j]` for `alpha_grid[i]`, `bias_grid[j]`.
    pub metric: Vec<Vec<f64>>,
    pub argmin: Hypothesis,
    pub argmin_index: (usize, usize),
}

impl ErrorSurface {
    pub fn min_metric(&self) -> f64 {
        let (i, j) = self.argmin_index;
        self.metric[i][j]
    }

    /// CSV with header `alpha,bias,metric`, alpha-major.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,bias,metric\n");
        for (i, a) in self.alpha_grid.iter().enumerate() {
            for (j, b) in self.bias_grid.iter().enumerate() {
                let _ = writeln!(out, "{a},{b},{}", self.metric[i][j]);
            }
        }
        out
    }
}

fn check_grid(name: &str, g: &[f64]) -> Result<()> {
    if g.is_empty() {
        return Err(Error::Config(format!("{name} grid is empty")));
    }
    if g.iter().any(|v| !v.is_finite()) || g.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("{name} grid must be finite and strictly increasing")));
    }
    Ok(())
}

/// Evaluates every node of `alpha_grid × bias_grid`.
///
/// Nodes are evaluated in parallel; the result does not depend on the
/// evaluation order. Ties in the argmin go to the smallest bias, then the
/// smallest alpha.
pub fn grid_search(
    samples: &MeasurementSampleSet,
    bs: Point3,
    alpha_grid: &[f64],
    bias_grid: &[f64],
) -> Result<ErrorSurface> {
    check_paths(samples)?;
    check_grid("alpha", alpha_grid)?;
    check_grid("bias", bias_grid)?;
    let nb = bias_grid.len();
    let flat: Vec<f64> = (0..alpha_grid.len() * nb)
        .into_par_iter()
        .map(|k| {
            let h = Hypothesis { alpha: alpha_grid[k / nb], bias: bias_grid[k % nb] };
            evaluate_metric(samples, bs, &h).map(|(m, _)| m)
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(usize, usize)> = None;
    for j in 0..nb {
        for i in 0..alpha_grid.len() {
            let m = flat[i * nb + j];
            if !m.is_finite() {
                continue;
            }
            match best {
                Some((bi, bj)) if flat[bi * nb + bj] <= m => {}
                _ => best = Some((i, j)),
            }
        }
    }
    let (bi, bj) = best.ok_or_else(|| Error::EstimationFailure("no feasible hypothesis on the grid".into()))?;
    Ok(ErrorSurface {
        alpha_grid: alpha_grid.to_vec(),
        bias_grid: bias_grid.to_vec(),
        metric: flat.chunks(nb).map(<[f64]>::to_vec).collect(),
        argmin: Hypothesis { alpha: alpha_grid[bi], bias: bias_grid[bj] },
        argmin_index: (bi, bj),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    /// Initial compass steps (radians, meters).
    pub initial_step: (f64, f64),
    /// Search stops once both steps are below these.
    pub min_step: (f64, f64),
    pub max_iterations: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            initial_step: (0.05, 1.0),
            min_step: (1e-4, 1e-3),
            max_iterations: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub hypothesis: Hypothesis,
    pub metric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub hypothesis: Hypothesis,
    pub metric: f64,
    /// Accepted iterates, starting with the start point. Metrics are
    /// non-increasing.
    pub trace: Vec<TraceStep>,
    pub iterations: usize,
}

/// Compass search over `(alpha, bias)` on the fixed-sample metric.
///
/// Each iteration polls the four axis neighbors and moves to the best one
/// that strictly lowers the metric without lowering the feasible fraction;
/// when none does, both steps are halved.
pub fn refine(
    samples: &MeasurementSampleSet,
    bs: Point3,
    start: Hypothesis,
    options: &RefineOptions,
) -> Result<Refinement> {
    let start = Hypothesis::new(start.alpha, start.bias);
    let (mut metric, mut frac) = evaluate_metric(samples, bs, &start)?;
    let mut current = start;
    let mut trace = vec![TraceStep { hypothesis: current, metric }];
    let (mut sa, mut sb) = options.initial_step;
    let mut iterations = 0;
    if !metric.is_finite() {
        return Ok(Refinement { hypothesis: current, metric, trace, iterations });
    }
    while iterations < options.max_iterations && (sa >= options.min_step.0 || sb >= options.min_step.1) {
        iterations += 1;
        let polls = [
            Hypothesis::new(current.alpha + sa, current.bias),
            Hypothesis::new(current.alpha - sa, current.bias),
            Hypothesis::new(current.alpha, current.bias + sb),
            Hypothesis::new(current.alpha, current.bias - sb),
        ];
        let mut best: Option<(Hypothesis, f64, f64)> = None;
        for h in polls {
            let (m, f) = evaluate_metric(samples, bs, &h)?;
            if m < metric && f >= frac && best.is_none_or(|(_, bm, _)| m < bm) {
                best = Some((h, m, f));
            }
        }
        match best {
            Some((h, m, f)) => {
                current = h;
                metric = m;
                frac = f;
                trace.push(TraceStep { hypothesis: h, metric: m });
            }
            None => {
                sa *= 0.5;
                sb *= 0.5;
            }
        }
    }
    Ok(Refinement { hypothesis: current, metric, trace, iterations })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpEstimate {
    pub position: Point3,
    /// Set when the delay-constrained solution was unusable and the
    /// closest-approach midpoint of the departure and arrival rays was used.
    pub fallback: bool,
}

/// Scatter-point positions consistent with the UE estimate.
///
/// For each path the SP is placed on the departure ray `bs + d·u` so that
/// `d + ‖sp − mu_ue‖ = τ − bias`, which gives
/// `d = (ρ² − ‖q‖²) / (2(ρ − u·q))` with `q = mu_ue − bs`.
pub fn recover_sps(
    measurements: &[PathMeasurement],
    h_star: &Hypothesis,
    mu_ue: Point3,
    bs: Point3,
) -> Result<Vec<SpEstimate>> {
    let q = mu_ue - bs;
    measurements
        .iter()
        .map(|m| {
            let z = m.mean();
            let rho = z.toa - h_star.bias;
            if !(rho > 0.0) {
                return Err(Error::InfeasibleRange { rho });
            }
            let u = Point3::from_angles(z.aod_az, z.aod_el);
            let denom = 2.0 * (rho - u.dot(q));
            if denom > 0.0 {
                let d = (rho * rho - q.norm_squared()) / denom;
                if d > 0.0 && d < rho {
                    return Ok(SpEstimate { position: bs + u * d, fallback: false });
                }
            }
            // arrival ray from the UE estimate back towards the scatterer
            let towards_ue = aoa_endpoint(Point3::ORIGIN, z.aoa_az, z.aoa_el, h_star.alpha, rho)?;
            let departure = Segment3::new(bs, bs + u * rho);
            let arrival = Segment3::new(mu_ue, mu_ue - towards_ue);
            Ok(SpEstimate {
                position: segment_closest(&departure, &arrival).midpoint,
                fallback: true,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub n_s: usize,
    pub seed: u64,
    /// Explicit orientation grid; defaults to [`default_alpha_grid`].
    #[serde(default)]
    pub alpha_grid: Option<GridSpec>,
    /// Explicit bias grid; defaults to [`default_bias_grid`].
    #[serde(default)]
    pub bias_grid: Option<GridSpec>,
    /// Communication range R, the only geometric prior.
    pub range_r: f64,
    #[serde(default)]
    pub refine: Option<RefineOptions>,
    #[serde(default)]
    pub keep_surface: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            n_s: 10,
            seed: 0,
            alpha_grid: None,
            bias_grid: None,
            range_r: 50.0,
            refine: None,
            keep_surface: false,
        }
    }
}

impl EstimatorConfig {
    /// Resolved `(alpha_grid, bias_grid)` for the given measurements.
    pub fn grids(&self, measurements: &[PathMeasurement]) -> Result<(Vec<f64>, Vec<f64>)> {
        let alpha = match &self.alpha_grid {
            Some(g) => g.values()?,
            None => default_alpha_grid(DEFAULT_ALPHA_NODES),
        };
        let bias = match &self.bias_grid {
            Some(g) => g.values()?,
            None => {
                let tmin = measurements.iter().map(PathMeasurement::toa).fold(f64::INFINITY, f64::min);
                default_bias_grid(tmin, self.range_r, DEFAULT_BIAS_NODES)?
            }
        };
        Ok((alpha, bias))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub feasible_fraction: f64,
    pub grid_argmin: Option<Hypothesis>,
    pub refinement_trace: Vec<TraceStep>,
    /// Path indices whose SP came from the fallback construction.
    pub fallback_paths: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub hypothesis_star: Hypothesis,
    pub mu_ue: Point3,
    pub sigma_ue: Matrix3,
    pub sp_estimates: Vec<Point3>,
    pub metric_star: f64,
    pub surface: Option<ErrorSurface>,
    pub diagnostics: Diagnostics,
}

/// Serialized form of [`EstimateResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateRecord {
    pub alpha_star: f64,
    pub bias_star: f64,
    pub mu_ue: [f64; 3],
    pub sigma_ue: [f64; 9],
    pub sps: Vec<[f64; 3]>,
    pub metric_star: f64,
    pub feasible_fraction: f64,
}

impl EstimateResult {
    pub fn to_record(&self) -> EstimateRecord {
        let mut sigma = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                sigma[r * 3 + c] = self.sigma_ue[r][c];
            }
        }
        EstimateRecord {
            alpha_star: self.hypothesis_star.alpha,
            bias_star: self.hypothesis_star.bias,
            mu_ue: self.mu_ue.to_array(),
            sigma_ue: sigma,
            sps: self.sp_estimates.iter().map(|p| p.to_array()).collect(),
            metric_star: self.metric_star,
            feasible_fraction: self.diagnostics.feasible_fraction,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("estimate serializes")
    }
}

/// Full pipeline: sample draw, grid search, refinement from the grid argmin,
/// final evaluation and SP recovery.
pub fn estimate(measurements: &[PathMeasurement], bs: Point3, config: &EstimatorConfig) -> Result<EstimateResult> {
    if measurements.len() < 2 {
        return Err(Error::Config(format!(
            "at least two paths are required, got {}",
            measurements.len()
        )));
    }
    let samples = draw_samples(measurements, config.n_s, config.seed)?;
    let (alpha_grid, bias_grid) = config.grids(measurements)?;
    estimate_with_samples(measurements, &samples, bs, &alpha_grid, &bias_grid, config)
}

/// [`estimate`] with a pre-drawn sample set and resolved grids.
pub fn estimate_with_samples(
    measurements: &[PathMeasurement],
    samples: &MeasurementSampleSet,
    bs: Point3,
    alpha_grid: &[f64],
    bias_grid: &[f64],
    config: &EstimatorConfig,
) -> Result<EstimateResult> {
    let surface = grid_search(samples, bs, alpha_grid, bias_grid)?;
    let options = config.refine.unwrap_or_else(|| RefineOptions {
        initial_step: (grid_step(alpha_grid, 0.05), grid_step(bias_grid, 1.0)),
        ..RefineOptions::default()
    });
    let refined = refine(samples, bs, surface.argmin, &options)?;
    let eval = evaluate(samples, bs, &refined.hypothesis)?;
    if !eval.is_feasible() {
        return Err(Error::EstimationFailure("refined hypothesis is infeasible".into()));
    }
    let sps = recover_sps(measurements, &refined.hypothesis, eval.mu_ue, bs)?;
    Ok(EstimateResult {
        hypothesis_star: refined.hypothesis,
        mu_ue: eval.mu_ue,
        sigma_ue: eval.sigma_ue,
        sp_estimates: sps.iter().map(|s| s.position).collect(),
        metric_star: eval.metric,
        diagnostics: Diagnostics {
            feasible_fraction: eval.feasible_fraction,
            grid_argmin: Some(surface.argmin),
            refinement_trace: refined.trace,
            fallback_paths: sps.iter().enumerate().filter(|(_, s)| s.fallback).map(|(i, _)| i).collect(),
        },
        surface: config.keep_surface.then_some(surface),
    })
}

fn grid_step(g: &[f64], fallback: f64) -> f64 {
    if g.len() >= 2 {
        g[1] - g[0]
    } else {
        fallback
    }
}
