//! Scenario generation, scoring against ground truth, and Monte Carlo runs.

use std::f64::consts::FRAC_PI_3;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate, EstimateResult, EstimatorConfig};
use crate::geometry::{angle_distance, Point3, UeState};
use crate::measurement::{derive_seed, reference_covariance, synthesize, Covariance};

/// Ground-truth world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioWire", into = "ScenarioWire")]
pub struct Scenario {
    pub bs: Point3,
    pub ue: UeState,
    pub sps: Vec<Point3>,
    /// Communication range R (meters).
    pub range_r: f64,
}

impl Scenario {
    pub fn new(bs: Point3, ue: UeState, sps: Vec<Point3>, range_r: f64) -> Result<Self> {
        let s = Self { bs, ue, sps, range_r };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sps.is_empty() {
            return Err(Error::Config("scenario needs at least one scatter point".into()));
        }
        let finite = self.bs.is_finite()
            && self.ue.position.is_finite()
            && self.ue.orientation_alpha.is_finite()
            && self.ue.bias_b.is_finite()
            && self.range_r.is_finite()
            && self.sps.iter().all(|p| p.is_finite());
        if !finite {
            return Err(Error::Config("scenario values must be finite".into()));
        }
        if self.ue.position.distance(self.bs) > self.range_r {
            return Err(Error::Config("UE is outside the communication range".into()));
        }
        for (i, sp) in self.sps.iter().enumerate() {
            if *sp == self.bs || *sp == self.ue.position {
                return Err(Error::DegenerateGeometry(format!("scatter point {i} coincides with BS or UE")));
            }
        }
        Ok(())
    }

    /// Characteristic length used to scale absolute tolerances.
    pub fn scale(&self) -> f64 {
        self.ue.position.distance(self.bs).max(1.0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("bad scenario JSON: {e}")))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UeWire {
    pos: [f64; 3],
    alpha: f64,
    bias: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioWire {
    bs: [f64; 3],
    ue: UeWire,
    sps: Vec<[f64; 3]>,
    range_r: f64,
}

impl TryFrom<ScenarioWire> for Scenario {
    type Error = Error;
    fn try_from(w: ScenarioWire) -> Result<Self> {
        Scenario::new(
            w.bs.into(),
            UeState::new(w.ue.pos.into(), w.ue.alpha, w.ue.bias),
            w.sps.into_iter().map(Point3::from).collect(),
            w.range_r,
        )
    }
}

impl From<Scenario> for ScenarioWire {
    fn from(s: Scenario) -> Self {
        ScenarioWire {
            bs: s.bs.into(),
            ue: UeWire { pos: s.ue.position.into(), alpha: s.ue.orientation_alpha, bias: s.ue.bias_b },
            sps: s.sps.iter().map(|p| p.to_array()).collect(),
            range_r: s.range_r,
        }
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub min: Point3,
    pub max: Point3,
}

impl Region {
    /// Cube of side `2 half` centered at `c`.
    pub fn cube(c: Point3, half: f64) -> Self {
        let h = Point3::new(half, half, half);
        Self { min: c - h, max: c + h }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.min.is_finite()
            && self.max.is_finite()
            && self.min.x <= self.max.x
            && self.min.y <= self.max.y
            && self.min.z <= self.max.z;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("region bounds must be finite with min <= max".into()))
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> Point3 {
        let f = |lo: f64, hi: f64, u: f64| lo + (hi - lo) * u;
        Point3::new(
            f(self.min.x, self.max.x, rng.random()),
            f(self.min.y, self.max.y, rng.random()),
            f(self.min.z, self.max.z, rng.random()),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    pub l_paths: usize,
    pub bs: Point3,
    pub ue_region: Region,
    pub sp_region: Region,
    pub alpha: f64,
    pub bias: f64,
    pub range_r: f64,
    /// Minimum distance of every SP from the BS and the UE.
    pub min_separation: f64,
}

impl Default for ScenarioParams {
    /// Five paths, α = π/3, B = 20 m, R = 50 m, BS at the origin, UE and SPs
    /// in the cube of side 2R around the BS.
    fn default() -> Self {
        let range_r = 50.0;
        Self {
            l_paths: 5,
            bs: Point3::ORIGIN,
            ue_region: Region::cube(Point3::ORIGIN, range_r),
            sp_region: Region::cube(Point3::ORIGIN, range_r),
            alpha: FRAC_PI_3,
            bias: 20.0,
            range_r,
            min_separation: 1.0,
        }
    }
}

const MAX_ATTEMPTS: usize = 10_000;

pub fn generate_scenario(params: &ScenarioParams, seed: u64) -> Result<Scenario> {
    if params.l_paths < 1 {
        return Err(Error::Config("l_paths must be at least 1".into()));
    }
    params.ue_region.validate()?;
    params.sp_region.validate()?;
    if !(params.range_r > 0.0) || !params.alpha.is_finite() || !params.bias.is_finite() {
        return Err(Error::Config("range must be positive and alpha/bias finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let ue_pos = (0..MAX_ATTEMPTS)
        .map(|_| params.ue_region.sample(&mut rng))
        .find(|p| p.distance(params.bs) <= params.range_r)
        .ok_or_else(|| Error::Generation("no UE position within range of the BS".into()))?;

    let far_enough = |p: &Point3| {
        p.distance(params.bs) >= params.min_separation && p.distance(ue_pos) >= params.min_separation
    };
    let mut sps = Vec::with_capacity(params.l_paths);
    for i in 0..params.l_paths {
        let sp = (0..MAX_ATTEMPTS)
            .map(|_| params.sp_region.sample(&mut rng))
            .find(far_enough)
            .ok_or_else(|| Error::Generation(format!("could not place scatter point {i}")))?;
        sps.push(sp);
    }
    Scenario::new(
        params.bs,
        UeState::new(ue_pos, params.alpha, params.bias),
        sps,
        params.range_r,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub ue_error_m: f64,
    /// Circular distance, in `[0, π]`.
    pub alpha_error_rad: f64,
    pub bias_error_m: f64,
    pub sp_errors_m: Vec<f64>,
    /// Mean projection of the estimate displacements of the UE and every SP
    /// onto the direction from the true point to the BS. Positive values
    /// mean the map moved towards the BS.
    pub radial_shift_m: f64,
}

impl ErrorReport {
    pub fn mean_sp_error(&self) -> f64 {
        self.sp_errors_m.iter().sum::<f64>() / self.sp_errors_m.len() as f64
    }
}

pub fn score(scenario: &Scenario, result: &EstimateResult) -> Result<ErrorReport> {
    if result.sp_estimates.len() != scenario.sps.len() {
        return Err(Error::Config(format!(
            "estimate has {} scatter points, scenario has {}",
            result.sp_estimates.len(),
            scenario.sps.len()
        )));
    }
    let pairs = std::iter::once((result.mu_ue, scenario.ue.position))
        .chain(result.sp_estimates.iter().copied().zip(scenario.sps.iter().copied()));
    let mut shift = 0.0;
    let mut count = 0;
    for (est, truth) in pairs {
        let to_bs = scenario.bs - truth;
        let n = to_bs.norm();
        if n > 0.0 {
            shift += (est - truth).dot(to_bs) / n;
            count += 1;
        }
    }
    Ok(ErrorReport {
        ue_error_m: result.mu_ue.distance(scenario.ue.position),
        alpha_error_rad: angle_distance(result.hypothesis_star.alpha, scenario.ue.orientation_alpha),
        bias_error_m: (result.hypothesis_star.bias - scenario.ue.bias_b).abs(),
        sp_errors_m: result
            .sp_estimates
            .iter()
            .zip(&scenario.sps)
            .map(|(e, t)| e.distance(*t))
            .collect(),
        radial_shift_m: if count > 0 { shift / count as f64 } else { 0.0 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloParams {
    pub scenario: ScenarioParams,
    /// Measurement noise, shared by every path.
    pub sigma: Covariance,
    pub estimator: EstimatorConfig,
}

impl Default for MonteCarloParams {
    fn default() -> Self {
        Self {
            scenario: ScenarioParams::default(),
            sigma: reference_covariance(),
            estimator: EstimatorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    /// `None` when the trial failed; the message is in `status`.
    pub report: Option<ErrorReport>,
    /// Width of the bias window that was searched.
    pub bias_span: f64,
    /// Width of the orientation window that was searched.
    pub alpha_span: f64,
    pub status: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub median: f64,
    pub p90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub ue_error: Quantiles,
    pub alpha_error: Quantiles,
    pub bias_error: Quantiles,
    pub mean_sp_error: Quantiles,
    pub radial_shift: Quantiles,
    /// Errors divided by the span of the searched window.
    pub alpha_error_over_span: Quantiles,
    pub bias_error_over_span: Quantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub trials: usize,
    pub failures: usize,
    pub seed: u64,
    /// `None` when every trial failed.
    pub stats: Option<SummaryStats>,
    #[serde(skip)]
    pub rows: Vec<TrialRow>,
}

impl MonteCarloSummary {
    /// Per-trial CSV: `trial,ue_error,alpha_error,bias_error,mean_sp_error,radial_shift,status`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,ue_error,alpha_error,bias_error,mean_sp_error,radial_shift,status\n");
        for r in &self.rows {
            match &r.report {
                Some(e) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        r.trial,
                        e.ue_error_m,
                        e.alpha_error_rad,
                        e.bias_error_m,
                        e.mean_sp_error(),
                        e.radial_shift_m,
                        r.status
                    );
                }
                None => {
                    let _ = writeln!(out, "{},,,,,,{}", r.trial, csv_field(&r.status));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Nearest-rank quantile: the `⌈p·N⌉`-th smallest value (1-based).
pub fn nearest_rank(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty set");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((p * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

fn quantiles(values: &[f64]) -> Quantiles {
    Quantiles { median: nearest_rank(values, 0.5), p90: nearest_rank(values, 0.9) }
}

fn run_trial(params: &MonteCarloParams, trial: usize, seed: u64) -> TrialRow {
    let base = derive_seed(seed, trial as u64);
    let outcome = (|| {
        let scenario = generate_scenario(&params.scenario, derive_seed(base, 0))?;
        let ms = synthesize(&scenario, &[params.sigma], derive_seed(base, 1))?;
        let cfg = EstimatorConfig { seed: derive_seed(base, 2), ..params.estimator.clone() };
        let (alpha_grid, bias_grid) = cfg.grids(&ms)?;
        let result = estimate(&ms, scenario.bs, &cfg)?;
        let report = score(&scenario, &result)?;
        Ok::<_, Error>((report, span(&alpha_grid, true), span(&bias_grid, false)))
    })();
    match outcome {
        Ok((report, alpha_span, bias_span)) => TrialRow {
            trial,
            report: Some(report),
            bias_span,
            alpha_span,
            status: "ok".into(),
        },
        Err(e) => TrialRow {
            trial,
            report: None,
            bias_span: f64::NAN,
            alpha_span: f64::NAN,
            status: format!("failed: {e}"),
        },
    }
}

/// Span of a search grid. A uniform orientation grid over the circle
/// covers `n` cells, not `n - 1`.
fn span(g: &[f64], circular: bool) -> f64 {
    match g.len() {
        0 | 1 => 0.0,
        n if circular => (g[n - 1] - g[0]) * n as f64 / (n - 1) as f64,
        n => g[n - 1] - g[0],
    }
}

/// Runs `trials` independent generate → synthesize → estimate → score
/// pipelines. Trial `t` uses seeds derived from `(seed, t)` only, so the
/// output is independent of scheduling.
pub fn monte_carlo(params: &MonteCarloParams, trials: usize, seed: u64) -> Result<MonteCarloSummary> {
    if trials < 1 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let rows: Vec<TrialRow> = (0..trials).into_par_iter().map(|t| run_trial(params, t, seed)).collect();
    let ok: Vec<(&ErrorReport, &TrialRow)> =
        rows.iter().filter_map(|r| r.report.as_ref().map(|e| (e, r))).collect();
    let failures = rows.len() - ok.len();
    let stats = (!ok.is_empty()).then(|| {
        let col = |f: &dyn Fn(&ErrorReport, &TrialRow) -> f64| -> Vec<f64> { ok.iter().map(|(e, r)| f(e, r)).collect() };
        SummaryStats {
            ue_error: quantiles(&col(&|e, _| e.ue_error_m)),
            alpha_error: quantiles(&col(&|e, _| e.alpha_error_rad)),
            bias_error: quantiles(&col(&|e, _| e.bias_error_m)),
            mean_sp_error: quantiles(&col(&|e, _| e.mean_sp_error())),
            radial_shift: quantiles(&col(&|e, _| e.radial_shift_m)),
            alpha_error_over_span: quantiles(&col(&|e, r| e.alpha_error_rad / r.alpha_span)),
            bias_error_over_span: quantiles(&col(&|e, r| e.bias_error_m / r.bias_span)),
        }
    });
    Ok(MonteCarloSummary { trials, failures, seed, stats, rows })
}
