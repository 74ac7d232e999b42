//! Noisy channel-parameter measurements and the sample sets drawn from them.
//!
//! Randomness is derived per `(seed, purpose, path, sample)` from a
//! ChaCha8 stream: the base key comes from the seed and purpose tag, the
//! stream id from the path and sample indices. Every draw is therefore
//! independent of the order in which draws are made.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{forward_path, reflect_direction, PathTruth};
use crate::simulator::Scenario;

/// Dimension of a path measurement `[toa, aoa_az, aoa_el, aod_az, aod_el]`.
pub const DIM: usize = 5;

pub type Covariance = [[f64; DIM]; DIM];

const TAG_SYNTHESIZE: u64 = 0x5359_4e54_4845_5349;
const TAG_SAMPLES: u64 = 0x5341_4d50_4c45_5321;

/// Standard deviations used in the reference setup: 10 cm TOA, 0.01 rad
/// on every angle.
pub const REFERENCE_STD: [f64; DIM] = [0.1, 0.01, 0.01, 0.01, 0.01];

/// Diagonal covariance from per-component standard deviations.
pub fn diag_covariance(std: [f64; DIM]) -> Covariance {
    let mut c = [[0.0; DIM]; DIM];
    for i in 0..DIM {
        c[i][i] = std[i] * std[i];
    }
    c
}

/// The reference covariance `(diag[0.1, 0.01, 0.01, 0.01, 0.01])²`.
pub fn reference_covariance() -> Covariance {
    diag_covariance(REFERENCE_STD)
}

/// One path's measurement vector and its noise covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathMeasurementWire", into = "PathMeasurementWire")]
pub struct PathMeasurement {
    pub z: [f64; DIM],
    pub sigma: Covariance,
}

impl PathMeasurement {
    pub fn new(z: [f64; DIM], sigma: Covariance) -> Result<Self> {
        validate_covariance(&sigma)?;
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("measurement vector must be finite".into()));
        }
        Ok(Self { z, sigma })
    }

    pub fn mean(&self) -> PathTruth {
        PathTruth::from_array(self.z)
    }

    pub fn toa(&self) -> f64 {
        self.z[0]
    }

    fn is_diagonal(&self) -> bool {
        (0..DIM).all(|i| (0..DIM).all(|j| i == j || self.sigma[i][j] == 0.0))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathMeasurementWire {
    z: [f64; DIM],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma_diag: Option<[f64; DIM]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma_full: Option<Vec<f64>>,
}

impl TryFrom<PathMeasurementWire> for PathMeasurement {
    type Error = Error;

    fn try_from(w: PathMeasurementWire) -> Result<Self> {
        let sigma = match (w.sigma_diag, w.sigma_full) {
            (Some(d), None) => {
                let mut c = [[0.0; DIM]; DIM];
                for i in 0..DIM {
                    c[i][i] = d[i];
                }
                c
            }
            (None, Some(f)) => {
                if f.len() != DIM * DIM {
                    return Err(Error::Config(format!(
                        "sigma_full must have {} entries, got {}",
                        DIM * DIM,
                        f.len()
                    )));
                }
                let mut c = [[0.0; DIM]; DIM];
                for (k, v) in f.into_iter().enumerate() {
                    c[k / DIM][k % DIM] = v;
                }
                c
            }
            _ => {
                return Err(Error::Config(
                    "exactly one of sigma_diag or sigma_full is required".into(),
                ))
            }
        };
        PathMeasurement::new(w.z, sigma)
    }
}

impl From<PathMeasurement> for PathMeasurementWire {
    fn from(m: PathMeasurement) -> Self {
        if m.is_diagonal() {
            let mut d = [0.0; DIM];
            for i in 0..DIM {
                d[i] = m.sigma[i][i];
            }
            Self { z: m.z, sigma_diag: Some(d), sigma_full: None }
        } else {
            Self {
                z: m.z,
                sigma_diag: None,
                sigma_full: Some(m.sigma.iter().flatten().copied().collect()),
            }
        }
    }
}

/// Checks symmetry (within 1e-12), non-negative diagonal, finiteness and
/// positive semi-definiteness.
pub fn validate_covariance(c: &Covariance) -> Result<()> {
    for i in 0..DIM {
        for j in 0..DIM {
            if !c[i][j].is_finite() {
                return Err(Error::Config("covariance entries must be finite".into()));
            }
            if (c[i][j] - c[j][i]).abs() > 1e-12 {
                return Err(Error::Config(format!("covariance not symmetric at ({i}, {j})")));
            }
        }
        if c[i][i] < 0.0 {
            return Err(Error::Config(format!("negative variance at index {i}")));
        }
    }
    cholesky_psd(c).map(|_| ())
}

/// Lower-triangular factor `L` with `L Lᵀ = c` for a positive semi-definite
/// `c`. Columns with a (numerically) zero pivot are left zero.
fn cholesky_psd(c: &Covariance) -> Result<Covariance> {
    let mut l = [[0.0; DIM]; DIM];
    let max_diag = (0..DIM).map(|i| c[i][i]).fold(0.0, f64::max);
    let tol = 1e-12 * max_diag.max(f64::MIN_POSITIVE);
    for j in 0..DIM {
        let pivot = c[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if pivot < -tol {
            return Err(Error::Config("covariance is not positive semi-definite".into()));
        }
        if pivot <= tol {
            for i in j + 1..DIM {
                let r = c[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                if r.abs() > 1e-9 * max_diag.sqrt().max(f64::MIN_POSITIVE) {
                    return Err(Error::Config("covariance is not positive semi-definite".into()));
                }
            }
            continue;
        }
        let d = pivot.sqrt();
        l[j][j] = d;
        for i in j + 1..DIM {
            let r = c[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            l[i][j] = r / d;
        }
    }
    Ok(l)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives an independent 64-bit seed from `seed` and a stream index.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// RNG dedicated to one `(seed, purpose, path, sample)` cell.
fn cell_rng(seed: u64, tag: u64, path: usize, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ tag));
    rng.set_stream(((path as u64) << 32) | sample as u64);
    rng
}

/// Draws `mean + L g` with `g ~ N(0, I)` and returns it with azimuths wrapped
/// and elevations reflected into range.
fn gaussian_draw(mean: &[f64; DIM], chol: &Covariance, rng: &mut ChaCha8Rng) -> [f64; DIM] {
    let mut g = [0.0; DIM];
    for v in g.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    let mut z = *mean;
    for i in 0..DIM {
        z[i] += (0..=i).map(|k| chol[i][k] * g[k]).sum::<f64>();
    }
    canonicalize(z)
}

fn canonicalize(mut z: [f64; DIM]) -> [f64; DIM] {
    let (aoa_az, aoa_el) = reflect_direction(z[1], z[2]);
    let (aod_az, aod_el) = reflect_direction(z[3], z[4]);
    z[1] = aoa_az;
    z[2] = aoa_el;
    z[3] = aod_az;
    z[4] = aod_el;
    z
}

/// Noisy measurements of every path of `scenario`.
///
/// `sigma_per_path` holds either one covariance per path or a single
/// covariance shared by all paths.
pub fn synthesize(scenario: &Scenario, sigma_per_path: &[Covariance], seed: u64) -> Result<Vec<PathMeasurement>> {
    let l = scenario.sps.len();
    if l == 0 {
        return Err(Error::Config("scenario has no scatter points".into()));
    }
    if sigma_per_path.len() != l && sigma_per_path.len() != 1 {
        return Err(Error::Config(format!(
            "expected 1 or {l} covariances, got {}",
            sigma_per_path.len()
        )));
    }
    let ue = scenario.ue;
    (0..l)
        .map(|i| {
            let sigma = if sigma_per_path.len() == 1 { sigma_per_path[0] } else { sigma_per_path[i] };
            validate_covariance(&sigma)?;
            let chol = cholesky_psd(&sigma)?;
            let truth = forward_path(scenario.bs, &ue, scenario.sps[i])?.to_array();
            let mut rng = cell_rng(seed, TAG_SYNTHESIZE, i, 0);
            let z = gaussian_draw(&truth, &chol, &mut rng);
            Ok(PathMeasurement { z, sigma })
        })
        .collect()
}

/// Per-path channel-parameter samples shared by every hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSampleSet {
    /// `samples[l][n]`; `samples[l][0]` is the measurement mean.
    pub samples: Vec<Vec<PathTruth>>,
    pub seed: u64,
    pub n_s: usize,
}

impl MeasurementSampleSet {
    pub fn n_paths(&self) -> usize {
        self.samples.len()
    }

    /// Smallest sampled TOA over all paths and samples.
    pub fn min_toa(&self) -> f64 {
        self.samples
            .iter()
            .flatten()
            .map(|s| s.toa)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Draws `n_s` samples per path. The first sample is the measurement
/// itself; the rest are `N(z_l, Σ_l)` draws. Paths are independent.
pub fn draw_samples(measurements: &[PathMeasurement], n_s: usize, seed: u64) -> Result<MeasurementSampleSet> {
    if n_s < 1 {
        return Err(Error::Config("n_s must be at least 1".into()));
    }
    let samples = measurements
        .par_iter()
        .enumerate()
        .map(|(l, m)| {
            let chol = cholesky_psd(&m.sigma)?;
            let mut row = Vec::with_capacity(n_s);
            row.push(m.mean());
            for n in 1..n_s {
                let mut rng = cell_rng(seed, TAG_SAMPLES, l, n);
                row.push(PathTruth::from_array(gaussian_draw(&m.z, &chol, &mut rng)));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MeasurementSampleSet { samples, seed, n_s })
}

/// Writes measurements as a JSON array.
pub fn measurements_to_json(ms: &[PathMeasurement]) -> String {
    serde_json::to_string_pretty(ms).expect("measurements serialize")
}

pub fn measurements_from_json(s: &str) -> Result<Vec<PathMeasurement>> {
    serde_json::from_str(s).map_err(|e| Error::Config(format!("bad measurement JSON: {e}")))
}
