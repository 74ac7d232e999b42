use std::f64::consts::FRAC_PI_3;
use std::path::Path;

use nlosinit::measurement::{diag_covariance, Covariance, REFERENCE_STD};
use nlosinit::{GridSpec, Point3};
use serde::Deserialize;

use crate::CliError;

/// Values a config file may set. Every key is optional; anything else is
/// rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub ns: Option<usize>,
    pub alpha_grid: Option<String>,
    pub bias_grid: Option<String>,
    pub paths: Option<usize>,
    pub alpha: Option<f64>,
    pub bias: Option<f64>,
    pub range: Option<f64>,
    pub bs: Option<[f64; 3]>,
    pub toa_std: Option<f64>,
    pub angle_std: Option<f64>,
    pub noise_free: Option<bool>,
    pub trials: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings: defaults, then preset, then config file, then
/// command-line flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub ns: usize,
    pub alpha_grid: Option<GridSpec>,
    pub bias_grid: Option<GridSpec>,
    pub paths: usize,
    pub alpha: f64,
    pub bias: f64,
    pub range: f64,
    pub bs: Point3,
    pub toa_std: f64,
    pub angle_std: f64,
    pub noise_free: bool,
    pub trials: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            ns: 10,
            alpha_grid: None,
            bias_grid: None,
            paths: 5,
            alpha: FRAC_PI_3,
            bias: 20.0,
            range: 50.0,
            bs: Point3::ORIGIN,
            toa_std: REFERENCE_STD[0],
            angle_std: REFERENCE_STD[1],
            noise_free: false,
            trials: 100,
        }
    }
}

pub const PRESETS: &[&str] = &["paper-s3"];

impl RunConfig {
    pub fn apply_preset(&mut self, name: &str) -> Result<(), CliError> {
        match name {
            // five paths, α = π/3, B = 20 m, 10 cm / 0.01 rad noise, N_s = 10
            "paper-s3" => {
                *self = RunConfig { seed: self.seed, ..RunConfig::default() };
                Ok(())
            }
            other => Err(CliError::Validation(format!(
                "unknown preset `{other}` (known: {})",
                PRESETS.join(", ")
            ))),
        }
    }

    pub fn apply_file(&mut self, f: &FileConfig) -> Result<(), CliError> {
        if let Some(p) = &f.preset {
            self.apply_preset(p)?;
        }
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = f.$field { self.$field = v; } )* };
        }
        set!(seed, ns, paths, alpha, bias, range, toa_std, angle_std, noise_free, trials);
        if let Some(b) = f.bs {
            self.bs = b.into();
        }
        if let Some(g) = &f.alpha_grid {
            self.alpha_grid = Some(parse_grid(g)?);
        }
        if let Some(g) = &f.bias_grid {
            self.bias_grid = Some(parse_grid(g)?);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Validation(m.to_string()));
        if self.ns < 1 {
            return bad("--ns must be at least 1");
        }
        if self.paths < 1 {
            return bad("--paths must be at least 1");
        }
        if self.trials < 1 {
            return bad("--trials must be at least 1");
        }
        if !(self.range > 0.0) {
            return bad("--range must be positive");
        }
        if !(self.toa_std >= 0.0) || !(self.angle_std >= 0.0) {
            return bad("noise standard deviations must be non-negative");
        }
        if !self.alpha.is_finite() || !self.bias.is_finite() || !self.bs.is_finite() {
            return bad("alpha, bias and bs must be finite");
        }
        Ok(())
    }

    pub fn covariance(&self) -> Covariance {
        if self.noise_free {
            diag_covariance([0.0; 5])
        } else {
            let a = self.angle_std;
            diag_covariance([self.toa_std, a, a, a, a])
        }
    }
}

pub fn parse_grid(s: &str) -> Result<GridSpec, CliError> {
    s.parse().map_err(|e: nlosinit::Error| CliError::Validation(e.to_string()))
}

pub fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("expected x,y,z: {e}"))?;
    <[f64; 3]>::try_from(v).map_err(|_| "expected exactly three comma-separated values".to_string())
}

pub fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("expected alpha,bias: {e}"))?;
    match v[..] {
        [a, b] => Ok((a, b)),
        _ => Err("expected exactly two comma-separated values".to_string()),
    }
}
