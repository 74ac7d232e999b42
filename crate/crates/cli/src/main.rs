//! `nlosinit` command-line front end.
//!
//! Exit codes: 0 success, 2 validation error, 3 estimation failure,
//! 4 I/O error.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlosinit::estimator::{evaluate, EstimatorConfig};
use nlosinit::measurement::{measurements_from_json, measurements_to_json, PathMeasurement};
use nlosinit::{
    draw_samples, estimate, generate_scenario, grid_search, monte_carlo, score, synthesize, ue_segment, Hypothesis,
    MonteCarloParams, Point3, Scenario, ScenarioParams,
};

use config::{parse_grid, parse_pair, parse_triple, FileConfig, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Estimation(String),
    Io(String),
}

impl CliError {
    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Estimation(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Estimation(m) => write!(f, "estimation failed: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<nlosinit::Error> for CliError {
    fn from(e: nlosinit::Error) -> Self {
        match e {
            nlosinit::Error::EstimationFailure(_) => CliError::Estimation(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "nlosinit", version, about = "NLOS-only positioning, synchronization and mapping")]
struct Cli {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Samples per path (N_s).
    #[arg(long, global = true)]
    ns: Option<usize>,
    /// Output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON config file; command-line flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Orientation grid `start:stop:count` (radians).
    #[arg(long, global = true)]
    alpha_grid: Option<String>,
    /// Bias grid `start:stop:count` (meters).
    #[arg(long, global = true)]
    bias_grid: Option<String>,
    /// Named parameter set (`paper-s3`).
    #[arg(long, global = true)]
    preset: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct WorldArgs {
    /// Number of scatter points.
    #[arg(long)]
    paths: Option<usize>,
    /// True UE orientation (radians).
    #[arg(long)]
    alpha: Option<f64>,
    /// True clock bias (meters).
    #[arg(long)]
    bias: Option<f64>,
    /// Communication range R (meters).
    #[arg(long)]
    range: Option<f64>,
    /// BS position `x,y,z`.
    #[arg(long, value_parser = parse_triple)]
    bs: Option<[f64; 3]>,
}

#[derive(Args, Debug, Default)]
struct NoiseArgs {
    /// TOA standard deviation (meters).
    #[arg(long)]
    toa_std: Option<f64>,
    /// Standard deviation of every angle (radians).
    #[arg(long)]
    angle_std: Option<f64>,
    /// Synthesize noise-free measurements.
    #[arg(long)]
    noise_free: bool,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Scenario JSON; measurements are synthesized from it.
    #[arg(long, conflicts_with = "measurements")]
    scenario: Option<PathBuf>,
    /// Measurement JSON.
    #[arg(long)]
    measurements: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random scenario.
    Generate {
        #[command(flatten)]
        world: WorldArgs,
    },
    /// Synthesize noisy measurements for a scenario.
    Measure {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Run the full estimator.
    Estimate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        world: WorldArgs,
        /// Also write the grid error surface as CSV.
        #[arg(long)]
        emit_surface: Option<PathBuf>,
        /// Also write true and estimated points (UE, SPs, pair midpoints) as CSV.
        #[arg(long)]
        emit_points: Option<PathBuf>,
    },
    /// Evaluate the error metric over the hypothesis grid.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        world: WorldArgs,
        /// Write the UE segments and pair midpoints for one hypothesis `alpha,bias`.
        #[arg(long, value_parser = parse_pair, requires = "emit_segments")]
        at: Option<(f64, f64)>,
        #[arg(long, requires = "at")]
        emit_segments: Option<PathBuf>,
    },
    /// Monte Carlo experiment.
    Experiment {
        #[arg(long)]
        trials: Option<usize>,
        /// Summary JSON path; defaults to the CSV path with a `.summary.json` suffix.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[command(flatten)]
        world: WorldArgs,
        #[command(flatten)]
        noise: NoiseArgs,
    },
}

fn resolve(cli: &Cli, world: Option<&WorldArgs>, noise: Option<&NoiseArgs>, trials: Option<usize>) -> Result<RunConfig, CliError> {
    let mut rc = RunConfig::default();
    let file = cli.config.as_deref().map(FileConfig::load).transpose()?;
    // a preset flag is a defaults layer, so it goes first
    if let Some(p) = &cli.preset {
        rc.apply_preset(p)?;
    }
    if let Some(f) = &file {
        rc.apply_file(f)?;
    }
    if let Some(s) = cli.seed {
        rc.seed = s;
    }
    if let Some(n) = cli.ns {
        rc.ns = n;
    }
    if let Some(g) = &cli.alpha_grid {
        rc.alpha_grid = Some(parse_grid(g)?);
    }
    if let Some(g) = &cli.bias_grid {
        rc.bias_grid = Some(parse_grid(g)?);
    }
    if let Some(w) = world {
        rc.paths = w.paths.unwrap_or(rc.paths);
        rc.alpha = w.alpha.unwrap_or(rc.alpha);
        rc.bias = w.bias.unwrap_or(rc.bias);
        rc.range = w.range.unwrap_or(rc.range);
        if let Some(b) = w.bs {
            rc.bs = b.into();
        }
    }
    if let Some(n) = noise {
        rc.toa_std = n.toa_std.unwrap_or(rc.toa_std);
        rc.angle_std = n.angle_std.unwrap_or(rc.angle_std);
        rc.noise_free |= n.noise_free;
    }
    if let Some(t) = trials {
        rc.trials = t;
    }
    rc.validate()?;
    Ok(rc)
}

fn scenario_params(rc: &RunConfig) -> ScenarioParams {
    let d = ScenarioParams::default();
    let region = nlosinit::simulator::Region::cube(rc.bs, rc.range);
    ScenarioParams {
        l_paths: rc.paths,
        bs: rc.bs,
        ue_region: region,
        sp_region: region,
        alpha: rc.alpha,
        bias: rc.bias,
        range_r: rc.range,
        ..d
    }
}

fn estimator_config(rc: &RunConfig, seed: u64) -> EstimatorConfig {
    EstimatorConfig {
        n_s: rc.ns,
        seed,
        alpha_grid: rc.alpha_grid,
        bias_grid: rc.bias_grid,
        range_r: rc.range,
        refine: None,
        keep_surface: false,
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))?;
    println!("{}", path.display());
    Ok(())
}

fn out_path(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

struct Inputs {
    measurements: Vec<PathMeasurement>,
    scenario: Option<Scenario>,
    bs: Point3,
    range: f64,
}

/// Measurements come either from a measurement file, or are synthesized
/// from a scenario file with the configured noise and the master seed.
fn load_inputs(input: &InputArgs, rc: &RunConfig) -> Result<Inputs, CliError> {
    match (&input.scenario, &input.measurements) {
        (Some(p), None) => {
            let scenario = Scenario::from_json(&read(p)?)?;
            let measurements = synthesize(&scenario, &[rc.covariance()], rc.seed)?;
            Ok(Inputs { measurements, bs: scenario.bs, range: scenario.range_r, scenario: Some(scenario) })
        }
        (None, Some(p)) => Ok(Inputs {
            measurements: measurements_from_json(&read(p)?)?,
            scenario: None,
            bs: rc.bs,
            range: rc.range,
        }),
        _ => Err(CliError::Validation("exactly one of --scenario or --measurements is required".into())),
    }
}

/// Seed of the hypothesis sample draw, kept apart from the measurement seed.
fn sample_seed(rc: &RunConfig) -> u64 {
    nlosinit::measurement::derive_seed(rc.seed, 1)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate { world } => {
            let rc = resolve(cli, Some(world), None, None)?;
            let scenario = generate_scenario(&scenario_params(&rc), rc.seed)?;
            write(&out_path(cli, "scenario.json"), &scenario.to_json())
        }
        Command::Measure { scenario, noise } => {
            let rc = resolve(cli, None, Some(noise), None)?;
            let s = Scenario::from_json(&read(scenario)?)?;
            let ms = synthesize(&s, &[rc.covariance()], rc.seed)?;
            write(&out_path(cli, "measurements.json"), &measurements_to_json(&ms))
        }
        Command::Estimate { input, noise, world, emit_surface, emit_points } => {
            let rc = resolve(cli, Some(world), Some(noise), None)?;
            let inputs = load_inputs(input, &rc)?;
            let mut cfg = estimator_config(&rc, sample_seed(&rc));
            cfg.range_r = inputs.range;
            cfg.keep_surface = emit_surface.is_some();
            let result = estimate(&inputs.measurements, inputs.bs, &cfg)?;
            write(&out_path(cli, "estimate.json"), &result.to_json())?;
            if let (Some(p), Some(surface)) = (emit_surface, &result.surface) {
                write(p, &surface.to_csv())?;
            }
            if let Some(p) = emit_points {
                let samples = draw_samples(&inputs.measurements, cfg.n_s, cfg.seed)?;
                let eval = evaluate(&samples, inputs.bs, &result.hypothesis_star)?;
                let mut csv = String::from("kind,index,x,y,z\n");
                let mut row = |kind: &str, i: usize, p: Point3| {
                    let _ = writeln!(csv, "{kind},{i},{},{},{}", p.x, p.y, p.z);
                };
                row("bs", 0, inputs.bs);
                if let Some(s) = &inputs.scenario {
                    row("ue_true", 0, s.ue.position);
                    s.sps.iter().enumerate().for_each(|(i, p)| row("sp_true", i, *p));
                }
                row("ue_est", 0, result.mu_ue);
                result.sp_estimates.iter().enumerate().for_each(|(i, p)| row("sp_est", i, *p));
                eval.pair_points.iter().enumerate().for_each(|(i, p)| row("pair_point", i, p.midpoint));
                write(p, &csv)?;
            }
            if let Some(s) = &inputs.scenario {
                let r = score(s, &result)?;
                eprintln!(
                    "ue error {:.3} m, alpha error {:.4} rad, bias error {:.3} m, mean SP error {:.3} m, radial shift {:.3} m",
                    r.ue_error_m,
                    r.alpha_error_rad,
                    r.bias_error_m,
                    r.mean_sp_error(),
                    r.radial_shift_m
                );
            }
            Ok(())
        }
        Command::Sweep { input, noise, world, at, emit_segments } => {
            let rc = resolve(cli, Some(world), Some(noise), None)?;
            let inputs = load_inputs(input, &rc)?;
            let mut cfg = estimator_config(&rc, sample_seed(&rc));
            cfg.range_r = inputs.range;
            let samples = draw_samples(&inputs.measurements, cfg.n_s, cfg.seed)?;
            let (ag, bg) = cfg.grids(&inputs.measurements)?;
            let surface = grid_search(&samples, inputs.bs, &ag, &bg)?;
            write(&out_path(cli, "surface.csv"), &surface.to_csv())?;
            if let (Some((a, b)), Some(p)) = (at, emit_segments) {
                let h = Hypothesis::new(*a, *b);
                let mut csv = String::from("kind,path,sample,ax,ay,az,bx,by,bz\n");
                for (l, path) in samples.samples.iter().enumerate() {
                    for (n, s) in path.iter().enumerate() {
                        if let Ok(seg) = ue_segment(inputs.bs, s, &h) {
                            let _ = writeln!(
                                csv,
                                "segment,{l},{n},{},{},{},{},{},{}",
                                seg.a.x, seg.a.y, seg.a.z, seg.b.x, seg.b.y, seg.b.z
                            );
                        }
                    }
                }
                for pp in evaluate(&samples, inputs.bs, &h)?.pair_points {
                    let m = pp.midpoint;
                    let _ = writeln!(csv, "pair_point,{}-{},{},{},{},{},,,", pp.pair.0, pp.pair.1, pp.sample_index, m.x, m.y, m.z);
                }
                write(p, &csv)?;
            }
            Ok(())
        }
        Command::Experiment { trials, summary, world, noise } => {
            let rc = resolve(cli, Some(world), Some(noise), *trials)?;
            let params = MonteCarloParams {
                scenario: scenario_params(&rc),
                sigma: rc.covariance(),
                estimator: estimator_config(&rc, 0),
            };
            let result = monte_carlo(&params, rc.trials, rc.seed)?;
            let csv_path = out_path(cli, "experiment.csv");
            let summary_path = summary.clone().unwrap_or_else(|| {
                let mut p = csv_path.clone().into_os_string();
                p.push(".summary.json");
                PathBuf::from(p)
            });
            write(&csv_path, &result.to_csv())?;
            write(&summary_path, &result.to_json())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
