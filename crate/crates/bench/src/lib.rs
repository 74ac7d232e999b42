//! Fixtures shared by the criterion benches.

use nlosinit::measurement::reference_covariance;
use nlosinit::{draw_samples, generate_scenario, synthesize, MeasurementSampleSet, PathMeasurement, Scenario, ScenarioParams};

/// Reference-noise scenario with `l_paths` paths and its `n_s`-sample set.
pub fn fixture(l_paths: usize, n_s: usize, seed: u64) -> (Scenario, Vec<PathMeasurement>, MeasurementSampleSet) {
    let params = ScenarioParams { l_paths, ..Default::default() };
    let scenario = generate_scenario(&params, seed).expect("scenario");
    let ms = synthesize(&scenario, &[reference_covariance()], seed).expect("measurements");
    let samples = draw_samples(&ms, n_s, seed).expect("samples");
    (scenario, ms, samples)
}
