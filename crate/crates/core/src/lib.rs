//! Coarse joint positioning, synchronization and mapping from NLOS-only
//! multipath measurements.
//!
//! Each path provides a TOA, an angle of arrival (UE frame) and an angle of
//! departure (BS frame). Under a hypothesis for the UE orientation `alpha`
//! and clock bias `B`, every path defines a 3D segment that must contain the
//! UE. At the true hypothesis the segments of all paths meet at the UE; the
//! estimator searches `(alpha, B)` for the hypothesis that makes them most
//! nearly concurrent, then places the scatter points on the departure rays.
//!
//! ```
//! use nlosinit::{estimate, generate_scenario, synthesize, EstimatorConfig, ScenarioParams};
//! use nlosinit::measurement::{Covariance, DIM};
//!
//! let scenario = generate_scenario(&ScenarioParams::default(), 7).unwrap();
//! let noise_free: Covariance = [[0.0; DIM]; DIM];
//! let ms = synthesize(&scenario, &[noise_free], 7).unwrap();
//! let cfg = EstimatorConfig { n_s: 1, ..Default::default() };
//! let result = estimate(&ms, scenario.bs, &cfg).unwrap();
//! assert!(result.mu_ue.distance(scenario.ue.position) < 0.1);
//! ```

pub mod error;
pub mod estimator;
pub mod geometry;
pub mod measurement;
pub mod simulator;

pub use error::{Error, Result};
pub use estimator::{
    estimate, evaluate, grid_search, recover_sps, refine, ErrorSurface, EstimateRecord, EstimateResult,
    EstimatorConfig, GridSpec, Hypothesis, HypothesisEvaluation, RefineOptions,
};
pub use geometry::{
    aoa_endpoint, aod_endpoint, forward_path, segment_closest, ue_segment, PairPoint, PathTruth, Point3, Segment3,
    UeState,
};
pub use measurement::{draw_samples, synthesize, MeasurementSampleSet, PathMeasurement};
pub use simulator::{
    generate_scenario, monte_carlo, score, ErrorReport, MonteCarloParams, MonteCarloSummary, Scenario,
    ScenarioParams,
};
