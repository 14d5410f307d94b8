//! Accuracy studies: measurement sweeps over the synthetic shape suite,
//! simulated rig calibration trials, and their CSV/JSON reports.

mod calibration;
mod report;
mod sweep;

pub use calibration::{
    run_calibration_trial, CalibrationReport, CalibrationSummary, CalibrationTrialConfig, CameraError, TrialResult,
};
pub use report::{emit_report, load_report, render_report, Report, ReportFormat, SCHEMA_VERSION};
pub use sweep::{
    run_measurement_sweep, BenchmarkReport, BenchmarkRow, Estimate, RayCountSummary, SweepConfig,
    MAX_SWEEP_RAYS, standard_suite,
};
