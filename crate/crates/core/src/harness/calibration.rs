use serde::{Deserialize, Serialize};

use super::report::SCHEMA_VERSION;
use crate::calib::{calibrate_rig, CalibrationConfig};
use crate::error::{Error, Result};
use crate::synth::{marker_poses, rig_preset_with_world, simulate_marker_captures};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTrialConfig {
    pub preset: String,
    pub positions: usize,
    pub sigmas_cm: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub calibration: CalibrationConfig,
}

impl CalibrationTrialConfig {
    pub fn new(preset: &str, positions: usize, sigmas_cm: Vec<f64>, seeds: Vec<u64>) -> Self {
        CalibrationTrialConfig {
            preset: preset.to_string(),
            positions,
            sigmas_cm,
            seeds,
            calibration: CalibrationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraError {
    pub camera: u32,
    pub translation_cm: f64,
    pub rotation_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub sigma_cm: f64,
    pub seed: u64,
    pub cameras: Vec<CameraError>,
}

/// Errors over every camera of every seed at one noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub sigma_cm: f64,
    pub trials: usize,
    pub median_translation_cm: f64,
    pub max_translation_cm: f64,
    pub median_rotation_deg: f64,
    pub max_rotation_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub schema_version: u32,
    pub preset: String,
    pub positions: usize,
    pub trials: Vec<TrialResult>,
    pub summary: Vec<CalibrationSummary>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Simulates marker captures on a preset rig for every (sigma, seed) pair,
/// calibrates, and compares each camera with the simulator truth. The seed
/// drives both the marker placement and the depth noise.
pub fn run_calibration_trial(config: &CalibrationTrialConfig) -> Result<CalibrationReport> {
    config.calibration.validate()?;
    if config.sigmas_cm.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
        return Err(Error::InvalidParam("noise sigmas must be finite and >= 0".into()));
    }
    let (truth, world) = rig_preset_with_world(&config.preset)?;
    let edge = config.calibration.edge_length_cm;
    let mut trials = Vec::new();
    for &sigma in &config.sigmas_cm {
        for &seed in &config.seeds {
            let poses = marker_poses(&truth, &world, edge, config.positions, seed)?;
            let captures = simulate_marker_captures(&truth, &world, &poses, edge, sigma, seed)?;
            let rig = calibrate_rig(&captures, &truth.topology(), &config.calibration)?;
            let cameras = rig
                .cameras
                .iter()
                .map(|c| {
                    let t = &truth.camera(c.id)?.extrinsic;
                    Ok(CameraError {
                        camera: c.id,
                        translation_cm: c.extrinsic.translation_distance_to(t),
                        rotation_deg: c.extrinsic.rotation_angle_to(t).to_degrees(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            trials.push(TrialResult { sigma_cm: sigma, seed, cameras });
        }
    }
    let summary = config
        .sigmas_cm
        .iter()
        .map(|&sigma| {
            let at: Vec<&CameraError> = trials
                .iter()
                .filter(|t| t.sigma_cm == sigma)
                .flat_map(|t| &t.cameras)
                .collect();
            let translation: Vec<f64> = at.iter().map(|e| e.translation_cm).collect();
            let rotation: Vec<f64> = at.iter().map(|e| e.rotation_deg).collect();
            CalibrationSummary {
                sigma_cm: sigma,
                trials: config.seeds.len(),
                max_translation_cm: translation.iter().copied().fold(0.0, f64::max),
                max_rotation_deg: rotation.iter().copied().fold(0.0, f64::max),
                median_translation_cm: median(translation),
                median_rotation_deg: median(rotation),
            }
        })
        .collect();
    Ok(CalibrationReport {
        schema_version: SCHEMA_VERSION,
        preset: config.preset.clone(),
        positions: config.positions,
        trials,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd_lists() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn unknown_preset() {
        let r = run_calibration_trial(&CalibrationTrialConfig::new("5cam", 6, vec![0.0], vec![1]));
        assert!(matches!(r, Err(Error::UnknownPreset(_))));
    }
}
