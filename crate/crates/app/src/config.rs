//! Declarative TOML configuration.
//!
//! ```toml
//! data_dir = "girthkit-data"      # store root; GIRTHKIT_DATA overrides it
//! rig = "rig.json"                # calibrated rig used by `fuse`
//!
//! [measure]
//! ray_count = 10000
//! slice_step_cm = 1.0
//! band_height_cm = 1.0
//!
//! [filters]                       # pre-processing chain
//! z_max_cm = 250.0
//! median_window = 5
//! bilateral_sigma_s_px = 3.0
//! bilateral_sigma_r_cm = 2.0
//! sor_k = 50
//! sor_stddev_mult = 1.0
//! normals_k = 30
//!
//! [calibration]
//! edge_length_cm = 30.0
//! inlier_threshold_cm = 1.0
//! ransac_iterations = 500
//! seed = 0
//! view_score_lambda = 0.1
//! max_view_score = 0.25
//!
//! [serve]
//! addr = "127.0.0.1:8080"
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use girthkit::calib::CalibrationConfig;
use girthkit::cloud::FilterConfig;
use girthkit::pipeline::DEFAULT_BAND_HEIGHT_CM;
use girthkit::probes::{DEFAULT_RAY_COUNT, DEFAULT_SLICE_STEP_CM, MIN_RAY_COUNT};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

pub const DATA_ENV: &str = "GIRTHKIT_DATA";
/// Looked up in the working directory when no `--config` is given.
pub const DEFAULT_CONFIG_FILE: &str = "girthkit.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureDefaults {
    pub ray_count: usize,
    pub slice_step_cm: f64,
    /// Band height of the slice mesher used by `fuse --mesh`.
    pub band_height_cm: f64,
}

impl Default for MeasureDefaults {
    fn default() -> Self {
        MeasureDefaults {
            ray_count: DEFAULT_RAY_COUNT,
            slice_step_cm: DEFAULT_SLICE_STEP_CM,
            band_height_cm: DEFAULT_BAND_HEIGHT_CM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub addr: String,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            addr: "127.0.0.1:8080".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data_dir: PathBuf,
    pub rig: Option<PathBuf>,
    pub measure: MeasureDefaults,
    pub filters: FilterConfig,
    pub calibration: CalibrationConfig,
    pub serve: ServeConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            data_dir: PathBuf::from("girthkit-data"),
            rig: None,
            measure: MeasureDefaults::default(),
            filters: FilterConfig::default(),
            calibration: CalibrationConfig::default(),
            serve: ServeConfig::default(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> AppResult<Config> {
        let bad = |message: String| AppError::Config {
            path: path.to_path_buf(),
            message,
        };
        let mut config: Config = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.data_dir = base.join(&config.data_dir);
        config.rig = config.rig.map(|r| base.join(r));
        config.validate().map_err(|e| bad(e.to_string()))?;
        Ok(config)
    }

    /// Reads `path`, or `girthkit.toml` in the working directory when it
    /// exists, or falls back to the defaults. `GIRTHKIT_DATA` then
    /// overrides the data directory.
    pub fn load(path: Option<&Path>) -> AppResult<Config> {
        let default_path = Path::new(DEFAULT_CONFIG_FILE);
        let chosen = match path {
            Some(p) => Some(p),
            None => default_path.exists().then_some(default_path),
        };
        let mut config = match chosen {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| AppError::Config {
                    path: p.to_path_buf(),
                    message: e.to_string(),
                })?;
                Config::from_toml(&text, p)?
            }
            None => Config::default(),
        };
        if let Some(dir) = std::env::var_os(DATA_ENV).filter(|d| !d.is_empty()) {
            config.data_dir = PathBuf::from(dir);
        }
        Ok(config)
    }

    pub fn validate(&self) -> girthkit::Result<()> {
        self.filters.validate()?;
        self.calibration.validate()?;
        if self.measure.ray_count < MIN_RAY_COUNT {
            return Err(girthkit::Error::InvalidParam(format!(
                "measure.ray_count must be at least {MIN_RAY_COUNT}"
            )));
        }
        for (name, v) in [
            ("measure.slice_step_cm", self.measure.slice_step_cm),
            ("measure.band_height_cm", self.measure.band_height_cm),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(girthkit::Error::InvalidParam(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}
