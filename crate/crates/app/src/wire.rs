//! JSON bodies shared by the command line and the HTTP service.

use girthkit::geom::{Point, Vector};
use girthkit::mesh::Bvh;
use girthkit::probes::{measure_report, CircleProbe, MeasurementReport, Radius};
use serde::{Deserialize, Serialize};

use crate::config::MeasureDefaults;
use crate::error::{AppError, AppResult};

/// A probe as sent by clients: `{center, normal, radius?, rays?, height?, h?}`.
/// `radius` is a length in cm or `"auto"`; `height` requests the volume of
/// the cylinder hanging below the circle, sliced every `h` cm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureRequest {
    pub center: [f64; 3],
    pub normal: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<Radius>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rays: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

impl MeasureRequest {
    pub fn probe(&self, defaults: &MeasureDefaults) -> CircleProbe {
        let [x, y, z] = self.center;
        let [nx, ny, nz] = self.normal;
        CircleProbe::new(Point::new(x, y, z), Vector::new(nx, ny, nz))
            .with_radius(self.radius.unwrap_or_default())
            .with_rays(self.rays.unwrap_or(defaults.ray_count))
    }

    /// `(height, slice step)` when a volume is requested.
    pub fn volume(&self, defaults: &MeasureDefaults) -> AppResult<Option<(f64, f64)>> {
        match (self.height, self.h) {
            (Some(height), h) => Ok(Some((height, h.unwrap_or(defaults.slice_step_cm)))),
            (None, Some(_)) => Err(AppError::BadRequest("slice step h given without height".into())),
            (None, None) => Ok(None),
        }
    }

    pub fn measure(&self, bvh: &Bvh, defaults: &MeasureDefaults) -> AppResult<MeasurementReport> {
        Ok(measure_report(bvh, &self.probe(defaults), self.volume(defaults)?)?)
    }
}

/// The one JSON rendering of a measurement, used by both interfaces so that
/// their output is identical byte for byte.
pub fn render_measurement(report: &MeasurementReport) -> String {
    serde_json::to_string_pretty(report).expect("reports serialize") + "\n"
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub id: String,
    pub vertex_count: usize,
    pub triangle_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session: String,
    pub timestamp: String,
    pub model_id: String,
}

/// Body of a session registration. The session id is generated when absent;
/// `meta` holds free-form key/values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewSession {
    pub timestamp: String,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub meta: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparePoint {
    pub session: String,
    pub timestamp: String,
    pub perimeter_cm: f64,
    pub area_cm2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl From<&AppError> for ErrorBody {
    fn from(e: &AppError) -> Self {
        ErrorBody {
            error: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_defaults_and_auto_radius() {
        let r: MeasureRequest = serde_json::from_str(r#"{"center":[0,0,0],"normal":[0,0,1],"radius":"auto"}"#).unwrap();
        let p = r.probe(&MeasureDefaults::default());
        assert_eq!(p.radius, Radius::Auto);
        assert_eq!(p.ray_count, girthkit::probes::DEFAULT_RAY_COUNT);
        assert_eq!(r.volume(&MeasureDefaults::default()).unwrap(), None);
        let fixed: MeasureRequest = serde_json::from_str(r#"{"center":[0,0,0],"normal":[0,0,1],"radius":12.5}"#).unwrap();
        assert_eq!(fixed.radius, Some(Radius::Fixed(12.5)));
    }

    #[test]
    fn request_round_trips() {
        let r = MeasureRequest {
            center: [1.0, 2.0, 3.0],
            normal: [0.0, 0.0, 1.0],
            radius: Some(Radius::Fixed(20.0)),
            rays: Some(100),
            height: Some(10.0),
            h: Some(0.5),
        };
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<MeasureRequest>(&text).unwrap(), r);
    }

    #[test]
    fn rejects_unknown_fields_and_stray_step() {
        assert!(serde_json::from_str::<MeasureRequest>(r#"{"center":[0,0,0],"normal":[0,0,1],"colour":1}"#).is_err());
        let r: MeasureRequest = serde_json::from_str(r#"{"center":[0,0,0],"normal":[0,0,1],"h":1}"#).unwrap();
        assert!(matches!(r.volume(&MeasureDefaults::default()), Err(AppError::BadRequest(_))));
    }
}
