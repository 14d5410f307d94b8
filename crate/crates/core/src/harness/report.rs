use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{BenchmarkReport, CalibrationReport};
use crate::error::{Error, Result};

/// Version of the JSON report layout, stored in every report.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            _ => None,
        }
    }
}

/// A report with a flat CSV rendering. JSON is the serde form.
pub trait Report: Serialize + DeserializeOwned {
    const CSV_COLUMNS: &'static [&'static str];

    fn csv_records(&self) -> Vec<Vec<String>>;
}

impl Report for BenchmarkReport {
    /// Relative errors are fractions, not percentages. `wall_time_ms` is
    /// empty unless timing was requested.
    const CSV_COLUMNS: &'static [&'static str] = &[
        "shape",
        "ray_count",
        "perimeter_est_cm",
        "perimeter_true_cm",
        "perimeter_rel_error",
        "area_est_cm2",
        "area_true_cm2",
        "area_rel_error",
        "volume_est_cm3",
        "volume_true_cm3",
        "volume_rel_error",
        "wall_time_ms",
    ];

    fn csv_records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut rec = vec![r.shape.clone(), r.ray_count.to_string()];
                for e in [&r.perimeter_cm, &r.area_cm2, &r.volume_cm3] {
                    rec.extend([e.est.to_string(), e.truth.to_string(), e.rel_error.to_string()]);
                }
                rec.push(r.wall_time_ms.map(|t| t.to_string()).unwrap_or_default());
                rec
            })
            .collect()
    }
}

impl Report for CalibrationReport {
    const CSV_COLUMNS: &'static [&'static str] =
        &["sigma_cm", "seed", "camera", "translation_error_cm", "rotation_error_deg"];

    fn csv_records(&self) -> Vec<Vec<String>> {
        self.trials
            .iter()
            .flat_map(|t| {
                t.cameras.iter().map(move |c| {
                    vec![
                        t.sigma_cm.to_string(),
                        t.seed.to_string(),
                        c.camera.to_string(),
                        c.translation_cm.to_string(),
                        c.rotation_deg.to_string(),
                    ]
                })
            })
            .collect()
    }
}

/// Report bytes in the given format. Identical reports give identical bytes.
pub fn render_report<R: Report>(report: &R, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("reports serialize");
            out.push(b'\n');
            out
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(R::CSV_COLUMNS).expect("writing to memory");
            for rec in report.csv_records() {
                w.write_record(&rec).expect("writing to memory");
            }
            w.into_inner().expect("writing to memory")
        }
    }
}

pub fn emit_report<R: Report>(report: &R, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_report(report, format)).map_err(|e| Error::io(path, e))
}

/// Reads back a JSON report.
pub fn load_report<R: Report>(path: impl AsRef<Path>) -> Result<R> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        other => {
            return Err(Error::parse(path, format!("unsupported report schema version {other:?}")));
        }
    }
    serde_json::from_value(value).map_err(|e| Error::parse(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{BenchmarkRow, Estimate};

    fn one_row() -> BenchmarkReport {
        let rows = vec![BenchmarkRow {
            shape: "cube-15".into(),
            ray_count: 100,
            perimeter_cm: Estimate::new(58.9, 60.0),
            area_cm2: Estimate::new(224.0, 225.0),
            volume_cm3: Estimate::new(3370.0, 3375.0),
            wall_time_ms: None,
        }];
        BenchmarkReport {
            schema_version: SCHEMA_VERSION,
            h_cm: 1.0,
            seed: 0,
            summary: BenchmarkReport::summarize(&rows),
            rows,
        }
    }

    #[test]
    fn single_row_csv_has_two_lines() {
        let csv = String::from_utf8(render_report(&one_row(), ReportFormat::Csv)).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), BenchmarkReport::CSV_COLUMNS.len());
        assert!(lines[1].starts_with("cube-15,100,58.9,60,"));
        assert!(lines[1].ends_with(','));
    }

    #[test]
    fn json_round_trips_and_checks_version() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        emit_report(&one_row(), &path, ReportFormat::Json).unwrap();
        let back: BenchmarkReport = load_report(&path).unwrap();
        assert_eq!(back, one_row());
        let text = std::fs::read_to_string(&path).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 9");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(load_report::<BenchmarkReport>(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn unwritable_path() {
        let r = emit_report(&one_row(), "/nonexistent-dir/r.csv", ReportFormat::Csv);
        assert!(matches!(r, Err(Error::Io { .. })));
    }
}
