//! File-backed model and session store.
//!
//! ```text
//! <data>/index.json
//! <data>/models/<model>.ply
//! <data>/patients/<patient>/sessions/<session>/mesh.ply
//! <data>/patients/<patient>/sessions/<session>/meta.json
//! ```
//!
//! Registering a session copies the model mesh into the session directory,
//! so later uploads under the same model id leave past sessions untouched.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, FixedOffset};
use girthkit::mesh::{load_mesh, mesh_to_ply_bytes, Bvh, MeshFormat, PlyEncoding, TriangleMesh};
use girthkit::probes::MeasurementReport;
use serde::{Deserialize, Serialize};

use crate::config::MeasureDefaults;
use crate::error::{AppError, AppResult};
use crate::wire::{ComparePoint, MeasureRequest, ModelSummary, NewSession, SessionSummary};

const INDEX_FILE: &str = "index.json";
const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Index {
    version: u32,
    models: BTreeMap<String, ModelEntry>,
    patients: BTreeMap<String, Vec<SessionSummary>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelEntry {
    vertex_count: usize,
    triangle_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredMeasurement {
    pub probe: MeasureRequest,
    pub result: MeasurementReport,
}

/// Contents of a session's `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub patient: String,
    pub session: String,
    pub timestamp: String,
    pub model_id: String,
    #[serde(default)]
    pub measurements: Vec<StoredMeasurement>,
    #[serde(default)]
    pub meta: serde_json::Map<String, serde_json::Value>,
}

/// Ids become path components: ASCII letters, digits, `_`, `-` and `.`,
/// not starting with a dot.
pub fn validate_id(kind: &str, id: &str) -> AppResult<()> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(())
    } else {
        Err(AppError::BadRequest(format!("invalid {kind} id {id:?}")))
    }
}

fn parse_timestamp(text: &str) -> AppResult<DateTime<FixedOffset>> {
    DateTime::parse_from_rfc3339(text)
        .map_err(|e| AppError::BadRequest(format!("timestamp {text:?} is not ISO-8601 (RFC 3339): {e}")))
}

fn io_error(path: &Path, source: std::io::Error) -> AppError {
    girthkit::Error::Io {
        path: path.to_path_buf(),
        source,
    }
    .into()
}

/// Writes through a temporary file and a rename so that readers never see
/// a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> AppResult<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| io_error(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_error(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let text = serde_json::to_string_pretty(value).expect("store records serialize") + "\n";
    write_atomic(path, text.as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> AppResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        girthkit::Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        }
        .into()
    })
}

/// Sessions are listed by timestamp, ties broken by session id.
fn sort_sessions(sessions: &mut [SessionSummary]) {
    sessions.sort_by_cached_key(|s| (parse_timestamp(&s.timestamp).ok(), s.session.clone()));
}

/// Many readers and one writer: reads share the index lock, every mutation
/// holds the writer mutex for its whole read-modify-write cycle.
pub struct Store {
    root: PathBuf,
    index: RwLock<Index>,
    writer: Mutex<()>,
    meshes: RwLock<HashMap<PathBuf, Arc<Bvh>>>,
}

impl Store {
    /// Opens (creating if needed) the store at `root` and checks that every
    /// indexed mesh file exists.
    pub fn open(root: impl Into<PathBuf>) -> AppResult<Store> {
        let root = root.into();
        for sub in ["models", "patients"] {
            let dir = root.join(sub);
            std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        }
        let path = root.join(INDEX_FILE);
        let index = if path.exists() {
            let index: Index = read_json(&path)?;
            if index.version != INDEX_VERSION {
                return Err(girthkit::Error::Parse {
                    path: path.display().to_string(),
                    message: format!("unsupported index version {}", index.version),
                }
                .into());
            }
            index
        } else {
            Index {
                version: INDEX_VERSION,
                ..Index::default()
            }
        };
        let store = Store {
            root,
            index: RwLock::new(index),
            writer: Mutex::new(()),
            meshes: RwLock::new(HashMap::new()),
        };
        {
            let index = store.index.read().unwrap();
            let missing = index
                .models
                .keys()
                .map(|id| store.model_file(id))
                .chain(
                    index
                        .patients
                        .iter()
                        .flat_map(|(p, ss)| ss.iter().map(|s| store.session_dir(p, &s.session).join("mesh.ply"))),
                )
                .find(|f| !f.is_file());
            if let Some(f) = missing {
                return Err(girthkit::Error::Parse {
                    path: path.display().to_string(),
                    message: format!("indexed mesh {} is missing", f.display()),
                }
                .into());
            }
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn model_file(&self, id: &str) -> PathBuf {
        self.root.join("models").join(format!("{id}.ply"))
    }

    fn session_dir(&self, patient: &str, session: &str) -> PathBuf {
        self.root.join("patients").join(patient).join("sessions").join(session)
    }

    pub fn models(&self) -> Vec<ModelSummary> {
        let index = self.index.read().unwrap();
        index
            .models
            .iter()
            .map(|(id, m)| ModelSummary {
                id: id.clone(),
                vertex_count: m.vertex_count,
                triangle_count: m.triangle_count,
            })
            .collect()
    }

    pub fn model(&self, id: &str) -> AppResult<ModelSummary> {
        self.models()
            .into_iter()
            .find(|m| m.id == id)
            .ok_or_else(|| AppError::UnknownModel(id.to_string()))
    }

    /// Stores `mesh` under `id`, replacing any model of that id.
    pub fn put_model(&self, id: &str, mesh: &TriangleMesh) -> AppResult<ModelSummary> {
        validate_id("model", id)?;
        if mesh.is_empty() {
            return Err(girthkit::Error::EmptyMesh.into());
        }
        let _w = self.writer.lock().unwrap();
        let file = self.model_file(id);
        write_atomic(&file, &mesh_to_ply_bytes(mesh))?;
        self.meshes.write().unwrap().remove(&file);
        let mut index = self.index.read().unwrap().clone();
        index.models.insert(
            id.to_string(),
            ModelEntry {
                vertex_count: mesh.vertices().len(),
                triangle_count: mesh.triangles().len(),
            },
        );
        self.commit(index)?;
        self.model(id)
    }

    pub fn import_model(&self, id: &str, path: &Path) -> AppResult<ModelSummary> {
        let format = MeshFormat::from_path(path).unwrap_or(MeshFormat::Ply(PlyEncoding::BinaryLittleEndian));
        let mesh = load_mesh(path, format)?;
        self.put_model(id, &mesh)
    }

    /// Binary PLY bytes of a model.
    pub fn model_bytes(&self, id: &str) -> AppResult<Vec<u8>> {
        self.model(id)?;
        let file = self.model_file(id);
        std::fs::read(&file).map_err(|e| io_error(&file, e))
    }

    pub fn model_bvh(&self, id: &str) -> AppResult<Arc<Bvh>> {
        self.model(id)?;
        self.bvh(self.model_file(id))
    }

    fn bvh(&self, file: PathBuf) -> AppResult<Arc<Bvh>> {
        if let Some(b) = self.meshes.read().unwrap().get(&file) {
            return Ok(b.clone());
        }
        let mesh = load_mesh(&file, MeshFormat::Ply(PlyEncoding::BinaryLittleEndian))?;
        let bvh = Arc::new(Bvh::build(mesh)?);
        self.meshes.write().unwrap().insert(file, bvh.clone());
        Ok(bvh)
    }

    fn commit(&self, index: Index) -> AppResult<()> {
        write_json(&self.root.join(INDEX_FILE), &index)?;
        *self.index.write().unwrap() = index;
        Ok(())
    }

    pub fn patients(&self) -> Vec<String> {
        self.index.read().unwrap().patients.keys().cloned().collect()
    }

    /// Sessions of `patient` in timestamp order.
    pub fn sessions(&self, patient: &str) -> AppResult<Vec<SessionSummary>> {
        self.index
            .read()
            .unwrap()
            .patients
            .get(patient)
            .cloned()
            .ok_or_else(|| AppError::UnknownPatient(patient.to_string()))
    }

    pub fn add_session(&self, patient: &str, new: NewSession) -> AppResult<SessionSummary> {
        validate_id("patient", patient)?;
        parse_timestamp(&new.timestamp)?;
        if let Some(s) = &new.session {
            validate_id("session", s)?;
        }
        let _w = self.writer.lock().unwrap();
        self.model(&new.model_id)?;
        let mut index = self.index.read().unwrap().clone();
        let existing = index.patients.entry(patient.to_string()).or_default();
        let session = match new.session {
            Some(s) if existing.iter().any(|e| e.session == s) => {
                return Err(AppError::Conflict(format!("session {s:?} of patient {patient:?}")));
            }
            Some(s) => s,
            None => (existing.len() + 1..)
                .map(|n| format!("{n:03}"))
                .find(|s| existing.iter().all(|e| &e.session != s))
                .expect("unbounded range"),
        };
        let dir = self.session_dir(patient, &session);
        std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        let mesh_bytes = {
            let file = self.model_file(&new.model_id);
            std::fs::read(&file).map_err(|e| io_error(&file, e))?
        };
        write_atomic(&dir.join("mesh.ply"), &mesh_bytes)?;
        let meta = SessionMeta {
            patient: patient.to_string(),
            session: session.clone(),
            timestamp: new.timestamp.clone(),
            model_id: new.model_id.clone(),
            measurements: Vec::new(),
            meta: new.meta,
        };
        write_json(&dir.join("meta.json"), &meta)?;
        let summary = SessionSummary {
            session,
            timestamp: new.timestamp,
            model_id: new.model_id,
        };
        existing.push(summary.clone());
        sort_sessions(existing);
        self.commit(index)?;
        Ok(summary)
    }

    fn check_session(&self, patient: &str, session: &str) -> AppResult<()> {
        if self.sessions(patient)?.iter().any(|s| s.session == session) {
            Ok(())
        } else {
            Err(AppError::UnknownSession {
                patient: patient.to_string(),
                session: session.to_string(),
            })
        }
    }

    pub fn session_meta(&self, patient: &str, session: &str) -> AppResult<SessionMeta> {
        self.check_session(patient, session)?;
        read_json(&self.session_dir(patient, session).join("meta.json"))
    }

    pub fn session_bvh(&self, patient: &str, session: &str) -> AppResult<Arc<Bvh>> {
        self.check_session(patient, session)?;
        self.bvh(self.session_dir(patient, session).join("mesh.ply"))
    }

    /// Measures a session mesh and appends the result to its `meta.json`.
    pub fn measure_session(
        &self,
        patient: &str,
        session: &str,
        request: &MeasureRequest,
        defaults: &MeasureDefaults,
    ) -> AppResult<MeasurementReport> {
        let result = request.measure(&*self.session_bvh(patient, session)?, defaults)?;
        let _w = self.writer.lock().unwrap();
        let mut meta = self.session_meta(patient, session)?;
        meta.measurements.push(StoredMeasurement {
            probe: request.clone(),
            result: result.clone(),
        });
        write_json(&self.session_dir(patient, session).join("meta.json"), &meta)?;
        Ok(result)
    }

    /// Applies one probe to each selected session (all when `only` is
    /// `None`) in timestamp order.
    pub fn compare(
        &self,
        patient: &str,
        request: &MeasureRequest,
        only: Option<&[String]>,
        defaults: &MeasureDefaults,
    ) -> AppResult<Vec<ComparePoint>> {
        let sessions = self.sessions(patient)?;
        if let Some(only) = only {
            for s in only {
                self.check_session(patient, s)?;
            }
        }
        let probe = request.probe(defaults);
        probe.validate()?;
        sessions
            .into_iter()
            .filter(|s| only.is_none_or(|o| o.contains(&s.session)))
            .map(|s| {
                let bvh = self.session_bvh(patient, &s.session)?;
                let m = girthkit::probes::measure_section(&bvh, &probe)?;
                Ok(ComparePoint {
                    session: s.session,
                    timestamp: s.timestamp,
                    perimeter_cm: m.perimeter,
                    area_cm2: m.area,
                })
            })
            .collect()
    }
}
