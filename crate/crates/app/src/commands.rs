//! Command implementations. Each writes its result to `out`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use girthkit::calib::{calibrate_rig, CameraRig, CaptureSet, RigidTransform};
use girthkit::cloud::{load_organized_raw, save_cloud_ply, save_organized_raw, PointCloud};
use girthkit::geom::{Point, Vector};
use girthkit::harness::{
    emit_report, run_calibration_trial, run_measurement_sweep, standard_suite, CalibrationTrialConfig, ReportFormat,
    SweepConfig,
};
use girthkit::mesh::{load_mesh, save_mesh, Bvh, MeshFormat, PlyEncoding};
use girthkit::pipeline::{fuse_scans, reconstruct};
use girthkit::synth::{
    gen_shape, marker_poses, rig_preset, rig_preset_with_world, simulate_depth, simulate_marker_captures, Scene,
    VirtualCamera,
};
use serde::Serialize;
use serde_json::json;

use crate::cli::{BenchCommand, Cli, Command, FormatArg, ModelCommand, ProbeArgs, SessionCommand, SynthCommand};
use crate::config::Config;
use crate::error::{AppError, AppResult};
use crate::server::{self, session_list, AppState};
use crate::store::Store;
use crate::wire::{render_measurement, MeasureRequest, NewSession};

impl ProbeArgs {
    pub fn request(&self) -> MeasureRequest {
        MeasureRequest {
            center: self.center,
            normal: self.normal,
            radius: self.radius,
            rays: self.rays,
            height: self.height,
            h: self.h,
        }
    }
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> AppResult<()> {
    let text = serde_json::to_string_pretty(value).expect("output serializes");
    print_text(out, &(text + "\n"))
}

fn print_text(out: &mut dyn Write, text: &str) -> AppResult<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| AppError::Startup(format!("cannot write output: {e}")))
}

fn io_error(path: &Path, source: std::io::Error) -> AppError {
    girthkit::Error::Io {
        path: path.to_path_buf(),
        source,
    }
    .into()
}

fn mesh_format(path: &Path) -> AppResult<MeshFormat> {
    MeshFormat::from_path(path)
        .ok_or_else(|| AppError::Usage(format!("{}: mesh files must end in .ply or .obj", path.display())))
}

fn report_format(format: Option<FormatArg>, path: &Path) -> AppResult<ReportFormat> {
    match format {
        Some(FormatArg::Csv) => Ok(ReportFormat::Csv),
        Some(FormatArg::Json) => Ok(ReportFormat::Json),
        None => ReportFormat::from_path(path).ok_or_else(|| {
            AppError::Usage(format!("{}: pass --format or use a .csv or .json extension", path.display()))
        }),
    }
}

fn create_dir(dir: &Path) -> AppResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

/// Resolves the configuration for `cli`: config file, then GIRTHKIT_DATA,
/// then `--data`.
pub fn load_config(cli: &Cli) -> AppResult<Config> {
    let mut config = Config::load(cli.config.as_deref())?;
    if let Some(d) = &cli.data {
        config.data_dir = d.clone();
    }
    Ok(config)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> AppResult<()> {
    let config = load_config(&cli)?;
    match cli.command {
        Command::Measure { mesh, probe } => {
            let format = MeshFormat::from_path(&mesh).unwrap_or(MeshFormat::Ply(PlyEncoding::BinaryLittleEndian));
            let bvh = Bvh::build(load_mesh(&mesh, format)?)?;
            let report = probe.request().measure(&bvh, &config.measure)?;
            print_text(out, &render_measurement(&report))
        }
        Command::Synth(cmd) => synth(cmd, &config, out),
        Command::Calibrate {
            captures,
            preset,
            topology,
            output,
        } => {
            let topology = match (preset, topology) {
                (Some(p), _) => rig_preset(&p)?.topology(),
                (None, Some(path)) => CameraRig::load(&path)?.topology(),
                (None, None) => return Err(AppError::Usage("pass --preset or --topology".into())),
            };
            let set = CaptureSet::load_dir(&captures)?;
            let rig = calibrate_rig(&set, &topology, &config.calibration)?;
            rig.save(&output)?;
            print_json(
                out,
                &json!({ "rig": output, "reference": rig.reference_id, "cameras": rig.ids() }),
            )
        }
        Command::Fuse {
            scans,
            rig,
            output,
            mesh,
            band,
        } => {
            let rig_path = rig
                .or(config.rig.clone())
                .ok_or_else(|| AppError::Usage("no rig: pass --rig or set `rig` in the config file".into()))?;
            let rig = CameraRig::load(&rig_path)?;
            let clouds = load_scans(&scans)?;
            let fused = fuse_scans(&clouds, &rig, &config.filters)?;
            save_cloud_ply(&fused, &output, PlyEncoding::BinaryLittleEndian)?;
            let mut summary = json!({ "cloud": output, "scans": clouds.len(), "points": fused.valid_count() });
            if let Some(path) = mesh {
                let format = mesh_format(&path)?;
                let surface = reconstruct(&fused, &rig, band.unwrap_or(config.measure.band_height_cm))?;
                save_mesh(&surface, &path, format)?;
                summary["mesh"] = json!(path);
                summary["triangles"] = json!(surface.triangles().len());
            }
            print_json(out, &summary)
        }
        Command::Bench(cmd) => bench(cmd, &config, out),
        Command::Model(cmd) => {
            let store = Store::open(&config.data_dir)?;
            match cmd {
                ModelCommand::Add { id, mesh } => print_json(out, &store.import_model(&id, &mesh)?),
                ModelCommand::List => print_json(out, &store.models()),
            }
        }
        Command::Session(cmd) => session(cmd, &config, out),
        Command::Serve { addr } => {
            let addr = addr.unwrap_or_else(|| config.serve.addr.clone());
            let store = Store::open(&config.data_dir).map_err(|e| {
                AppError::Startup(format!("data directory {}: {e}", config.data_dir.display()))
            })?;
            let state = AppState {
                store: Arc::new(store),
                measure: config.measure.clone(),
            };
            let runtime = tokio::runtime::Runtime::new().map_err(|e| AppError::Startup(e.to_string()))?;
            runtime.block_on(server::serve(state, &addr))
        }
    }
}

/// `(camera id, cloud)` for every `<id>.raw` file in `dir`, by id.
fn load_scans(dir: &Path) -> AppResult<Vec<(u32, PointCloud)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| io_error(dir, e))?;
    let mut files: Vec<(u32, PathBuf)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "raw") {
            if let Some(id) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse().ok()) {
                files.push((id, path));
            }
        }
    }
    if files.is_empty() {
        return Err(girthkit::Error::InsufficientPoints(format!("no <camera>.raw scans in {}", dir.display())).into());
    }
    files.sort();
    files
        .into_iter()
        .map(|(id, path)| Ok((id, load_organized_raw(&path)?.0)))
        .collect()
}

fn synth(cmd: SynthCommand, config: &Config, out: &mut dyn Write) -> AppResult<()> {
    match cmd {
        SynthCommand::Mesh { shape, output } => {
            let format = mesh_format(&output)?;
            let mesh = gen_shape(&shape)?;
            save_mesh(&mesh, &output, format)?;
            print_json(
                out,
                &json!({ "mesh": output, "shape": shape.name(), "triangles": mesh.triangles().len() }),
            )
        }
        SynthCommand::Scan {
            preset,
            shape,
            at,
            sigma,
            seed,
            output,
        } => {
            let (rig, world) = rig_preset_with_world(&preset)?;
            let mesh = gen_shape(&shape)?;
            let at = Vector::from(at);
            let scene = Scene::single(&mesh, RigidTransform::translation_only(at))?;
            create_dir(&output)?;
            for c in &rig.cameras {
                let camera = VirtualCamera::new(c.intrinsics, world.compose(&c.extrinsic)).with_noise(sigma, seed ^ c.id as u64);
                let cloud = simulate_depth(&scene, &camera)?;
                save_organized_raw(&cloud, &c.intrinsics, output.join(format!("{}.raw", c.id)))?;
            }
            let rig_path = output.join("rig.json");
            rig.save(&rig_path)?;
            let center = world.inverse().apply_point(&Point::from(at));
            print_json(
                out,
                &json!({
                    "rig": rig_path,
                    "cameras": rig.ids(),
                    "shape_center": center,
                    "vertical_axis": rig.vertical_axis(),
                }),
            )
        }
        SynthCommand::Markers {
            preset,
            positions,
            sigma,
            seed,
            edge,
            output,
        } => {
            let (rig, world) = rig_preset_with_world(&preset)?;
            let edge = edge.unwrap_or(config.calibration.edge_length_cm);
            let poses = marker_poses(&rig, &world, edge, positions, seed)?;
            let set = simulate_marker_captures(&rig, &world, &poses, edge, sigma, seed)?;
            create_dir(&output)?;
            set.save_dir(&output)?;
            let rig_path = output.join("rig.json");
            rig.save(&rig_path)?;
            print_json(out, &json!({ "captures": output, "positions": poses.len(), "rig": rig_path }))
        }
    }
}

fn bench(cmd: BenchCommand, config: &Config, out: &mut dyn Write) -> AppResult<()> {
    match cmd {
        BenchCommand::Sweep {
            shapes,
            rays,
            h,
            seed,
            timing,
            output,
            format,
        } => {
            let format = report_format(format, &output)?;
            let shapes = if shapes.is_empty() { standard_suite() } else { shapes };
            let mut sweep = SweepConfig::new(shapes, rays, h.unwrap_or(config.measure.slice_step_cm), seed);
            sweep.record_wall_time = timing;
            let report = run_measurement_sweep(&sweep)?;
            emit_report(&report, &output, format)?;
            print_json(out, &json!({ "report": output, "summary": report.summary }))
        }
        BenchCommand::Calibration {
            preset,
            positions,
            sigmas,
            seeds,
            output,
            format,
        } => {
            let format = report_format(format, &output)?;
            let mut trial = CalibrationTrialConfig::new(&preset, positions, sigmas, seeds.0);
            trial.calibration = config.calibration.clone();
            let report = run_calibration_trial(&trial)?;
            emit_report(&report, &output, format)?;
            print_json(out, &json!({ "report": output, "summary": report.summary }))
        }
    }
}

fn session(cmd: SessionCommand, config: &Config, out: &mut dyn Write) -> AppResult<()> {
    let store = Store::open(&config.data_dir)?;
    match cmd {
        SessionCommand::Add {
            patient,
            model,
            timestamp,
            session,
            meta,
        } => {
            let timestamp =
                timestamp.unwrap_or_else(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
            let new = NewSession {
                timestamp,
                model_id: model,
                session,
                meta: meta.into_iter().map(|(k, v)| (k, v.into())).collect(),
            };
            print_json(out, &store.add_session(&patient, new)?)
        }
        SessionCommand::List { patient } => print_json(out, &store.sessions(&patient)?),
        SessionCommand::Measure { patient, session, probe } => {
            let report = store.measure_session(&patient, &session, &probe.request(), &config.measure)?;
            print_text(out, &render_measurement(&report))
        }
        SessionCommand::Compare {
            patient,
            sessions,
            probe,
        } => {
            let only = sessions.as_deref().map(session_list);
            print_json(out, &store.compare(&patient, &probe.request(), only.as_deref(), &config.measure)?)
        }
    }
}
