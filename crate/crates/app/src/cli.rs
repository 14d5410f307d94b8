//! Command line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use girthkit::probes::Radius;
use girthkit::synth::ShapeSpec;

#[derive(Debug, Parser)]
#[command(name = "girthkit", version, about = "Girth, cross-section and volume measurement of 3D body scans")]
pub struct Cli {
    /// Configuration file (TOML). Defaults to ./girthkit.toml when present.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Data directory; overrides GIRTHKIT_DATA and the config file.
    #[arg(long, global = true, value_name = "DIR")]
    pub data: Option<PathBuf>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Measure a section (and optionally a volume) of a mesh file.
    Measure {
        /// PLY or OBJ mesh.
        mesh: PathBuf,
        #[command(flatten)]
        probe: ProbeArgs,
    },
    /// Generate synthetic meshes, scans and marker captures.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Calibrate a rig from a directory of marker captures.
    Calibrate {
        /// Directory written by `synth markers` (manifest.json + position_*/).
        captures: PathBuf,
        /// Rig preset giving the camera topology.
        #[arg(long, conflicts_with = "topology", required_unless_present = "topology")]
        preset: Option<String>,
        /// Rig JSON whose camera ids, rows, masts and intrinsics are used.
        #[arg(long, value_name = "RIG")]
        topology: Option<PathBuf>,
        /// Output rig JSON.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Filter and fuse per-camera scans into one cloud, optionally meshing it.
    Fuse {
        /// Directory of `<camera id>.raw` organized scans.
        scans: PathBuf,
        /// Calibrated rig JSON; defaults to `rig` from the config file.
        #[arg(long)]
        rig: Option<PathBuf>,
        /// Output fused cloud (PLY).
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the slice-meshed surface here.
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// Band height of the slice mesher, cm.
        #[arg(long)]
        band: Option<f64>,
    },
    /// Run the accuracy benchmarks.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Manage stored models.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Manage patient sessions.
    #[command(subcommand)]
    Session(SessionCommand),
    /// Serve the HTTP interface.
    Serve {
        /// Listen address; defaults to `serve.addr` from the config file.
        #[arg(long)]
        addr: Option<String>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ProbeArgs {
    /// Probe circle center, `x,y,z` cm.
    #[arg(long, value_parser = parse_triplet, allow_hyphen_values = true)]
    pub center: [f64; 3],
    /// Probe plane normal, `x,y,z` (unit length).
    #[arg(long, value_parser = parse_triplet, allow_hyphen_values = true)]
    pub normal: [f64; 3],
    /// Circle radius in cm, or `auto`.
    #[arg(long, value_parser = parse_radius)]
    pub radius: Option<Radius>,
    /// Number of rays; defaults to `measure.ray_count`.
    #[arg(long)]
    pub rays: Option<usize>,
    /// Also measure the volume of this many cm below the circle.
    #[arg(long)]
    pub height: Option<f64>,
    /// Volume slice step, cm; defaults to `measure.slice_step_cm`.
    #[arg(long, requires = "height")]
    pub h: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Write a closed analytic mesh.
    Mesh {
        #[arg(long, value_parser = parse_shape)]
        shape: ShapeSpec,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Scan a shape with a preset rig: writes `<camera>.raw` per camera and
    /// the truth `rig.json`.
    Scan {
        #[arg(long, default_value = "8cam")]
        preset: String,
        #[arg(long, value_parser = parse_shape)]
        shape: ShapeSpec,
        /// Shape center in world coordinates (floor origin, +z up), cm.
        #[arg(long, value_parser = parse_triplet, default_value = "0,0,110")]
        at: [f64; 3],
        /// Depth noise standard deviation, cm.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Render cube-marker captures on a preset rig: writes the capture
    /// directory and the truth `rig.json`.
    Markers {
        #[arg(long, default_value = "8cam")]
        preset: String,
        #[arg(long, default_value_t = 6)]
        positions: usize,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Marker edge length, cm; defaults to `calibration.edge_length_cm`.
        #[arg(long)]
        edge: Option<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Perimeter, area and volume errors over shapes and ray counts.
    Sweep {
        /// Shapes to sweep (repeatable); defaults to the standard suite.
        #[arg(long = "shape", value_parser = parse_shape)]
        shapes: Vec<ShapeSpec>,
        /// Ray counts, e.g. `100,1000,10000`.
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000,100000")]
        rays: Vec<usize>,
        /// Volume slice step, cm; defaults to `measure.slice_step_cm`.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Record per-row wall time (makes the report non-reproducible).
        #[arg(long)]
        timing: bool,
        #[arg(short, long)]
        output: PathBuf,
        /// Defaults to the output file extension.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Simulated rig calibration errors over noise levels and seeds.
    Calibration {
        #[arg(long, default_value = "8cam")]
        preset: String,
        #[arg(long, default_value_t = 6)]
        positions: usize,
        /// Noise levels, cm.
        #[arg(long = "sigma", value_delimiter = ',', default_value = "0.1")]
        sigmas: Vec<f64>,
        /// Seeds: a list `1,2,5` or a range `1-20`.
        #[arg(long, value_parser = parse_seeds, default_value = "1-10")]
        seeds: SeedList,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    /// Import a PLY or OBJ mesh under an id.
    Add { id: String, mesh: PathBuf },
    /// List stored models as JSON.
    List,
}

#[derive(Debug, Subcommand)]
pub enum SessionCommand {
    /// Register a session holding a stored model.
    Add {
        patient: String,
        #[arg(long)]
        model: String,
        /// ISO-8601 timestamp; defaults to now.
        #[arg(long)]
        timestamp: Option<String>,
        /// Session id; defaults to the next free number.
        #[arg(long)]
        session: Option<String>,
        /// Free-form `key=value` metadata (repeatable).
        #[arg(long = "meta", value_parser = parse_key_value)]
        meta: Vec<(String, String)>,
    },
    /// List a patient's sessions as JSON, oldest first.
    List { patient: String },
    /// Measure one session and store the result with it.
    Measure {
        patient: String,
        session: String,
        #[command(flatten)]
        probe: ProbeArgs,
    },
    /// Apply one probe to several sessions.
    Compare {
        patient: String,
        /// Comma-separated session ids; defaults to all.
        #[arg(long)]
        sessions: Option<String>,
        #[command(flatten)]
        probe: ProbeArgs,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedList(pub Vec<u64>);

fn parse_triplet(s: &str) -> Result<[f64; 3], String> {
    girthkit::geom::parse_triplet(s).ok_or_else(|| format!("expected x,y,z numbers, got {s:?}"))
}

fn parse_radius(s: &str) -> Result<Radius, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Radius::Auto);
    }
    s.parse::<f64>()
        .map(Radius::Fixed)
        .map_err(|_| format!("expected a radius in cm or \"auto\", got {s:?}"))
}

/// `cube:15`, `cylinder:25,50`, `cone:25,50`, `pyramid:30,30`, `sphere:10`,
/// with an optional `@segments` suffix for curved shapes.
pub fn parse_shape(s: &str) -> Result<ShapeSpec, String> {
    let err = || format!("expected kind:dims[@segments] such as cube:15 or cylinder:25,50, got {s:?}");
    let (kind, rest) = s.split_once(':').ok_or_else(err)?;
    let (dims, segments) = match rest.split_once('@') {
        Some((d, n)) => (d, Some(n.parse::<usize>().map_err(|_| err())?)),
        None => (rest, None),
    };
    let dims: Vec<f64> = dims.split(',').map(|d| d.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| err())?;
    let spec = match (kind.to_ascii_lowercase().as_str(), dims.as_slice()) {
        ("cube", &[side]) => ShapeSpec::cube(side),
        ("cylinder", &[r, h]) => ShapeSpec::cylinder(r, h),
        ("cone", &[r, h]) => ShapeSpec::cone(r, h),
        ("pyramid", &[side, h]) => ShapeSpec::pyramid(side, h),
        ("sphere", &[r]) => ShapeSpec::sphere(r),
        _ => return Err(err()),
    };
    let spec = match segments {
        Some(n) => spec.with_segments(n),
        None => spec,
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn parse_seeds(s: &str) -> Result<SeedList, String> {
    let err = || format!("expected seeds like 1,2,3 or 1-20, got {s:?}");
    if let Some((a, b)) = s.split_once('-') {
        let (a, b) = (a.trim().parse::<u64>().map_err(|_| err())?, b.trim().parse::<u64>().map_err(|_| err())?);
        if a > b {
            return Err(err());
        }
        return Ok(SeedList((a..=b).collect()));
    }
    s.split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|_| err()))
        .collect::<Result<_, _>>()
        .map(SeedList)
}

fn parse_key_value(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected key=value, got {s:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn shapes_parse() {
        assert_eq!(parse_shape("cube:15").unwrap(), ShapeSpec::cube(15.0));
        assert_eq!(parse_shape("cylinder:25,50@64").unwrap(), ShapeSpec::cylinder(25.0, 50.0).with_segments(64));
        for bad in ["cube", "cube:", "cube:1,2", "torus:3", "cube:-1", "cone:25,50@x"] {
            assert!(parse_shape(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn seeds_parse() {
        assert_eq!(parse_seeds("1-3").unwrap(), SeedList(vec![1, 2, 3]));
        assert_eq!(parse_seeds("4,2").unwrap(), SeedList(vec![4, 2]));
        assert!(parse_seeds("3-1").is_err());
    }

    #[test]
    fn negative_triplets_are_values() {
        let cli = Cli::try_parse_from(["girthkit", "measure", "m.ply", "--center", "-1,0,2", "--normal", "0,0,-1"]).unwrap();
        match cli.command {
            Command::Measure { probe, .. } => {
                assert_eq!(probe.center, [-1.0, 0.0, 2.0]);
                assert_eq!(probe.normal, [0.0, 0.0, -1.0]);
            }
            other => panic!("{other:?}"),
        }
    }
}
