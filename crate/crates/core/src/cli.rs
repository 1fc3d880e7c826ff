//! The `sphere-reach` command line.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 numerical abort (the last
//! valid mesh is still written).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::baseline::GridField;
use crate::config::{ReconstructionConfig, Variant};
use crate::driver::{reconstruct, reconstruct_with_resampling, RunReport};
use crate::error::{Error, Result};
use crate::geometry::{Dim, Dimension};
use crate::io;
use crate::mesh::SurfaceMesh;
use crate::metrics::evaluate;
use crate::samples::{GridSpec, SdfSampleSet};
use crate::sampling::{self, CloudMode, MeshOracle, Normalization};

pub const THREADS_ENV: &str = "SPHERE_REACH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "sphere-reach", version, about = "Surface reconstruction from signed distance samples")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a ground-truth mesh on a grid or as a scattered cloud.
    Sample(SampleArgs),
    /// Fit a surface to a sample file.
    Reconstruct(ReconstructArgs),
    /// Marching Cubes / Squares on a grid sample file.
    Baseline(BaselineArgs),
    /// Hausdorff, Chamfer and SDF energy of two meshes against a ground truth.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
pub enum CloudPlacement {
    /// On the surface, displaced along the normal by --noise-pos.
    Surface,
    /// Uniform in [-1, 1]^d.
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KindArg {
    Signed,
    Unsigned,
    Clamped(f64),
    Conservative(f64),
}

fn parse_kind(s: &str) -> std::result::Result<KindArg, String> {
    let positive = |t: &str| match t.parse::<f64>() {
        Ok(v) if v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got {t:?}")),
    };
    match s {
        "signed" => Ok(KindArg::Signed),
        "unsigned" => Ok(KindArg::Unsigned),
        "conservative" => Ok(KindArg::Conservative(0.5)),
        _ => {
            if let Some(v) = s.strip_prefix("clamped:") {
                positive(v).map(KindArg::Clamped)
            } else if let Some(v) = s.strip_prefix("conservative:") {
                positive(v).map(KindArg::Conservative)
            } else {
                Err(format!("unknown kind {s:?}; use signed, unsigned, clamped:<sigma> or conservative[:<factor>]"))
            }
        }
    }
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    match s {
        "signed" => Ok(Variant::Signed),
        "unsigned" => Ok(Variant::Unsigned),
        "swept" => Ok(Variant::SweptVolume),
        "clamped" => Ok(Variant::Clamped { sigma: None }),
        _ => match s.strip_prefix("clamped:").map(str::parse::<f64>) {
            Some(Ok(v)) if v > 0.0 => Ok(Variant::Clamped { sigma: Some(v) }),
            _ => Err(format!("unknown variant {s:?}; use signed, unsigned, clamped[:<sigma>] or swept")),
        },
    }
}

#[derive(Debug, clap::Args)]
pub struct SampleArgs {
    /// Ground-truth OBJ (triangles in 3D, `l` polylines in 2D).
    pub gt: PathBuf,
    /// Grid with this many samples per axis over [-1, 1]^d.
    #[arg(long, conflicts_with = "cloud", required_unless_present = "cloud")]
    pub grid: Option<usize>,
    /// Scattered cloud with this many samples.
    #[arg(long)]
    pub cloud: Option<usize>,
    #[arg(long, value_enum, default_value_t = CloudPlacement::Surface)]
    pub placement: CloudPlacement,
    /// Normal displacement of surface cloud points.
    #[arg(long, default_value_t = 0.0)]
    pub noise_pos: f64,
    /// Gaussian noise added to the values.
    #[arg(long, default_value_t = 0.0)]
    pub value_noise: f64,
    /// signed, unsigned, clamped:<sigma> or conservative[:<factor>].
    #[arg(long, default_value = "signed", value_parser = parse_kind)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Keep the mesh coordinates instead of fitting them into [-1/2, 1/2]^d.
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct ReconstructArgs {
    pub samples: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub hmin: Option<f64>,
    #[arg(long)]
    pub hinit: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// signed, unsigned, clamped[:<sigma>] or swept; defaults to the file's kind.
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<Variant>,
    /// icosphere (default), mc, or a path to an OBJ start surface.
    #[arg(long, default_value = "icosphere")]
    pub init: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub remesh_iterations: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long, default_value_t = 0, requires = "oracle_mesh")]
    pub resample_rounds: usize,
    /// Ground truth used to evaluate resampled points.
    #[arg(long)]
    pub oracle_mesh: Option<PathBuf>,
    /// Use the oracle mesh as is instead of fitting it into [-1/2, 1/2]^d.
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long)]
    pub no_enclosure_check: bool,
    /// Per-iteration CSV log.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// JSON run summary.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct BaselineArgs {
    pub samples: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub iso: f64,
}

#[derive(Debug, clap::Args)]
pub struct CompareArgs {
    pub gt: PathBuf,
    pub samples: PathBuf,
    pub mesh_a: PathBuf,
    pub mesh_b: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub time_a: f64,
    #[arg(long, default_value_t = 0.0)]
    pub time_b: f64,
    #[arg(long, default_value_t = crate::metrics::DEFAULT_POINTS)]
    pub points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use the ground truth as is instead of fitting it into [-1/2, 1/2]^d.
    #[arg(long)]
    pub no_normalize: bool,
}

/// Parse `args` (program name first) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() { 2 } else { 1 }
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            // Fails only if a pool already exists, e.g. on repeated in-process calls.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Sample(a) => match io::obj_dimension(&a.gt)? {
            2 => sample_cmd::<2>(&a),
            _ => sample_cmd::<3>(&a),
        },
        Command::Reconstruct(a) => match io::sample_file_dimension(&a.samples)? {
            2 => reconstruct_cmd::<2>(&a),
            _ => reconstruct_cmd::<3>(&a),
        },
        Command::Baseline(a) => match io::sample_file_dimension(&a.samples)? {
            2 => baseline_cmd::<2>(&a),
            _ => baseline_cmd::<3>(&a),
        },
        Command::Compare(a) => match io::sample_file_dimension(&a.samples)? {
            2 => compare_cmd::<2>(&a),
            _ => compare_cmd::<3>(&a),
        },
    }
}

fn load_gt<const D: usize>(path: &Path, normalize: bool) -> Result<SurfaceMesh<D>> {
    let mesh = io::read_mesh::<D>(path)?;
    if normalize {
        Ok(Normalization::fit(&mesh)?.apply_mesh(&mesh))
    } else {
        Ok(mesh)
    }
}

fn sample_cmd<const D: usize>(a: &SampleArgs) -> Result<i32>
where
    Dim<D>: Dimension<D>,
{
    let gt = load_gt::<D>(&a.gt, !a.no_normalize)?;
    let unsigned = a.kind == KindArg::Unsigned;
    let mut set = match (a.grid, a.cloud) {
        (Some(k), _) => {
            let spec = GridSpec::<D>::unit_cube(k)?;
            if unsigned {
                sampling::sample_grid_unsigned(&gt, &spec)?
            } else {
                sampling::sample_grid(&gt, &spec)?
            }
        }
        (None, Some(n)) => {
            let mode = match a.placement {
                CloudPlacement::Surface => CloudMode::NearSurface { stddev: a.noise_pos },
                CloudPlacement::Box => CloudMode::UniformBox,
            };
            let set = sampling::sample_pointcloud(&gt, n, mode, a.seed)?;
            if unsigned {
                let values = set.values().iter().map(|v| v.abs()).collect();
                set.with_values(values, crate::samples::SampleKind::Unsigned)?
            } else {
                set
            }
        }
        (None, None) => return Err(Error::InvalidInput("pass --grid or --cloud".into())),
    };
    if a.value_noise > 0.0 {
        set = sampling::add_noise(&set, a.value_noise, a.seed.wrapping_add(1))?;
    }
    set = match a.kind {
        KindArg::Clamped(sigma) => sampling::clamp_samples(&set, sigma)?,
        KindArg::Conservative(f) => sampling::conservative_interior(&set, f)?,
        _ => set,
    };
    io::write_samples(&a.out, &set)?;
    let (lo, hi) = set.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    println!("{} samples, values in [{lo:.6}, {hi:.6}] -> {}", set.len(), a.out.display());
    Ok(0)
}

fn build_config<const D: usize>(a: &ReconstructArgs, samples: &SdfSampleSet<D>) -> ReconstructionConfig
where
    Dim<D>: Dimension<D>,
{
    let mut cfg = ReconstructionConfig::for_dim::<D>();
    cfg.variant = a.variant.unwrap_or_else(|| Variant::for_kind(samples.kind()));
    cfg.h_min = a.hmin;
    cfg.h_initial = a.hinit;
    if let Some(eps) = a.eps {
        cfg.epsilon = eps;
    }
    if let Some(b) = a.batch_size {
        cfg.batch_size = b;
    }
    if let Some(k) = a.remesh_iterations {
        cfg.remesh_iterations_per_step = k;
    }
    if let Some(n) = a.max_iterations {
        cfg.max_iterations_per_stage = n;
    }
    cfg.rng_seed = a.seed;
    cfg.require_enclosure = !a.no_enclosure_check && a.init == "icosphere";
    cfg
}

fn write_reports(a: &ReconstructArgs, report: &RunReport) -> Result<()> {
    if let Some(p) = &a.report {
        io::write_iterations_csv(p, report)?;
    }
    if let Some(p) = &a.summary {
        io::write_summary_json(p, report)?;
    }
    Ok(())
}

fn reconstruct_cmd<const D: usize>(a: &ReconstructArgs) -> Result<i32>
where
    Dim<D>: Dimension<D>,
{
    let samples = io::read_samples::<D>(&a.samples)?;
    let cfg = build_config(a, &samples);
    let init = match a.init.as_str() {
        "icosphere" => None,
        "mc" => {
            let field = GridField::from_samples(&samples)
                .map_err(|_| Error::InvalidInput("--init mc needs a sample file with a grid header".into()))?;
            let mesh = Dim::<D>::isosurface(&field, 0.0);
            if mesh.is_empty() {
                return Err(Error::InvalidInput("--init mc: the grid has no sign change".into()));
            }
            Some(mesh)
        }
        path => Some(io::read_mesh::<D>(Path::new(path))?),
    };
    let result = if a.resample_rounds > 0 {
        let path = a.oracle_mesh.as_ref().ok_or_else(|| Error::InvalidInput("--resample-rounds needs --oracle-mesh".into()))?;
        let gt = load_gt::<D>(path, !a.no_normalize)?;
        let oracle = match samples.kind() {
            crate::samples::SampleKind::Unsigned => MeshOracle::unsigned(gt)?,
            _ => MeshOracle::new(gt)?,
        };
        reconstruct_with_resampling(&samples, &oracle, a.resample_rounds, &cfg, init.as_ref())
    } else {
        reconstruct(&samples, &cfg, init.as_ref())
    };
    match result {
        Ok((mesh, report)) => {
            io::write_mesh(&a.out, &mesh)?;
            write_reports(a, &report)?;
            println!(
                "{} vertices, {} elements, E_SDF {:.6e}, max violation {:.3e}, {} iterations, {:.2}s -> {}",
                mesh.vertices.len(),
                mesh.elements.len(),
                report.final_energy,
                report.final_max_violation,
                report.iterations.len(),
                report.total_seconds,
                a.out.display()
            );
            Ok(0)
        }
        Err(aborted) if aborted.error.is_numerical() => {
            io::write_mesh(&a.out, &aborted.mesh)?;
            write_reports(a, &aborted.report)?;
            eprintln!("error: {}; last valid mesh written to {}", aborted.error, a.out.display());
            Ok(2)
        }
        Err(aborted) => Err(aborted.error),
    }
}

fn baseline_cmd<const D: usize>(a: &BaselineArgs) -> Result<i32>
where
    Dim<D>: Dimension<D>,
{
    let samples = io::read_samples::<D>(&a.samples)?;
    let field = GridField::from_samples(&samples)
        .map_err(|_| Error::InvalidInput(format!("{}: baseline needs a grid sample file", a.samples.display())))?;
    let mesh = Dim::<D>::isosurface(&field, a.iso);
    if mesh.is_empty() {
        eprintln!("warning: no sign change at isovalue {}; writing an empty mesh", a.iso);
    }
    io::write_mesh(&a.out, &mesh)?;
    println!("{} vertices, {} elements -> {}", mesh.vertices.len(), mesh.elements.len(), a.out.display());
    Ok(0)
}

fn grid_label<const D: usize>(samples: &SdfSampleSet<D>) -> String {
    match samples.grid() {
        Some(g) => g.dims.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("x"),
        None => format!("cloud{}", samples.len()),
    }
}

fn compare_cmd<const D: usize>(a: &CompareArgs) -> Result<i32>
where
    Dim<D>: Dimension<D>,
{
    let started = Instant::now();
    let gt = load_gt::<D>(&a.gt, !a.no_normalize)?;
    let samples = io::read_samples::<D>(&a.samples)?;
    let mut rows = Vec::new();
    for (path, time) in [(&a.mesh_a, a.time_a), (&a.mesh_b, a.time_b)] {
        let mesh = io::read_mesh::<D>(path)?;
        let r = evaluate(&mesh, &gt, &samples, time, a.points, a.seed)?;
        rows.push(io::ComparisonRow {
            mesh: path.display().to_string(),
            grid: grid_label(&samples),
            hausdorff: r.hausdorff,
            chamfer: r.chamfer,
            sdf_energy: r.sdf_energy,
            n_samples: r.n_samples_used,
            time_seconds: r.runtime_seconds,
        });
    }
    io::write_comparison_csv(&a.out, &rows)?;
    for row in &rows {
        println!("{}: Hdf {:.4} Chr {:.4} E_SDF {:.4e}", row.mesh, row.hausdorff, row.chamfer, row.sdf_energy);
    }
    println!("({:.2}s) -> {}", started.elapsed().as_secs_f64(), a.out.display());
    Ok(0)
}
