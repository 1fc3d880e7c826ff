//! C interface. Meshes and sample sets are opaque handles owned by the
//! caller and released with the matching `_free` function. Every fallible
//! call returns an [`SrStatus`]; the message of the last failure on the
//! calling thread is available from [`sr_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use sphere_reach::baseline::{marching_cubes, marching_squares, GridField};
use sphere_reach::driver::reconstruct;
use sphere_reach::metrics::evaluate;
use sphere_reach::{io, Error, GridSpec, Point, ReconstructionConfig, SampleKind, SdfSampleSet, SurfaceMesh, Variant};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    /// Watchdog abort or solver failure. Reconstruction still hands back
    /// the last valid mesh.
    Numerical = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrSampleKind {
    Signed = 0,
    Unsigned = 1,
    Clamped = 2,
    ConservativeInterior = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrVariant {
    Signed = 0,
    Unsigned = 1,
    Clamped = 2,
    SweptVolume = 3,
}

/// Reconstruction parameters. Non-positive `h_min`, `h_initial` and
/// `clamp_sigma` mean "derive from the samples".
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrConfig {
    pub tau_min: f64,
    pub tau_max: f64,
    pub armijo_c: f64,
    pub epsilon: f64,
    pub h_min: f64,
    pub h_initial: f64,
    pub batch_size: usize,
    pub coarse_window: usize,
    pub final_window: usize,
    pub conv_tol_factor: f64,
    pub variant: SrVariant,
    pub clamp_sigma: f64,
    pub rng_seed: u64,
    pub remesh_iterations_per_step: usize,
    pub init_resolution: u32,
    pub max_iterations_per_stage: usize,
    pub watchdog_bound: f64,
    pub require_enclosure: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SrMetrics {
    pub hausdorff: f64,
    pub chamfer: f64,
    pub sdf_energy: f64,
    pub n_samples_used: usize,
    pub runtime_seconds: f64,
}

enum MeshData {
    D2(SurfaceMesh<2>),
    D3(SurfaceMesh<3>),
}

enum SampleData {
    D2(SdfSampleSet<2>),
    D3(SdfSampleSet<3>),
}

/// A closed polyline (2D) or triangle mesh (3D).
pub struct SrMesh(MeshData);

/// A set of signed distance samples.
pub struct SrSamples(SampleData);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            _ if e.is_numerical() => SrStatus::Numerical,
            Error::Io { .. } | Error::Parse { .. } => SrStatus::Io,
            _ => SrStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(SrStatus::InvalidArgument, message.into())
}

fn null(name: &str) -> Failure {
    Failure(SrStatus::NullArgument, format!("{name} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SrStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SrStatus::Panic
        }
    }
}

unsafe fn array<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn to_path(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| invalid("path is not UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn put<T>(p: *mut *mut T, value: T) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null("output pointer"));
    }
    *p = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

fn sample_kind(kind: SrSampleKind, clamp: f64) -> SampleKind {
    match kind {
        SrSampleKind::Signed => SampleKind::Signed,
        SrSampleKind::Unsigned => SampleKind::Unsigned,
        SrSampleKind::Clamped => SampleKind::Clamped(clamp),
        SrSampleKind::ConservativeInterior => SampleKind::ConservativeInterior,
    }
}

fn to_points<const D: usize>(coords: &[f64]) -> Vec<Point<D>> {
    coords.chunks_exact(D).map(Point::<D>::from_column_slice).collect()
}

/// Message of the last failed call on this thread, or null. The string is
/// owned by the library and valid until the next failing call.
#[no_mangle]
pub extern "C" fn sr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Scattered samples: `points` holds `n * dim` coordinates, `values` `n`
/// values. `clamp` is the clamp radius for clamped samples.
///
/// # Safety
/// `points` and `values` must be readable for the stated lengths and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sr_samples_new(
    dim: u32,
    points: *const f64,
    values: *const f64,
    n: usize,
    kind: SrSampleKind,
    clamp: f64,
    out: *mut *mut SrSamples,
) -> SrStatus {
    guard(|| {
        let values = array(values, n, "values")?.to_vec();
        let kind = sample_kind(kind, clamp);
        let data = match dim {
            2 => SampleData::D2(SdfSampleSet::new(to_points::<2>(array(points, 2 * n, "points")?), values, kind)?),
            3 => SampleData::D3(SdfSampleSet::new(to_points::<3>(array(points, 3 * n, "points")?), values, kind)?),
            _ => return Err(invalid(format!("dimension must be 2 or 3, got {dim}"))),
        };
        put(out, SrSamples(data))
    })
}

/// Samples on a regular grid with `dims[k]` points along axis `k`, x
/// fastest. `values` holds one value per grid point.
///
/// # Safety
/// `dims`, `origin` and `spacing` must hold `dim` entries and `values` the
/// product of `dims`.
#[no_mangle]
pub unsafe extern "C" fn sr_samples_new_grid(
    dim: u32,
    dims: *const usize,
    origin: *const f64,
    spacing: *const f64,
    values: *const f64,
    kind: SrSampleKind,
    clamp: f64,
    out: *mut *mut SrSamples,
) -> SrStatus {
    guard(|| {
        let d = dim as usize;
        if d != 2 && d != 3 {
            return Err(invalid(format!("dimension must be 2 or 3, got {dim}")));
        }
        let (dims, origin, spacing) = (array(dims, d, "dims")?, array(origin, d, "origin")?, array(spacing, d, "spacing")?);
        let n: usize = dims.iter().product();
        let values = array(values, n, "values")?.to_vec();
        let kind = sample_kind(kind, clamp);
        let data = if d == 2 {
            let spec = GridSpec::new([dims[0], dims[1]], Point::<2>::from_column_slice(origin), [spacing[0], spacing[1]])?;
            SampleData::D2(SdfSampleSet::on_grid(spec, values, kind)?)
        } else {
            let spec = GridSpec::new([dims[0], dims[1], dims[2]], Point::<3>::from_column_slice(origin), [spacing[0], spacing[1], spacing[2]])?;
            SampleData::D3(SdfSampleSet::on_grid(spec, values, kind)?)
        };
        put(out, SrSamples(data))
    })
}

/// # Safety
/// `samples` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sr_samples_free(samples: *mut SrSamples) {
    if !samples.is_null() {
        drop(Box::from_raw(samples));
    }
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `samples` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sr_samples_len(samples: *const SrSamples) -> usize {
    match samples.as_ref() {
        Some(SrSamples(SampleData::D2(s))) => s.len(),
        Some(SrSamples(SampleData::D3(s))) => s.len(),
        None => 0,
    }
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sr_samples_read(path: *const c_char, out: *mut *mut SrSamples) -> SrStatus {
    guard(|| {
        let p = to_path(path)?;
        let data = match io::sample_file_dimension(&p)? {
            2 => SampleData::D2(io::read_samples(&p)?),
            _ => SampleData::D3(io::read_samples(&p)?),
        };
        put(out, SrSamples(data))
    })
}

/// # Safety
/// `samples` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sr_samples_write(samples: *const SrSamples, path: *const c_char) -> SrStatus {
    guard(|| {
        let p = to_path(path)?;
        match &handle(samples, "samples")?.0 {
            SampleData::D2(s) => io::write_samples(&p, s)?,
            SampleData::D3(s) => io::write_samples(&p, s)?,
        }
        Ok(())
    })
}

/// A mesh from `nv * dim` vertex coordinates and `ne * dim` vertex indices
/// (segments in 2D, triangles in 3D).
///
/// # Safety
/// The arrays must be readable for the stated lengths and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sr_mesh_new(
    dim: u32,
    vertices: *const f64,
    nv: usize,
    elements: *const u32,
    ne: usize,
    out: *mut *mut SrMesh,
) -> SrStatus {
    guard(|| {
        let d = dim as usize;
        if d != 2 && d != 3 {
            return Err(invalid(format!("dimension must be 2 or 3, got {dim}")));
        }
        let coords = array(vertices, d * nv, "vertices")?;
        let ids = array(elements, d * ne, "elements")?;
        if let Some(bad) = ids.iter().find(|&&i| i as usize >= nv) {
            return Err(invalid(format!("vertex index {bad} out of range for {nv} vertices")));
        }
        let data = if d == 2 {
            let el = ids.chunks_exact(2).map(|c| [c[0] as usize, c[1] as usize]).collect();
            MeshData::D2(SurfaceMesh::new(to_points::<2>(coords), el))
        } else {
            let el = ids.chunks_exact(3).map(|c| [c[0] as usize, c[1] as usize, c[2] as usize]).collect();
            MeshData::D3(SurfaceMesh::new(to_points::<3>(coords), el))
        };
        put(out, SrMesh(data))
    })
}

/// # Safety
/// `mesh` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sr_mesh_free(mesh: *mut SrMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Dimension, vertex count and element count. Any output may be null.
///
/// # Safety
/// `mesh` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sr_mesh_counts(mesh: *const SrMesh, dim: *mut u32, nv: *mut usize, ne: *mut usize) -> SrStatus {
    guard(|| {
        let (d, v, e) = match &handle(mesh, "mesh")?.0 {
            MeshData::D2(m) => (2, m.vertices.len(), m.elements.len()),
            MeshData::D3(m) => (3, m.vertices.len(), m.elements.len()),
        };
        if let Some(p) = dim.as_mut() {
            *p = d;
        }
        if let Some(p) = nv.as_mut() {
            *p = v;
        }
        if let Some(p) = ne.as_mut() {
            *p = e;
        }
        Ok(())
    })
}

/// Copy the mesh into caller buffers sized from [`sr_mesh_counts`]:
/// `nv * dim` doubles and `ne * dim` indices. Either buffer may be null.
///
/// # Safety
/// Non-null buffers must be writable for those lengths.
#[no_mangle]
pub unsafe extern "C" fn sr_mesh_copy(mesh: *const SrMesh, vertices: *mut f64, elements: *mut u32) -> SrStatus {
    guard(|| {
        let (coords, ids): (Vec<f64>, Vec<usize>) = match &handle(mesh, "mesh")?.0 {
            MeshData::D2(m) => (m.vertices.iter().flat_map(|p| p.iter().copied()).collect(), m.elements.concat()),
            MeshData::D3(m) => (m.vertices.iter().flat_map(|p| p.iter().copied()).collect(), m.elements.concat()),
        };
        if ids.iter().any(|&i| i > u32::MAX as usize) {
            return Err(invalid("mesh too large for 32-bit indices"));
        }
        if !vertices.is_null() {
            ptr::copy_nonoverlapping(coords.as_ptr(), vertices, coords.len());
        }
        if !elements.is_null() {
            for (k, &i) in ids.iter().enumerate() {
                *elements.add(k) = i as u32;
            }
        }
        Ok(())
    })
}

/// Read an OBJ file: triangles give a 3D mesh, `l` records a 2D one.
///
/// # Safety
/// `path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sr_mesh_read(path: *const c_char, out: *mut *mut SrMesh) -> SrStatus {
    guard(|| {
        let p = to_path(path)?;
        let data = match io::obj_dimension(&p)? {
            2 => MeshData::D2(io::read_mesh(&p)?),
            _ => MeshData::D3(io::read_mesh(&p)?),
        };
        put(out, SrMesh(data))
    })
}

/// # Safety
/// `mesh` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sr_mesh_write(mesh: *const SrMesh, path: *const c_char) -> SrStatus {
    guard(|| {
        let p = to_path(path)?;
        match &handle(mesh, "mesh")?.0 {
            MeshData::D2(m) => io::write_mesh(&p, m)?,
            MeshData::D3(m) => io::write_mesh(&p, m)?,
        }
        Ok(())
    })
}

fn to_c(c: &ReconstructionConfig) -> SrConfig {
    let (variant, clamp_sigma) = match c.variant {
        Variant::Signed => (SrVariant::Signed, 0.0),
        Variant::Unsigned => (SrVariant::Unsigned, 0.0),
        Variant::Clamped { sigma } => (SrVariant::Clamped, sigma.unwrap_or(0.0)),
        Variant::SweptVolume => (SrVariant::SweptVolume, 0.0),
    };
    SrConfig {
        tau_min: c.tau_min,
        tau_max: c.tau_max,
        armijo_c: c.armijo_c,
        epsilon: c.epsilon,
        h_min: c.h_min.unwrap_or(0.0),
        h_initial: c.h_initial.unwrap_or(0.0),
        batch_size: c.batch_size,
        coarse_window: c.coarse_window,
        final_window: c.final_window,
        conv_tol_factor: c.conv_tol_factor,
        variant,
        clamp_sigma,
        rng_seed: c.rng_seed,
        remesh_iterations_per_step: c.remesh_iterations_per_step,
        init_resolution: c.init_resolution,
        max_iterations_per_stage: c.max_iterations_per_stage,
        watchdog_bound: c.watchdog_bound,
        require_enclosure: c.require_enclosure,
    }
}

fn from_c(c: &SrConfig) -> ReconstructionConfig {
    let positive = |x: f64| (x > 0.0).then_some(x);
    let variant = match c.variant {
        SrVariant::Signed => Variant::Signed,
        SrVariant::Unsigned => Variant::Unsigned,
        SrVariant::Clamped => Variant::Clamped { sigma: positive(c.clamp_sigma) },
        SrVariant::SweptVolume => Variant::SweptVolume,
    };
    ReconstructionConfig {
        tau_min: c.tau_min,
        tau_max: c.tau_max,
        armijo_c: c.armijo_c,
        epsilon: c.epsilon,
        h_min: positive(c.h_min),
        h_initial: positive(c.h_initial),
        batch_size: c.batch_size,
        coarse_window: c.coarse_window,
        final_window: c.final_window,
        conv_tol_factor: c.conv_tol_factor,
        variant,
        rng_seed: c.rng_seed,
        remesh_iterations_per_step: c.remesh_iterations_per_step,
        init_resolution: c.init_resolution,
        max_iterations_per_stage: c.max_iterations_per_stage,
        watchdog_bound: c.watchdog_bound,
        require_enclosure: c.require_enclosure,
    }
}

/// Defaults for a `dim`-dimensional reconstruction of signed samples.
///
/// # Safety
/// `config` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sr_config_default(dim: u32, config: *mut SrConfig) -> SrStatus {
    guard(|| {
        let c = match dim {
            2 => ReconstructionConfig::for_dim::<2>(),
            3 => ReconstructionConfig::for_dim::<3>(),
            _ => return Err(invalid(format!("dimension must be 2 or 3, got {dim}"))),
        };
        *config.as_mut().ok_or_else(|| null("config"))? = to_c(&c);
        Ok(())
    })
}

/// Reconstruct a surface from `samples`. `init` may be null for the default
/// enclosing sphere. On [`SrStatus::Numerical`] `out` still receives the
/// last mesh that passed the watchdog.
///
/// # Safety
/// `samples` and `config` must be live, `init` null or live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sr_reconstruct(
    samples: *const SrSamples,
    config: *const SrConfig,
    init: *const SrMesh,
    out: *mut *mut SrMesh,
) -> SrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let cfg = from_c(handle(config, "config")?);
        let init = init.as_ref().map(|m| &m.0);
        let (mesh, error) = match (&handle(samples, "samples")?.0, init) {
            (SampleData::D2(s), None | Some(MeshData::D2(_))) => {
                let i = match init {
                    Some(MeshData::D2(m)) => Some(m),
                    _ => None,
                };
                match reconstruct(s, &cfg, i) {
                    Ok((m, _)) => (MeshData::D2(m), None),
                    Err(a) => (MeshData::D2(a.mesh), Some(a.error)),
                }
            }
            (SampleData::D3(s), None | Some(MeshData::D3(_))) => {
                let i = match init {
                    Some(MeshData::D3(m)) => Some(m),
                    _ => None,
                };
                match reconstruct(s, &cfg, i) {
                    Ok((m, _)) => (MeshData::D3(m), None),
                    Err(a) => (MeshData::D3(a.mesh), Some(a.error)),
                }
            }
            _ => return Err(invalid("start surface and samples differ in dimension")),
        };
        match error {
            None => put(out, SrMesh(mesh)),
            Some(e) if e.is_numerical() => {
                put(out, SrMesh(mesh))?;
                Err(e.into())
            }
            Some(e) => Err(e.into()),
        }
    })
}

/// Marching Cubes (3D) or Marching Squares (2D) on grid samples. A field
/// without a crossing gives an empty mesh.
///
/// # Safety
/// `samples` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sr_baseline(samples: *const SrSamples, isovalue: f64, out: *mut *mut SrMesh) -> SrStatus {
    guard(|| {
        let data = match &handle(samples, "samples")?.0 {
            SampleData::D2(s) => MeshData::D2(marching_squares(&GridField::from_samples(s)?, isovalue)),
            SampleData::D3(s) => MeshData::D3(marching_cubes(&GridField::from_samples(s)?, isovalue)),
        };
        put(out, SrMesh(data))
    })
}

/// Hausdorff and Chamfer distances of `mesh` to `gt` on `n_points` sampled
/// points per side, and the SDF energy over `samples`.
///
/// # Safety
/// All handles must be live and `metrics` writable.
#[no_mangle]
pub unsafe extern "C" fn sr_metrics(
    mesh: *const SrMesh,
    gt: *const SrMesh,
    samples: *const SrSamples,
    n_points: usize,
    seed: u64,
    runtime_seconds: f64,
    metrics: *mut SrMetrics,
) -> SrStatus {
    guard(|| {
        let dst = metrics.as_mut().ok_or_else(|| null("metrics"))?;
        let r = match (&handle(mesh, "mesh")?.0, &handle(gt, "gt")?.0, &handle(samples, "samples")?.0) {
            (MeshData::D2(m), MeshData::D2(g), SampleData::D2(s)) => evaluate(m, g, s, runtime_seconds, n_points, seed)?,
            (MeshData::D3(m), MeshData::D3(g), SampleData::D3(s)) => evaluate(m, g, s, runtime_seconds, n_points, seed)?,
            _ => return Err(invalid("mesh, ground truth and samples differ in dimension")),
        };
        *dst = SrMetrics {
            hausdorff: r.hausdorff,
            chamfer: r.chamfer,
            sdf_energy: r.sdf_energy,
            n_samples_used: r.n_samples_used,
            runtime_seconds: r.runtime_seconds,
        };
        Ok(())
    })
}
