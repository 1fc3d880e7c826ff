//! The full pipeline: start surface, coarse-to-fine edge-length schedule,
//! convergence tests, optional resampling rounds, and run reports.

use std::fmt;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ReconstructionConfig, Variant};
use crate::error::{Error, Result};
use crate::flow::{flow_step, sdf_energy};
use crate::geometry::{bounding_box, Dim, Dimension, Point};
use crate::mesh::{SurfaceMesh, ValidityReport};
use crate::remesh::{compute_active_region, remesh, RemeshParams};
use crate::samples::SdfSampleSet;
use crate::sampling::{propose_new_samples, SdfOracle};
use crate::spatial::Bvh;

/// True once the last `window` energies fail to improve on the energy just
/// before them by more than `tol`.
pub fn converged(history: &[f64], window: usize, tol: f64) -> bool {
    if window == 0 || history.len() < window + 1 {
        return false;
    }
    let start = history[history.len() - window - 1];
    let best = history[history.len() - window..].iter().copied().fold(f64::INFINITY, f64::min);
    best >= start - tol
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub round: usize,
    pub stage: usize,
    pub iteration: usize,
    pub h: f64,
    pub tau: f64,
    /// Full-set energy of the surface entering this iteration.
    pub energy: f64,
    pub batch_size: usize,
    pub active_rows: usize,
    pub interior_rows: usize,
    pub exterior_rows: usize,
    pub region_elements: usize,
    pub vertex_count: usize,
    pub element_count: usize,
    pub max_violation: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub round: usize,
    pub stage: usize,
    pub h: f64,
    pub iterations: usize,
    pub energy_start: f64,
    pub energy_end: f64,
    /// False when the stage hit the iteration cap instead.
    pub converged: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub dimension: usize,
    pub sample_count: usize,
    pub h_min: f64,
    pub h_initial: f64,
    pub iterations: Vec<IterationRecord>,
    pub stages: Vec<StageRecord>,
    /// `1/2 sum (sd_i - s_i)^2` over all samples on the final surface.
    pub final_energy: f64,
    pub final_max_violation: f64,
    pub validity: Option<ValidityReport>,
    pub total_seconds: f64,
    pub resample_rounds: usize,
    pub aborted: Option<String>,
}

impl RunReport {
    fn new(dimension: usize, sample_count: usize, h_min: f64, h_initial: f64) -> Self {
        Self {
            dimension,
            sample_count,
            h_min,
            h_initial,
            iterations: Vec::new(),
            stages: Vec::new(),
            final_energy: f64::NAN,
            final_max_violation: f64::NAN,
            validity: None,
            total_seconds: 0.0,
            resample_rounds: 0,
            aborted: None,
        }
    }

    /// Target edge length of each stage in order.
    pub fn h_schedule(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.h).collect()
    }
}

/// A run that stopped early. `mesh` is the last surface that passed the
/// watchdog.
#[derive(Debug)]
pub struct Aborted<const D: usize> {
    pub error: Error,
    pub mesh: SurfaceMesh<D>,
    pub report: RunReport,
}

impl<const D: usize> fmt::Display for Aborted<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl<const D: usize> std::error::Error for Aborted<D> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

pub type RunResult<const D: usize> = std::result::Result<(SurfaceMesh<D>, RunReport), Box<Aborted<D>>>;

/// Derived schedule bounds and start surface for a sample set.
#[derive(Debug, Clone)]
pub struct Setup<const D: usize> {
    pub h_min: f64,
    pub h_initial: f64,
    pub init: SurfaceMesh<D>,
}

fn bbox_diagonal<const D: usize>(points: &[Point<D>]) -> f64 {
    bounding_box(points.iter()).map(|(lo, hi)| (hi - lo).norm()).unwrap_or(0.0)
}

/// Resolve defaults: `h_min` is the mean nearest-neighbour spacing,
/// `h_initial = max(8 h_min, diagonal / 10)`, and the start surface an
/// enclosing sphere around the sample centroid.
pub fn setup<const D: usize>(
    samples: &SdfSampleSet<D>,
    config: &ReconstructionConfig,
    init: Option<&SurfaceMesh<D>>,
) -> Result<Setup<D>>
where
    Dim<D>: Dimension<D>,
{
    config.validate()?;
    config.variant.clamp_radius(samples.kind())?;
    let diag = bbox_diagonal(samples.points());
    let h_min = match config.h_min {
        Some(h) => h,
        None => {
            let h = samples.mean_nearest_neighbor_distance();
            if h > 0.0 { h } else { diag / 10.0 }
        }
    };
    if !(h_min > 0.0) || !h_min.is_finite() {
        return Err(Error::InvalidInput("cannot derive a positive minimum edge length from the samples".into()));
    }
    let h_initial = config.h_initial.unwrap_or((8.0 * h_min).max(diag / 10.0)).max(h_min);
    let init = match init {
        Some(mesh) => {
            let report = mesh.validate();
            if !report.is_valid() {
                return Err(Error::InvalidInput(format!("initial surface is not a valid closed surface: {report:?}")));
            }
            mesh.clone()
        }
        None => {
            let n = samples.len() as f64;
            let centroid = samples.points().iter().fold(Point::<D>::zeros(), |acc, p| acc + p) / n;
            let radius = if diag > 0.0 { 0.55 * diag / 2.0 } else { 1.0 };
            Dim::<D>::initial_surface(&centroid, radius, config.init_resolution)
        }
    };
    if config.require_enclosure {
        let bvh = Bvh::build(&init)?;
        let outside = samples
            .points()
            .iter()
            .zip(samples.values())
            .filter(|(p, &s)| s < 0.0 && bvh.signed_distance(&init, p).0 >= 0.0)
            .count();
        if outside > 0 {
            return Err(Error::InvalidInput(format!(
                "initial surface leaves {outside} interior samples outside; disable the enclosure check for custom starts"
            )));
        }
    }
    Ok(Setup { h_min, h_initial, init })
}

fn watchdog_reason<const D: usize>(v: &[Point<D>], bound: f64) -> Option<String> {
    for p in v {
        for x in p.iter() {
            if !x.is_finite() {
                return Some("non-finite vertex coordinate".into());
            }
            if x.abs() > bound {
                return Some(format!("vertex coordinate {x:e} exceeds {bound:e}"));
            }
        }
    }
    None
}

struct Run<'a, const D: usize> {
    samples: &'a SdfSampleSet<D>,
    config: &'a ReconstructionConfig,
    report: RunReport,
    round: usize,
    started: Instant,
}

impl<const D: usize> Run<'_, D>
where
    Dim<D>: Dimension<D>,
{
    fn abort(mut self, error: Error, mesh: SurfaceMesh<D>) -> Box<Aborted<D>> {
        self.report.aborted = Some(error.to_string());
        self.report.total_seconds = self.started.elapsed().as_secs_f64();
        Box::new(Aborted { error, mesh, report: self.report })
    }

    fn execute(mut self, mut mesh: SurfaceMesh<D>, h_initial: f64, h_min: f64) -> RunResult<D> {
        let cfg = self.config;
        let tol = cfg.convergence_tolerance();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(self.round as u64));
        let mut h = h_initial;
        let mut stage = 0;
        let mut iteration = self.report.iterations.len();
        loop {
            let final_stage = h <= h_min;
            let window = if final_stage { cfg.final_window } else { cfg.coarse_window };
            let stage_start = Instant::now();
            let mut history: Vec<f64> = Vec::new();
            let mut stage_converged = false;
            let mut steps = 0;
            loop {
                let bvh = match Bvh::build(&mesh) {
                    Ok(b) => b,
                    Err(e) => return Err(self.abort(e, mesh)),
                };
                let step = match flow_step(&mesh, &bvh, self.samples, cfg, &mut rng) {
                    Ok(s) => s,
                    Err(e) => return Err(self.abort(e, mesh)),
                };
                history.push(step.diagnostics.variant_energy);
                if converged(&history, window, tol) {
                    stage_converged = true;
                    break;
                }
                if steps >= cfg.max_iterations_per_stage {
                    break;
                }
                if let Some(reason) = watchdog_reason(&step.vertices, cfg.watchdog_bound) {
                    return Err(self.abort(Error::Watchdog { iteration, reason }, mesh));
                }
                let region = compute_active_region(&mesh, &step.correspondences, cfg.epsilon);
                let moved = SurfaceMesh::new(step.vertices, mesh.elements.clone());
                let params = RemeshParams::new(h, cfg.remesh_iterations_per_step);
                let next = remesh(&moved, &region, &params);
                if let Some(reason) = watchdog_reason(&next.vertices, cfg.watchdog_bound) {
                    return Err(self.abort(Error::Watchdog { iteration, reason }, mesh));
                }
                let d = &step.diagnostics;
                self.report.iterations.push(IterationRecord {
                    round: self.round,
                    stage,
                    iteration,
                    h,
                    tau: d.tau,
                    energy: d.energy_before,
                    batch_size: d.batch_size,
                    active_rows: d.active_rows,
                    interior_rows: d.interior_rows,
                    exterior_rows: d.exterior_rows,
                    region_elements: region.len(),
                    vertex_count: next.vertices.len(),
                    element_count: next.elements.len(),
                    max_violation: d.max_violation,
                    wall_seconds: self.started.elapsed().as_secs_f64(),
                });
                mesh = next;
                steps += 1;
                iteration += 1;
            }
            self.report.stages.push(StageRecord {
                round: self.round,
                stage,
                h,
                iterations: steps,
                energy_start: history.first().copied().unwrap_or(f64::NAN),
                energy_end: history.last().copied().unwrap_or(f64::NAN),
                converged: stage_converged,
                seconds: stage_start.elapsed().as_secs_f64(),
            });
            if final_stage {
                break;
            }
            h = (h / 2.0).max(h_min);
            stage += 1;
        }
        self.finish(mesh)
    }

    fn finish(mut self, mesh: SurfaceMesh<D>) -> RunResult<D> {
        let bvh = match Bvh::build(&mesh) {
            Ok(b) => b,
            Err(e) => return Err(self.abort(e, mesh)),
        };
        let mut correspondences = crate::flow::compute_correspondences(&mesh, &bvh, self.samples);
        if let Err(e) = crate::flow::apply_variant_mask(&mut correspondences, &mesh, self.samples, self.config.variant) {
            return Err(self.abort(e, mesh));
        }
        self.report.final_energy = sdf_energy(&mesh, &bvh, self.samples);
        self.report.final_max_violation =
            correspondences.iter().filter(|c| c.active).map(|c| c.violation).fold(0.0, f64::max);
        self.report.validity = Some(mesh.validate());
        self.report.sample_count = self.samples.len();
        self.report.total_seconds = self.started.elapsed().as_secs_f64();
        Ok((mesh, self.report))
    }
}

/// Shrink-wrap a surface onto `samples`. Without `init` the flow starts
/// from a sphere enclosing the samples; a given `init` fixes the topology.
pub fn reconstruct<const D: usize>(
    samples: &SdfSampleSet<D>,
    config: &ReconstructionConfig,
    init: Option<&SurfaceMesh<D>>,
) -> RunResult<D>
where
    Dim<D>: Dimension<D>,
{
    let started = Instant::now();
    let fallback = || init.cloned().unwrap_or_default();
    let s = match setup(samples, config, init) {
        Ok(s) => s,
        Err(error) => {
            let report = RunReport::new(D, samples.len(), f64::NAN, f64::NAN);
            return Err(Box::new(Aborted { error, mesh: fallback(), report }));
        }
    };
    let run = Run {
        samples,
        config,
        report: RunReport::new(D, samples.len(), s.h_min, s.h_initial),
        round: 0,
        started,
    };
    run.execute(s.init, s.h_initial, s.h_min)
}

/// Alternate reconstruction and resampling. Each round adds samples where
/// the current surface is least constrained and resumes from the previous
/// surface at the finest edge length.
pub fn reconstruct_with_resampling<const D: usize>(
    samples: &SdfSampleSet<D>,
    oracle: &dyn SdfOracle<D>,
    rounds: usize,
    config: &ReconstructionConfig,
    init: Option<&SurfaceMesh<D>>,
) -> RunResult<D>
where
    Dim<D>: Dimension<D>,
{
    let started = Instant::now();
    let (mut mesh, mut report) = reconstruct(samples, config, init)?;
    let mut all = samples.clone();
    let h_min = report.h_min;
    let warm = ReconstructionConfig { require_enclosure: false, ..config.clone() };
    for round in 1..=rounds {
        let seed = config.rng_seed.wrapping_add(round as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let grown = propose_new_samples(&mesh, &all, oracle, seed).and_then(|new| all.extended(&new));
        all = match grown {
            Ok(g) => g,
            Err(error) => {
                report.aborted = Some(error.to_string());
                return Err(Box::new(Aborted { error, mesh, report }));
            }
        };
        let run = Run { samples: &all, config: &warm, report, round, started };
        let (m, r) = run.execute(mesh, h_min, h_min)?;
        mesh = m;
        report = r;
        report.resample_rounds = round;
    }
    if rounds > 0 {
        report.total_seconds = started.elapsed().as_secs_f64();
    }
    Ok((mesh, report))
}

/// Variant used when none is forced: the one matching the sample kind.
pub fn default_variant<const D: usize>(samples: &SdfSampleSet<D>) -> Variant {
    Variant::for_kind(samples.kind())
}
