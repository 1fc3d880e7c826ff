//! Hausdorff and Chamfer distances between surfaces, and the combined
//! evaluation record.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::sdf_energy;
use crate::geometry::{Dim, Dimension, Point};
use crate::mesh::SurfaceMesh;
use crate::samples::SdfSampleSet;
use crate::sampling::sample_surface;
use crate::spatial::Bvh;

pub const DEFAULT_POINTS: usize = 100_000;

/// `n_points` area-uniform points on `mesh` followed by all its vertices.
pub fn measurement_points<const D: usize>(mesh: &SurfaceMesh<D>, n_points: usize, seed: u64) -> Vec<Point<D>>
where
    Dim<D>: Dimension<D>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Point<D>> = sample_surface(mesh, n_points, &mut rng).into_iter().map(|s| s.point).collect();
    let mut used = vec![false; mesh.vertices.len()];
    for el in &mesh.elements {
        for &v in el {
            used[v] = true;
        }
    }
    points.extend(mesh.vertices.iter().zip(&used).filter(|(_, &u)| u).map(|(v, _)| *v));
    points
}

/// Point-to-surface distances from points on `from` to `to`.
pub fn directed_distances<const D: usize>(from: &SurfaceMesh<D>, to: &SurfaceMesh<D>, n_points: usize, seed: u64) -> Result<Vec<f64>>
where
    Dim<D>: Dimension<D>,
{
    if from.is_empty() || to.is_empty() {
        return Err(Error::EmptyMesh("distance metrics need two non-empty meshes"));
    }
    let bvh = Bvh::build(to)?;
    let points = measurement_points(from, n_points, seed);
    Ok(points.par_iter().map(|p| bvh.closest_point(to, p).distance).collect())
}

/// Symmetric Hausdorff distance, approximated on sampled points.
pub fn hausdorff<const D: usize>(a: &SurfaceMesh<D>, b: &SurfaceMesh<D>, n_points: usize, seed: u64) -> Result<f64>
where
    Dim<D>: Dimension<D>,
{
    let ab = directed_distances(a, b, n_points, seed)?;
    let ba = directed_distances(b, a, n_points, seed)?;
    Ok(ab.iter().chain(&ba).copied().fold(0.0, f64::max))
}

/// Mean of the two directed mean distances (not squared).
pub fn chamfer<const D: usize>(a: &SurfaceMesh<D>, b: &SurfaceMesh<D>, n_points: usize, seed: u64) -> Result<f64>
where
    Dim<D>: Dimension<D>,
{
    let mean = |d: &[f64]| d.iter().sum::<f64>() / d.len() as f64;
    let ab = directed_distances(a, b, n_points, seed)?;
    let ba = directed_distances(b, a, n_points, seed)?;
    Ok(0.5 * (mean(&ab) + mean(&ba)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub hausdorff: f64,
    pub chamfer: f64,
    pub sdf_energy: f64,
    pub n_samples_used: usize,
    pub runtime_seconds: f64,
}

/// Distances to `gt` and the energy over `samples`, with a caller-supplied
/// runtime.
pub fn evaluate<const D: usize>(
    mesh: &SurfaceMesh<D>,
    gt: &SurfaceMesh<D>,
    samples: &SdfSampleSet<D>,
    runtime_seconds: f64,
    n_points: usize,
    seed: u64,
) -> Result<MetricReport>
where
    Dim<D>: Dimension<D>,
{
    let ab = directed_distances(mesh, gt, n_points, seed)?;
    let ba = directed_distances(gt, mesh, n_points, seed)?;
    let mean = |d: &[f64]| d.iter().sum::<f64>() / d.len() as f64;
    let bvh = Bvh::build(mesh)?;
    Ok(MetricReport {
        hausdorff: ab.iter().chain(&ba).copied().fold(0.0, f64::max),
        chamfer: 0.5 * (mean(&ab) + mean(&ba)),
        sdf_energy: sdf_energy(mesh, &bvh, samples),
        n_samples_used: samples.len(),
        runtime_seconds: runtime_seconds.max(0.0),
    })
}
