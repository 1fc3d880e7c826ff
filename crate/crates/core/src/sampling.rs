//! Producing sample sets from ground-truth meshes, value transforms, and
//! incremental resampling.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{bounding_box, element_vertices, Dim, Dimension, Point};
use crate::mesh::SurfaceMesh;
use crate::samples::{GridSpec, SampleKind, SdfSampleSet};
use crate::spatial::Bvh;

/// Normal scale of the trial-point displacement during resampling, in the
/// units of the normalized shape.
pub const RESAMPLE_DISPLACEMENT: f64 = 0.05;
pub const RESAMPLE_TRIAL_FACTOR: usize = 50;

/// Source of ground-truth signed distance values.
pub trait SdfOracle<const D: usize>: Sync {
    fn evaluate(&self, point: &Point<D>) -> Result<f64>;
}

impl<const D: usize, F> SdfOracle<D> for F
where
    F: Fn(&Point<D>) -> Result<f64> + Sync,
{
    fn evaluate(&self, point: &Point<D>) -> Result<f64> {
        self(point)
    }
}

/// Exact (un)signed distance to a mesh.
#[derive(Debug, Clone)]
pub struct MeshOracle<const D: usize> {
    mesh: SurfaceMesh<D>,
    bvh: Bvh<D>,
    signed: bool,
}

impl<const D: usize> MeshOracle<D>
where
    Dim<D>: Dimension<D>,
{
    /// Signed oracle; the mesh must be closed and consistently oriented.
    pub fn new(mesh: SurfaceMesh<D>) -> Result<Self> {
        if !mesh.validate().is_valid() {
            return Err(Error::NotWatertight);
        }
        let bvh = Bvh::build(&mesh)?;
        Ok(Self { mesh, bvh, signed: true })
    }

    pub fn unsigned(mesh: SurfaceMesh<D>) -> Result<Self> {
        let bvh = Bvh::build(&mesh)?;
        Ok(Self { mesh, bvh, signed: false })
    }

    pub fn mesh(&self) -> &SurfaceMesh<D> {
        &self.mesh
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn value(&self, point: &Point<D>) -> f64 {
        let (sd, cp) = self.bvh.signed_distance(&self.mesh, point);
        if self.signed { sd } else { cp.distance }
    }

    pub fn values(&self, points: &[Point<D>]) -> Vec<f64> {
        points.par_iter().map(|p| self.value(p)).collect()
    }

    fn kind(&self) -> SampleKind {
        if self.signed { SampleKind::Signed } else { SampleKind::Unsigned }
    }
}

impl<const D: usize> SdfOracle<D> for MeshOracle<D>
where
    Dim<D>: Dimension<D>,
{
    fn evaluate(&self, point: &Point<D>) -> Result<f64> {
        Ok(self.value(point))
    }
}

/// Exact signed distances to `gt` at every grid point.
pub fn sample_grid<const D: usize>(gt: &SurfaceMesh<D>, spec: &GridSpec<D>) -> Result<SdfSampleSet<D>>
where
    Dim<D>: Dimension<D>,
{
    let oracle = signed_oracle(gt)?;
    SdfSampleSet::on_grid(*spec, oracle.values(&spec.points()), SampleKind::Signed)
}

/// Unsigned distances to `gt` at every grid point; `gt` need not be closed.
pub fn sample_grid_unsigned<const D: usize>(gt: &SurfaceMesh<D>, spec: &GridSpec<D>) -> Result<SdfSampleSet<D>>
where
    Dim<D>: Dimension<D>,
{
    let oracle = MeshOracle::unsigned(gt.clone())?;
    SdfSampleSet::on_grid(*spec, oracle.values(&spec.points()), SampleKind::Unsigned)
}

fn signed_oracle<const D: usize>(gt: &SurfaceMesh<D>) -> Result<MeshOracle<D>>
where
    Dim<D>: Dimension<D>,
{
    MeshOracle::new(gt.clone()).map_err(|e| match e {
        Error::NotWatertight => Error::InvalidInput(
            "signed samples need a closed, consistently oriented mesh; use unsigned sampling instead".into(),
        ),
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CloudMode {
    /// Uniform in `[-1, 1]^D`.
    UniformBox,
    /// Area-uniform on the surface, displaced along the interpolated normal
    /// by `Normal(0, stddev)`.
    NearSurface { stddev: f64 },
}

/// `n` scattered samples with exact signed values at the (possibly
/// displaced) points.
pub fn sample_pointcloud<const D: usize>(
    gt: &SurfaceMesh<D>,
    n: usize,
    mode: CloudMode,
    seed: u64,
) -> Result<SdfSampleSet<D>>
where
    Dim<D>: Dimension<D>,
{
    if n == 0 {
        return Err(Error::InvalidInput("point cloud needs at least one sample".into()));
    }
    let oracle = signed_oracle(gt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Point<D>> = match mode {
        CloudMode::UniformBox => (0..n)
            .map(|_| Point::<D>::from_fn(|_, _| rng.random_range(-1.0..=1.0)))
            .collect(),
        CloudMode::NearSurface { stddev } => {
            let noise = normal(stddev)?;
            let normals = vertex_normals(gt);
            sample_surface(gt, n, &mut rng)
                .into_iter()
                .map(|s| {
                    let offset = noise.sample(&mut rng);
                    s.point + interpolated_normal(gt, &normals, &s) * offset
                })
                .collect()
        }
    };
    let values = oracle.values(&points);
    SdfSampleSet::new(points, values, oracle.kind())
}

fn normal(stddev: f64) -> Result<Normal<f64>> {
    if !(stddev >= 0.0) || !stddev.is_finite() {
        return Err(Error::InvalidInput(format!("standard deviation must be non-negative, got {stddev}")));
    }
    Normal::new(0.0, stddev).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Cap magnitudes at `sigma`.
pub fn clamp_samples<const D: usize>(set: &SdfSampleSet<D>, sigma: f64) -> Result<SdfSampleSet<D>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput(format!("clamp value must be positive, got {sigma}")));
    }
    let values = set.values().iter().map(|&s| s.clamp(-sigma, sigma)).collect();
    set.with_values(values, SampleKind::Clamped(sigma))
}

/// Add i.i.d. Gaussian noise to the values. Unsigned values are reflected
/// back to non-negative.
pub fn add_noise<const D: usize>(set: &SdfSampleSet<D>, stddev: f64, seed: u64) -> Result<SdfSampleSet<D>> {
    let noise = normal(stddev)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = set
        .values()
        .iter()
        .map(|&s| {
            let v = s + noise.sample(&mut rng);
            if set.kind() == SampleKind::Unsigned { v.abs() } else { v }
        })
        .collect();
    set.with_values(values, set.kind())
}

/// Shrink interior values by `factor`, turning exact distances into the
/// lower bounds a swept-volume field provides.
pub fn conservative_interior<const D: usize>(set: &SdfSampleSet<D>, factor: f64) -> Result<SdfSampleSet<D>> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(Error::InvalidInput(format!("interior factor must lie in (0, 1], got {factor}")));
    }
    let values = set.values().iter().map(|&s| if s < 0.0 { s * factor } else { s }).collect();
    set.with_values(values, SampleKind::ConservativeInterior)
}

/// A point drawn on a mesh element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint<const D: usize> {
    pub point: Point<D>,
    pub element: usize,
    pub barycentric: [f64; D],
}

/// `n` points distributed uniformly by length/area.
pub fn sample_surface<const D: usize>(mesh: &SurfaceMesh<D>, n: usize, rng: &mut impl Rng) -> Vec<SurfacePoint<D>>
where
    Dim<D>: Dimension<D>,
{
    let mut cumulative = Vec::with_capacity(mesh.elements.len());
    let mut total = 0.0;
    for e in 0..mesh.elements.len() {
        total += Dim::<D>::measure(&mesh.element(e));
        cumulative.push(total);
    }
    if mesh.elements.is_empty() || !(total > 0.0) {
        return Vec::new();
    }
    (0..n)
        .map(|_| {
            let target = rng.random::<f64>() * total;
            let element = cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1);
            let barycentric = Dim::<D>::uniform_barycentric(rng.random(), rng.random());
            let verts = mesh.element(element);
            let point = verts.iter().zip(&barycentric).fold(Point::<D>::zeros(), |acc, (v, w)| acc + v * *w);
            SurfacePoint { point, element, barycentric }
        })
        .collect()
}

/// Unit vertex normals, weighted by incident element measure.
pub fn vertex_normals<const D: usize>(mesh: &SurfaceMesh<D>) -> Vec<Point<D>>
where
    Dim<D>: Dimension<D>,
{
    let mut normals = vec![Point::<D>::zeros(); mesh.vertices.len()];
    for el in &mesh.elements {
        let n = Dim::<D>::area_normal(&element_vertices(&mesh.vertices, el));
        for &v in el {
            normals[v] += n;
        }
    }
    for n in &mut normals {
        let len = n.norm();
        if len > 0.0 {
            *n /= len;
        }
    }
    normals
}

fn interpolated_normal<const D: usize>(mesh: &SurfaceMesh<D>, normals: &[Point<D>], s: &SurfacePoint<D>) -> Point<D> {
    let el = &mesh.elements[s.element];
    let n = el.iter().zip(&s.barycentric).fold(Point::<D>::zeros(), |acc, (&v, w)| acc + normals[v] * *w);
    let len = n.norm();
    if len > 0.0 { n / len } else { n }
}

/// `(m_new, m_trial)` for a set of `n` samples in `d` dimensions.
pub fn resample_counts(n: usize, d: usize) -> (usize, usize) {
    let m_new = if d == 2 { 2.0 * (n as f64).sqrt() } else { 2.0 * (n as f64).cbrt() };
    let m_new = m_new.round() as usize;
    (m_new, RESAMPLE_TRIAL_FACTOR * m_new)
}

/// Distance from `q` to the nearest sample sphere surface; `+inf` without
/// samples.
pub fn sphere_surface_distance<const D: usize>(q: &Point<D>, points: &[Point<D>], values: &[f64]) -> f64 {
    points
        .iter()
        .zip(values)
        .map(|(p, s)| ((q - p).norm() - s.abs()).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Greedy pick of the highest-scoring trials, at most one per element. Ties
/// go to the lower trial index.
pub fn select_trials(scores: &[f64], elements: &[usize], m_new: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut used = HashSet::new();
    let mut picked = Vec::with_capacity(m_new);
    for t in order {
        if picked.len() == m_new {
            break;
        }
        if used.insert(elements[t]) {
            picked.push(t);
        }
    }
    picked
}

/// New samples on and around the current surface where the existing
/// spheres say the least. Only the new samples are returned.
pub fn propose_new_samples<const D: usize>(
    current: &SurfaceMesh<D>,
    existing: &SdfSampleSet<D>,
    oracle: &dyn SdfOracle<D>,
    seed: u64,
) -> Result<SdfSampleSet<D>>
where
    Dim<D>: Dimension<D>,
{
    if current.is_empty() {
        return Err(Error::EmptyMesh("cannot resample on an empty surface"));
    }
    let (m_new, m_trial) = resample_counts(existing.len(), D);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normals = vertex_normals(current);
    let unit = normal(1.0)?;
    let trials: Vec<(Point<D>, usize)> = sample_surface(current, m_trial, &mut rng)
        .into_iter()
        .map(|s| {
            let offset = unit.sample(&mut rng) * RESAMPLE_DISPLACEMENT;
            (s.point + interpolated_normal(current, &normals, &s) * offset, s.element)
        })
        .collect();
    let scores: Vec<f64> = trials
        .par_iter()
        .map(|(q, _)| sphere_surface_distance(q, existing.points(), existing.values()))
        .collect();
    let elements: Vec<usize> = trials.iter().map(|t| t.1).collect();
    let picked = select_trials(&scores, &elements, m_new);
    if picked.is_empty() {
        return Err(Error::InvalidInput("resampling produced no candidates".into()));
    }
    let points: Vec<Point<D>> = picked.iter().map(|&t| trials[t].0).collect();
    let values = points
        .iter()
        .map(|p| {
            let v = oracle.evaluate(p)?;
            Ok(match existing.kind() {
                SampleKind::Unsigned => v.abs(),
                SampleKind::Clamped(sigma) => v.clamp(-sigma, sigma),
                _ => v,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    SdfSampleSet::new(points, values, existing.kind())
}

/// Mean over points of the distance to the nearest other point (0 for a
/// single point).
pub fn mean_nearest_neighbor_distance<const D: usize>(points: &[Point<D>]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let (lo, hi) = bounding_box(points.iter()).expect("non-empty");
    let extent = hi - lo;
    let n = points.len() as f64;
    let positive: Vec<f64> = extent.iter().copied().filter(|&e| e > 0.0).collect();
    let cell = if positive.is_empty() {
        1.0
    } else {
        let volume: f64 = positive.iter().product();
        (volume / n).powf(1.0 / positive.len() as f64).max(extent.max() / n)
    };
    let key = |p: &Point<D>| -> [i64; D] { std::array::from_fn(|k| ((p[k] - lo[k]) / cell).floor() as i64) };
    let mut cells: HashMap<[i64; D], Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        cells.entry(key(p)).or_default().push(i);
    }
    let span: [i64; D] = std::array::from_fn(|k| (extent[k] / cell).floor() as i64 + 1);
    let max_ring = span.iter().copied().max().unwrap_or(1);
    let total: f64 = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let centre = key(p);
            let mut best = f64::INFINITY;
            for ring in 0..=max_ring {
                visit_shell(&centre, ring, &mut |c| {
                    if let Some(list) = cells.get(c) {
                        for &j in list {
                            if j != i {
                                best = best.min((points[j] - p).norm_squared());
                            }
                        }
                    }
                });
                // Unvisited cells are at least `ring * cell` away.
                let reach = ring as f64 * cell;
                if best.is_finite() && best <= reach * reach {
                    break;
                }
            }
            best.sqrt()
        })
        .sum();
    total / n
}

/// Call `f` on every cell key at Chebyshev distance exactly `ring` from
/// `centre`.
fn visit_shell<const D: usize>(centre: &[i64; D], ring: i64, f: &mut impl FnMut(&[i64; D])) {
    let side = 2 * ring + 1;
    let count = (side as usize).pow(D as u32);
    for flat in 0..count {
        let mut rem = flat as i64;
        let mut offset = [0i64; D];
        let mut on_shell = false;
        for o in offset.iter_mut() {
            *o = rem % side - ring;
            rem /= side;
            on_shell |= o.abs() == ring;
        }
        if on_shell {
            let c: [i64; D] = std::array::from_fn(|k| centre[k] + offset[k]);
            f(&c);
        }
    }
}

/// Similarity transform mapping a bounding box into `[-1/2, 1/2]^D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization<const D: usize> {
    pub center: Point<D>,
    pub scale: f64,
}

impl<const D: usize> Normalization<D> {
    /// Centre the bounding box at the origin and scale its longest side to 1.
    pub fn fit(mesh: &SurfaceMesh<D>) -> Result<Self> {
        let (lo, hi) = bounding_box(mesh.vertices.iter())
            .ok_or(Error::EmptyMesh("cannot normalize a mesh without vertices"))?;
        let longest = (hi - lo).max();
        if !(longest > 0.0) {
            return Err(Error::InvalidInput("mesh has zero extent".into()));
        }
        Ok(Self { center: (lo + hi) * 0.5, scale: 1.0 / longest })
    }

    pub fn apply(&self, p: &Point<D>) -> Point<D> {
        (p - self.center) * self.scale
    }

    pub fn apply_mesh(&self, mesh: &SurfaceMesh<D>) -> SurfaceMesh<D> {
        mesh.map_vertices(|p| self.apply(p))
    }
}

pub fn normalize_to_unit_box<const D: usize>(mesh: &SurfaceMesh<D>) -> Result<SurfaceMesh<D>> {
    Ok(Normalization::fit(mesh)?.apply_mesh(mesh))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_grid_values() {
        let gt = SurfaceMesh::circle(1000, 1.0);
        let set = sample_grid(&gt, &GridSpec::unit_cube(3).unwrap()).unwrap();
        assert_eq!(set.len(), 9);
        let v = set.values();
        assert!((v[4] + 1.0).abs() < 1e-3);
        for c in [0, 2, 6, 8] {
            assert!((v[c] - (2f64.sqrt() - 1.0)).abs() < 1e-3);
        }
    }

    #[test]
    fn sphere_grid_matches_analytic() {
        let gt = SurfaceMesh::icosphere(3, 0.25);
        let spec = GridSpec::<3>::unit_cube(6).unwrap();
        let set = sample_grid(&gt, &spec).unwrap();
        assert_eq!(set.len(), 216);
        for (p, s) in set.points().iter().zip(set.values()) {
            assert!(*s > 0.0);
            assert!((s - (p.norm() - 0.25)).abs() < 3e-3);
        }
        let corners = sample_grid(&gt, &GridSpec::<3>::unit_cube(2).unwrap()).unwrap();
        assert_eq!(corners.len(), 8);
        assert!(corners.points().iter().all(|p| p.iter().all(|x| x.abs() == 1.0)));
    }

    #[test]
    fn open_mesh_refuses_signed_sampling() {
        let mut gt = SurfaceMesh::icosphere(1, 0.5);
        gt.elements.pop();
        let spec = GridSpec::<3>::unit_cube(3).unwrap();
        assert!(sample_grid(&gt, &spec).is_err());
        assert!(sample_grid_unsigned(&gt, &spec).is_ok());
    }

    #[test]
    fn clouds_are_reproducible() {
        let gt = SurfaceMesh::icosphere(2, 0.25);
        let a = sample_pointcloud(&gt, 1, CloudMode::UniformBox, 5).unwrap();
        let b = sample_pointcloud(&gt, 1, CloudMode::UniformBox, 5).unwrap();
        assert_eq!(a, b);
        let on = sample_pointcloud(&gt, 50, CloudMode::NearSurface { stddev: 0.0 }, 1).unwrap();
        assert!(on.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn near_surface_stddev() {
        let gt = SurfaceMesh::icosphere(4, 0.25);
        let set = sample_pointcloud(&gt, 10_000, CloudMode::NearSurface { stddev: 0.05 }, 11).unwrap();
        let n = set.len() as f64;
        let mean = set.values().iter().sum::<f64>() / n;
        let var = set.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var.sqrt() - 0.05).abs() < 0.05 * 0.05, "{}", var.sqrt());
    }

    #[test]
    fn clamping() {
        let pts = vec![Point::<2>::zeros(); 3];
        let set = SdfSampleSet::new(pts, vec![-0.5, 0.1, 0.9], SampleKind::Signed).unwrap();
        let c = clamp_samples(&set, 0.2).unwrap();
        assert_eq!(c.values(), &[-0.2, 0.1, 0.2]);
        assert_eq!(c.kind(), SampleKind::Clamped(0.2));
        assert_eq!(clamp_samples(&c, 0.2).unwrap(), c);
        assert_eq!(clamp_samples(&set, 1e300).unwrap().values(), set.values());
        assert!(clamp_samples(&set, 0.0).is_err());
    }

    #[test]
    fn noise() {
        let pts = vec![Point::<3>::zeros(); 100_000];
        let set = SdfSampleSet::new(pts, vec![0.3; 100_000], SampleKind::Signed).unwrap();
        assert_eq!(add_noise(&set, 0.0, 1).unwrap(), set);
        let noisy = add_noise(&set, 0.005, 1).unwrap();
        assert_eq!(noisy, add_noise(&set, 0.005, 1).unwrap());
        assert_eq!(noisy.points(), set.points());
        let shift = noisy.values().iter().map(|v| v - 0.3).sum::<f64>() / 1e5;
        assert!(shift.abs() <= 3.0 * 0.005 / (1e5f64).sqrt());
        assert!(add_noise(&set, -1.0, 1).is_err());
    }

    #[test]
    fn resample_counts_follow_dimension() {
        assert_eq!(resample_counts(100, 2), (20, 1000));
        assert_eq!(resample_counts(1000, 3), (20, 1000));
    }

    #[test]
    fn score_is_distance_to_sphere_surface() {
        let pts = [Point::<3>::zeros()];
        let vals = [1.0];
        assert_eq!(sphere_surface_distance(&Point::<3>::new(1.0, 0.0, 0.0), &pts, &vals), 0.0);
        assert!((sphere_surface_distance(&Point::<3>::new(0.0, 3.0, 0.0), &pts, &vals) - 2.0).abs() < 1e-15);
        assert_eq!(sphere_surface_distance::<3>(&Point::<3>::zeros(), &[], &[]), f64::INFINITY);
    }

    #[test]
    fn selection_caps_per_element_and_breaks_ties_by_index() {
        let scores = [f64::INFINITY; 5];
        let elements = [0, 0, 1, 2, 1];
        assert_eq!(select_trials(&scores, &elements, 10), vec![0, 2, 3]);
        let scores = [0.0, 0.5, 0.2, 0.9];
        assert_eq!(select_trials(&scores, &[0, 1, 2, 3], 4), vec![3, 1, 2, 0]);
    }

    #[test]
    fn propose_on_circle() {
        let gt = SurfaceMesh::circle(200, 0.25);
        let existing = sample_grid(&gt, &GridSpec::<2>::unit_cube(10).unwrap()).unwrap();
        let oracle = MeshOracle::new(gt).unwrap();
        let current = SurfaceMesh::circle(64, 0.3);
        let new = propose_new_samples(&current, &existing, &oracle, 3).unwrap();
        assert_eq!(new.len(), 20);
        for (p, s) in new.points().iter().zip(new.values()) {
            assert!((s - oracle.value(p)).abs() == 0.0);
        }
        let again = propose_new_samples(&current, &existing, &oracle, 3).unwrap();
        assert_eq!(new, again);
    }

    #[test]
    fn closure_oracle() {
        let f = |p: &Point<2>| -> Result<f64> { Ok(p.norm() - 0.25) };
        assert!((f.evaluate(&Point::<2>::new(1.0, 0.0)).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn nearest_neighbor_on_grid_is_spacing() {
        let g = GridSpec::<3>::unit_cube(10).unwrap();
        let d = mean_nearest_neighbor_distance(&g.points());
        assert!((d - 2.0 / 9.0).abs() < 1e-12);
        let g2 = GridSpec::<2>::unit_cube(7).unwrap();
        assert!((mean_nearest_neighbor_distance(&g2.points()) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(mean_nearest_neighbor_distance(&[Point::<2>::zeros()]), 0.0);
    }

    #[test]
    fn nearest_neighbor_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Point<3>> = (0..400)
            .map(|_| Point::<3>::new(rng.random_range(-1.0..1.0), rng.random_range(-0.1..0.1), rng.random::<f64>() * 3.0))
            .collect();
        let brute: f64 = pts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                pts.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, q)| (p - q).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / 400.0;
        assert!((mean_nearest_neighbor_distance(&pts) - brute).abs() < 1e-12);
    }

    #[test]
    fn normalization_fits_unit_box() {
        let mesh = SurfaceMesh::icosphere(1, 3.0).map_vertices(|p| p + Point::<3>::new(5.0, 0.0, -1.0));
        let n = normalize_to_unit_box(&mesh).unwrap();
        let (lo, hi) = bounding_box(n.vertices.iter()).unwrap();
        assert!(((hi - lo).max() - 1.0).abs() < 1e-12);
        assert!((lo + hi).norm() < 1e-12);
    }
}
