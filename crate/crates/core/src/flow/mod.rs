//! One implicit step of the flow: closest-point correspondences, tangent
//! targets, variant masks, batching, step size, and the `Q V = B` solve.

pub mod sparse;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ReconstructionConfig, Variant};
use crate::error::{Error, Result};
use crate::geometry::{element_vertices, Dim, Dimension, Point};
use crate::mesh::SurfaceMesh;
use crate::samples::SdfSampleSet;
use crate::spatial::{Bvh, ClosestPointResult, Side};

use sparse::{conjugate_gradient, CsrMatrix};

pub const SOLVER_TOLERANCE: f64 = 1e-10;

/// The relation between sample `i` and the current surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence<const D: usize> {
    pub sample: usize,
    pub cp: ClosestPointResult<D>,
    /// Signed distance of the sample point to the current surface.
    pub signed_distance: f64,
    /// `+1` pulls the surface toward the near side of the sphere, `-1` to
    /// the far side.
    pub sigma: f64,
    pub tangent: Point<D>,
    pub active: bool,
    pub violation: f64,
}

/// Point on the sphere of radius `|s|` around `p`, along the line to `c`.
/// When `c == p` the element normal gives the direction.
pub fn tangent_point<const D: usize>(p: &Point<D>, s: f64, c: &Point<D>, sigma: f64, normal: &Point<D>) -> Point<D> {
    let d = c - p;
    let len = d.norm();
    if len > 0.0 {
        p + d * (sigma * s.abs() / len)
    } else {
        p - normal * s
    }
}

/// `+1` when the sample sign agrees with the side of the surface the point
/// is on, `-1` otherwise.
pub fn orientation(inside: bool, value: f64) -> f64 {
    if (inside && value < 0.0) || (!inside && value > 0.0) {
        1.0
    } else {
        -1.0
    }
}

fn unit_normal<const D: usize>(mesh: &SurfaceMesh<D>, element: usize) -> Point<D>
where
    Dim<D>: Dimension<D>,
{
    let n = Dim::<D>::area_normal(&element_vertices(&mesh.vertices, &mesh.elements[element]));
    let len = n.norm();
    if len > 0.0 { n / len } else { n }
}

pub fn compute_correspondences<const D: usize>(
    mesh: &SurfaceMesh<D>,
    bvh: &Bvh<D>,
    samples: &SdfSampleSet<D>,
) -> Vec<Correspondence<D>>
where
    Dim<D>: Dimension<D>,
{
    let all: Vec<usize> = (0..samples.len()).collect();
    compute_correspondences_for(mesh, bvh, samples, &all)
}

/// Correspondences of the samples listed in `indices`, in that order.
pub fn compute_correspondences_for<const D: usize>(
    mesh: &SurfaceMesh<D>,
    bvh: &Bvh<D>,
    samples: &SdfSampleSet<D>,
    indices: &[usize],
) -> Vec<Correspondence<D>>
where
    Dim<D>: Dimension<D>,
{
    let (points, values) = (samples.points(), samples.values());
    let queries: Vec<Point<D>> = indices.iter().map(|&i| points[i]).collect();
    bvh.batch_signed_distance(mesh, &queries)
        .into_iter()
        .zip(indices)
        .map(|((sd, cp), &sample)| {
            let (p, s) = (&points[sample], values[sample]);
            let sigma = if cp.side == Side::OnElementBoundary { 1.0 } else { orientation(sd < 0.0, s) };
            let tangent = tangent_point(p, s, &cp.point, sigma, &unit_normal(mesh, cp.element));
            Correspondence { sample, cp, signed_distance: sd, sigma, tangent, active: true, violation: (sd - s).abs() }
        })
        .collect()
}

/// Recompute orientations and row masks for the reconstruction variant.
pub fn apply_variant_mask<const D: usize>(
    correspondences: &mut [Correspondence<D>],
    mesh: &SurfaceMesh<D>,
    samples: &SdfSampleSet<D>,
    variant: Variant,
) -> Result<()>
where
    Dim<D>: Dimension<D>,
{
    let values = samples.values();
    let points = samples.points();
    match variant {
        Variant::Signed => {}
        Variant::Unsigned => {
            for c in correspondences.iter_mut() {
                let s = values[c.sample].abs();
                c.sigma = 1.0;
                c.tangent = tangent_point(&points[c.sample], s, &c.cp.point, 1.0, &unit_normal(mesh, c.cp.element));
                c.violation = (c.cp.distance - s).abs();
                c.active = true;
            }
        }
        Variant::Clamped { .. } => {
            let sigma_c = variant.clamp_radius(samples.kind())?.expect("clamped radius");
            for c in correspondences.iter_mut() {
                let s = values[c.sample].abs();
                // Clamped values sit exactly at the radius, hence `>=`.
                c.active = !(c.signed_distance.abs() > s && s >= sigma_c);
            }
        }
        Variant::SweptVolume => {
            for c in correspondences.iter_mut() {
                let s = values[c.sample];
                c.active = !(c.signed_distance.abs() > s.abs() && s < 0.0);
            }
        }
    }
    Ok(())
}

/// All interior samples plus a uniform subset of exterior ones, sorted.
pub fn select_batch<const D: usize>(samples: &SdfSampleSet<D>, batch_size: usize, rng: &mut impl Rng) -> Vec<usize> {
    let (interior, exterior): (Vec<usize>, Vec<usize>) = (0..samples.len()).partition(|&i| samples.values()[i] < 0.0);
    let total = batch_size.max(interior.len());
    if samples.len() <= total {
        return (0..samples.len()).collect();
    }
    let keep = total - interior.len();
    let mut picked = interior;
    picked.extend(rand::seq::index::sample(rng, exterior.len(), keep).into_iter().map(|k| exterior[k]));
    picked.sort_unstable();
    picked
}

/// One row `a_i` of `A`: barycentric weights over an element's vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarycentricRow<const D: usize> {
    pub vertices: [usize; D],
    pub weights: [f64; D],
}

impl<const D: usize> BarycentricRow<D> {
    pub fn apply(&self, v: &[Point<D>]) -> Point<D> {
        let mut out = Point::<D>::zeros();
        for k in 0..D {
            out += v[self.vertices[k]] * self.weights[k];
        }
        out
    }
}

/// Lumped mass: each vertex gets `1/D` of the measure of every incident
/// element.
pub fn compute_mass_matrix<const D: usize>(mesh: &SurfaceMesh<D>) -> Vec<f64>
where
    Dim<D>: Dimension<D>,
{
    let mut mass = vec![0.0; mesh.vertices.len()];
    for el in &mesh.elements {
        let share = Dim::<D>::measure(&element_vertices(&mesh.vertices, el)) / D as f64;
        for &v in el {
            mass[v] += share;
        }
    }
    mass
}

/// Replace zero entries by a tiny fraction of the mean so `Q` stays
/// positive definite.
pub fn regularize_mass(mass: &mut [f64]) {
    let mean = mass.iter().sum::<f64>() / mass.len().max(1) as f64;
    let floor = if mean > 0.0 { 1e-12 * mean } else { 1e-12 };
    for m in mass.iter_mut() {
        if !(*m > 0.0) {
            *m += floor;
        }
    }
}

/// The linear system of one implicit step.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSystem<const D: usize> {
    pub rows: Vec<BarycentricRow<D>>,
    pub targets: Vec<Point<D>>,
    pub mass: Vec<f64>,
    pub tau: f64,
}

impl<const D: usize> FlowSystem<D> {
    /// Rows for the given correspondences (already filtered to active).
    pub fn assemble(mesh: &SurfaceMesh<D>, correspondences: &[&Correspondence<D>], tau: f64) -> Self
    where
        Dim<D>: Dimension<D>,
    {
        let rows = correspondences
            .iter()
            .map(|c| BarycentricRow { vertices: mesh.elements[c.cp.element], weights: c.cp.barycentric })
            .collect();
        let targets = correspondences.iter().map(|c| c.tangent).collect();
        let mut mass = compute_mass_matrix(mesh);
        regularize_mass(&mut mass);
        Self { rows, targets, mass, tau }
    }

    pub fn residuals(&self, v: &[Point<D>]) -> Vec<Point<D>> {
        self.rows.iter().zip(&self.targets).map(|(r, t)| r.apply(v) - t).collect()
    }

    /// `A^T X` for an `n_rows x D` matrix `X`.
    pub fn transpose_apply(&self, x: &[Point<D>], m: usize) -> Vec<Point<D>> {
        let mut out = vec![Point::<D>::zeros(); m];
        for (row, xi) in self.rows.iter().zip(x) {
            for k in 0..D {
                out[row.vertices[k]] += xi * row.weights[k];
            }
        }
        out
    }

    /// `Q = M + tau A^T A`.
    pub fn q_matrix(&self) -> CsrMatrix {
        let m = self.mass.len();
        let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(m + self.rows.len() * D * D);
        trip.extend(self.mass.iter().enumerate().map(|(v, &w)| (v, v, w)));
        for row in &self.rows {
            for j in 0..D {
                for k in 0..D {
                    trip.push((row.vertices[j], row.vertices[k], self.tau * row.weights[j] * row.weights[k]));
                }
            }
        }
        CsrMatrix::from_triplets(m, trip)
    }

    /// `B = M V_prev + tau A^T S`.
    pub fn rhs(&self, v_prev: &[Point<D>]) -> Vec<Point<D>> {
        let ats = self.transpose_apply(&self.targets, v_prev.len());
        v_prev.iter().zip(&self.mass).zip(&ats).map(|((v, &w), a)| v * w + a * self.tau).collect()
    }

    /// `1/(2 tau) ||V - V_prev||_M^2 + 1/2 ||A V - S||_F^2`.
    pub fn objective(&self, v: &[Point<D>], v_prev: &[Point<D>]) -> f64 {
        let inertia: f64 = v.iter().zip(v_prev).zip(&self.mass).map(|((a, b), &w)| w * (a - b).norm_squared()).sum();
        let fit: f64 = self.residuals(v).iter().map(|r| r.norm_squared()).sum();
        0.5 * inertia / self.tau + 0.5 * fit
    }

    /// Solve `Q V = B` column by column, warm-started from `v_prev`.
    pub fn solve(&self, v_prev: &[Point<D>]) -> Result<(Vec<Point<D>>, SolveStats)> {
        let q = self.q_matrix();
        let b = self.rhs(v_prev);
        let m = v_prev.len();
        let columns: Vec<Result<sparse::CgSolution>> = (0..D)
            .into_par_iter()
            .map(|k| {
                let bk: Vec<f64> = b.iter().map(|p| p[k]).collect();
                let x0: Vec<f64> = v_prev.iter().map(|p| p[k]).collect();
                conjugate_gradient(&q, &bk, &x0, SOLVER_TOLERANCE, 20 * m + 100)
            })
            .collect();
        let mut out = vec![Point::<D>::zeros(); m];
        let mut stats = SolveStats::default();
        for (k, col) in columns.into_iter().enumerate() {
            let col = col?;
            for (v, x) in out.iter_mut().zip(&col.x) {
                v[k] = *x;
            }
            stats.iterations = stats.iterations.max(col.iterations);
            stats.relative_residual = stats.relative_residual.max(col.relative_residual);
        }
        Ok((out, stats))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Step size from the linearized energy along the scaled gradient.
pub fn step_size<const D: usize>(
    rows: &[BarycentricRow<D>],
    v: &[Point<D>],
    targets: &[Point<D>],
    tau_min: f64,
    tau_max: f64,
    armijo_c: f64,
) -> f64 {
    let rho = 1.0 / rows.len().max(1) as f64;
    let probe = FlowSystem { rows: rows.to_vec(), targets: targets.to_vec(), mass: Vec::new(), tau: 0.0 };
    let r = probe.residuals(v);
    let p: Vec<Point<D>> = probe.transpose_apply(&r, v.len()).into_iter().map(|g| g * -rho).collect();
    let ap: Vec<Point<D>> = rows.iter().map(|row| row.apply(&p)).collect();
    let ap2: f64 = ap.iter().map(|x| x.norm_squared()).sum();
    if ap2 == 0.0 {
        return rho * tau_min;
    }
    let r_ap: f64 = r.iter().zip(&ap).map(|(a, b)| a.dot(b)).sum();
    let p2: f64 = p.iter().map(|x| x.norm_squared()).sum();
    let tau_star = -(rho * r_ap + armijo_c * p2) / (rho * ap2);
    rho * tau_star.clamp(tau_min, tau_max)
}

/// Full-set energy `1/2 sum (sd_i - s_i)^2`.
pub fn sdf_energy<const D: usize>(mesh: &SurfaceMesh<D>, bvh: &Bvh<D>, samples: &SdfSampleSet<D>) -> f64
where
    Dim<D>: Dimension<D>,
{
    let sd = bvh.batch_signed_distance(mesh, samples.points());
    0.5 * sd.iter().zip(samples.values()).map(|((d, _), s)| (d - s).powi(2)).sum::<f64>()
}

/// Energy the variant actually minimizes: unsigned compares magnitudes and
/// masked rows contribute nothing. Equal to [`sdf_energy`] for signed data.
pub fn variant_energy<const D: usize>(correspondences: &[Correspondence<D>], samples: &SdfSampleSet<D>, variant: Variant) -> f64 {
    let values = samples.values();
    0.5 * correspondences
        .iter()
        .filter(|c| c.active)
        .map(|c| {
            let r = match variant {
                Variant::Unsigned => c.cp.distance - values[c.sample].abs(),
                _ => c.signed_distance - values[c.sample],
            };
            r * r
        })
        .sum::<f64>()
}

/// Sum of `term` over the full sample set, estimated from a batch holding
/// every interior sample and a uniform subset of the exterior ones.
pub fn batch_estimate<const D: usize>(
    correspondences: &[Correspondence<D>],
    samples: &SdfSampleSet<D>,
    term: impl Fn(&Correspondence<D>) -> f64,
) -> f64 {
    let values = samples.values();
    let (mut interior, mut exterior, mut seen) = (0.0, 0.0, 0usize);
    for c in correspondences {
        if values[c.sample] < 0.0 {
            interior += term(c);
        } else {
            exterior += term(c);
            seen += 1;
        }
    }
    let total = values.iter().filter(|&&v| v >= 0.0).count();
    if seen == 0 || seen == total {
        interior + exterior
    } else {
        interior + exterior * total as f64 / seen as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub tau: f64,
    /// Energy of the surface before the step (estimated from the batch
    /// when batching).
    pub energy_before: f64,
    /// Same for the variant's own energy, which drives convergence.
    pub variant_energy: f64,
    pub batch_size: usize,
    pub active_rows: usize,
    pub interior_rows: usize,
    pub exterior_rows: usize,
    pub max_violation: f64,
    pub solver_iterations: usize,
    pub solver_residual: f64,
    pub noop: bool,
}

#[derive(Debug, Clone)]
pub struct FlowStep<const D: usize> {
    pub vertices: Vec<Point<D>>,
    /// Against the surface before the step, for the batch only.
    pub correspondences: Vec<Correspondence<D>>,
    pub diagnostics: StepDiagnostics,
}

/// Solve one step for frozen (masked, batched) correspondences.
pub fn implicit_step<const D: usize>(
    mesh: &SurfaceMesh<D>,
    rows: &[&Correspondence<D>],
    config: &ReconstructionConfig,
) -> Result<(Vec<Point<D>>, f64, SolveStats)>
where
    Dim<D>: Dimension<D>,
{
    if rows.is_empty() {
        return Ok((mesh.vertices.clone(), 0.0, SolveStats::default()));
    }
    let mut system = FlowSystem::assemble(mesh, rows, 0.0);
    system.tau = step_size(&system.rows, &mesh.vertices, &system.targets, config.tau_min, config.tau_max, config.armijo_c);
    let (v, stats) = system.solve(&mesh.vertices)?;
    Ok((v, system.tau, stats))
}

/// Correspondences, masks, batching and one implicit step. Connectivity is
/// unchanged; only the returned vertex positions differ.
pub fn flow_step<const D: usize>(
    mesh: &SurfaceMesh<D>,
    bvh: &Bvh<D>,
    samples: &SdfSampleSet<D>,
    config: &ReconstructionConfig,
    rng: &mut impl Rng,
) -> Result<FlowStep<D>>
where
    Dim<D>: Dimension<D>,
{
    if mesh.is_empty() {
        return Err(Error::EmptyMesh("flow needs a non-empty surface"));
    }
    let batch = select_batch(samples, config.batch_size, rng);
    let mut correspondences = compute_correspondences_for(mesh, bvh, samples, &batch);
    apply_variant_mask(&mut correspondences, mesh, samples, config.variant)?;
    let rows: Vec<&Correspondence<D>> = correspondences.iter().filter(|c| c.active).collect();
    let interior_rows = rows.iter().filter(|c| samples.values()[c.sample] < 0.0).count();
    let mut diagnostics = StepDiagnostics {
        energy_before: batch_estimate(&correspondences, samples, |c| {
            0.5 * (c.signed_distance - samples.values()[c.sample]).powi(2)
        }),
        variant_energy: batch_estimate(&correspondences, samples, |c| variant_energy(std::slice::from_ref(c), samples, config.variant)),
        batch_size: batch.len(),
        active_rows: rows.len(),
        interior_rows,
        exterior_rows: rows.len() - interior_rows,
        max_violation: correspondences.iter().map(|c| c.violation).fold(0.0, f64::max),
        noop: rows.is_empty(),
        ..Default::default()
    };
    let (vertices, tau, stats) = implicit_step(mesh, &rows, config)?;
    diagnostics.tau = tau;
    diagnostics.solver_iterations = stats.iterations;
    diagnostics.solver_residual = stats.relative_residual;
    Ok(FlowStep { vertices, correspondences, diagnostics })
}

#[cfg(test)]
mod tests;
