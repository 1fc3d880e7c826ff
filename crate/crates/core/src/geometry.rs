//! Dimension-generic element geometry.
//!
//! Surfaces are simplicial: closed polylines in the plane (`D = 2`, elements
//! are segments) and closed triangle meshes in space (`D = 3`, elements are
//! triangles). An element of a `D`-dimensional surface always has `D`
//! vertices, which lets most of the pipeline be written once over
//! `const D: usize` with the few dimension-specific primitives collected in
//! [`Dimension`].

use nalgebra::SVector;

use crate::baseline::{self, GridField};
use crate::mesh::SurfaceMesh;
use crate::remesh::{self, ActiveRegion, RemeshParams};

/// A point (or vector) in `R^D`.
pub type Point<const D: usize> = SVector<f64, D>;

/// Barycentric coordinates at or below this value put a closest point on the
/// boundary of its element.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

/// Zero-sized tag selecting the dimension-specific implementation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dim<const D: usize>;

/// Closest point on a single element, in barycentric form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementProjection<const D: usize> {
    pub barycentric: [f64; D],
    pub on_boundary: bool,
}

impl<const D: usize> ElementProjection<D> {
    pub fn point(&self, verts: &[Point<D>; D]) -> Point<D> {
        let mut p = Point::<D>::zeros();
        for (w, v) in self.barycentric.iter().zip(verts) {
            p += v * *w;
        }
        p
    }
}

/// Everything that differs between the planar and the spatial pipeline.
pub trait Dimension<const D: usize> {
    /// Exact closest point on the element with vertices `verts`.
    fn project(verts: &[Point<D>; D], query: &Point<D>) -> ElementProjection<D>;

    /// Length (2D) or area (3D).
    fn measure(verts: &[Point<D>; D]) -> f64;

    /// Outward normal scaled by the element measure (zero when degenerate).
    fn area_normal(verts: &[Point<D>; D]) -> Point<D>;

    /// Contribution of one element to the winding number at `query`, in
    /// full turns.
    fn winding(verts: &[Point<D>; D], query: &Point<D>) -> f64;

    /// Map two uniform variates in `[0, 1)` to area-uniform barycentrics.
    fn uniform_barycentric(u: f64, v: f64) -> [f64; D];

    /// Canonical enclosing start surface.
    fn initial_surface(center: &Point<D>, radius: f64, resolution: u32) -> SurfaceMesh<D>;

    /// Default violation tolerance.
    fn default_epsilon() -> f64;

    /// One batch of local remeshing iterations.
    fn remesh(
        mesh: &SurfaceMesh<D>,
        region: &ActiveRegion,
        params: &RemeshParams,
    ) -> SurfaceMesh<D>;

    /// Marching Cubes (3D) or Marching Squares (2D) at the given isovalue.
    fn isosurface(field: &GridField<D>, isovalue: f64) -> SurfaceMesh<D>;
}

impl Dimension<2> for Dim<2> {
    fn project(verts: &[Point<2>; 2], query: &Point<2>) -> ElementProjection<2> {
        let [a, b] = verts;
        let ab = b - a;
        let len2 = ab.norm_squared();
        let t = if len2 > 0.0 {
            ((query - a).dot(&ab) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        ElementProjection {
            barycentric: [1.0 - t, t],
            on_boundary: t <= BOUNDARY_TOLERANCE || t >= 1.0 - BOUNDARY_TOLERANCE,
        }
    }

    fn measure(verts: &[Point<2>; 2]) -> f64 {
        (verts[1] - verts[0]).norm()
    }

    fn area_normal(verts: &[Point<2>; 2]) -> Point<2> {
        let d = verts[1] - verts[0];
        Point::<2>::new(d.y, -d.x)
    }

    fn winding(verts: &[Point<2>; 2], query: &Point<2>) -> f64 {
        let a = verts[0] - query;
        let b = verts[1] - query;
        let cross = a.x * b.y - a.y * b.x;
        cross.atan2(a.dot(&b)) / std::f64::consts::TAU
    }

    fn uniform_barycentric(u: f64, _v: f64) -> [f64; 2] {
        [1.0 - u, u]
    }

    fn initial_surface(center: &Point<2>, radius: f64, resolution: u32) -> SurfaceMesh<2> {
        let mut mesh = SurfaceMesh::circle(resolution.max(3) as usize, radius);
        for v in &mut mesh.vertices {
            *v += center;
        }
        mesh
    }

    fn default_epsilon() -> f64 {
        5e-3
    }

    fn remesh(
        mesh: &SurfaceMesh<2>,
        region: &ActiveRegion,
        params: &RemeshParams,
    ) -> SurfaceMesh<2> {
        remesh::polyline::remesh(mesh, region, params)
    }

    fn isosurface(field: &GridField<2>, isovalue: f64) -> SurfaceMesh<2> {
        baseline::marching_squares(field, isovalue)
    }
}

impl Dimension<3> for Dim<3> {
    fn project(verts: &[Point<3>; 3], query: &Point<3>) -> ElementProjection<3> {
        closest_on_triangle(verts, query)
    }

    fn measure(verts: &[Point<3>; 3]) -> f64 {
        0.5 * (verts[1] - verts[0]).cross(&(verts[2] - verts[0])).norm()
    }

    fn area_normal(verts: &[Point<3>; 3]) -> Point<3> {
        0.5 * (verts[1] - verts[0]).cross(&(verts[2] - verts[0]))
    }

    fn winding(verts: &[Point<3>; 3], query: &Point<3>) -> f64 {
        // Van Oosterom-Strackee solid angle.
        let a = verts[0] - query;
        let b = verts[1] - query;
        let c = verts[2] - query;
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let det = a.dot(&b.cross(&c));
        let den = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
        2.0 * det.atan2(den) / (4.0 * std::f64::consts::PI)
    }

    fn uniform_barycentric(u: f64, v: f64) -> [f64; 3] {
        let (u, v) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
        [1.0 - u - v, u, v]
    }

    fn initial_surface(center: &Point<3>, radius: f64, resolution: u32) -> SurfaceMesh<3> {
        let mut mesh = SurfaceMesh::icosphere(resolution, radius);
        for v in &mut mesh.vertices {
            *v += center;
        }
        mesh
    }

    fn default_epsilon() -> f64 {
        1e-2
    }

    fn remesh(
        mesh: &SurfaceMesh<3>,
        region: &ActiveRegion,
        params: &RemeshParams,
    ) -> SurfaceMesh<3> {
        remesh::surface::remesh(mesh, region, params)
    }

    fn isosurface(field: &GridField<3>, isovalue: f64) -> SurfaceMesh<3> {
        baseline::marching_cubes(field, isovalue)
    }
}

/// Region-classification closest point on a triangle (vertex, edge and face
/// Voronoi regions).
fn closest_on_triangle(verts: &[Point<3>; 3], p: &Point<3>) -> ElementProjection<3> {
    let [a, b, c] = verts;
    let vertex = |k: usize| {
        let mut barycentric = [0.0; 3];
        barycentric[k] = 1.0;
        ElementProjection { barycentric, on_boundary: true }
    };
    let edge = |barycentric: [f64; 3]| ElementProjection { barycentric, on_boundary: true };

    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return vertex(0);
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return vertex(1);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return edge([1.0 - v, v, 0.0]);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return vertex(2);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return edge([1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return edge([0.0, 1.0 - w, w]);
    }
    let sum = va + vb + vc;
    if !(sum > 0.0) || !sum.is_finite() {
        return closest_on_degenerate_triangle(verts, p);
    }
    let v = vb / sum;
    let w = vc / sum;
    let barycentric = [1.0 - v - w, v, w];
    let on_boundary = barycentric.iter().any(|&x| x <= BOUNDARY_TOLERANCE);
    ElementProjection { barycentric, on_boundary }
}

/// Sliver fallback: best of the three edge projections.
fn closest_on_degenerate_triangle(verts: &[Point<3>; 3], p: &Point<3>) -> ElementProjection<3> {
    let mut best: Option<(f64, [f64; 3])> = None;
    for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let ab = verts[j] - verts[i];
        let len2 = ab.norm_squared();
        let t = if len2 > 0.0 { ((p - verts[i]).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
        let q = verts[i] + ab * t;
        let d = (p - q).norm_squared();
        if best.is_none_or(|(bd, _)| d < bd) {
            let mut bary = [0.0; 3];
            bary[i] = 1.0 - t;
            bary[j] = t;
            best = Some((d, bary));
        }
    }
    let (_, barycentric) = best.expect("three candidate edges");
    ElementProjection { barycentric, on_boundary: true }
}

/// Gather the vertex positions of one element.
#[inline]
pub fn element_vertices<const D: usize>(vertices: &[Point<D>], element: &[usize; D]) -> [Point<D>; D] {
    std::array::from_fn(|k| vertices[element[k]])
}

/// Axis-aligned bounding box of a point set; `None` when empty.
pub fn bounding_box<'a, const D: usize>(
    points: impl IntoIterator<Item = &'a Point<D>>,
) -> Option<(Point<D>, Point<D>)> {
    let mut iter = points.into_iter();
    let first = *iter.next()?;
    Some(iter.fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p))))
}
