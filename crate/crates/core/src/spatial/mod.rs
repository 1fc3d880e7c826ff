//! Bounding-volume hierarchy over mesh elements with exact closest-point,
//! distance and sign queries.
//!
//! The tree is rebuilt for every flow iteration; it is immutable once built
//! and can be queried from many threads at once.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{element_vertices, Dim, Dimension, Point, BOUNDARY_TOLERANCE};
use crate::mesh::SurfaceMesh;

pub const LEAF_SIZE: usize = 4;

/// Consecutive queries share a seed within chunks of this size.
const QUERY_CHUNK: usize = 256;

/// Which side of the surface a query falls on, as seen from its closest
/// element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Inside,
    Outside,
    /// The closest point is on an edge or vertex of its element (or on the
    /// query itself), where the element normal says nothing reliable.
    OnElementBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPointResult<const D: usize> {
    pub point: Point<D>,
    pub element: usize,
    /// Weights over the element's vertices (one sparse row of `A`).
    pub barycentric: [f64; D],
    pub distance: f64,
    pub side: Side,
}

#[derive(Debug, Clone)]
struct Node<const D: usize> {
    lo: Point<D>,
    hi: Point<D>,
    start: usize,
    end: usize,
    /// Index of the first child; the second is `left + 1`. `usize::MAX` marks a leaf.
    left: usize,
}

impl<const D: usize> Node<D> {
    fn is_leaf(&self) -> bool {
        self.left == usize::MAX
    }

    fn distance_squared(&self, q: &Point<D>) -> f64 {
        box_distance_squared(&self.lo, &self.hi, q)
    }
}

/// Axis-aligned box tree with median splits on element centroids.
#[derive(Debug, Clone)]
pub struct Bvh<const D: usize> {
    nodes: Vec<Node<D>>,
    order: Vec<usize>,
    vertex_normals: Vec<Point<D>>,
    /// Per element, the pseudonormal of the edge from local vertex `k` to
    /// `k + 1` (3D only).
    edge_normals: Vec<[Point<D>; D]>,
    element_normals: Vec<Point<D>>,
    /// Element boxes in leaf order.
    leaf_boxes: Vec<(Point<D>, Point<D>)>,
}

fn box_distance_squared<const D: usize>(lo: &Point<D>, hi: &Point<D>, q: &Point<D>) -> f64 {
    let (lo, hi, q) = (&lo.data.0[0], &hi.data.0[0], &q.data.0[0]);
    let mut d2 = 0.0;
    for k in 0..D {
        let d = (lo[k] - q[k]).max(q[k] - hi[k]).max(0.0);
        d2 += d * d;
    }
    d2
}

impl<const D: usize> Bvh<D>
where
    Dim<D>: Dimension<D>,
{
    pub fn build(mesh: &SurfaceMesh<D>) -> Result<Self> {
        if mesh.elements.is_empty() {
            return Err(Error::EmptyMesh("cannot build a hierarchy over zero elements"));
        }
        let boxes: Vec<(Point<D>, Point<D>)> = mesh
            .elements
            .iter()
            .map(|el| {
                let v = element_vertices(&mesh.vertices, el);
                v.iter().fold((v[0], v[0]), |(lo, hi), p| (lo.inf(p), hi.sup(p)))
            })
            .collect();
        let centroids: Vec<Point<D>> = boxes.iter().map(|(lo, hi)| (lo + hi) * 0.5).collect();
        let mut order: Vec<usize> = (0..mesh.elements.len()).collect();
        let mut nodes = Vec::with_capacity(2 * order.len() / LEAF_SIZE + 1);
        nodes.push(Node { lo: Point::<D>::zeros(), hi: Point::<D>::zeros(), start: 0, end: order.len(), left: usize::MAX });
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let (start, end) = (nodes[ni].start, nodes[ni].end);
            let slice = &mut order[start..end];
            let (lo, hi) = slice
                .iter()
                .fold((boxes[slice[0]].0, boxes[slice[0]].1), |(lo, hi), &e| {
                    (lo.inf(&boxes[e].0), hi.sup(&boxes[e].1))
                });
            nodes[ni].lo = lo;
            nodes[ni].hi = hi;
            if slice.len() <= LEAF_SIZE {
                continue;
            }
            let (clo, chi) = slice.iter().fold((centroids[slice[0]], centroids[slice[0]]), |(lo, hi), &e| {
                (lo.inf(&centroids[e]), hi.sup(&centroids[e]))
            });
            let extent = chi - clo;
            let axis = (0..D).fold(0, |best, k| if extent[k] > extent[best] { k } else { best });
            let mid = slice.len() / 2;
            slice.select_nth_unstable_by(mid, |&a, &b| {
                centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
            });
            let left = nodes.len();
            nodes[ni].left = left;
            let empty = (Point::<D>::zeros(), Point::<D>::zeros());
            nodes.push(Node { lo: empty.0, hi: empty.1, start, end: start + mid, left: usize::MAX });
            nodes.push(Node { lo: empty.0, hi: empty.1, start: start + mid, end, left: usize::MAX });
            stack.push(left + 1);
            stack.push(left);
        }
        let (vertex_normals, edge_normals, element_normals) = pseudonormals(mesh);
        let leaf_boxes = order.iter().map(|&e| boxes[e]).collect();
        Ok(Self { nodes, order, vertex_normals, edge_normals, element_normals, leaf_boxes })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Height of the tree (a single leaf has height 1).
    pub fn height(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0usize, 1usize)];
        while let Some((ni, depth)) = stack.pop() {
            best = best.max(depth);
            let n = &self.nodes[ni];
            if !n.is_leaf() {
                stack.push((n.left, depth + 1));
                stack.push((n.left + 1, depth + 1));
            }
        }
        best
    }

    /// Element indices in leaf order.
    pub fn element_order(&self) -> &[usize] {
        &self.order
    }

    pub fn closest_point(&self, mesh: &SurfaceMesh<D>, query: &Point<D>) -> ClosestPointResult<D> {
        self.closest_point_counted(mesh, query).0
    }

    /// Closest point plus the number of tree nodes visited.
    pub fn closest_point_counted(&self, mesh: &SurfaceMesh<D>, query: &Point<D>) -> (ClosestPointResult<D>, usize) {
        self.closest_point_seeded(mesh, query, None)
    }

    /// Closest point, using element `seed` (typically the answer for a
    /// nearby query) as the initial bound. The result does not depend on the
    /// seed.
    pub fn closest_point_seeded(
        &self,
        mesh: &SurfaceMesh<D>,
        query: &Point<D>,
        seed: Option<usize>,
    ) -> (ClosestPointResult<D>, usize) {
        let mut best_d2 = f64::INFINITY;
        let mut best: Option<(usize, [f64; D], bool)> = None;
        let project = |e: usize| {
            let verts = element_vertices(&mesh.vertices, &mesh.elements[e]);
            let proj = Dim::<D>::project(&verts, query);
            ((proj.point(&verts) - query).norm_squared(), proj)
        };
        if let Some(e) = seed.filter(|&e| e < mesh.elements.len()) {
            let (d2, proj) = project(e);
            best_d2 = d2;
            best = Some((e, proj.barycentric, proj.on_boundary));
        }
        let mut visits = 0;
        let mut stack: Vec<(usize, f64)> = Vec::with_capacity(64);
        stack.push((0, self.nodes[0].distance_squared(query)));
        while let Some((ni, d2)) = stack.pop() {
            // Strict: equal-distance elements elsewhere must still be seen for the tie-break.
            if d2 > best_d2 {
                continue;
            }
            visits += 1;
            let node = &self.nodes[ni];
            if node.is_leaf() {
                for k in node.start..node.end {
                    let e = self.order[k];
                    let (lo, hi) = &self.leaf_boxes[k];
                    if box_distance_squared(lo, hi, query) > best_d2 {
                        continue;
                    }
                    let (d2, proj) = project(e);
                    let better = match best {
                        None => true,
                        Some((be, _, _)) => d2 < best_d2 || (d2 == best_d2 && e < be),
                    };
                    if better {
                        best_d2 = d2;
                        best = Some((e, proj.barycentric, proj.on_boundary));
                    }
                }
            } else {
                let (l, r) = (node.left, node.left + 1);
                let (dl, dr) = (self.nodes[l].distance_squared(query), self.nodes[r].distance_squared(query));
                // Push the farther child first so the nearer one pops next.
                if dl <= dr {
                    stack.push((r, dr));
                    stack.push((l, dl));
                } else {
                    stack.push((l, dl));
                    stack.push((r, dr));
                }
            }
        }
        let (element, barycentric, on_boundary) = best.expect("non-empty hierarchy");
        (self.finish(mesh, query, element, barycentric, on_boundary), visits)
    }

    fn finish(
        &self,
        mesh: &SurfaceMesh<D>,
        query: &Point<D>,
        element: usize,
        barycentric: [f64; D],
        on_boundary: bool,
    ) -> ClosestPointResult<D> {
        let verts = element_vertices(&mesh.vertices, &mesh.elements[element]);
        let mut point = Point::<D>::zeros();
        for (w, v) in barycentric.iter().zip(&verts) {
            point += v * *w;
        }
        let offset = query - point;
        let distance = offset.norm();
        let normal = &self.element_normals[element];
        let side = if on_boundary || distance == 0.0 || normal.norm_squared() == 0.0 {
            Side::OnElementBoundary
        } else if offset.dot(normal) < 0.0 {
            Side::Inside
        } else {
            Side::Outside
        };
        ClosestPointResult { point, element, barycentric, distance, side }
    }

    /// Distance to the surface, negative inside.
    pub fn signed_distance(&self, mesh: &SurfaceMesh<D>, query: &Point<D>) -> (f64, ClosestPointResult<D>) {
        self.signed_distance_seeded(mesh, query, None)
    }

    /// [`Bvh::signed_distance`] with a seed element, as in
    /// [`Bvh::closest_point_seeded`].
    pub fn signed_distance_seeded(
        &self,
        mesh: &SurfaceMesh<D>,
        query: &Point<D>,
        seed: Option<usize>,
    ) -> (f64, ClosestPointResult<D>) {
        let cp = self.closest_point_seeded(mesh, query, seed).0;
        let value = match cp.side {
            Side::Inside => -cp.distance,
            Side::Outside => cp.distance,
            Side::OnElementBoundary if cp.distance == 0.0 => 0.0,
            Side::OnElementBoundary => {
                if self.boundary_is_inside(mesh, query, &cp) {
                    -cp.distance
                } else {
                    cp.distance
                }
            }
        };
        (value, cp)
    }

    pub fn batch_signed_distance(
        &self,
        mesh: &SurfaceMesh<D>,
        queries: &[Point<D>],
    ) -> Vec<(f64, ClosestPointResult<D>)> {
        queries
            .par_chunks(QUERY_CHUNK)
            .flat_map_iter(|chunk| {
                let mut seed = None;
                chunk.iter().map(move |q| {
                    let r = self.signed_distance_seeded(mesh, q, seed);
                    seed = Some(r.1.element);
                    r
                })
            })
            .collect()
    }

    /// Sign at an edge or vertex closest point: angle-weighted pseudonormal
    /// of the feature, falling back to the winding number when it is
    /// inconclusive.
    fn boundary_is_inside(&self, mesh: &SurfaceMesh<D>, query: &Point<D>, cp: &ClosestPointResult<D>) -> bool {
        let el = &mesh.elements[cp.element];
        let zeros: Vec<usize> = (0..D).filter(|&k| cp.barycentric[k] <= BOUNDARY_TOLERANCE).collect();
        let pseudo = match (D, zeros.len()) {
            (2, 1) => Some(self.vertex_normals[el[1 - zeros[0]]]),
            (3, 2) => {
                let k = (0..3).find(|k| !zeros.contains(k)).expect("one non-zero weight");
                Some(self.vertex_normals[el[k]])
            }
            (3, 1) => Some(self.edge_normals[cp.element][(zeros[0] + 1) % 3]),
            _ => None,
        };
        let offset = query - cp.point;
        if let Some(n) = pseudo {
            let dot = offset.dot(&n);
            if dot.abs() > 1e-12 * offset.norm() * n.norm() {
                return dot < 0.0;
            }
        }
        winding_number(mesh, query) > 0.5
    }
}

/// Generalized winding number of the surface around `query` (1 inside a
/// closed outward-oriented surface, 0 outside).
pub fn winding_number<const D: usize>(mesh: &SurfaceMesh<D>, query: &Point<D>) -> f64
where
    Dim<D>: Dimension<D>,
{
    mesh.elements
        .iter()
        .map(|el| Dim::<D>::winding(&element_vertices(&mesh.vertices, el), query))
        .sum()
}

type Normals<const D: usize> = (Vec<Point<D>>, Vec<[Point<D>; D]>, Vec<Point<D>>);

fn pseudonormals<const D: usize>(mesh: &SurfaceMesh<D>) -> Normals<D>
where
    Dim<D>: Dimension<D>,
{
    let unit = |v: Point<D>| {
        let n = v.norm();
        if n > 0.0 { v / n } else { v }
    };
    let element_normals: Vec<Point<D>> = mesh
        .elements
        .iter()
        .map(|el| unit(Dim::<D>::area_normal(&element_vertices(&mesh.vertices, el))))
        .collect();
    let mut vertex_normals = vec![Point::<D>::zeros(); mesh.vertices.len()];
    let mut edge_normals = vec![[Point::<D>::zeros(); D]; mesh.elements.len()];
    if D == 2 {
        for (el, n) in mesh.elements.iter().zip(&element_normals) {
            vertex_normals[el[0]] += n;
            vertex_normals[el[1]] += n;
        }
    } else {
        let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (f, el) in mesh.elements.iter().enumerate() {
            let v = element_vertices(&mesh.vertices, el);
            for k in 0..3 {
                let e1 = v[(k + 1) % 3] - v[k];
                let e2 = v[(k + 2) % 3] - v[k];
                let denom = e1.norm() * e2.norm();
                if denom > 0.0 {
                    let angle = (e1.dot(&e2) / denom).clamp(-1.0, 1.0).acos();
                    vertex_normals[el[k]] += element_normals[f] * angle;
                }
                let (a, b) = (el[k], el[(k + 1) % 3]);
                edge_faces.entry((a.min(b), a.max(b))).or_default().push(f);
            }
        }
        for (f, el) in mesh.elements.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (el[k], el[(k + 1) % 3]);
                let sum = edge_faces[&(a.min(b), a.max(b))]
                    .iter()
                    .fold(Point::<D>::zeros(), |acc, &g| acc + element_normals[g]);
                edge_normals[f][k] = sum;
            }
        }
    }
    (vertex_normals, edge_normals, element_normals)
}

/// Build the hierarchy for `mesh`.
pub fn build_bvh<const D: usize>(mesh: &SurfaceMesh<D>) -> Result<Bvh<D>>
where
    Dim<D>: Dimension<D>,
{
    Bvh::build(mesh)
}

pub fn closest_point<const D: usize>(bvh: &Bvh<D>, mesh: &SurfaceMesh<D>, query: &Point<D>) -> ClosestPointResult<D>
where
    Dim<D>: Dimension<D>,
{
    bvh.closest_point(mesh, query)
}

pub fn signed_distance<const D: usize>(
    bvh: &Bvh<D>,
    mesh: &SurfaceMesh<D>,
    query: &Point<D>,
) -> (f64, ClosestPointResult<D>)
where
    Dim<D>: Dimension<D>,
{
    bvh.signed_distance(mesh, query)
}

pub fn batch_signed_distance<const D: usize>(
    bvh: &Bvh<D>,
    mesh: &SurfaceMesh<D>,
    queries: &[Point<D>],
) -> Vec<(f64, ClosestPointResult<D>)>
where
    Dim<D>: Dimension<D>,
{
    bvh.batch_signed_distance(mesh, queries)
}

#[cfg(test)]
mod tests;
