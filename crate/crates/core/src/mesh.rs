//! Simplicial surface container, canonical start surfaces and validity checks.

use std::collections::HashMap;

use serde::Serialize;

use crate::geometry::{element_vertices, Dim, Dimension, Point};

/// A closed simplicial surface: segments in 2D, oriented triangles in 3D.
///
/// Elements are oriented so that their normals point outward: loops run
/// counter-clockwise and triangles follow the right-hand rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh<const D: usize> {
    pub vertices: Vec<Point<D>>,
    pub elements: Vec<[usize; D]>,
}

impl<const D: usize> Default for SurfaceMesh<D> {
    fn default() -> Self {
        Self { vertices: Vec::new(), elements: Vec::new() }
    }
}

impl<const D: usize> SurfaceMesh<D> {
    pub fn new(vertices: Vec<Point<D>>, elements: Vec<[usize; D]>) -> Self {
        Self { vertices, elements }
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, e: usize) -> [Point<D>; D] {
        element_vertices(&self.vertices, &self.elements[e])
    }

    /// Total length (2D) or area (3D).
    pub fn total_measure(&self) -> f64
    where
        Dim<D>: Dimension<D>,
    {
        (0..self.elements.len()).map(|e| Dim::<D>::measure(&self.element(e))).sum()
    }

    /// Enclosed area (2D) or volume (3D), positive for outward orientation.
    pub fn enclosed_volume(&self) -> f64 {
        self.elements
            .iter()
            .map(|el| {
                let v = element_vertices(&self.vertices, el);
                if D == 2 {
                    0.5 * (v[0][0] * v[1][1] - v[1][0] * v[0][1])
                } else {
                    let a = nalgebra::Vector3::new(v[0][0], v[0][1], v[0][2]);
                    let b = nalgebra::Vector3::new(v[1][0], v[1][1], v[1][2]);
                    let c = nalgebra::Vector3::new(v[2][0], v[2][1], v[2][2]);
                    a.dot(&b.cross(&c)) / 6.0
                }
            })
            .sum()
    }

    /// Undirected edges as sorted vertex pairs, in ascending order. In 2D the
    /// edges are the segments themselves.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<[usize; 2]> = self
            .elements
            .iter()
            .flat_map(|el| {
                (0..D).filter(move |&k| D == 3 || k == 0).map(move |k| {
                    let (a, b) = (el[k], el[(k + 1) % D]);
                    [a.min(b), a.max(b)]
                })
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.edges()
            .iter()
            .map(|[a, b]| (self.vertices[*a] - self.vertices[*b]).norm())
            .collect()
    }

    /// Disjoint union; indices of `other` are shifted.
    pub fn concat(&self, other: &Self) -> Self {
        let offset = self.vertices.len();
        let mut out = self.clone();
        out.vertices.extend_from_slice(&other.vertices);
        out.elements
            .extend(other.elements.iter().map(|el| el.map(|i| i + offset)));
        out
    }

    /// Reverse the orientation of every element.
    pub fn flipped(&self) -> Self {
        let mut out = self.clone();
        for el in &mut out.elements {
            el.swap(0, 1);
        }
        out
    }

    pub fn map_vertices(&self, f: impl FnMut(&Point<D>) -> Point<D>) -> Self {
        Self { vertices: self.vertices.iter().map(f).collect(), elements: self.elements.clone() }
    }

    /// Iterate over vertex coordinates and check they are all finite and
    /// bounded by `bound` in absolute value.
    pub fn is_bounded(&self, bound: f64) -> bool {
        self.vertices.iter().all(|v| v.iter().all(|x| x.is_finite() && x.abs() <= bound))
    }

    pub fn validate(&self) -> ValidityReport {
        ValidityReport::of(self)
    }
}

impl SurfaceMesh<3> {
    /// Regular icosahedron with `subdivisions` rounds of 4-to-1 splitting,
    /// every vertex projected to the sphere of the given radius.
    pub fn icosphere(subdivisions: u32, radius: f64) -> Self {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<Point<3>> = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ]
        .iter()
        .map(|c| Point::<3>::from(*c).normalize())
        .collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
            let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point<3>>| -> usize {
                *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                    vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                    vertices.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for [a, b, c] in faces {
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, c, &mut vertices);
                let ca = mid(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        for v in &mut vertices {
            *v *= radius;
        }
        Self { vertices, elements: faces }
    }
}

impl SurfaceMesh<2> {
    /// Counter-clockwise regular polygon inscribed in the circle of the given
    /// radius, first vertex on the positive x axis.
    pub fn circle(segments: usize, radius: f64) -> Self {
        let vertices = (0..segments)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / segments as f64;
                Point::<2>::new(radius * a.cos(), radius * a.sin())
            })
            .collect();
        let elements = (0..segments).map(|k| [k, (k + 1) % segments]).collect();
        Self { vertices, elements }
    }
}

/// Structural diagnosis of a [`SurfaceMesh`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidityReport {
    pub vertex_count: usize,
    pub element_count: usize,
    pub edge_count: usize,
    pub out_of_range_indices: usize,
    /// Elements that repeat a vertex index.
    pub degenerate_elements: usize,
    /// Edges (3D) or vertices (2D) with a single incident element.
    pub boundary_edges: usize,
    /// Edges (3D) or vertices (2D) with more than two incident elements.
    pub nonmanifold_edges: usize,
    /// Vertices whose incident elements do not form a single fan.
    pub nonmanifold_vertices: usize,
    pub isolated_vertices: usize,
    pub orientation_consistent: bool,
    pub euler_characteristic: i64,
    pub components: usize,
}

impl ValidityReport {
    pub fn is_manifold(&self) -> bool {
        self.out_of_range_indices == 0
            && self.degenerate_elements == 0
            && self.nonmanifold_edges == 0
            && self.nonmanifold_vertices == 0
    }

    pub fn is_watertight(&self) -> bool {
        self.is_manifold() && self.boundary_edges == 0
    }

    /// Manifold, closed and consistently oriented.
    pub fn is_valid(&self) -> bool {
        self.is_watertight() && self.orientation_consistent
    }

    fn of<const D: usize>(mesh: &SurfaceMesh<D>) -> Self {
        let nv = mesh.vertices.len();
        let mut report = ValidityReport {
            vertex_count: nv,
            element_count: mesh.elements.len(),
            edge_count: 0,
            out_of_range_indices: 0,
            degenerate_elements: 0,
            boundary_edges: 0,
            nonmanifold_edges: 0,
            nonmanifold_vertices: 0,
            isolated_vertices: 0,
            orientation_consistent: true,
            euler_characteristic: 0,
            components: 0,
        };
        let mut elements = Vec::with_capacity(mesh.elements.len());
        for el in &mesh.elements {
            if el.iter().any(|&i| i >= nv) {
                report.out_of_range_indices += 1;
                continue;
            }
            let mut sorted = *el;
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                report.degenerate_elements += 1;
                continue;
            }
            elements.push(*el);
        }

        let mut uf = UnionFind::new(nv);
        let mut referenced = vec![false; nv];
        for el in &elements {
            for k in 0..D {
                referenced[el[k]] = true;
                uf.union(el[0], el[k]);
            }
        }
        report.isolated_vertices = referenced.iter().filter(|r| !**r).count();
        report.components = (0..nv).filter(|&v| referenced[v] && uf.find(v) == v).count();

        if D == 2 {
            let mut incoming = vec![0usize; nv];
            let mut outgoing = vec![0usize; nv];
            for el in &elements {
                outgoing[el[0]] += 1;
                incoming[el[1]] += 1;
            }
            for v in 0..nv {
                let degree = incoming[v] + outgoing[v];
                if degree == 1 {
                    report.boundary_edges += 1;
                }
                if degree > 2 {
                    report.nonmanifold_edges += 1;
                }
                if degree == 2 && incoming[v] != 1 {
                    report.orientation_consistent = false;
                }
                if degree > 2 && incoming[v] != outgoing[v] {
                    report.orientation_consistent = false;
                }
            }
            let mut segs: Vec<[usize; 2]> =
                elements.iter().map(|e| [e[0].min(e[1]), e[0].max(e[1])]).collect();
            segs.sort_unstable();
            let before = segs.len();
            segs.dedup();
            report.nonmanifold_edges += before - segs.len();
            report.edge_count = elements.len();
            report.euler_characteristic = nv as i64 - elements.len() as i64;
        } else {
            // Directed edge -> number of uses; undirected edge -> incident elements.
            let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
            let mut undirected: HashMap<(usize, usize), usize> = HashMap::new();
            for el in &elements {
                for k in 0..3 {
                    let (a, b) = (el[k], el[(k + 1) % 3]);
                    *directed.entry((a, b)).or_default() += 1;
                    *undirected.entry((a.min(b), a.max(b))).or_default() += 1;
                }
            }
            for (&(a, b), &count) in &undirected {
                match count {
                    1 => report.boundary_edges += 1,
                    2 => {
                        if directed.get(&(a, b)) != Some(&1) || directed.get(&(b, a)) != Some(&1) {
                            report.orientation_consistent = false;
                        }
                    }
                    _ => report.nonmanifold_edges += 1,
                }
            }
            report.edge_count = undirected.len();
            report.nonmanifold_vertices = count_nonmanifold_vertices(nv, &elements);
            report.euler_characteristic =
                nv as i64 - undirected.len() as i64 + elements.len() as i64;
        }
        report
    }
}

/// A vertex is manifold when the link edges of its incident triangles form a
/// single connected path or cycle.
fn count_nonmanifold_vertices<const D: usize>(nv: usize, elements: &[[usize; D]]) -> usize {
    let mut link: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
    for el in elements {
        for k in 0..3 {
            link[el[k]].push((el[(k + 1) % 3], el[(k + 2) % 3]));
        }
    }
    let mut bad = 0;
    for edges in &link {
        if edges.is_empty() {
            continue;
        }
        let mut ids: Vec<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        ids.sort_unstable();
        ids.dedup();
        let index = |x: usize| ids.binary_search(&x).expect("link vertex");
        let mut uf = UnionFind::new(ids.len());
        let mut degree = vec![0usize; ids.len()];
        for &(a, b) in edges {
            let (ia, ib) = (index(a), index(b));
            uf.union(ia, ib);
            degree[ia] += 1;
            degree[ib] += 1;
        }
        let roots = (0..ids.len()).filter(|&i| uf.find(i) == i).count();
        if roots != 1 || degree.iter().any(|&d| d > 2) {
            bad += 1;
        }
    }
    bad
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}
