//! Marching Cubes (3D) and Marching Squares (2D) over gridded samples.

mod tables;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::SurfaceMesh;
use crate::samples::{GridSpec, SdfSampleSet};

/// Scalar values on a regular grid, x index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<const D: usize> {
    pub spec: GridSpec<D>,
    pub values: Vec<f64>,
}

impl<const D: usize> GridField<D> {
    pub fn new(spec: GridSpec<D>, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidInput(format!(
                "grid has {} points but {} values",
                spec.len(),
                values.len()
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn from_samples(samples: &SdfSampleSet<D>) -> Result<Self> {
        let spec = samples
            .grid()
            .ok_or_else(|| Error::InvalidInput("sample set has no grid layout".into()))?;
        Self::new(*spec, samples.values().to_vec())
    }

    /// Evaluate `f` at every grid point.
    pub fn from_fn(spec: GridSpec<D>, f: impl Fn(&Point<D>) -> f64) -> Self {
        let values = spec.points().iter().map(f).collect();
        Self { spec, values }
    }

    fn at(&self, ijk: [usize; D]) -> f64 {
        self.values[self.spec.index(ijk)]
    }
}

/// Deduplicates contour vertices per grid edge, keyed by the lower endpoint
/// and the edge axis.
struct EdgeVertices<'a, const D: usize> {
    field: &'a GridField<D>,
    isovalue: f64,
    index: HashMap<(usize, usize), usize>,
    vertices: Vec<Point<D>>,
}

impl<'a, const D: usize> EdgeVertices<'a, D> {
    fn new(field: &'a GridField<D>, isovalue: f64) -> Self {
        Self { field, isovalue, index: HashMap::new(), vertices: Vec::new() }
    }

    fn get(&mut self, a: [usize; D], b: [usize; D]) -> usize {
        let axis = (0..D).find(|&k| a[k] != b[k]).expect("distinct endpoints");
        let (lo, hi) = if a[axis] < b[axis] { (a, b) } else { (b, a) };
        let key = (self.field.spec.index(lo), axis);
        if let Some(&v) = self.index.get(&key) {
            return v;
        }
        let (vl, vh) = (self.field.at(lo), self.field.at(hi));
        let t = if vh != vl { ((self.isovalue - vl) / (vh - vl)).clamp(0.0, 1.0) } else { 0.5 };
        let pl = self.field.spec.point(lo);
        let ph = self.field.spec.point(hi);
        let mut p = pl;
        p[axis] = pl[axis] + t * (ph[axis] - pl[axis]);
        let id = self.vertices.len();
        self.vertices.push(p);
        self.index.insert(key, id);
        id
    }
}

const CUBE_CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

const CUBE_EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Classic table-driven Marching Cubes with outward-facing triangles.
/// Cells are visited in storage order, so the output is deterministic.
pub fn marching_cubes(field: &GridField<3>, isovalue: f64) -> SurfaceMesh<3> {
    let dims = field.spec.dims;
    let mut verts = EdgeVertices::new(field, isovalue);
    let mut faces = Vec::new();
    for k in 0..dims[2] - 1 {
        for j in 0..dims[1] - 1 {
            for i in 0..dims[0] - 1 {
                let corner = |c: usize| {
                    let o = CUBE_CORNERS[c];
                    [i + o[0], j + o[1], k + o[2]]
                };
                let mut case = 0usize;
                for c in 0..8 {
                    if field.at(corner(c)) < isovalue {
                        case |= 1 << c;
                    }
                }
                for tri in tables::TRIANGLES[case].chunks_exact(3) {
                    let mut ids = [0usize; 3];
                    for (slot, &e) in ids.iter_mut().zip(tri) {
                        let [a, b] = CUBE_EDGES[e as usize];
                        *slot = verts.get(corner(a), corner(b));
                    }
                    // The table winds triangles toward the low-valued side.
                    faces.push([ids[0], ids[2], ids[1]]);
                }
            }
        }
    }
    SurfaceMesh::new(verts.vertices, faces)
}

const SQUARE_CORNERS: [[usize; 2]; 4] = [[0, 0], [1, 0], [1, 1], [0, 1]];

/// Marching Squares; saddle cells are resolved by the cell-centre average.
/// Loops run counter-clockwise around regions below the isovalue.
pub fn marching_squares(field: &GridField<2>, isovalue: f64) -> SurfaceMesh<2> {
    let dims = field.spec.dims;
    let mut verts = EdgeVertices::new(field, isovalue);
    let mut segments = Vec::new();
    for j in 0..dims[1] - 1 {
        for i in 0..dims[0] - 1 {
            let corner = |c: usize| [i + SQUARE_CORNERS[c][0], j + SQUARE_CORNERS[c][1]];
            let values: [f64; 4] = std::array::from_fn(|c| field.at(corner(c)));
            let inside: [bool; 4] = std::array::from_fn(|c| values[c] < isovalue);
            let count = inside.iter().filter(|&&b| b).count();
            if count == 0 || count == 4 {
                continue;
            }
            // Corners to cut off; each cut joins the corner's two edges.
            let cuts: Vec<usize> = if count == 2 && inside[0] == inside[2] {
                let centre_inside = values.iter().sum::<f64>() / 4.0 < isovalue;
                (0..4).filter(|&c| inside[c] != centre_inside).collect()
            } else if count == 2 {
                Vec::new()
            } else {
                let minority = count == 1;
                (0..4).filter(|&c| inside[c] == minority).collect()
            };
            let mut pairs: Vec<[usize; 2]> = cuts.iter().map(|&c| [(c + 3) % 4, c]).collect();
            if count == 2 && inside[0] != inside[2] {
                let crossing: Vec<usize> = (0..4).filter(|&e| inside[e] != inside[(e + 1) % 4]).collect();
                pairs.push([crossing[0], crossing[1]]);
            }
            for [ea, eb] in pairs {
                // Edge e joins corners e and e+1. Orient so the inside
                // endpoint of `ea` lies to the left.
                let mid = |e: usize| {
                    let (a, b) = (SQUARE_CORNERS[e], SQUARE_CORNERS[(e + 1) % 4]);
                    [(a[0] + b[0]) as f64 * 0.5, (a[1] + b[1]) as f64 * 0.5]
                };
                let (ma, mb) = (mid(ea), mid(eb));
                let (cin, cout) = if inside[ea] { (ea, (ea + 1) % 4) } else { ((ea + 1) % 4, ea) };
                let across = [
                    SQUARE_CORNERS[cin][0] as f64 - SQUARE_CORNERS[cout][0] as f64,
                    SQUARE_CORNERS[cin][1] as f64 - SQUARE_CORNERS[cout][1] as f64,
                ];
                let dir = [mb[0] - ma[0], mb[1] - ma[1]];
                let left = dir[0] * across[1] - dir[1] * across[0] > 0.0;
                let edge_ends = |e: usize| (corner(e), corner((e + 1) % 4));
                let (a0, a1) = edge_ends(ea);
                let (b0, b1) = edge_ends(eb);
                let va = verts.get(a0, a1);
                let vb = verts.get(b0, b1);
                segments.push(if left { [va, vb] } else { [vb, va] });
            }
        }
    }
    SurfaceMesh::new(verts.vertices, segments)
}
