//! Local isotropic remeshing toward a target edge length, restricted to an
//! active region of the surface.

pub mod polyline;
pub mod surface;

use std::collections::BTreeSet;

use crate::flow::Correspondence;
use crate::geometry::{Dim, Dimension};
use crate::mesh::SurfaceMesh;

pub const SPLIT_FACTOR: f64 = 4.0 / 3.0;
pub const COLLAPSE_FACTOR: f64 = 4.0 / 5.0;

/// Elements the remesher may touch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActiveRegion {
    pub elements: BTreeSet<usize>,
    pub grown_by: usize,
}

impl ActiveRegion {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full<const D: usize>(mesh: &SurfaceMesh<D>) -> Self {
        Self { elements: (0..mesh.elements.len()).collect(), grown_by: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, element: usize) -> bool {
        self.elements.contains(&element)
    }

    pub fn mask(&self, element_count: usize) -> Vec<bool> {
        let mut mask = vec![false; element_count];
        for &e in self.elements.range(..element_count) {
            mask[e] = true;
        }
        mask
    }

    /// Add every element sharing a vertex with the region, `rings` times.
    pub fn dilated<const D: usize>(&self, mesh: &SurfaceMesh<D>, rings: usize) -> Self {
        let mut elements = self.elements.clone();
        let mut incident = vec![Vec::new(); mesh.vertices.len()];
        for (e, el) in mesh.elements.iter().enumerate() {
            for &v in el {
                incident[v].push(e);
            }
        }
        for _ in 0..rings {
            let mut grown = elements.clone();
            for &e in &elements {
                for &v in &mesh.elements[e] {
                    grown.extend(incident[v].iter().copied());
                }
            }
            elements = grown;
        }
        Self { elements, grown_by: self.grown_by + rings }
    }
}

/// Elements holding the closest point of a sample that misses its value by
/// more than `epsilon`, grown by one ring.
pub fn compute_active_region<const D: usize>(
    mesh: &SurfaceMesh<D>,
    correspondences: &[Correspondence<D>],
    epsilon: f64,
) -> ActiveRegion {
    let seeds: BTreeSet<usize> = correspondences
        .iter()
        .filter(|c| c.violation > epsilon)
        .map(|c| c.cp.element)
        .collect();
    if seeds.is_empty() {
        return ActiveRegion::empty();
    }
    ActiveRegion { elements: seeds, grown_by: 0 }.dilated(mesh, 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemeshParams {
    /// Target edge length.
    pub h: f64,
    pub iterations: usize,
    /// Damping of the tangential smoothing step.
    pub smoothing: f64,
}

impl RemeshParams {
    pub fn new(h: f64, iterations: usize) -> Self {
        Self { h, iterations, smoothing: 0.5 }
    }
}

/// Remesh `region` of `mesh` toward edge length `params.h`.
pub fn remesh<const D: usize>(mesh: &SurfaceMesh<D>, region: &ActiveRegion, params: &RemeshParams) -> SurfaceMesh<D>
where
    Dim<D>: Dimension<D>,
{
    if region.is_empty() || params.iterations == 0 || !(params.h > 0.0) {
        return mesh.clone();
    }
    Dim::<D>::remesh(mesh, region, params)
}
