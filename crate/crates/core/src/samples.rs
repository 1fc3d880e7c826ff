//! Signed-distance sample sets and regular grids.

use crate::error::{Error, Result};
use crate::geometry::Point;

/// How the sample values relate to the true distance field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleKind {
    /// Exact signed distance, negative inside.
    Signed,
    /// Exact unsigned distance.
    Unsigned,
    /// Signed distance with magnitudes capped at the given positive value.
    Clamped(f64),
    /// Exact outside, only a bound on the distance inside (swept volumes).
    ConservativeInterior,
}

/// A regular lattice of `dims[0] * ... * dims[D-1]` points, stored with the
/// x index varying fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<const D: usize> {
    pub dims: [usize; D],
    pub origin: Point<D>,
    pub spacing: [f64; D],
}

impl<const D: usize> GridSpec<D> {
    pub fn new(dims: [usize; D], origin: Point<D>, spacing: [f64; D]) -> Result<Self> {
        if dims.iter().any(|&k| k < 2) {
            return Err(Error::InvalidInput(format!("grid needs at least 2 samples per axis, got {dims:?}")));
        }
        if spacing.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {spacing:?}")));
        }
        Ok(Self { dims, origin, spacing })
    }

    /// `k` samples per axis spanning `[-1, 1]^D`.
    pub fn unit_cube(k: usize) -> Result<Self> {
        let h = if k >= 2 { 2.0 / (k - 1) as f64 } else { 0.0 };
        Self::new([k; D], Point::<D>::repeat(-1.0), [h; D])
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of a lattice coordinate, x fastest.
    pub fn index(&self, ijk: [usize; D]) -> usize {
        let mut idx = 0;
        for axis in (0..D).rev() {
            idx = idx * self.dims[axis] + ijk[axis];
        }
        idx
    }

    /// Inverse of [`GridSpec::index`].
    pub fn coords(&self, mut idx: usize) -> [usize; D] {
        std::array::from_fn(|axis| {
            let i = idx % self.dims[axis];
            idx /= self.dims[axis];
            i
        })
    }

    pub fn point(&self, ijk: [usize; D]) -> Point<D> {
        Point::<D>::from_fn(|axis, _| self.origin[axis] + ijk[axis] as f64 * self.spacing[axis])
    }

    /// All lattice points in storage order.
    pub fn points(&self) -> Vec<Point<D>> {
        (0..self.len()).map(|i| self.point(self.coords(i))).collect()
    }
}

/// Points `p_i` with distance values `s_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfSampleSet<const D: usize> {
    points: Vec<Point<D>>,
    values: Vec<f64>,
    kind: SampleKind,
    grid: Option<GridSpec<D>>,
}

impl<const D: usize> SdfSampleSet<D> {
    pub fn new(points: Vec<Point<D>>, values: Vec<f64>, kind: SampleKind) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} values",
                points.len(),
                values.len()
            )));
        }
        if points.is_empty() {
            return Err(Error::InvalidInput("sample set is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) || points.iter().any(|p| p.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidInput("sample set contains non-finite numbers".into()));
        }
        match kind {
            SampleKind::Unsigned if values.iter().any(|&v| v < 0.0) => {
                return Err(Error::InvalidInput("unsigned samples must be non-negative".into()));
            }
            SampleKind::Clamped(sigma) if !(sigma > 0.0) => {
                return Err(Error::InvalidInput(format!("clamp value must be positive, got {sigma}")));
            }
            _ => {}
        }
        Ok(Self { points, values, kind, grid: None })
    }

    /// Samples laid out on `grid` in storage order.
    pub fn on_grid(grid: GridSpec<D>, values: Vec<f64>, kind: SampleKind) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "grid has {} points but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        let mut set = Self::new(grid.points(), values, kind)?;
        set.grid = Some(grid);
        Ok(set)
    }

    pub fn points(&self) -> &[Point<D>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> SampleKind {
        self.kind
    }

    pub fn grid(&self) -> Option<&GridSpec<D>> {
        self.grid.as_ref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Declare that the points are laid out on `grid` in storage order.
    pub fn with_grid(mut self, grid: GridSpec<D>) -> Result<Self> {
        if grid.len() != self.len() {
            return Err(Error::InvalidInput(format!("grid has {} points but the set has {}", grid.len(), self.len())));
        }
        self.grid = Some(grid);
        Ok(self)
    }

    /// Same points and layout, new values and kind.
    pub fn with_values(&self, values: Vec<f64>, kind: SampleKind) -> Result<Self> {
        let mut out = Self::new(self.points.clone(), values, kind)?;
        out.grid = self.grid;
        Ok(out)
    }

    /// Append samples; the result no longer carries a grid layout.
    pub fn extended(&self, other: &Self) -> Result<Self> {
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Self::new(points, values, self.kind)
    }

    /// Mean distance from each sample point to its nearest other sample.
    pub fn mean_nearest_neighbor_distance(&self) -> f64 {
        crate::sampling::mean_nearest_neighbor_distance(&self.points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_index_is_x_fastest() {
        let g = GridSpec::<3>::unit_cube(3).unwrap();
        assert_eq!(g.index([1, 0, 0]), 1);
        assert_eq!(g.index([0, 1, 0]), 3);
        assert_eq!(g.index([0, 0, 1]), 9);
        for i in 0..g.len() {
            assert_eq!(g.index(g.coords(i)), i);
        }
        let pts = g.points();
        assert_eq!(pts[0], Point::<3>::new(-1.0, -1.0, -1.0));
        assert_eq!(pts[1], Point::<3>::new(0.0, -1.0, -1.0));
        assert_eq!(pts[26], Point::<3>::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn sample_set_invariants() {
        let p = vec![Point::<2>::zeros(); 2];
        assert!(SdfSampleSet::new(p.clone(), vec![0.1], SampleKind::Signed).is_err());
        assert!(SdfSampleSet::<2>::new(vec![], vec![], SampleKind::Signed).is_err());
        assert!(SdfSampleSet::new(p.clone(), vec![-0.1, 0.2], SampleKind::Unsigned).is_err());
        assert!(SdfSampleSet::new(p.clone(), vec![0.1, 0.2], SampleKind::Clamped(0.0)).is_err());
        assert!(SdfSampleSet::new(p, vec![0.1, 0.2], SampleKind::Clamped(0.3)).is_ok());
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        assert!(GridSpec::<2>::unit_cube(1).is_err());
        assert!(GridSpec::<2>::new([2, 2], Point::<2>::zeros(), [0.0, 1.0]).is_err());
    }
}
