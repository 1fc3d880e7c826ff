//! Explicit surface reconstruction from discrete signed distance samples.
//!
//! A closed polyline (2D) or watertight triangle mesh (3D) is shrink-wrapped
//! onto the sample spheres by an implicit gradient flow of the SDF energy
//! `E = 1/2 sum (sd(p_i) - s_i)^2`, interleaved with local remeshing. Marching
//! Cubes/Squares baselines and evaluation metrics are included for
//! comparison.
//!
//! ```no_run
//! use sphere_reach::prelude::*;
//!
//! let gt = SurfaceMesh::icosphere(4, 0.25);
//! let samples = sample_grid(&gt, &GridSpec::unit_cube(10).unwrap()).unwrap();
//! let config = ReconstructionConfig::for_dim::<3>();
//! let (mesh, report) = reconstruct(&samples, &config, None).unwrap();
//! println!("{} faces, E = {}", mesh.elements.len(), report.final_energy);
//! ```

// Negated comparisons send NaN down the safe branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod cli;
pub mod config;
pub mod driver;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod metrics;
pub mod remesh;
pub mod samples;
pub mod sampling;
pub mod spatial;

pub use config::{ReconstructionConfig, Variant};
pub use error::{Error, Result};
pub use geometry::{Dim, Dimension, Point};
pub use mesh::{SurfaceMesh, ValidityReport};
pub use samples::{GridSpec, SampleKind, SdfSampleSet};

pub mod prelude {
    pub use crate::baseline::{marching_cubes, marching_squares, GridField};
    pub use crate::config::{ReconstructionConfig, Variant};
    pub use crate::driver::{reconstruct, reconstruct_with_resampling, RunReport};
    pub use crate::error::{Error, Result};
    pub use crate::geometry::{Dim, Dimension, Point};
    pub use crate::mesh::{SurfaceMesh, ValidityReport};
    pub use crate::metrics::{chamfer, evaluate, hausdorff, MetricReport};
    pub use crate::samples::{GridSpec, SampleKind, SdfSampleSet};
    pub use crate::sampling::{add_noise, clamp_samples, sample_grid, sample_pointcloud, CloudMode, MeshOracle};
    pub use crate::spatial::Bvh;
}
