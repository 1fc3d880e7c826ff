//! On-disk formats: OBJ meshes, sample files, CSV and JSON reports.

mod obj;
mod report;
mod samples;

pub use obj::{obj_dimension, parse_obj, read_mesh, write_mesh, write_mesh_to};
pub use report::{write_comparison_csv, write_iterations_csv, write_summary_json, ComparisonRow};
pub use samples::{parse_samples, read_samples, sample_file_dimension, write_samples, write_samples_to};

use crate::error::Error;

pub(crate) fn io_error(path: &std::path::Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}
