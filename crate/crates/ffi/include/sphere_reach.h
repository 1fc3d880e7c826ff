#ifndef SPHERE_REACH_H
#define SPHERE_REACH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SrStatus {
  SR_STATUS_OK = 0,
  SR_STATUS_NULL_ARGUMENT = 1,
  SR_STATUS_INVALID_ARGUMENT = 2,
  SR_STATUS_IO = 3,
  // Watchdog abort or solver failure. Reconstruction still hands back
  // the last valid mesh.
  SR_STATUS_NUMERICAL = 4,
  SR_STATUS_PANIC = 5,
} SrStatus;

typedef enum SrSampleKind {
  SR_SAMPLE_KIND_SIGNED = 0,
  SR_SAMPLE_KIND_UNSIGNED = 1,
  SR_SAMPLE_KIND_CLAMPED = 2,
  SR_SAMPLE_KIND_CONSERVATIVE_INTERIOR = 3,
} SrSampleKind;

typedef enum SrVariant {
  SR_VARIANT_SIGNED = 0,
  SR_VARIANT_UNSIGNED = 1,
  SR_VARIANT_CLAMPED = 2,
  SR_VARIANT_SWEPT_VOLUME = 3,
} SrVariant;

// A closed polyline (2D) or triangle mesh (3D).
typedef struct SrMesh SrMesh;

// A set of signed distance samples.
typedef struct SrSamples SrSamples;

// Reconstruction parameters. Non-positive `h_min`, `h_initial` and
// `clamp_sigma` mean "derive from the samples".
typedef struct SrConfig {
  double tau_min;
  double tau_max;
  double armijo_c;
  double epsilon;
  double h_min;
  double h_initial;
  size_t batch_size;
  size_t coarse_window;
  size_t final_window;
  double conv_tol_factor;
  enum SrVariant variant;
  double clamp_sigma;
  uint64_t rng_seed;
  size_t remesh_iterations_per_step;
  uint32_t init_resolution;
  size_t max_iterations_per_stage;
  double watchdog_bound;
  bool require_enclosure;
} SrConfig;

typedef struct SrMetrics {
  double hausdorff;
  double chamfer;
  double sdf_energy;
  size_t n_samples_used;
  double runtime_seconds;
} SrMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The string is
// owned by the library and valid until the next failing call.
const char *sr_last_error(void);

// Scattered samples: `points` holds `n * dim` coordinates, `values` `n`
// values. `clamp` is the clamp radius for clamped samples.
//
// # Safety
// `points` and `values` must be readable for the stated lengths and `out`
// writable.
enum SrStatus sr_samples_new(uint32_t dim,
                             const double *points,
                             const double *values,
                             size_t n,
                             enum SrSampleKind kind,
                             double clamp,
                             struct SrSamples **out);

// Samples on a regular grid with `dims[k]` points along axis `k`, x
// fastest. `values` holds one value per grid point.
//
// # Safety
// `dims`, `origin` and `spacing` must hold `dim` entries and `values` the
// product of `dims`.
enum SrStatus sr_samples_new_grid(uint32_t dim,
                                  const size_t *dims,
                                  const double *origin,
                                  const double *spacing,
                                  const double *values,
                                  enum SrSampleKind kind,
                                  double clamp,
                                  struct SrSamples **out);

// # Safety
// `samples` must come from this library and not be used afterwards.
void sr_samples_free(struct SrSamples *samples);

// Number of samples, or 0 for a null handle.
//
// # Safety
// `samples` must be null or a live handle.
size_t sr_samples_len(const struct SrSamples *samples);

// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum SrStatus sr_samples_read(const char *path, struct SrSamples **out);

// # Safety
// `samples` must be a live handle and `path` NUL-terminated.
enum SrStatus sr_samples_write(const struct SrSamples *samples, const char *path);

// A mesh from `nv * dim` vertex coordinates and `ne * dim` vertex indices
// (segments in 2D, triangles in 3D).
//
// # Safety
// The arrays must be readable for the stated lengths and `out` writable.
enum SrStatus sr_mesh_new(uint32_t dim,
                          const double *vertices,
                          size_t nv,
                          const uint32_t *elements,
                          size_t ne,
                          struct SrMesh **out);

// # Safety
// `mesh` must come from this library and not be used afterwards.
void sr_mesh_free(struct SrMesh *mesh);

// Dimension, vertex count and element count. Any output may be null.
//
// # Safety
// `mesh` must be a live handle; non-null outputs must be writable.
enum SrStatus sr_mesh_counts(const struct SrMesh *mesh, uint32_t *dim, size_t *nv, size_t *ne);

// Copy the mesh into caller buffers sized from [`sr_mesh_counts`]:
// `nv * dim` doubles and `ne * dim` indices. Either buffer may be null.
//
// # Safety
// Non-null buffers must be writable for those lengths.
enum SrStatus sr_mesh_copy(const struct SrMesh *mesh, double *vertices, uint32_t *elements);

// Read an OBJ file: triangles give a 3D mesh, `l` records a 2D one.
//
// # Safety
// `path` must be NUL-terminated and `out` writable.
enum SrStatus sr_mesh_read(const char *path, struct SrMesh **out);

// # Safety
// `mesh` must be a live handle and `path` NUL-terminated.
enum SrStatus sr_mesh_write(const struct SrMesh *mesh, const char *path);

// Defaults for a `dim`-dimensional reconstruction of signed samples.
//
// # Safety
// `config` must be writable.
enum SrStatus sr_config_default(uint32_t dim, struct SrConfig *config);

// Reconstruct a surface from `samples`. `init` may be null for the default
// enclosing sphere. On [`SrStatus::Numerical`] `out` still receives the
// last mesh that passed the watchdog.
//
// # Safety
// `samples` and `config` must be live, `init` null or live, `out` writable.
enum SrStatus sr_reconstruct(const struct SrSamples *samples,
                             const struct SrConfig *config,
                             const struct SrMesh *init,
                             struct SrMesh **out);

// Marching Cubes (3D) or Marching Squares (2D) on grid samples. A field
// without a crossing gives an empty mesh.
//
// # Safety
// `samples` must be live and `out` writable.
enum SrStatus sr_baseline(const struct SrSamples *samples, double isovalue, struct SrMesh **out);

// Hausdorff and Chamfer distances of `mesh` to `gt` on `n_points` sampled
// points per side, and the SDF energy over `samples`.
//
// # Safety
// All handles must be live and `metrics` writable.
enum SrStatus sr_metrics(const struct SrMesh *mesh,
                         const struct SrMesh *gt,
                         const struct SrSamples *samples,
                         size_t n_points,
                         uint64_t seed,
                         double runtime_seconds,
                         struct SrMetrics *metrics);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPHERE_REACH_H */
