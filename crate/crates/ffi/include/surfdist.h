#ifndef SURFDIST_H
#define SURFDIST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SD_STATUS_OK = 0,
  SD_STATUS_NULL_POINTER = 1,
  SD_STATUS_INVALID_ARGUMENT = 2,
  SD_STATUS_INVALID_MESH = 3,
  SD_STATUS_IO = 4,
  SD_STATUS_NUMERICAL = 5,
  SD_STATUS_BUFFER_TOO_SMALL = 6,
  SD_STATUS_PANIC = 7,
} SdStatus;

typedef struct SdConfig SdConfig;

typedef struct SdCorrespondence SdCorrespondence;

typedef struct SdMesh SdMesh;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version string of the library, statically allocated.
 */
const char *sd_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL terminated,
 * truncated to `len`) and returns the full message length without the NUL.
 * Returns 0 when there is no pending error.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t sd_last_error_message(char *buf, size_t len);

/**
 * Builds a mesh from `n_vertices` xyz triples and `n_faces` index triples.
 *
 * # Safety
 * `vertices` must hold `3 * n_vertices` doubles, `faces` `3 * n_faces`
 * indices and `out` must be writable.
 */
SdStatus sd_mesh_from_arrays(const double *vertices,
                             size_t n_vertices,
                             const uint32_t *faces,
                             size_t n_faces,
                             SdMesh **out);

/**
 * Loads an OFF, OBJ or ASCII PLY file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
SdStatus sd_mesh_load(const char *path, SdMesh **out);

/**
 * # Safety
 * `mesh` must be null or a handle from this library not yet freed.
 */
void sd_mesh_free(SdMesh *mesh);

/**
 * # Safety
 * `mesh` must be a live handle; the out-pointers must be writable or null.
 */
SdStatus sd_mesh_counts(const SdMesh *mesh, size_t *n_vertices, size_t *n_faces);

/**
 * Default run configuration.
 *
 * # Safety
 * `out` must be writable.
 */
SdStatus sd_config_default(SdConfig **out);

/**
 * Configuration from a JSON object; missing keys take default values.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
SdStatus sd_config_from_json(const char *json, SdConfig **out);

/**
 * # Safety
 * `cfg` must be null or a live handle.
 */
void sd_config_free(SdConfig *cfg);

/**
 * Continuous Procrustes distance from `a` to `b`. A null `cfg` uses defaults.
 *
 * # Safety
 * `a` and `b` must be live mesh handles, `cfg` null or live, `out` writable.
 */
SdStatus sd_distance(const SdMesh *a, const SdMesh *b, const SdConfig *cfg, SdCorrespondence **out);

/**
 * # Safety
 * `map` must be null or a live handle.
 */
void sd_correspondence_free(SdCorrespondence *map);

/**
 * # Safety
 * `map` must be a live handle and `out` writable.
 */
SdStatus sd_correspondence_distance(const SdCorrespondence *map, double *out);

/**
 * Optimal rigid motion `x -> R x + t`; `rotation` receives 9 doubles in
 * row-major order and `translation` 3.
 *
 * # Safety
 * `map` must be a live handle; the arrays must be writable.
 */
SdStatus sd_correspondence_motion(const SdCorrespondence *map,
                                  double *rotation,
                                  double *translation);

/**
 * Number of samples in the correspondence.
 *
 * # Safety
 * `map` must be a live handle and `out` writable.
 */
SdStatus sd_correspondence_len(const SdCorrespondence *map, size_t *out);

/**
 * Copies sample points and their images as xyz triples. Each buffer must
 * hold `3 * len` doubles; either may be null to skip it.
 *
 * # Safety
 * `map` must be a live handle; non-null buffers must have `capacity` doubles.
 */
SdStatus sd_correspondence_points(const SdCorrespondence *map,
                                  double *samples,
                                  double *images,
                                  size_t capacity);

/**
 * Serializes the full correspondence as JSON. Release with `sd_string_free`.
 *
 * # Safety
 * `map` must be a live handle and `out` writable.
 */
SdStatus sd_correspondence_to_json(const SdCorrespondence *map, char **out);

/**
 * Parses a correspondence previously written by `sd_correspondence_to_json`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
SdStatus sd_correspondence_from_json(const char *json, SdCorrespondence **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void sd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SURFDIST_H */
