#ifndef BGNFLOW_H
#define BGNFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BgnFieldKind {
  BGN_FIELD_KIND_ZERO = 0,
  // Uniform velocity `(cx, cy)`.
  BGN_FIELD_KIND_CONSTANT = 1,
  // Rigid rotation about the origin with angular speed `omega`.
  BGN_FIELD_KIND_ROTATION = 2,
  // The radial field carrying the 3:1 ellipse onto the unit circle at t = 1.
  BGN_FIELD_KIND_ELLIPSE_RADIAL = 3,
} BgnFieldKind;

// Result code of every fallible call.
typedef enum BgnStatus {
  BGN_STATUS_OK = 0,
  BGN_STATUS_NULL_POINTER = 1,
  BGN_STATUS_INVALID_ARGUMENT = 2,
  BGN_STATUS_BUFFER_TOO_SMALL = 3,
  BGN_STATUS_INVALID_GEOMETRY = 4,
  BGN_STATUS_MESH_DEGENERATION = 5,
  BGN_STATUS_DEGENERATE_NORMAL = 6,
  BGN_STATUS_SINGULAR_SYSTEM = 7,
  BGN_STATUS_INACCURATE_SOLVE = 8,
  BGN_STATUS_FIELD_DOMAIN = 9,
  BGN_STATUS_PROJECTION_DOMAIN = 10,
  BGN_STATUS_NON_CONVERGENCE = 11,
  BGN_STATUS_INTERNAL = 12,
  BGN_STATUS_PANIC = 13,
} BgnStatus;

typedef enum BgnStepper {
  BGN_STEPPER_BGN = 0,
  // Plain forward-Euler advection of the nodes.
  BGN_STEPPER_LAGRANGIAN = 1,
} BgnStepper;

// Opaque mesh handle.
typedef struct BgnMesh BgnMesh;

// Velocity field description; parameters unused by `kind` are ignored.
typedef struct BgnField {
  enum BgnFieldKind kind;
  double cx;
  double cy;
  double omega;
} BgnField;

// Projection error against the exact ellipse-to-circle flow.
typedef struct BgnErrorReport {
  double t;
  double err_l2;
  double err_h1;
  double err_max;
  double mesh_ratio;
} BgnErrorReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *bgn_version(void);

// Message of the last failed call on this thread (empty after a success).
// The pointer stays valid until the next call into the library on this
// thread.
const char *bgn_last_error_message(void);

// Interpolates the ellipse `(a cos 2 pi s, b sin 2 pi s)` with `elements`
// elements of degree `degree`.
enum BgnStatus bgn_mesh_new_ellipse(double a,
                                    double b,
                                    size_t elements,
                                    size_t degree,
                                    struct BgnMesh **out);

enum BgnStatus bgn_mesh_new_circle(double cx,
                                   double cy,
                                   double radius,
                                   size_t elements,
                                   size_t degree,
                                   struct BgnMesh **out);

// Builds a mesh from `node_count` interleaved `(x, y)` pairs, ordered
// counterclockwise with junction nodes every `degree` entries.
enum BgnStatus bgn_mesh_from_positions(size_t degree,
                                       const double *xy,
                                       size_t node_count,
                                       struct BgnMesh **out);

// Releases a mesh; null is accepted and ignored.
void bgn_mesh_free(struct BgnMesh *mesh);

// Number of nodes `N = J k`, or 0 for a null handle.
size_t bgn_mesh_node_count(const struct BgnMesh *mesh);

size_t bgn_mesh_element_count(const struct BgnMesh *mesh);

size_t bgn_mesh_degree(const struct BgnMesh *mesh);

// Copies the node positions as interleaved `(x, y)` pairs into `out_xy`,
// which must hold `2 * capacity` doubles with `capacity >= node count`.
enum BgnStatus bgn_mesh_positions(const struct BgnMesh *mesh, double *out_xy, size_t capacity);

// Ratio of the longest to the shortest element arc length.
enum BgnStatus bgn_mesh_ratio(const struct BgnMesh *mesh, double *out);

// Advances the mesh in place from `t` to `t + tau`. For the BGN stepper the
// curvature multipliers are written to `kappa_out` when it is non-null
// (capacity in entries); the Lagrangian stepper leaves it untouched. On
// failure the mesh is unchanged.
enum BgnStatus bgn_mesh_step(struct BgnMesh *mesh,
                             enum BgnStepper stepper,
                             const struct BgnField *field,
                             double t,
                             double tau,
                             double *kappa_out,
                             size_t kappa_capacity);

// Projection error of the mesh against the exact ellipse-to-circle curve at
// time `t` in `[0, 1]`.
enum BgnStatus bgn_projection_error(const struct BgnMesh *mesh,
                                    double t,
                                    struct BgnErrorReport *report);

// Evaluates `field` at `(x, y)`, writing the velocity to `out_xy[0..2]`.
enum BgnStatus bgn_field_eval(const struct BgnField *field,
                              double x,
                              double y,
                              double t,
                              double *out_xy);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BGNFLOW_H */
