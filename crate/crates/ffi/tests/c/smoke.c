#include <math.h>
#include <stdio.h>
#include <string.h>

#include "bgnflow.h"

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: check failed: %s (%s)\n", __FILE__,     \
              __LINE__, #cond, bgn_last_error_message());             \
      return 1;                                                       \
    }                                                                 \
  } while (0)

int main(void) {
  BgnMesh *mesh = NULL;
  CHECK(bgn_mesh_new_ellipse(1.0, 1.0 / 3.0, 32, 2, &mesh) == BGN_STATUS_OK);
  CHECK(bgn_mesh_node_count(mesh) == 64);

  BgnField radial = {BGN_FIELD_KIND_ELLIPSE_RADIAL, 0.0, 0.0, 0.0};
  double kappa[64];
  const int steps = 64;
  for (int m = 0; m < steps; ++m) {
    CHECK(bgn_mesh_step(mesh, BGN_STEPPER_BGN, &radial, (double)m / steps,
                        1.0 / steps, kappa, 64) == BGN_STATUS_OK);
  }

  BgnErrorReport report;
  CHECK(bgn_projection_error(mesh, 1.0, &report) == BGN_STATUS_OK);
  CHECK(report.err_max < 0.01);

  double xy[128];
  CHECK(bgn_mesh_positions(mesh, xy, 64) == BGN_STATUS_OK);
  for (int i = 0; i < 64; ++i) {
    CHECK(fabs(hypot(xy[2 * i], xy[2 * i + 1]) - 1.0) < 0.01);
  }
  CHECK(bgn_mesh_positions(mesh, xy, 3) == BGN_STATUS_BUFFER_TOO_SMALL);
  CHECK(strlen(bgn_last_error_message()) > 0);

  bgn_mesh_free(mesh);
  printf("bgnflow %s: err_max %.3e\n", bgn_version(), report.err_max);
  return 0;
}
