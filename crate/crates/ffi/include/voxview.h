#ifndef VOXVIEW_H
#define VOXVIEW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VoxviewProjection {
  VOXVIEW_PROJECTION_ORTHOGRAPHIC = 0,
  VOXVIEW_PROJECTION_PERSPECTIVE = 1,
} VoxviewProjection;

typedef enum VoxviewRenderMode {
  VOXVIEW_RENDER_MODE_MIP = 0,
  VOXVIEW_RENDER_MODE_EMISSION_ABSORPTION = 1,
} VoxviewRenderMode;

typedef enum VoxviewStatus {
  VOXVIEW_STATUS_OK = 0,
  VOXVIEW_STATUS_NULL_ARGUMENT = 1,
  VOXVIEW_STATUS_INVALID_ARGUMENT = 2,
  VOXVIEW_STATUS_IO = 3,
  VOXVIEW_STATUS_FORMAT = 4,
  VOXVIEW_STATUS_PANIC = 5,
} VoxviewStatus;

typedef enum VoxviewSubpixelOrder {
  VOXVIEW_SUBPIXEL_ORDER_RGB = 0,
  VOXVIEW_SUBPIXEL_ORDER_BGR = 1,
  VOXVIEW_SUBPIXEL_ORDER_NONE = 2,
} VoxviewSubpixelOrder;

/**
 * Opaque RGBA8 frame handle.
 */
typedef struct VoxviewFrame VoxviewFrame;

/**
 * Opaque volume handle.
 */
typedef struct VoxviewVolume VoxviewVolume;

typedef struct VoxviewSettings {
  enum VoxviewRenderMode mode;
  bool layering;
  double sample_step;
  /**
   * Straight RGBA in [0, 1].
   */
  float background[4];
} VoxviewSettings;

typedef struct VoxviewCamera {
  double center[3];
  /**
   * Degrees.
   */
  double azimuth;
  /**
   * Degrees.
   */
  double elevation;
  double distance;
  enum VoxviewProjection projection;
  /**
   * View height in micrometers (orthographic) or vertical field of view in degrees (perspective).
   */
  double projection_param;
  double aspect;
} VoxviewCamera;

typedef struct VoxviewQuilt {
  size_t n_views;
  /**
   * Degrees between neighbouring views.
   */
  double step_deg;
  size_t columns;
  size_t rows;
  size_t tile_width;
  size_t tile_height;
} VoxviewQuilt;

typedef struct VoxviewCalibration {
  size_t screen_width;
  size_t screen_height;
  double pitch;
  double tilt;
  double center;
  bool invert_views;
  enum VoxviewSubpixelOrder subpixel_order;
  size_t n_views;
} VoxviewCalibration;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *voxview_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *voxview_version(void);

/**
 * Defaults: MIP, no layering, 0.5 µm steps, opaque black background.
 */
struct VoxviewSettings voxview_settings_default(void);

/**
 * Loads a volume from its `.meta` sidecar.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum VoxviewStatus voxview_volume_load(const char *path, struct VoxviewVolume **out);

/**
 * Builds a synthetic volume from a scene descriptor such as
 * `sphere:dims=64x64x64,radius=20`.
 *
 * # Safety
 * `scene` must be a NUL-terminated string; `out` must be writable.
 */
enum VoxviewStatus voxview_volume_synth(const char *scene, struct VoxviewVolume **out);

/**
 * Writes the volume as a `.meta` sidecar plus raw payloads.
 *
 * # Safety
 * `volume` must be a live handle; `path` a NUL-terminated string.
 */
enum VoxviewStatus voxview_volume_save(const struct VoxviewVolume *volume, const char *path);

/**
 * # Safety
 * `volume` must be null or a handle not yet freed.
 */
void voxview_volume_free(struct VoxviewVolume *volume);

/**
 * Voxel counts along x, y, z and the channel count.
 *
 * # Safety
 * `volume` must be a live handle; `dims` must point to 3 writable values.
 */
enum VoxviewStatus voxview_volume_info(const struct VoxviewVolume *volume,
                                       size_t *dims,
                                       size_t *channels);

/**
 * Orthographic camera framing the whole volume at `aspect` (width / height).
 *
 * # Safety
 * `volume` must be a live handle; `out` must be writable.
 */
enum VoxviewStatus voxview_camera_framing(const struct VoxviewVolume *volume,
                                          double aspect,
                                          struct VoxviewCamera *out);

/**
 * Renders one `width x height` view.
 *
 * # Safety
 * All pointers must be valid; `out` must be writable.
 */
enum VoxviewStatus voxview_render(const struct VoxviewVolume *volume,
                                  const struct VoxviewCamera *camera,
                                  const struct VoxviewSettings *settings,
                                  size_t width,
                                  size_t height,
                                  struct VoxviewFrame **out);

/**
 * Renders a turntable quilt: `n_views` views `step_deg` apart around the
 * camera, tiled bottom-left to top-right.
 *
 * # Safety
 * All pointers must be valid; `out` must be writable.
 */
enum VoxviewStatus voxview_render_quilt(const struct VoxviewVolume *volume,
                                        const struct VoxviewCamera *camera,
                                        const struct VoxviewSettings *settings,
                                        const struct VoxviewQuilt *quilt,
                                        struct VoxviewFrame **out);

/**
 * Interleaves `n_views` equally sized views into a native lenticular frame.
 *
 * # Safety
 * `views` must point to `n_views` live frame handles; `calibration` and
 * `out` must be valid.
 */
enum VoxviewStatus voxview_interleave(const struct VoxviewFrame *const *views,
                                      size_t n_views,
                                      const struct VoxviewCalibration *calibration,
                                      struct VoxviewFrame **out);

/**
 * Re-centres `camera` on the first point along its view axis where any
 * channel reaches `threshold`. `hit` reports whether anything was found;
 * on a miss the camera is left unchanged.
 *
 * # Safety
 * All pointers must be valid.
 */
enum VoxviewStatus voxview_autofocus(const struct VoxviewVolume *volume,
                                     const struct VoxviewSettings *settings,
                                     float threshold,
                                     struct VoxviewCamera *camera,
                                     bool *hit);

/**
 * Pixels per axis covered by `foveal_deg` of vision on a display with the
 * given resolution and field of view (degrees).
 *
 * # Safety
 * `out` must point to 2 writable values.
 */
enum VoxviewStatus voxview_foveal_pixels(double res_x,
                                         double res_y,
                                         double fov_x,
                                         double fov_y,
                                         double foveal_deg,
                                         uint64_t *out);

/**
 * # Safety
 * `frame` must be a live handle.
 */
size_t voxview_frame_width(const struct VoxviewFrame *frame);

/**
 * # Safety
 * `frame` must be a live handle.
 */
size_t voxview_frame_height(const struct VoxviewFrame *frame);

/**
 * Row-major RGBA8 pixels, `4 * width * height` bytes, top row first. Valid
 * until the frame is freed.
 *
 * # Safety
 * `frame` must be a live handle.
 */
const uint8_t *voxview_frame_data(const struct VoxviewFrame *frame);

/**
 * # Safety
 * `frame` must be a live handle; `path` a NUL-terminated string.
 */
enum VoxviewStatus voxview_frame_save_png(const struct VoxviewFrame *frame, const char *path);

/**
 * # Safety
 * `frame` must be null or a handle not yet freed.
 */
void voxview_frame_free(struct VoxviewFrame *frame);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VOXVIEW_H */
