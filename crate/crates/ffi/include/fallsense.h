#ifndef FALLSENSE_H
#define FALLSENSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Number of activity labels; label indices run from 0 to this minus one.
 */
#define FS_ACTIVITY_COUNT 11

/*
 Samples in a prior-fall snapshot.
 */
#define FS_SNAPSHOT_LEN 200

typedef enum FsStatus {
  FS_STATUS_OK = 0,
  FS_STATUS_NULL_POINTER = 1,
  FS_STATUS_INVALID_ARGUMENT = 2,
  FS_STATUS_IO = 3,
  FS_STATUS_PARSE = 4,
  FS_STATUS_MODEL = 5,
  /*
   The snapshot buffer has not filled yet.
   */
  FS_STATUS_NOT_READY = 6,
  FS_STATUS_BUFFER_TOO_SMALL = 7,
  FS_STATUS_INTERNAL = 8,
} FsStatus;

/*
 A trained activity classifier.
 */
typedef struct FsModel FsModel;

/*
 Streaming three-phase fall detector.
 */
typedef struct FsMonitor FsMonitor;

/*
 The 200-sample prior-fall ring buffer.
 */
typedef struct FsSnapshot FsSnapshot;

/*
 One six-axis sample: time (s), acceleration (m/s²), angular rate (°/s).
 */
typedef struct FsSample {
  double t;
  double ax;
  double ay;
  double az;
  double gx;
  double gy;
  double gz;
} FsSample;

typedef struct FsThreePhaseParams {
  double t1;
  double t2;
  double settle_low;
  double settle_high;
  size_t gap12;
  size_t gap23;
  size_t settle_len;
} FsThreePhaseParams;

typedef struct FsDetection {
  /*
   Impact peak, counted in pushed samples from 0.
   */
  size_t index;
  /*
   Sample at which the event was confirmed.
   */
  size_t confirmed_at;
} FsDetection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.
 Valid until the next call on the same thread.
 */
const char *fs_last_error(void);

/*
 Library version as a static string.
 */
const char *fs_version(void);

/*
 # Safety
 `s` must come from this library and not have been freed.
 */
void fs_string_free(char *s);

/*
 Static name of activity label `index`, or null when out of range.
 */
const char *fs_activity_label_name(size_t index);

/*
 G-force of one sample.

 # Safety
 `sample` must point to a valid sample.
 */
enum FsStatus fs_gforce(const struct FsSample *sample, double *out);

/*
 Absolute-cost DTW distance between two sequences.

 # Safety
 `a` and `b` must point to `na` and `nb` readable doubles.
 */
enum FsStatus fs_dtw_distance(const double *a, size_t na, const double *b, size_t nb, double *out);

/*
 Loads a model saved by the `train` command.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum FsStatus fs_model_load(const char *path, struct FsModel **out);

/*
 Parses a model from its JSON text.

 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
enum FsStatus fs_model_from_json(const char *json, struct FsModel **out);

/*
 # Safety
 `model` must come from this library and not have been freed.
 */
void fs_model_free(struct FsModel *model);

/*
 Classifies one window of samples; writes the label index.

 # Safety
 `samples` must point to `n` samples; `label` must be writable.
 */
enum FsStatus fs_model_predict(const struct FsModel *model,
                               const struct FsSample *samples,
                               size_t n,
                               size_t *label);

/*
 Identifies the prior-fall activity of a 200-sample snapshot. `votes`
 receives one count per label index and may be null.

 # Safety
 `snapshot` must point to `n` samples; `label` must be writable; `votes`
 is null or points to `FS_ACTIVITY_COUNT` writable counts.
 */
enum FsStatus fs_identify_prior_activity(const struct FsModel *model,
                                         const struct FsSample *snapshot,
                                         size_t n,
                                         size_t *label,
                                         uint32_t *votes);

/*
 Writes the default three-phase parameters.

 # Safety
 `out` must be writable.
 */
enum FsStatus fs_three_phase_default(struct FsThreePhaseParams *out);

/*
 # Safety
 `params` must be readable; `out` must be writable.
 */
enum FsStatus fs_monitor_new(const struct FsThreePhaseParams *params, struct FsMonitor **out);

/*
 Feeds one G-force value. Up to `cap` confirmed events are written to
 `events`; `count` receives the number confirmed. When that exceeds
 `cap` the call returns `BufferTooSmall` and the excess is lost.

 # Safety
 `monitor` must be a live handle; `events` must hold `cap` entries (may
 be null when `cap` is 0); `count` must be writable.
 */
enum FsStatus fs_monitor_push(struct FsMonitor *monitor,
                              double g,
                              struct FsDetection *events,
                              size_t cap,
                              size_t *count);

/*
 # Safety
 `monitor` must be a live handle.
 */
enum FsStatus fs_monitor_reset(struct FsMonitor *monitor);

/*
 # Safety
 `monitor` must come from this library and not have been freed.
 */
void fs_monitor_free(struct FsMonitor *monitor);

/*
 # Safety
 `out` must be writable.
 */
enum FsStatus fs_snapshot_new(struct FsSnapshot **out);

/*
 # Safety
 `snapshot` must be a live handle; `sample` must be readable.
 */
enum FsStatus fs_snapshot_push(struct FsSnapshot *snapshot, const struct FsSample *sample);

/*
 Number of buffered samples, or 0 for a null handle.

 # Safety
 `snapshot` is null or a live handle.
 */
size_t fs_snapshot_len(const struct FsSnapshot *snapshot);

/*
 Copies the buffered samples, oldest first, once the buffer is full.

 # Safety
 `out` must hold `cap` writable samples.
 */
enum FsStatus fs_snapshot_copy(const struct FsSnapshot *snapshot, struct FsSample *out, size_t cap);

/*
 # Safety
 `snapshot` must come from this library and not have been freed.
 */
void fs_snapshot_free(struct FsSnapshot *snapshot);

/*
 Encodes an alert payload line (newline included). `fall_kind` is 0 for
 a fall and 1 for a fall to the knees first. Free the result with
 [`fs_string_free`].

 # Safety
 `device_id` must be a NUL-terminated string; `samples` must point to `n`
 samples; `out` must be writable.
 */
enum FsStatus fs_encode_payload(const char *device_id,
                                uint64_t detected_at_ms,
                                uint32_t fall_kind,
                                double sample_rate_hz,
                                const struct FsSample *samples,
                                size_t n,
                                char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FALLSENSE_H */
