#ifndef WSI_ANON_H
#define WSI_ANON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call.
typedef enum WsiStatus {
  WSI_STATUS_OK = 0,
  WSI_STATUS_UNSUPPORTED = 1,
  WSI_STATUS_CORRUPT = 2,
  WSI_STATUS_IO = 3,
  WSI_STATUS_POLICY_REFUSED = 4,
  WSI_STATUS_INVALID_ARGUMENT = 5,
  WSI_STATUS_SESSION_FINALIZED = 6,
  WSI_STATUS_INTERNAL = 99,
} WsiStatus;

// Detected slide format.
typedef enum WsiVendor {
  WSI_VENDOR_UNKNOWN = 0,
  WSI_VENDOR_APERIO = 1,
  WSI_VENDOR_HAMAMATSU = 2,
  WSI_VENDOR_MIRAX = 3,
  WSI_VENDOR_VENTANA = 4,
  WSI_VENDOR_PHILIPS_ISYNTAX = 5,
  WSI_VENDOR_GENERIC_TIFF = 6,
} WsiVendor;

// Anonymization settings. Create with [`wsi_config_new`].
typedef struct WsiConfig WsiConfig;

// Outcome of [`wsi_anonymize`].
typedef struct WsiReport WsiReport;

// In-memory anonymization of a byte stream.
typedef struct WsiStream WsiStream;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, static storage.
const char *wsi_version(void);

// Message of the last failed call on this thread, or NULL. Valid until the
// next call on the same thread.
const char *wsi_last_error(void);

// Stable identifier such as "leica-aperio", static storage.
const char *wsi_vendor_id(enum WsiVendor vendor);

// # Safety
// `path` must be a valid C string and `out` a valid pointer.
enum WsiStatus wsi_detect(const char *path_, enum WsiVendor *out);

struct WsiConfig *wsi_config_new(void);

// # Safety
// `config` must come from [`wsi_config_new`] or be NULL.
void wsi_config_free(struct WsiConfig *config);

// # Safety
// `config` must be a live config handle.
enum WsiStatus wsi_config_set_keep_macro(struct WsiConfig *config, bool on);

// # Safety
// `config` must be a live config handle.
enum WsiStatus wsi_config_set_overwrite_only(struct WsiConfig *config, bool on);

// # Safety
// `config` must be a live config handle.
enum WsiStatus wsi_config_set_dry_run(struct WsiConfig *config, bool on);

// NULL clears the backup directory.
//
// # Safety
// `config` must be a live config handle; `dir` a C string or NULL.
enum WsiStatus wsi_config_set_backup_dir(struct WsiConfig *config, const char *dir);

// Renames the output to `name` plus the original extension. NULL clears.
//
// # Safety
// `config` must be a live config handle; `name` a C string or NULL.
enum WsiStatus wsi_config_set_rename(struct WsiConfig *config, const char *name);

// # Safety
// `config` must be a live config handle.
enum WsiStatus wsi_config_set_random_name(struct WsiConfig *config);

// Anonymizes the slide at `path` in place. `config` may be NULL for
// defaults. On success `*report` receives a handle for [`wsi_report_free`].
//
// # Safety
// `path` must be a C string, `config` a live handle or NULL, `report` valid.
enum WsiStatus wsi_anonymize(const char *path_,
                             const struct WsiConfig *config,
                             struct WsiReport **report);

// # Safety
// `report` must come from [`wsi_anonymize`] or be NULL.
void wsi_report_free(struct WsiReport *report);

// Achieved level 0 to 5, or -1 for NULL.
//
// # Safety
// `report` must be a live report handle or NULL.
int32_t wsi_report_level(const struct WsiReport *report);

// # Safety
// `report` must be a live report handle or NULL.
size_t wsi_report_patches_planned(const struct WsiReport *report);

// # Safety
// `report` must be a live report handle or NULL.
size_t wsi_report_patches_applied(const struct WsiReport *report);

// Final path of the slide. Owned by the report.
//
// # Safety
// `report` must be a live report handle or NULL.
const char *wsi_report_output(const struct WsiReport *report);

// Full report as one JSON object. Owned by the report.
//
// # Safety
// `report` must be a live report handle or NULL.
const char *wsi_report_json(const struct WsiReport *report);

// Grades the slide at `path`. `sentinel_file` (one string per line) may be
// NULL for a structure-only audit.
//
// # Safety
// `path` must be a C string, `sentinel_file` a C string or NULL, `level` valid.
enum WsiStatus wsi_audit(const char *path_, const char *sentinel_file, int32_t *level);

// `name` is the original filename; its extension takes part in detection.
//
// # Safety
// `name` must be a C string. Returns NULL on bad input.
struct WsiStream *wsi_stream_new(const char *name);

// # Safety
// `stream` must come from [`wsi_stream_new`] or be NULL.
void wsi_stream_free(struct WsiStream *stream);

// # Safety
// `stream` must be live; `data` must point to `len` readable bytes.
enum WsiStatus wsi_stream_feed(struct WsiStream *stream, const uint8_t *data, size_t len);

// Anonymizes everything fed so far. On success `*out`/`*out_len` receive a
// buffer to release with [`wsi_buffer_free`]. Backup and rename settings
// are ignored.
//
// # Safety
// `stream` must be live, `config` a live handle or NULL, `out`/`out_len` valid.
enum WsiStatus wsi_stream_finalize(struct WsiStream *stream,
                                   const struct WsiConfig *config,
                                   uint8_t **out,
                                   size_t *out_len);

// # Safety
// `data`/`len` must come from [`wsi_stream_finalize`], or `data` be NULL.
void wsi_buffer_free(uint8_t *data, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WSI_ANON_H */
