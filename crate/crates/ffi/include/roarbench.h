#ifndef ROARBENCH_H
#define ROARBENCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RbStatus {
  RB_STATUS_OK = 0,
  RB_STATUS_NULL_POINTER = 1,
  RB_STATUS_INVALID_INPUT = 2,
  RB_STATUS_PARSE = 3,
  RB_STATUS_IO = 4,
  RB_STATUS_NUMERICAL = 5,
  RB_STATUS_UNSUPPORTED = 6,
  RB_STATUS_INTERNAL = 7,
} RbStatus;

// Opaque list of protocol records.
typedef struct RbRecords RbRecords;

// Opaque discrete world for the information oracle.
typedef struct RbWorld RbWorld;

typedef struct RbSearchReport {
  // True when a witness coarsening was found.
  bool found;
  // True when the budget stopped the search early.
  bool partial;
  // Witness position in the enumeration, or candidates examined.
  uint64_t index;
  double mi_plain;
  double mi_coarse;
  double bayes_plain;
  double bayes_coarse;
  double dpi_lhs;
  double dpi_rhs;
  bool dpi_holds;
} RbSearchReport;

typedef struct RbFit {
  double slope;
  double intercept;
  double r_squared;
  size_t n_points;
} RbFit;

// Settings of a ROAR/ROAD sweep on generated data. Strings are
// NUL-terminated; `methods` and `postprocs` are comma-separated.
typedef struct RbSweepConfig {
  // `shapes`, `block-signal` or `scatter-signal`.
  const char *dataset;
  // `roar` or `road`.
  const char *mode;
  const char *methods;
  const char *postprocs;
  const double *drop_rates;
  size_t n_drop_rates;
  size_t trials;
  uint64_t seed;
  size_t n_train;
  size_t n_test;
  size_t epochs;
  // Worker threads; 0 uses every core.
  size_t jobs;
} RbSweepConfig;

typedef struct RbRecord {
  double drop_rate;
  size_t trial;
  // NaN when the cell failed.
  double accuracy;
  double mask_tv;
  uint64_t seed;
  bool failed;
} RbRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *rb_version(void);

// Copies the calling thread's last error message into `buf` (truncated,
// always NUL-terminated when `cap > 0`) and returns its full length in
// bytes, or 0 when no error has been recorded.
//
// # Safety
// `buf` must be null or valid for `cap` bytes.
size_t rb_last_error_message(char *buf, size_t cap);

// Stores the shipped three-pixel world in `*out`.
//
// # Safety
// `out` must be valid for writes.
enum RbStatus rb_world_default(struct RbWorld **out_world);

// Parses a world from its plain-text format.
//
// # Safety
// `world_text` must be a NUL-terminated string; `out_world` valid for writes.
enum RbStatus rb_world_parse(const char *world_text, struct RbWorld **out_world);

// # Safety
// `world` must be null or come from an `rb_world_*` constructor, freed once.
void rb_world_free(struct RbWorld *world);

// Searches for a coarsening that lowers I(X′; Y) without breaking the
// data-processing inequality.
//
// # Safety
// `world` must be a live handle; `out` valid for writes.
enum RbStatus rb_world_search(const struct RbWorld *world,
                              uint64_t budget,
                              struct RbSearchReport *out_report);

// Counts data-processing-inequality violations over `pairs` random
// (world, coarsening) pairs.
//
// # Safety
// `out_violations` must be valid for writes.
enum RbStatus rb_dpi_sweep(uint64_t pairs, uint64_t *out_violations);

// I(U; V) in bits of a row-major `rows × cols` joint table.
//
// # Safety
// `table` must hold `rows * cols` doubles; `out` valid for writes.
enum RbStatus rb_mutual_information(const double *table,
                                    size_t rows,
                                    size_t cols,
                                    double *out_bits);

// Σ_u max_v p(u, v) of a row-major joint table.
//
// # Safety
// `table` must hold `rows * cols` doubles; `out` valid for writes.
enum RbStatus rb_bayes_accuracy(const double *table,
                                size_t rows,
                                size_t cols,
                                double *out_accuracy);

// Ordinary least squares of `ys` on `xs`.
//
// # Safety
// `xs` and `ys` must each hold `n` doubles; `out` valid for writes.
enum RbStatus rb_linear_fit(const double *xs, const double *ys, size_t n, struct RbFit *out_fit);

// Fills `out` with the desk-scale defaults (static strings).
//
// # Safety
// `out` must be valid for writes.
enum RbStatus rb_sweep_config_default(struct RbSweepConfig *out_config);

// Generates data, runs the sweep and stores the records in `*out`.
//
// # Safety
// `config` must point to a filled [`RbSweepConfig`]; `out` valid for writes.
enum RbStatus rb_sweep_run(const struct RbSweepConfig *config, struct RbRecords **out_records);

// Number of records, 0 for a null handle.
//
// # Safety
// `records` must be null or a live handle.
size_t rb_records_len(const struct RbRecords *records);

// Numeric fields of record `index`; names are in the CSV output.
//
// # Safety
// `records` must be a live handle; `out` valid for writes.
enum RbStatus rb_records_get(const struct RbRecords *records,
                             size_t index,
                             struct RbRecord *out_record);

// Writes the records as CSV to `path`.
//
// # Safety
// `records` must be a live handle; `path` a NUL-terminated string.
enum RbStatus rb_records_write_csv(const struct RbRecords *records, const char *path);

// # Safety
// `records` must be null or come from [`rb_sweep_run`], freed once.
void rb_records_free(struct RbRecords *records);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROARBENCH_H */
