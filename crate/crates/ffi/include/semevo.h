#ifndef SEMEVO_H
#define SEMEVO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SemevoStatus {
  SEMEVO_STATUS_OK = 0,
  SEMEVO_STATUS_NULL_POINTER = 1,
  SEMEVO_STATUS_INVALID_ARGUMENT = 2,
  SEMEVO_STATUS_CONFIG = 3,
  SEMEVO_STATUS_INGESTION = 4,
  SEMEVO_STATUS_SHAPE = 5,
  SEMEVO_STATUS_DIVERGENCE = 6,
  SEMEVO_STATUS_IO = 7,
  SEMEVO_STATUS_OUT_OF_RANGE = 8,
  // The experiment finished but some runs failed.
  SEMEVO_STATUS_PARTIAL_FAILURE = 9,
  SEMEVO_STATUS_INTERNAL = 10,
  SEMEVO_STATUS_PANIC = 11,
} SemevoStatus;

// Experiment settings; evolution settings live inside it.
typedef struct SemevoConfig SemevoConfig;

typedef struct SemevoDataset SemevoDataset;

typedef struct SemevoRun SemevoRun;

// One row of a run log. `mutation_eval_time_s` is negative when the
// generation produced no mutated offspring.
typedef struct SemevoLogRow {
  size_t generation;
  double best_train_rmse;
  double best_test_rmse;
  size_t best_node_count;
  double gen_wall_time_s;
  double mutation_eval_time_s;
} SemevoLogRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *semevo_last_error_message(void);

// Library version as a static string.
const char *semevo_version(void);

// Frees a string returned by this library.
void semevo_string_free(char *s);

// Loads a comma-separated file whose last column is the target.
enum SemevoStatus semevo_dataset_load(const char *path, struct SemevoDataset **out);

// Copies `rows * features` row-major inputs and `rows` targets.
enum SemevoStatus semevo_dataset_from_arrays(const double *inputs,
                                             const double *targets,
                                             size_t rows,
                                             size_t features,
                                             struct SemevoDataset **out);

size_t semevo_dataset_rows(const struct SemevoDataset *d);

size_t semevo_dataset_features(const struct SemevoDataset *d);

void semevo_dataset_free(struct SemevoDataset *d);

// Default settings.
struct SemevoConfig *semevo_config_new(void);

// Sets one setting by its CLI flag name, e.g. `("pop-size", "50")`.
enum SemevoStatus semevo_config_set(struct SemevoConfig *cfg, const char *key, const char *value);

void semevo_config_free(struct SemevoConfig *cfg);

// Runs the full experiment described by `cfg` (dataset, runs, ablation,
// output directory) and writes its result files. Returns
// `SEMEVO_STATUS_PARTIAL_FAILURE` when some runs failed.
enum SemevoStatus semevo_experiment_run(const struct SemevoConfig *cfg);

// Evolves one population on already prepared splits.
enum SemevoStatus semevo_evolve(const struct SemevoConfig *cfg,
                                const struct SemevoDataset *train,
                                const struct SemevoDataset *test,
                                struct SemevoRun **out);

// Train and test RMSE and node count of the reported model.
enum SemevoStatus semevo_run_best(const struct SemevoRun *run,
                                  double *train_rmse,
                                  double *test_rmse,
                                  size_t *node_count);

// Number of log rows (generations + 1).
size_t semevo_run_log_len(const struct SemevoRun *run);

enum SemevoStatus semevo_run_log_row(const struct SemevoRun *run,
                                     size_t index,
                                     struct SemevoLogRow *out);

// Writes the reported model's outputs for every row of `data` into `out`,
// which must hold `semevo_dataset_rows(data)` values.
enum SemevoStatus semevo_run_predict(const struct SemevoRun *run,
                                     const struct SemevoDataset *data,
                                     double *out,
                                     size_t out_len);

// Text dump of the reported model; free with [`semevo_string_free`].
enum SemevoStatus semevo_run_model_text(const struct SemevoRun *run, char **out);

void semevo_run_free(struct SemevoRun *run);

// Two-sided Wilcoxon signed-rank test over `n` pairs.
enum SemevoStatus semevo_wilcoxon(const double *a,
                                  const double *b,
                                  size_t n,
                                  double *statistic,
                                  double *p_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMEVO_H */
