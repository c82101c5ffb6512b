/* C interface to the entity-matching active-learning library. Objects are
 * opaque handles; every call returns a status code and, on failure, leaves a
 * message readable via emal_last_error() on the calling thread. Strings
 * returned through char** are owned by the caller and released with
 * emal_string_free(). */
#ifndef EMAL_H
#define EMAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EMAL_API __declspec(dllexport)
#else
#define EMAL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum emal_status {
  EMAL_OK = 0,
  EMAL_ERR_VALIDATION = 1,       /* bad config or input data */
  EMAL_ERR_RUNTIME = 2,          /* I/O or internal failure */
  EMAL_ERR_INVALID_ARGUMENT = 3, /* null handle, bad buffer */
  EMAL_ERR_NOT_FOUND = 4,
  EMAL_ERR_CONFLICT = 5
} emal_status;

typedef struct emal_dataset emal_dataset;
typedef struct emal_session emal_session;
typedef struct emal_service emal_service;

EMAL_API const char* emal_version(void);
EMAL_API const char* emal_last_error(void);
EMAL_API void emal_string_free(char* s);

/* Dataset from the "dataset" section of an experiment file. */
EMAL_API emal_status emal_dataset_load(const char* experiment_path, emal_dataset** out);
/* Synthetic dataset; spec_json holds SyntheticSpec fields (may be NULL). */
EMAL_API emal_status emal_dataset_synthetic(const char* spec_json, emal_dataset** out);
EMAL_API emal_status emal_dataset_size(const emal_dataset* d, size_t* pairs, size_t* dim);
EMAL_API emal_status emal_dataset_gold(const emal_dataset* d, int64_t pair_id, int* label);
EMAL_API void emal_dataset_free(emal_dataset* d);

/* config_json is a SessionConfig object. The dataset must outlive nothing:
 * the session keeps its own reference. */
EMAL_API emal_status emal_session_create(const emal_dataset* d, const char* config_json, emal_session** out);
/* Copies up to `capacity` pending pair ids; `count` receives the full size. */
EMAL_API emal_status emal_session_pending(const emal_session* s, int64_t* ids, size_t capacity, size_t* count);
EMAL_API emal_status emal_session_submit(emal_session* s, int64_t pair_id, int label);
EMAL_API emal_status emal_session_answer_from_oracle(emal_session* s);
/* Consumes the completed batch; *terminated is set to 1 when the run ended. */
EMAL_API emal_status emal_session_advance(emal_session* s, int* terminated);
EMAL_API emal_status emal_session_run(emal_session* s);
/* Iteration log as CSV; timing columns are blank when include_timing is 0. */
EMAL_API emal_status emal_session_log_csv(const emal_session* s, int include_timing, char** out);
/* {"iterations", "termination", "best_f1", "labels_at_best", ...} */
EMAL_API emal_status emal_session_summary_json(const emal_session* s, char** out);
EMAL_API emal_status emal_session_model_json(const emal_session* s, char** out);
EMAL_API void emal_session_free(emal_session* s);

typedef void (*emal_progress_fn)(const char* line, void* user);

typedef struct emal_run_options {
  int has_seed;
  uint64_t seed;
  size_t jobs;          /* 0 keeps the config's value */
  const char* out_dir;  /* NULL keeps the config's value */
  emal_progress_fn progress;
  void* progress_user;
} emal_run_options;

/* Runs an experiment file; *summary_csv (optional) receives summary.csv.
 * Returns EMAL_ERR_RUNTIME when any run failed (its artifacts are kept). */
EMAL_API emal_status emal_experiment_run(const char* config_path, const emal_run_options* options,
                                         char** summary_csv);
/* Writes the report series under <run_dir>/report; *table gets the text table. */
EMAL_API emal_status emal_report(const char* run_dir, char** table);

/* Label service over the dataset of an experiment file. */
EMAL_API emal_status emal_service_create(const char* experiment_path, const char* checkpoint_dir,
                                         emal_service** out);
/* Sessions restored from checkpoints. */
EMAL_API emal_status emal_service_recover(emal_service* svc, size_t* restored);
/* Blocks until emal_service_stop() is called from another thread. */
EMAL_API emal_status emal_service_listen(emal_service* svc, const char* host, int port);
EMAL_API emal_status emal_service_stop(emal_service* svc);
EMAL_API void emal_service_free(emal_service* svc);

#ifdef __cplusplus
}
#endif

#endif
