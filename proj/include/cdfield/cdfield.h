/*
 * C interface to the cdfield library.
 *
 * Objects are opaque handles created by *_load / *_parse / cdf_fit and
 * released with the matching *_free. Every fallible call returns a
 * cdf_status; on failure cdf_last_error() describes the problem (the message
 * is per thread and valid until the next failing call on that thread).
 * Strings returned through char** are heap-allocated and released with
 * cdf_string_free.
 */
#ifndef CDFIELD_CDFIELD_H_
#define CDFIELD_CDFIELD_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CDF_API __declspec(dllexport)
#else
#define CDF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cdf_status {
  CDF_OK = 0,
  CDF_ERR_ARGUMENT = 1,
  CDF_ERR_VALIDATION = 2,
  CDF_ERR_PARAMETER = 3,
  CDF_ERR_DOMAIN = 4,
  CDF_ERR_UNSUPPORTED = 5,
  CDF_ERR_TREEWIDTH = 6,
  CDF_ERR_ORACLE_TOO_LARGE = 7,
  CDF_ERR_NUMERICAL = 8,
  CDF_ERR_IO = 9,
  CDF_ERR_INTERNAL = 10
} cdf_status;

typedef struct cdf_model cdf_model;
typedef struct cdf_dataset cdf_dataset;
typedef struct cdf_trace cdf_trace;

CDF_API const char* cdf_status_name(cdf_status status);
CDF_API const char* cdf_last_error(void);
/* Process exit code for a status: 0 success, 2 numerical abort, 1 otherwise. */
CDF_API int cdf_exit_code(cdf_status status);
CDF_API void cdf_string_free(char* s);

/* Models (JSON config). */
CDF_API cdf_status cdf_model_load(const char* path, cdf_model** out);
CDF_API cdf_status cdf_model_parse(const char* json_text, cdf_model** out);
CDF_API cdf_status cdf_model_chain(size_t num_variables, const double* thetas, cdf_model** out);
CDF_API cdf_status cdf_model_save(const cdf_model* model, const char* path);
CDF_API void cdf_model_free(cdf_model* model);
CDF_API size_t cdf_model_num_variables(const cdf_model* model);
CDF_API size_t cdf_model_num_factors(const cdf_model* model);
CDF_API cdf_status cdf_model_hash(const cdf_model* model, char** out);
CDF_API cdf_status cdf_model_cdf(const cdf_model* model, const double* u, size_t n, double* out);
CDF_API cdf_status cdf_model_log_density(const cdf_model* model, const double* u, size_t n,
                                         size_t treewidth_cap, double* out);
CDF_API cdf_status cdf_model_graph_report(const cdf_model* model, char** out);

/* Datasets: columns matched to model variables by name, clamped to
   [1e-10, 1 - 1e-10]. */
CDF_API cdf_status cdf_dataset_load(const cdf_model* model, const char* path, cdf_dataset** out);
CDF_API cdf_status cdf_dataset_from_array(const cdf_model* model, const double* values,
                                          size_t rows, cdf_dataset** out);
CDF_API size_t cdf_dataset_rows(const cdf_dataset* data);
CDF_API void cdf_dataset_free(cdf_dataset* data);
CDF_API cdf_status cdf_density_report(const cdf_model* model, const cdf_dataset* data,
                                      size_t treewidth_cap, char** out);

/* Rank / (N + 1) pseudo-observations, column by column. */
CDF_API cdf_status cdf_transform_csv(const char* in_path, const char* out_path);

/* Writes n rows and a "<out_path>.meta.json" sidecar with seed and model hash. */
CDF_API cdf_status cdf_simulate_csv(const cdf_model* model, size_t n, uint64_t seed,
                                    const char* out_path);

typedef struct cdf_fit_options {
  const char* sampler; /* "collapsed" | "discrete" | "continuous" */
  size_t iterations;
  int64_t burn_in;     /* negative: 20% of iterations */
  size_t thin;
  uint64_t seed;
  double slice_width;
  double rw_std;
  size_t treewidth_cap;
} cdf_fit_options;

CDF_API void cdf_fit_options_init(cdf_fit_options* options);

/* On a numerical abort during sampling, returns CDF_ERR_NUMERICAL and still
   hands back the partial trace through *out. */
CDF_API cdf_status cdf_fit(const cdf_model* model, const cdf_dataset* data,
                           const cdf_fit_options* options, cdf_trace** out);
CDF_API size_t cdf_trace_rows(const cdf_trace* trace);
CDF_API size_t cdf_trace_num_parameters(const cdf_trace* trace);
CDF_API cdf_status cdf_trace_value(const cdf_trace* trace, size_t row, size_t parameter,
                                   double* out);
CDF_API cdf_status cdf_trace_write_csv(const cdf_trace* trace, const char* path);
/* wallclock_seconds < 0 omits the wallclock line. */
CDF_API cdf_status cdf_trace_summary(const cdf_trace* trace, double wallclock_seconds, char** out);
CDF_API void cdf_trace_free(cdf_trace* trace);

#ifdef __cplusplus
}
#endif

#endif /* CDFIELD_CDFIELD_H_ */
