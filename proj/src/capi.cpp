#include "cdfield/cdfield.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <new>
#include <string>

#include <json.hpp>

#include "cdfield/error.hpp"
#include "cdfield/io.hpp"
#include "cdfield/latent.hpp"
#include "cdfield/likelihood.hpp"
#include "cdfield/mcmc.hpp"

struct cdf_model {
  cdfield::ModelConfig config;
  cdfield::CdnModel model;
};

struct cdf_dataset {
  cdfield::DataMatrix values;
};

struct cdf_trace {
  cdfield::ModelConfig config;
  cdfield::Trace trace;
};

namespace {

thread_local std::string g_last_error;

cdf_status status_for(cdfield::ErrorKind kind) {
  using cdfield::ErrorKind;
  switch (kind) {
    case ErrorKind::Argument: return CDF_ERR_ARGUMENT;
    case ErrorKind::Validation: return CDF_ERR_VALIDATION;
    case ErrorKind::Parameter: return CDF_ERR_PARAMETER;
    case ErrorKind::Domain: return CDF_ERR_DOMAIN;
    case ErrorKind::UnsupportedFamily: return CDF_ERR_UNSUPPORTED;
    case ErrorKind::TreewidthTooLarge: return CDF_ERR_TREEWIDTH;
    case ErrorKind::OracleTooLarge: return CDF_ERR_ORACLE_TOO_LARGE;
    case ErrorKind::DegenerateConditional:
    case ErrorKind::Convergence:
    case ErrorKind::Precondition: return CDF_ERR_NUMERICAL;
    case ErrorKind::Io: return CDF_ERR_IO;
  }
  return CDF_ERR_INTERNAL;
}

cdf_status fail(cdf_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs body, translating exceptions into status codes.
template <typename F>
cdf_status guarded(F&& body) {
  try {
    return body();
  } catch (const cdfield::Error& e) {
    return fail(status_for(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(CDF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CDF_ERR_INTERNAL, e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

cdf_status require(bool ok, const char* what) {
  return ok ? CDF_OK : fail(CDF_ERR_ARGUMENT, what);
}

}  // namespace

extern "C" {

const char* cdf_status_name(cdf_status status) {
  switch (status) {
    case CDF_OK: return "ok";
    case CDF_ERR_ARGUMENT: return "argument error";
    case CDF_ERR_VALIDATION: return "validation error";
    case CDF_ERR_PARAMETER: return "parameter error";
    case CDF_ERR_DOMAIN: return "domain error";
    case CDF_ERR_UNSUPPORTED: return "unsupported family";
    case CDF_ERR_TREEWIDTH: return "treewidth too large";
    case CDF_ERR_ORACLE_TOO_LARGE: return "oracle too large";
    case CDF_ERR_NUMERICAL: return "numerical abort";
    case CDF_ERR_IO: return "i/o error";
    case CDF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* cdf_last_error(void) { return g_last_error.c_str(); }

int cdf_exit_code(cdf_status status) {
  switch (status) {
    case CDF_OK: return 0;
    case CDF_ERR_NUMERICAL:
    case CDF_ERR_DOMAIN: return 2;
    default: return 1;
  }
}

void cdf_string_free(char* s) { std::free(s); }

cdf_status cdf_model_load(const char* path, cdf_model** out) {
  if (auto s = require(path && out, "null argument"); s != CDF_OK) return s;
  return guarded([&] {
    auto cfg = cdfield::load_model_config(path);
    auto model = cdfield::to_model(cfg);
    *out = new cdf_model{std::move(cfg), std::move(model)};
    return CDF_OK;
  });
}

cdf_status cdf_model_parse(const char* json_text, cdf_model** out) {
  if (auto s = require(json_text && out, "null argument"); s != CDF_OK) return s;
  return guarded([&] {
    auto cfg = cdfield::parse_model_config(json_text);
    auto model = cdfield::to_model(cfg);
    *out = new cdf_model{std::move(cfg), std::move(model)};
    return CDF_OK;
  });
}

cdf_status cdf_model_chain(size_t num_variables, const double* thetas, cdf_model** out) {
  if (auto s = require(thetas && out, "null argument"); s != CDF_OK) return s;
  return guarded([&] {
    const std::span<const double> t(thetas, num_variables > 0 ? num_variables - 1 : 0);
    auto model = cdfield::chain_model(num_variables, t);
    auto cfg = cdfield::config_from_model(model);
    *out = new cdf_model{std::move(cfg), std::move(model)};
    return CDF_OK;
  });
}

cdf_status cdf_model_save(const cdf_model* model, const char* path) {
  if (auto s = require(model && path, "null argument"); s != CDF_OK) return s;
  return guarded([&] {
    cdfield::save_model_config(model->config, path);
    return CDF_OK;
  });
}

void cdf_model_free(cdf_model* model) { delete model; }

size_t cdf_model_num_variables(const cdf_model* model) {
  return model ? model->model.num_variables() : 0;
}

size_t cdf_model_num_factors(const cdf_model* model) {
  return model ? model->model.num_factors() : 0;
}

cdf_status cdf_model_hash(const cdf_model* model, char** out) {
  if (auto s = require(model && out, "null argument"); s != CDF_OK) return s;
  return guarded([&] {
    *out = copy_string(cdfield::model_hash(model->config));
    return CDF_OK;
  });
}

cdf_status cdf_model_cdf(const cdf_model* model, const double* u, size_t n, double* out) {
  if (auto s = require(model && u && out, "null argument"); s != CDF_OK) return s;
  return guarded([&] {
    *out = cdfield::model_cdf(model->model, std::span<const double>(u, n));
    return CDF_OK;
  });
}

cdf_status cdf_model_log_density(const cdf_model* model, const double* u, size_t n,
                                 size_t treewidth_cap, double* out) {
  if (auto s = require(model && u && out, "null argument"); s != CDF_OK) return s;
  return guarded([&] {
    const auto order = cdfield::min_fill_order(model->model);
    *out = cdfield::log_density_ve(model->model, std::span<const double>(u, n), order,
                                   treewidth_cap);
    return CDF_OK;
  });
}

cdf_status cdf_model_graph_report(const cdf_model* model, char** out) {
  if (auto s = require(model && out, "null argument"); s != CDF_OK) return s;
  return guarded([&] {
    *out = copy_string(cdfield::graph_report(model->config, model->model));
    return CDF_OK;
  });
}

cdf_status cdf_dataset_load(const cdf_model* model, const char* path, cdf_dataset** out) {
  if (auto s = require(model && path && out, "null argument"); s != CDF_OK) return s;
  return guarded([&] {
    const auto table = cdfield::read_csv(path);
    *out = new cdf_dataset{cdfield::data_for_model(model->config, table)};
    return CDF_OK;
  });
}

cdf_status cdf_dataset_from_array(const cdf_model* model, const double* values, size_t rows,
                                  cdf_dataset** out) {
  if (auto s = require(model && out && (values || rows == 0), "null argument"); s != CDF_OK) {
    return s;
  }
  return guarded([&] {
    const std::size_t p = model->model.num_variables();
    cdfield::Table table{model->config.variables,
                         cdfield::DataMatrix(rows, p, std::vector<double>(values, values + rows * p))};
    *out = new cdf_dataset{cdfield::data_for_model(model->config, table)};
    return CDF_OK;
  });
}

size_t cdf_dataset_rows(const cdf_dataset* data) { return data ? data->values.rows() : 0; }

void cdf_dataset_free(cdf_dataset* data) { delete data; }

cdf_status cdf_density_report(const cdf_model* model, const cdf_dataset* data,
                              size_t treewidth_cap, char** out) {
  if (auto s = require(model && data && out, "null argument"); s != CDF_OK) return s;
  return guarded([&] {
    const auto rows = cdfield::row_log_densities(model->model, data->values, treewidth_cap);
    *out = copy_string(cdfield::density_report(rows));
    return CDF_OK;
  });
}

cdf_status cdf_transform_csv(const char* in_path, const char* out_path) {
  if (auto s = require(in_path && out_path, "null argument"); s != CDF_OK) return s;
  return guarded([&] {
    cdfield::write_csv(out_path, cdfield::pseudo_observations(cdfield::read_csv(in_path)));
    return CDF_OK;
  });
}

cdf_status cdf_simulate_csv(const cdf_model* model, size_t n, uint64_t seed, const char* out_path) {
  if (auto s = require(model && out_path, "null argument"); s != CDF_OK) return s;
  return guarded([&] {
    if (!model->model.all_clayton()) {
      throw cdfield::Error(cdfield::ErrorKind::UnsupportedFamily,
                           "simulation requires every factor to be Clayton");
    }
    cdfield::Rng rng(seed);
    const auto data = cdfield::sample_dataset(model->model, n, rng);
    cdfield::write_csv(out_path, cdfield::Table{model->config.variables, data});
    nlohmann::json meta;
    meta["seed"] = seed;
    meta["n"] = n;
    meta["model_hash"] = cdfield::model_hash(model->config);
    std::ofstream side(std::string(out_path) + ".meta.json", std::ios::binary | std::ios::trunc);
    if (!side) throw cdfield::Error(cdfield::ErrorKind::Io, "cannot write metadata sidecar");
    side << meta.dump(2) << '\n';
    return CDF_OK;
  });
}

void cdf_fit_options_init(cdf_fit_options* options) {
  if (!options) return;
  const cdfield::SamplerConfig defaults;
  options->sampler = "collapsed";
  options->iterations = defaults.iterations;
  options->burn_in = -1;
  options->thin = defaults.thin;
  options->seed = defaults.seed;
  options->slice_width = defaults.slice_width;
  options->rw_std = defaults.rw_std;
  options->treewidth_cap = defaults.treewidth_cap;
}

cdf_status cdf_fit(const cdf_model* model, const cdf_dataset* data,
                   const cdf_fit_options* options, cdf_trace** out) {
  if (auto s = require(model && data && options && out, "null argument"); s != CDF_OK) return s;
  *out = nullptr;
  return guarded([&] {
    const auto kind = cdfield::parse_sampler_kind(options->sampler ? options->sampler : "");
    if (!kind) {
      throw cdfield::Error(cdfield::ErrorKind::Validation,
                           "unknown sampler; expected collapsed, discrete or continuous");
    }
    cdfield::SamplerConfig cfg;
    cfg.iterations = options->iterations;
    if (options->burn_in >= 0) cfg.burn_in = static_cast<std::size_t>(options->burn_in);
    cfg.thin = options->thin;
    cfg.seed = options->seed;
    cfg.slice_width = options->slice_width;
    cfg.rw_std = options->rw_std;
    cfg.treewidth_cap = options->treewidth_cap;

    // Compatibility checks before any sampling.
    if (*kind == cdfield::SamplerKind::ContinuousLatent && !model->model.all_clayton()) {
      throw cdfield::Error(cdfield::ErrorKind::UnsupportedFamily,
                           "the continuous sampler requires every factor to be Clayton");
    }
    if (*kind == cdfield::SamplerKind::Collapsed) {
      cdfield::DensityEvaluator check(model->model, cfg.treewidth_cap);
    }

    cdfield::Rng rng(cfg.seed);
    auto trace = cdfield::run_sampler(*kind, model->model, data->values, model->config.prior, cfg, rng);
    trace.model_hash = cdfield::model_hash(model->config);
    const bool failed = trace.failure.has_value();
    std::string message = failed ? *trace.failure : std::string();
    *out = new cdf_trace{model->config, std::move(trace)};
    if (failed) return fail(CDF_ERR_NUMERICAL, message);
    return CDF_OK;
  });
}

size_t cdf_trace_rows(const cdf_trace* trace) { return trace ? trace->trace.rows() : 0; }

size_t cdf_trace_num_parameters(const cdf_trace* trace) {
  return trace ? trace->trace.parameters.size() : 0;
}

cdf_status cdf_trace_value(const cdf_trace* trace, size_t row, size_t parameter, double* out) {
  if (auto s = require(trace && out, "null argument"); s != CDF_OK) return s;
  if (row >= trace->trace.rows() || parameter >= trace->trace.parameters.size()) {
    return fail(CDF_ERR_ARGUMENT, "trace index out of range");
  }
  *out = trace->trace.theta[row][parameter];
  return CDF_OK;
}

cdf_status cdf_trace_write_csv(const cdf_trace* trace, const char* path) {
  if (auto s = require(trace && path, "null argument"); s != CDF_OK) return s;
  return guarded([&] {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw cdfield::Error(cdfield::ErrorKind::Io, std::string("cannot write ") + path);
    f << cdfield::format_trace_csv(trace->config, trace->trace);
    return CDF_OK;
  });
}

cdf_status cdf_trace_summary(const cdf_trace* trace, double wallclock_seconds, char** out) {
  if (auto s = require(trace && out, "null argument"); s != CDF_OK) return s;
  return guarded([&] {
    std::optional<double> wall;
    if (wallclock_seconds >= 0.0) wall = wallclock_seconds;
    *out = copy_string(cdfield::format_summary(trace->config, trace->trace, wall));
    return CDF_OK;
  });
}

void cdf_trace_free(cdf_trace* trace) { delete trace; }

}  // extern "C"
