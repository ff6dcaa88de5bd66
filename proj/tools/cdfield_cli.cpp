// Command-line front end. Talks to the library only through its C interface.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>

#include "cdfield/cdfield.h"

namespace {

int report(cdf_status status) {
  if (status != CDF_OK) {
    std::fprintf(stderr, "error: %s: %s\n", cdf_status_name(status), cdf_last_error());
  }
  return cdf_exit_code(status);
}

void print_and_free(char* text) {
  std::fputs(text, stdout);
  cdf_string_free(text);
}

struct ModelHandle {
  cdf_model* ptr = nullptr;
  ~ModelHandle() { cdf_model_free(ptr); }
};

struct DatasetHandle {
  cdf_dataset* ptr = nullptr;
  ~DatasetHandle() { cdf_dataset_free(ptr); }
};

struct TraceHandle {
  cdf_trace* ptr = nullptr;
  ~TraceHandle() { cdf_trace_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cumulative distribution fields built from copula factors"};
  app.require_subcommand(1);

  std::string in_path, out_path, model_path, data_path;
  std::size_t n = 0;
  std::uint64_t seed = 1;

  auto* transform = app.add_subcommand("transform", "Rank-transform raw columns to pseudo-observations");
  transform->add_option("input", in_path, "Input CSV with header")->required();
  transform->add_option("output", out_path, "Output CSV")->required();

  auto* simulate = app.add_subcommand("simulate", "Sample a dataset from an all-Clayton model");
  simulate->add_option("model", model_path, "Model JSON")->required();
  simulate->add_option("-n,--n", n, "Number of rows")->required();
  simulate->add_option("--seed", seed, "RNG seed");
  simulate->add_option("--out", out_path, "Output CSV")->required();

  cdf_fit_options fit_opts;
  cdf_fit_options_init(&fit_opts);
  std::string sampler = "collapsed";
  std::int64_t burn_in = -1;
  auto* fit = app.add_subcommand("fit", "Sample the posterior of the copula parameters");
  fit->add_option("model", model_path, "Model JSON")->required();
  fit->add_option("data", data_path, "Data CSV (pseudo-observations)")->required();
  fit->add_option("--sampler", sampler, "collapsed | discrete | continuous")
      ->check(CLI::IsMember({"collapsed", "discrete", "continuous"}));
  fit->add_option("--iters", fit_opts.iterations, "Iterations");
  fit->add_option("--burnin", burn_in, "Burn-in iterations (default 20% of --iters)");
  fit->add_option("--thin", fit_opts.thin, "Keep every k-th iteration");
  fit->add_option("--seed", fit_opts.seed, "RNG seed");
  fit->add_option("--out", out_path, "Trace CSV")->required();
  fit->add_option("--slice-width", fit_opts.slice_width, "Slice width on log theta");
  fit->add_option("--rw-std", fit_opts.rw_std, "Random-walk std on log latents");
  fit->add_option("--treewidth-cap", fit_opts.treewidth_cap, "Maximum effective width");

  std::size_t density_cap = fit_opts.treewidth_cap;
  auto* density = app.add_subcommand("density", "Per-row and total log density");
  density->add_option("model", model_path, "Model JSON")->required();
  density->add_option("data", data_path, "Data CSV (pseudo-observations)")->required();
  density->add_option("--treewidth-cap", density_cap, "Maximum effective width");

  auto* graph = app.add_subcommand("graph", "Bi-directed graph, indicator domains and width");
  graph->add_option("model", model_path, "Model JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (*transform) return report(cdf_transform_csv(in_path.c_str(), out_path.c_str()));

  ModelHandle model;
  if (cdf_status s = cdf_model_load(model_path.c_str(), &model.ptr); s != CDF_OK) return report(s);

  if (*graph) {
    char* text = nullptr;
    const cdf_status s = cdf_model_graph_report(model.ptr, &text);
    if (s == CDF_OK) print_and_free(text);
    return report(s);
  }

  if (*simulate) return report(cdf_simulate_csv(model.ptr, n, seed, out_path.c_str()));

  DatasetHandle data;
  if (cdf_status s = cdf_dataset_load(model.ptr, data_path.c_str(), &data.ptr); s != CDF_OK) {
    return report(s);
  }

  if (*density) {
    char* text = nullptr;
    const cdf_status s = cdf_density_report(model.ptr, data.ptr, density_cap, &text);
    if (s == CDF_OK) print_and_free(text);
    return report(s);
  }

  fit_opts.sampler = sampler.c_str();
  fit_opts.burn_in = burn_in;
  TraceHandle trace;
  const auto start = std::chrono::steady_clock::now();
  const cdf_status status = cdf_fit(model.ptr, data.ptr, &fit_opts, &trace.ptr);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!trace.ptr) return report(status);
  const std::string fit_error = status == CDF_OK ? "" : cdf_last_error();

  if (cdf_status s = cdf_trace_write_csv(trace.ptr, out_path.c_str()); s != CDF_OK) return report(s);
  char* summary = nullptr;
  if (cdf_status s = cdf_trace_summary(trace.ptr, seconds, &summary); s != CDF_OK) return report(s);
  print_and_free(summary);
  if (status != CDF_OK) {
    std::fprintf(stderr, "error: %s: %s\n", cdf_status_name(status), fit_error.c_str());
  }
  return cdf_exit_code(status);
}
