#include "cdfield/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <system_error>

#include "cdfield/error.hpp"
#include "cdfield/likelihood.hpp"

namespace cdfield {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

Family parse_family(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (name == "clayton") return Family::Clayton;
  if (name == "independence") return Family::Independence;
  throw Error(ErrorKind::Validation, "unknown copula family '" + name + "'");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return x;
}

std::map<std::string, std::size_t> index_of(const std::vector<std::string>& names) {
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < names.size(); ++i) out.emplace(names[i], i);
  return out;
}

}  // namespace

ModelConfig parse_model_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("model config is not valid JSON: ") + e.what());
  }
  ModelConfig cfg;
  try {
    if (!doc.is_object()) throw Error(ErrorKind::Validation, "model config must be a JSON object");
    for (const auto& v : doc.at("variables")) cfg.variables.push_back(v.get<std::string>());
    const auto& factors = doc.at("factors");
    for (std::size_t j = 0; j < factors.size(); ++j) {
      const auto& f = factors[j];
      ModelConfig::Factor factor;
      factor.name = f.value("name", "C" + std::to_string(j + 1));
      factor.family = parse_family(f.value("family", std::string("clayton")));
      factor.theta_init = f.value("theta_init", 1.0);
      for (const auto& s : f.at("scope")) factor.scope.push_back(s.get<std::string>());
      cfg.factors.push_back(std::move(factor));
    }
    if (doc.contains("exponents")) {
      const auto& e = doc["exponents"];
      if (e.is_string()) {
        if (e.get<std::string>() != "uniform") {
          throw Error(ErrorKind::Validation, "exponents must be \"uniform\" or a matrix");
        }
      } else if (e.is_array()) {
        ExponentMatrix mat;
        mat.rows = cfg.variables.size();
        mat.cols = cfg.factors.size();
        for (const auto& row : e) {
          if (row.is_array()) {
            if (row.size() != mat.cols) {
              throw Error(ErrorKind::Validation, "exponent matrix rows must have one entry per factor");
            }
            for (const auto& x : row) mat.values.push_back(x.get<double>());
          } else {
            mat.values.push_back(row.get<double>());
          }
        }
        cfg.exponents = std::move(mat);
      } else {
        throw Error(ErrorKind::Validation, "exponents must be \"uniform\" or a matrix");
      }
    }
    if (doc.contains("prior")) {
      cfg.prior.shape = doc["prior"].value("shape", 2.0);
      cfg.prior.rate = doc["prior"].value("rate", 2.0);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("malformed model config: ") + e.what());
  }

  const auto names = index_of(cfg.variables);
  if (names.size() != cfg.variables.size()) {
    throw Error(ErrorKind::Validation, "variable names must be unique");
  }
  const auto factor_names = [&] {
    std::vector<std::string> n;
    for (const auto& f : cfg.factors) n.push_back(f.name);
    return index_of(n);
  }();
  if (factor_names.size() != cfg.factors.size()) {
    throw Error(ErrorKind::Validation, "factor names must be unique");
  }
  for (const auto& f : cfg.factors) {
    for (const auto& s : f.scope) {
      if (!names.contains(s)) {
        throw Error(ErrorKind::Validation,
                    "factor " + f.name + " references unknown variable '" + s + "'");
      }
    }
  }
  cfg.prior.validate();
  to_model(cfg);
  return cfg;
}

ModelConfig load_model_config(const std::filesystem::path& path) {
  return parse_model_config(read_file(path));
}

std::string dump_model_config(const ModelConfig& cfg) {
  const auto names = index_of(cfg.variables);
  json doc;
  doc["variables"] = cfg.variables;
  json factors = json::array();
  for (const auto& f : cfg.factors) {
    std::vector<std::string> scope = f.scope;
    std::sort(scope.begin(), scope.end(),
              [&](const std::string& a, const std::string& b) { return names.at(a) < names.at(b); });
    json jf;
    jf["name"] = f.name;
    jf["family"] = to_string(f.family);
    jf["theta_init"] = f.theta_init;
    jf["scope"] = scope;
    factors.push_back(std::move(jf));
  }
  doc["factors"] = std::move(factors);
  if (cfg.exponents) {
    json rows = json::array();
    for (std::size_t i = 0; i < cfg.exponents->rows; ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < cfg.exponents->cols; ++j) {
        row.push_back(cfg.exponents->values[i * cfg.exponents->cols + j]);
      }
      rows.push_back(std::move(row));
    }
    doc["exponents"] = std::move(rows);
  } else {
    doc["exponents"] = "uniform";
  }
  doc["prior"] = {{"shape", cfg.prior.shape}, {"rate", cfg.prior.rate}};
  return doc.dump(2) + "\n";
}

void save_model_config(const ModelConfig& config, const std::filesystem::path& path) {
  write_file(path, dump_model_config(config));
}

CdnModel to_model(const ModelConfig& cfg) {
  const auto names = index_of(cfg.variables);
  std::vector<FactorSpec> specs;
  for (const auto& f : cfg.factors) {
    FactorSpec spec;
    spec.family = f.family;
    spec.theta = f.theta_init;
    for (const auto& s : f.scope) {
      const auto it = names.find(s);
      if (it == names.end()) {
        throw Error(ErrorKind::Validation, "unknown variable '" + s + "' in factor " + f.name);
      }
      spec.scope.push_back(it->second);
    }
    specs.push_back(std::move(spec));
  }
  try {
    if (cfg.exponents) return build_model(cfg.variables.size(), specs, *cfg.exponents);
    return build_model(cfg.variables.size(), specs);
  } catch (const Error& e) {
    // Out-of-range initial parameters surface as validation problems here.
    throw Error(ErrorKind::Validation, e.what());
  }
}

ModelConfig config_from_model(const CdnModel& m, const Prior& prior) {
  ModelConfig cfg;
  cfg.prior = prior;
  for (std::size_t i = 0; i < m.num_variables(); ++i) cfg.variables.push_back("U" + std::to_string(i + 1));
  for (std::size_t j = 0; j < m.num_factors(); ++j) {
    ModelConfig::Factor f;
    f.name = "C" + std::to_string(j + 1);
    f.family = m.factor(j).family();
    f.theta_init = f.family == Family::Clayton ? m.factor(j).theta() : 1.0;
    for (std::size_t i : m.scope(j)) f.scope.push_back(cfg.variables[i]);
    cfg.factors.push_back(std::move(f));
  }
  // Keep explicit exponents only when they differ from the uniform rule.
  bool uniform = true;
  ExponentMatrix mat{m.num_variables(), m.num_factors(), {}};
  for (std::size_t i = 0; i < m.num_variables(); ++i) {
    const double a_uniform = 1.0 / static_cast<double>(m.z_domain(i).size());
    for (std::size_t j = 0; j < m.num_factors(); ++j) {
      const double a = m.exponent(i, j);
      mat.values.push_back(a);
      if (a != 0.0 && a != a_uniform) uniform = false;
    }
  }
  if (!uniform) cfg.exponents = std::move(mat);
  return cfg;
}

std::string model_hash(const ModelConfig& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : dump_model_config(config)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

Table parse_csv(std::string_view text) {
  Table table;
  std::vector<double> values;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto cells = split(line);
    if (!have_header) {
      for (auto c : cells) table.header.emplace_back(c);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw Error(ErrorKind::Validation, "line " + std::to_string(line_no) + " has " +
                                             std::to_string(cells.size()) + " cells, header has " +
                                             std::to_string(table.header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto x = parse_number(cells[c]);
      if (!x) {
        throw Error(ErrorKind::Validation, "row " + std::to_string(rows + 1) + ", column " +
                                               table.header[c] + ": '" + std::string(cells[c]) +
                                               "' is not a number");
      }
      values.push_back(*x);
    }
    ++rows;
  }
  if (!have_header) throw Error(ErrorKind::Validation, "CSV has no header line");
  table.values = DataMatrix(rows, table.header.size(), std::move(values));
  return table;
}

Table read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

std::string format_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c) out += ',';
    out += table.header[c];
  }
  out += '\n';
  for (std::size_t d = 0; d < table.values.rows(); ++d) {
    for (std::size_t c = 0; c < table.values.cols(); ++c) {
      if (c) out += ',';
      out += format_double(table.values(d, c));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const Table& table) {
  write_file(path, format_csv(table));
}

Table pseudo_observations(const Table& table) {
  const std::size_t n = table.values.rows();
  const std::size_t p = table.values.cols();
  if (n < 2) throw Error(ErrorKind::Validation, "pseudo-observations need at least 2 rows");
  Table out{table.header, DataMatrix(n, p)};
  std::vector<std::size_t> idx(n);
  const double denom = static_cast<double>(n) + 1.0;
  for (std::size_t c = 0; c < p; ++c) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return table.values(a, c) < table.values(b, c);
    });
    for (std::size_t start = 0; start < n;) {
      std::size_t end = start + 1;
      while (end < n && table.values(idx[end], c) == table.values(idx[start], c)) ++end;
      // Ranks start+1 .. end share their mean.
      const double rank = 0.5 * (static_cast<double>(start + 1) + static_cast<double>(end));
      for (std::size_t k = start; k < end; ++k) out.values(idx[k], c) = rank / denom;
      start = end;
    }
  }
  return out;
}

DataMatrix data_for_model(const ModelConfig& config, const Table& table) {
  const auto columns = index_of(table.header);
  std::vector<std::size_t> source;
  for (const auto& v : config.variables) {
    const auto it = columns.find(v);
    if (it == columns.end()) {
      throw Error(ErrorKind::Validation, "data has no column for variable '" + v + "'");
    }
    source.push_back(it->second);
  }
  const std::size_t n = table.values.rows();
  DataMatrix out(n, source.size());
  for (std::size_t d = 0; d < n; ++d) {
    for (std::size_t i = 0; i < source.size(); ++i) {
      const double x = table.values(d, source[i]);
      if (!(x >= 0.0 && x <= 1.0)) {
        throw Error(ErrorKind::Validation,
                    "row " + std::to_string(d + 1) + ", column " + config.variables[i] +
                        ": value outside [0, 1]; transform raw data to pseudo-observations first");
      }
      out(d, i) = std::clamp(x, kDataFloor, kDataCeiling);
    }
  }
  return out;
}

std::string format_trace_csv(const ModelConfig& config, const Trace& trace) {
  std::string out = "iter";
  for (std::size_t j : trace.parameters) out += ",theta_" + config.factors.at(j).name;
  out += ",log_post\n";
  for (std::size_t r = 0; r < trace.rows(); ++r) {
    out += std::to_string(trace.iterations[r]);
    for (double x : trace.theta[r]) out += "," + format_double(x);
    out += "," + format_double(trace.log_post[r]) + "\n";
  }
  if (trace.failure) out += "# FAILED: " + *trace.failure + "\n";
  return out;
}

std::string format_summary(const ModelConfig& config, const Trace& trace,
                           std::optional<double> wallclock_seconds) {
  std::ostringstream os;
  const auto& c = trace.config;
  os << "sampler: " << to_string(trace.sampler) << '\n';
  os << "iterations: " << c.iterations << " (burn-in " << c.resolved_burn_in() << ", thin "
     << c.thin << ")\n";
  os << "seed: " << c.seed << '\n';
  if (!trace.model_hash.empty()) os << "model: " << trace.model_hash << '\n';
  os << "rows: " << trace.rows() << '\n';
  if (trace.rows() > 0) {
    const auto s = summarize(trace);
    os << "parameter,mean,sd,q2.5,q50,q97.5,ess\n";
    for (std::size_t k = 0; k < trace.parameters.size(); ++k) {
      const auto& p = s.parameters[k];
      os << "theta_" << config.factors.at(trace.parameters[k]).name << ',' << format_double(p.mean)
         << ',' << format_double(p.sd) << ',' << format_double(p.q025) << ','
         << format_double(p.q50) << ',' << format_double(p.q975) << ','
         << format_double(p.ess) << (p.degenerate ? " (constant)" : "") << '\n';
    }
    os << "slice evaluations per update: " << format_double(s.slice_evaluations_per_update)
       << '\n';
    os << "slice collapses: " << s.slice_collapses << '\n';
  }
  if (!trace.latent_acceptance.empty()) {
    os << "latent acceptance:";
    for (std::size_t k = 0; k < trace.latent_acceptance.size(); ++k) {
      os << ' ' << config.factors.at(trace.parameters[k]).name << '='
         << format_double(trace.latent_acceptance[k]);
    }
    os << '\n';
  }
  if (wallclock_seconds) os << "wallclock: " << *wallclock_seconds << " s\n";
  os << "status: " << (trace.failure ? "FAILED (" + *trace.failure + ")" : std::string("ok"))
     << '\n';
  return os.str();
}

std::string density_report(std::span<const double> rows) {
  std::string out = "row,log_density\n";
  double total = 0.0;
  for (std::size_t d = 0; d < rows.size(); ++d) {
    out += std::to_string(d) + "," + format_double(rows[d]) + "\n";
    total += rows[d];
  }
  out += "total," + format_double(total) + "\n";
  return out;
}

std::string graph_report(const ModelConfig& config, const CdnModel& m) {
  const auto& names = config.variables;
  const auto edges = bidirected_edges(m);
  const auto order = min_fill_order(m);
  std::ostringstream os;
  if (edges.empty()) {
    os << "(no edges)";
  } else {
    for (std::size_t k = 0; k < edges.size(); ++k) {
      os << (k ? ", " : "") << names[edges[k].first] << " -- " << names[edges[k].second];
    }
  }
  os << "; width " << order.induced_width << '\n';
  os << "variables: " << m.num_variables() << '\n';
  os << "factors: " << m.num_factors() << '\n';
  for (std::size_t j = 0; j < m.num_factors(); ++j) {
    os << "  " << config.factors[j].name << " (" << to_string(m.factor(j).family());
    if (m.factor(j).family() == Family::Clayton) os << ", theta " << format_double(m.factor(j).theta());
    os << "):";
    for (std::size_t i : m.scope(j)) os << ' ' << names[i];
    os << '\n';
  }
  os << "edges: " << edges.size() << '\n';
  for (const auto& [a, b] : edges) os << "  " << names[a] << " -- " << names[b] << '\n';
  os << "z-domains:\n";
  for (std::size_t i = 0; i < m.num_variables(); ++i) {
    os << "  " << names[i] << ':';
    for (std::size_t j : m.z_domain(i)) os << ' ' << config.factors[j].name;
    os << '\n';
  }
  const auto comps = connected_components(m);
  os << "components: " << comps.size() << '\n';
  for (const auto& comp : comps) {
    os << "  {";
    for (std::size_t k = 0; k < comp.size(); ++k) os << (k ? ", " : "") << names[comp[k]];
    os << "}\n";
  }
  os << "induced width: " << order.induced_width << '\n';
  os << "effective width: " << order.effective_width << '\n';
  os << "elimination order:";
  for (std::size_t i : order.order) os << ' ' << names[i];
  os << '\n';
  return os.str();
}

}  // namespace cdfield
