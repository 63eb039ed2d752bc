#pragma once

// Subcommand dispatch for the dynvoi tool. Every output is fully rendered in
// memory before anything touches the filesystem, so a validation or numerical
// failure leaves no partial files behind.

#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dynvoi/config.hpp"
#include "dynvoi/errors.hpp"
#include "dynvoi/filter.hpp"
#include "dynvoi/format.hpp"
#include "dynvoi/market_sim.hpp"
#include "dynvoi/nonmyopic.hpp"
#include "dynvoi/steady_state.hpp"
#include "dynvoi/voi.hpp"

namespace dynvoi {

inline constexpr const char* kToolName = "dynvoi";
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kOutputDirEnv = "DYNVOI_OUTPUT_DIR";

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3 };

struct OutputFile {
  std::string path;  // empty: standard output
  std::string content;
};

namespace cli_detail {

using nlohmann::ordered_json;

inline std::uint64_t seed_of(const RunConfig& cfg) {
  const std::string text = cfg.get("seed", "42");
  std::uint64_t seed = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("seed must be a non-negative 64-bit integer, got '" + text + "'");
  return seed;
}

inline ordered_json metadata(const RunConfig& cfg) {
  ordered_json meta;
  meta["tool"] = kToolName;
  meta["version"] = kToolVersion;
  meta["subcommand"] = cfg.subcommand;
  meta["config"] = ordered_json::object();
  for (const auto& [k, v] : cfg.params) meta["config"][k] = v;
  meta["seed"] = seed_of(cfg);
  return meta;
}

inline std::string default_format(const std::string& sub) {
  return (sub == "region" || sub == "steady" || sub == "euler-limit") ? "json" : "csv";
}

inline std::string format_of(const RunConfig& cfg) {
  const std::string fmt = cfg.get("format", default_format(cfg.subcommand));
  if (fmt != "csv" && fmt != "json") throw ConfigError("format must be csv or json");
  return fmt;
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline std::string render(const RunConfig& cfg, const ordered_json& meta, const Table& table,
                          const std::string& summary = {}) {
  std::ostringstream out;
  if (format_of(cfg) == "json") {
    ordered_json doc;
    doc["meta"] = meta;
    ordered_json rows = ordered_json::array();
    for (const auto& r : table.rows) {
      ordered_json row;
      for (std::size_t i = 0; i < r.size(); ++i) row[table.columns[i]] = r[i];
      rows.push_back(std::move(row));
    }
    doc["rows"] = std::move(rows);
    out << doc.dump(2) << '\n';
    return out.str();
  }
  out << "# " << meta.dump() << '\n';
  if (!summary.empty()) out << "# " << summary << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& r : table.rows) out << join_csv(r) << '\n';
  return out.str();
}

inline std::string render_object(const RunConfig& cfg, const ordered_json& meta,
                                 const ordered_json& body) {
  if (format_of(cfg) == "json") {
    ordered_json doc;
    doc["meta"] = meta;
    for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
    return doc.dump(2) + "\n";
  }
  // CSV: flat scalar fields as one header row and one value row.
  std::ostringstream out;
  out << "# " << meta.dump() << '\n';
  std::vector<std::string> keys;
  std::vector<std::string> values;
  for (auto it = body.begin(); it != body.end(); ++it) {
    if (!it.value().is_primitive()) continue;
    keys.push_back(it.key());
    values.push_back(it.value().is_number() ? format_double(it.value().get<double>())
                                            : it.value().dump());
  }
  for (std::size_t i = 0; i < keys.size(); ++i) out << (i ? "," : "") << keys[i];
  out << '\n';
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
  out << '\n';
  return out.str();
}

inline std::vector<double> broadcast(std::vector<double> v, std::size_t n, const char* key) {
  if (v.size() == n) return v;
  if (v.size() == 1) return std::vector<double>(n, v.front());
  throw ConfigError(std::string("key '") + key + "' has " + std::to_string(v.size()) +
                    " entries, expected 1 or " + std::to_string(n));
}

inline Vector as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Diagonal multi-market model from per-market lists.
inline StateSpaceModel model_from(const RunConfig& cfg) {
  std::map<std::string, std::vector<double>> raw = {
      {"d", cfg.list("d", {1.1})},    {"f", cfg.list("f", {1.0})},
      {"g", cfg.list("g", {1.0})},    {"h", cfg.list("h", {1.0})},
      {"c", cfg.list("c", {0.0})},    {"mu0", cfg.list("mu0", {1.0})},
      {"sigma0", cfg.list("sigma0", {1.0})}};
  std::size_t n = 1;
  for (const auto& [k, v] : raw) n = std::max(n, v.size());
  for (auto& [k, v] : raw) v = broadcast(v, n, k.c_str());
  for (double s : raw["sigma0"])
    if (s < 0.0) throw ConfigError("sigma0 entries must be non-negative");
  StateSpaceModel m = StateSpaceModel::diagonal(
      as_vector(raw["d"]), as_vector(raw["f"]), as_vector(raw["g"]), as_vector(raw["h"]),
      as_vector(raw["c"]), as_vector(raw["mu0"]), as_vector(raw["sigma0"]));
  validate(m);
  return m;
}

inline double scalar(const RunConfig& cfg, const std::string& key, double fallback) {
  const auto v = cfg.list(key, {fallback});
  if (v.size() != 1) throw ConfigError("key '" + key + "' must be a single number");
  return v.front();
}

inline std::vector<OutputFile> run_filter(const RunConfig& cfg, const std::string& out) {
  const StateSpaceModel m = model_from(cfg);
  const std::size_t T = cfg.count("T", 20);
  if (T < 1) throw ConfigError("T must be at least 1");
  const FilterSchedule s = filter_schedule(m, T);
  Table table{{"t", "market", "sigma", "gain", "normalized_gain", "predicted_sigma"}, {}};
  for (std::size_t t = 0; t < T; ++t) {
    const Matrix normalized = m.D.partialPivLu().solve(s.gain[t]);
    const Prediction pred = predict(Belief{t, m.mu0, s.sigma[t]}, m);
    for (Eigen::Index i = 0; i < m.n(); ++i)
      table.rows.push_back({static_cast<double>(t), static_cast<double>(i), s.sigma[t](i, i),
                            s.gain[t](i, i), normalized(i, i), pred.covariance(i, i)});
  }
  return {{out, render(cfg, metadata(cfg), table)}};
}

inline std::vector<OutputFile> run_steady(const RunConfig& cfg, const std::string& out) {
  const StateSpaceModel m = model_from(cfg);
  RiccatiOptions opts;
  opts.tol = cfg.number("tol", opts.tol);
  opts.max_iter = cfg.count("max_iter", opts.max_iter);
  const SteadyState ss = riccati_fixed_point(m, opts);
  Table table{{"market", "sigma_star", "sigma_star_closed_form", "k_star", "voi", "pro_rata"},
              {}};
  const Matrix voi = voi_stage(ss.K_star, ss.Sigma_star);
  const Matrix pr = voi_pro_rata(ss.K_star, ss.Sigma_star);
  for (Eigen::Index i = 0; i < m.n(); ++i) {
    const double closed =
        sigma_star_closed_form(m.D(i, i), m.F(i, i), m.G(i, i), std::abs(m.H(i, i)));
    table.rows.push_back({static_cast<double>(i), ss.Sigma_star(i, i), closed, ss.K_star(i, i),
                          voi(i, i), pr(i, i)});
  }
  ordered_json meta = metadata(cfg);
  meta["iterations"] = ss.iterations;
  meta["residual"] = ss.residual;
  return {{out, render(cfg, meta, table)}};
}

inline std::string plot_data(const VoICurve& curve) {
  std::ostringstream out;
  out << "# classification=" << to_string(curve.classification);
  if (curve.interior_min)
    out << " interior_min_h=" << format_double(curve.interior_min->h)
        << " interior_min_voi=" << format_double(curve.interior_min->voi);
  else
    out << " interior_min=none";
  out << "\n# h voi\n";
  for (std::size_t i = 0; i < curve.h_grid.size(); ++i)
    out << format_double(curve.h_grid[i]) << ' ' << format_double(curve.voi[i]) << '\n';
  return out.str();
}

inline std::vector<OutputFile> run_voi_sweep(const RunConfig& cfg, const std::string& out) {
  const double d = scalar(cfg, "d", 1.1), f = scalar(cfg, "f", 1.0), g = scalar(cfg, "g", 1.0);
  if (d < 1.0 || !(f > 0.0) || !(g > 0.0))
    throw ConfigError("voi-sweep requires d >= 1, f > 0, g > 0");
  const VoICurve curve = voi_curve(d, f, g, cfg.list("h", parse_range("0:0.25:50", "h")));

  ordered_json meta = metadata(cfg);
  meta["classification"] = std::string(to_string(curve.classification));
  meta["curvature_at_zero"] = curvature_at_zero(d, g);
  if (curve.interior_min) {
    meta["interior_min_h"] = curve.interior_min->h;
    meta["interior_min_voi"] = curve.interior_min->voi;
  } else {
    meta["interior_min_h"] = nullptr;
  }
  Table table{{"h", "sigma_star", "k_star", "voi", "pro_rata"}, {}};
  for (std::size_t i = 0; i < curve.h_grid.size(); ++i)
    table.rows.push_back(
        {curve.h_grid[i], curve.sigma_star[i], curve.k_star[i], curve.voi[i], curve.pro_rata[i]});
  std::string summary = "classification=" + std::string(to_string(curve.classification));
  summary += curve.interior_min ? " interior_min_h=" + format_double(curve.interior_min->h)
                                : " interior_min=none";
  std::vector<OutputFile> files{{out, render(cfg, meta, table, summary)}};
  if (cfg.has("plot"))
    files.push_back({cfg.get("plot", ""), "# " + metadata(cfg).dump() + "\n" + plot_data(curve)});
  return files;
}

inline std::vector<OutputFile> run_region(const RunConfig& cfg, const std::string& out) {
  const GrowthRegion r = growth_threshold(scalar(cfg, "g", 1.0));
  ordered_json body;
  body["g"] = r.g;
  body["d_lower"] = r.d_lower;
  body["d_upper"] = r.d_upper;
  return {{out, render_object(cfg, metadata(cfg), body)}};
}

inline std::vector<OutputFile> run_simulate(const RunConfig& cfg, const std::string& out) {
  SimConfig sc;
  sc.model = model_from(cfg);
  sc.horizon = cfg.count("T", 20);
  sc.paths = cfg.count("paths", 10000);
  sc.seed = seed_of(cfg);
  const SimResult r = simulate(sc);
  ordered_json meta = metadata(cfg);
  meta["rng"] = kRngTag;
  meta["paths"] = r.paths;
  meta["markets"] = sc.model.n();
  Table table{{"t", "mean_price", "mean_profit", "se_profit", "mean_sq_belief_err",
               "sigma_t_predicted"},
              {}};
  const double N = static_cast<double>(r.paths);
  for (const auto& p : r.periods)
    table.rows.push_back({static_cast<double>(p.t), p.mean_price.mean(), p.mean_profit,
                          std::sqrt(p.var_profit / N), p.mean_sq_error.mean(),
                          p.sigma_predicted.diagonal().mean()});
  return {{out, render(cfg, meta, table)}};
}

inline std::vector<OutputFile> run_bellman(const RunConfig& cfg, const std::string& out) {
  NonMyopicModel m;
  m.d = scalar(cfg, "d", 1.2);
  m.f = scalar(cfg, "f", 1.0);
  m.h = scalar(cfg, "h", 1.0);
  m.b = scalar(cfg, "b", 1.0);
  m.c = scalar(cfg, "c", 1.0);
  m.delta = scalar(cfg, "delta", 0.9);
  validate(m);
  BellmanOptions opts;
  opts.tol = cfg.number("tol", opts.tol);
  opts.max_sweeps = cfg.count("max_sweeps", opts.max_sweeps);
  opts.quadrature_order = static_cast<int>(cfg.count("quad", 9));
  if (opts.quadrature_order < 1) throw ConfigError("quad must be at least 1");
  const GridSpec grid = default_grid(m, cfg.count("n_mu", 200), cfg.count("n_sigma", 100));
  const ValueFunctionGrid V = solve_bellman(m, grid, opts);

  ordered_json meta = metadata(cfg);
  meta["mu_grid"] = {{"lo", grid.mu.front()}, {"hi", grid.mu.back()}, {"n", grid.mu.size()},
                     {"spacing", "linear"}};
  meta["sigma_grid"] = {{"lo", grid.sigma.front()},
                        {"hi", grid.sigma.back()},
                        {"n", grid.sigma.size()},
                        {"spacing", grid.sigma.size() > 1 ? "geometric" : "single"}};
  meta["delta"] = m.delta;
  meta["quadrature_order"] = V.quadrature_order;
  meta["sweeps"] = V.sweeps;
  meta["residual"] = V.sweep_residual;
  meta["clamp_count"] = V.clamp_count;
  Table table{{"mu", "sigma", "value", "policy_price"}, {}};
  for (std::size_t j = 0; j < grid.sigma.size(); ++j)
    for (std::size_t i = 0; i < grid.mu.size(); ++i)
      table.rows.push_back({grid.mu[i], grid.sigma[j], V.values(i, j), V.policy(i, j)});
  return {{out, render(cfg, meta, table)}};
}

inline std::vector<OutputFile> run_euler_limit(const RunConfig& cfg, const std::string& out) {
  NonMyopicModel m;
  m.d = scalar(cfg, "d", 1.2);
  m.f = scalar(cfg, "f", 1.0);
  m.b = scalar(cfg, "b", 1.0);
  m.h = 0.0;
  m.delta = 0.5;
  validate(m);
  const double p = scalar(cfg, "p", 1.0);
  const double limit = euler_term_limit(p, m);
  ordered_json terms = ordered_json::array();
  for (double h : cfg.list("h", {10.0, 100.0, 1000.0, 10000.0})) {
    if (h < 0.0) throw ConfigError("h values must be non-negative");
    NonMyopicModel mh = m;
    mh.h = h;
    const double s = nm_sigma_star(p, mh);
    const double term = euler_term(p, s, mh);
    terms.push_back({{"h", h},
                     {"sigma_star", s},
                     {"euler_term", term},
                     {"abs_error", std::abs(term - limit)}});
  }
  ordered_json body;
  body["d"] = m.d;
  body["b"] = m.b;
  body["p"] = p;
  body["limit"] = limit;
  body["terms"] = std::move(terms);
  return {{out, render_object(cfg, metadata(cfg), body)}};
}

inline std::filesystem::path resolve_output(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir)
      return std::filesystem::path(dir) / p;
  }
  return p;
}

}  // namespace cli_detail

using cli_detail::plot_data;

// Writes the (h, voi) series with its classification header to `path`.
inline void emit_plot_data(const VoICurve& curve, const std::string& path) {
  const auto target = cli_detail::resolve_output(path);
  std::ofstream os(target, std::ios::binary);
  if (!os) throw ConfigError("cannot open plot file '" + target.string() + "'");
  os << plot_data(curve);
  if (!os) throw ConfigError("failed writing plot file '" + target.string() + "'");
}

// Validates and computes every output of a run without writing anything.
inline std::vector<OutputFile> compute_outputs(const RunConfig& cfg) {
  using namespace cli_detail;
  check_keys(cfg);
  format_of(cfg);
  seed_of(cfg);
  const std::string out = cfg.get("out", "");
  if (cfg.subcommand == "filter") return run_filter(cfg, out);
  if (cfg.subcommand == "steady") return run_steady(cfg, out);
  if (cfg.subcommand == "voi-sweep") return run_voi_sweep(cfg, out);
  if (cfg.subcommand == "region") return run_region(cfg, out);
  if (cfg.subcommand == "simulate") return run_simulate(cfg, out);
  if (cfg.subcommand == "bellman") return run_bellman(cfg, out);
  if (cfg.subcommand == "euler-limit") return run_euler_limit(cfg, out);
  throw ConfigError("unknown subcommand '" + cfg.subcommand + "'");
}

inline void write_outputs(const std::vector<OutputFile>& files, std::ostream& stdout_stream) {
  for (const auto& f : files) {
    if (f.path.empty()) {
      stdout_stream << f.content;
      continue;
    }
    const auto path = cli_detail::resolve_output(f.path);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open output file '" + path.string() + "'");
    os << f.content;
    if (!os) throw ConfigError("failed writing output file '" + path.string() + "'");
  }
}

inline int run(const RunConfig& cfg, std::ostream& stdout_stream, std::ostream& diag) {
  try {
    write_outputs(compute_outputs(cfg), stdout_stream);
    return kExitOk;
  } catch (const NumericalError& e) {
    diag << e.kind() << ": " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    diag << e.kind() << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    diag << "ConfigError: " << e.what() << '\n';
    return kExitConfig;
  }
}

// Rebuilds a RunConfig from the metadata header of an emitted file.
inline RunConfig config_from_metadata(const nlohmann::ordered_json& meta) {
  RunConfig cfg;
  cfg.subcommand = meta.at("subcommand").get<std::string>();
  for (auto it = meta.at("config").begin(); it != meta.at("config").end(); ++it)
    cfg.params[it.key()] = it.value().get<std::string>();
  check_keys(cfg);
  return cfg;
}

}  // namespace dynvoi
