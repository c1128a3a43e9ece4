#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pushpull/compression.hpp"
#include "pushpull/problems.hpp"
#include "pushpull/rcpp.hpp"

namespace pushpull {

// Flat "key = value" files with dotted sections and '#' comments. Values keep
// internal spaces (compressor specs); duplicate keys are rejected.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_text(buf.str(), path);
  }

  static KeyValueConfig parse_text(const std::string& text, const std::string& origin = "<text>") {
    KeyValueConfig cfg;
    cfg.origin_ = origin;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
      };
      const std::string t = trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (key.empty())
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
      if (cfg.values_.count(key))
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
      cfg.values_[key] = value;
      cfg.order_.push_back(key);
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::runtime_error(origin_ + ": missing key '" + key + "'");
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
  }

  double get_double(const std::string& key) const {
    const std::string& v = get(key);
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw std::runtime_error(origin_ + ": key '" + key + "': expected a number, got '" + v + "'");
    }
  }

  double get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  long get_long(const std::string& key) const {
    const std::string& v = get(key);
    try {
      std::size_t pos = 0;
      const long d = std::stol(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw std::runtime_error(origin_ + ": key '" + key + "': expected an integer, got '" + v + "'");
    }
  }

  long get_long_or(const std::string& key, long fallback) const {
    return has(key) ? get_long(key) : fallback;
  }

  bool get_bool_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = get(key);
    if (v == "true" || v == "on") return true;
    if (v == "false" || v == "off") return false;
    throw std::runtime_error(origin_ + ": key '" + key + "': expected true/false, got '" + v + "'");
  }

  void set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
  }

  void erase(const std::string& key) {
    values_.erase(key);
    order_.erase(std::remove(order_.begin(), order_.end(), key), order_.end());
  }

  const std::vector<std::string>& order() const { return order_; }
  const std::map<std::string, std::string>& values() const { return values_; }
  const std::string& origin() const { return origin_; }

 private:
  std::string origin_ = "<empty>";
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

enum class MetricMode { ConvexResidual, NonconvexGradNorm };

struct ExperimentConfig {
  MetricMode mode = MetricMode::ConvexResidual;
  std::uint64_t seed = 1;
  long record_every = 1;
  bool timing = false;

  int p = 50, n = 20, J = 10;
  double sigma = 1.0, rho = 0.01;
  Regularizer regularizer = Regularizer::Convex;
  std::uint64_t problem_seed = 1;

  double extra_edge_prob = 0.1;
  std::uint64_t graph_seed = 1;

  CompressorSpec spec_x;
  CompressorSpec spec_y;

  double alpha_x = 0.5, alpha_y = 0.5;
  double gamma_x = 0.5, gamma_y = 0.5;
  double lambda_uniform = 0.1;
  std::map<int, double> lambda_overrides;
  double schedule_a0 = 1.0, schedule_a = 0.99;
  double r_scale = 1.0;
  long iterations = 1000;
  bool broadcast_bits = false;
  bool allow_constant_schedule = false;

  bool shared_init = false;
  double reference_tol = 1e-10;

  std::string csv_name = "trace.csv";
  std::string svg_name = "trace.svg";

  Vector lambda_vector() const {
    Vector lam = Vector::Constant(n, lambda_uniform);
    for (const auto& [i, v] : lambda_overrides) {
      if (i < 0 || i >= n) throw std::runtime_error("config: algo.lambda." + std::to_string(i) +
                                                    " is out of range for n = " + std::to_string(n));
      lam(i) = v;
    }
    return lam;
  }

  RcppParams rcpp_params() const {
    RcppParams params;
    params.alpha_x = alpha_x;
    params.alpha_y = alpha_y;
    params.gamma_x = gamma_x;
    params.gamma_y = gamma_y;
    params.lambda = lambda_vector();
    params.schedule = {schedule_a0, schedule_a};
    params.spec_x = spec_x;
    params.spec_y = spec_y;
    params.iterations = iterations;
    params.r_scale = r_scale;
    params.broadcast_bits = broadcast_bits;
    params.allow_constant_schedule = allow_constant_schedule;
    return params;
  }
};

namespace detail {

inline bool is_known_experiment_key(const std::string& k) {
  static const char* exact[] = {
      "mode",          "seed",          "record_every",   "timing",
      "problem.p",     "problem.n",     "problem.J",      "problem.sigma",
      "problem.rho",   "problem.regularizer",             "problem.seed",
      "graph.extra_edge_prob",          "graph.seed",
      "compressor.x",  "compressor.y",
      "algo.alpha_x",  "algo.alpha_y",  "algo.gamma_x",   "algo.gamma_y",
      "algo.lambda",   "algo.schedule.a0",                "algo.schedule.a",
      "algo.r",        "algo.iterations",                 "algo.broadcast_bits",
      "algo.allow_constant_schedule",
      "init.shared",   "reference.tol", "output.csv",     "output.svg",
  };
  for (const char* e : exact)
    if (k == e) return true;
  if (k.rfind("algo.lambda.", 0) == 0) return true;
  if (k.rfind("theory.", 0) == 0) return true;  // consumed by the theory report
  return false;
}

}  // namespace detail

// Builds a typed experiment config, rejecting unknown keys and inconsistent
// cross-field combinations.
inline ExperimentConfig build_experiment_config(const KeyValueConfig& kv) {
  for (const auto& key : kv.order())
    if (!detail::is_known_experiment_key(key))
      throw std::runtime_error(kv.origin() + ": unknown key '" + key +
                               "' (suite files go through the suite subcommand)");

  ExperimentConfig cfg;
  const std::string mode = kv.get_or("mode", "convex-residual");
  if (mode == "convex-residual")
    cfg.mode = MetricMode::ConvexResidual;
  else if (mode == "nonconvex-gradnorm")
    cfg.mode = MetricMode::NonconvexGradNorm;
  else
    throw std::runtime_error(kv.origin() + ": mode must be convex-residual or nonconvex-gradnorm");

  cfg.seed = static_cast<std::uint64_t>(kv.get_long_or("seed", 1));
  cfg.record_every = kv.get_long_or("record_every", 1);
  if (cfg.record_every < 1) throw std::runtime_error(kv.origin() + ": record_every must be >= 1");
  cfg.timing = kv.get_bool_or("timing", false);

  cfg.p = static_cast<int>(kv.get_long("problem.p"));
  cfg.n = static_cast<int>(kv.get_long("problem.n"));
  cfg.J = static_cast<int>(kv.get_long("problem.J"));
  cfg.sigma = kv.get_double_or("problem.sigma", 1.0);
  cfg.rho = kv.get_double_or("problem.rho", 0.01);
  const std::string reg = kv.get_or("problem.regularizer", "convex");
  if (reg == "convex")
    cfg.regularizer = Regularizer::Convex;
  else if (reg == "nonconvex")
    cfg.regularizer = Regularizer::Nonconvex;
  else
    throw std::runtime_error(kv.origin() + ": problem.regularizer must be convex or nonconvex");
  cfg.problem_seed = static_cast<std::uint64_t>(kv.get_long_or("problem.seed", 1));

  cfg.extra_edge_prob = kv.get_double_or("graph.extra_edge_prob", 0.1);
  cfg.graph_seed = static_cast<std::uint64_t>(kv.get_long_or("graph.seed", 1));

  try {
    cfg.spec_x = parse_compressor(kv.get_or("compressor.x", "identity"));
    cfg.spec_y = parse_compressor(kv.get_or("compressor.y", "identity"));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(kv.origin() + ": " + e.what());
  }

  cfg.alpha_x = kv.get_double_or("algo.alpha_x", 0.5);
  cfg.alpha_y = kv.get_double_or("algo.alpha_y", 0.5);
  cfg.gamma_x = kv.get_double_or("algo.gamma_x", 0.5);
  cfg.gamma_y = kv.get_double_or("algo.gamma_y", 0.5);
  cfg.lambda_uniform = kv.get_double("algo.lambda");
  for (const auto& key : kv.order())
    if (key.rfind("algo.lambda.", 0) == 0)
      cfg.lambda_overrides[std::stoi(key.substr(12))] = kv.get_double(key);
  cfg.schedule_a0 = kv.get_double_or("algo.schedule.a0", 1.0);
  cfg.schedule_a = kv.get_double_or("algo.schedule.a", 0.99);
  cfg.r_scale = kv.get_double_or("algo.r", 1.0);
  cfg.iterations = kv.get_long("algo.iterations");
  cfg.broadcast_bits = kv.get_bool_or("algo.broadcast_bits", false);
  cfg.allow_constant_schedule = kv.get_bool_or("algo.allow_constant_schedule", false);

  cfg.shared_init = kv.get_bool_or("init.shared", false);
  cfg.reference_tol = kv.get_double_or("reference.tol", 1e-10);
  cfg.csv_name = kv.get_or("output.csv", "trace.csv");
  cfg.svg_name = kv.get_or("output.svg", "trace.svg");

  if (cfg.mode == MetricMode::ConvexResidual && cfg.regularizer != Regularizer::Convex)
    throw std::runtime_error(kv.origin() +
                             ": convex-residual mode requires problem.regularizer = convex");
  try {
    cfg.rcpp_params().validate(cfg.n);  // surface range errors at load time
  } catch (const std::exception& e) {
    throw std::runtime_error(kv.origin() + ": " + e.what());
  }
  return cfg;
}

// Canonical resolved key order; a CSV header emitted from this list parses
// back into an identical configuration.
inline std::vector<std::pair<std::string, std::string>> canonical_kv(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  auto num = [](double v) { return detail::format_double(v); };
  kv.emplace_back("mode", cfg.mode == MetricMode::ConvexResidual ? "convex-residual"
                                                                 : "nonconvex-gradnorm");
  kv.emplace_back("seed", std::to_string(cfg.seed));
  kv.emplace_back("record_every", std::to_string(cfg.record_every));
  kv.emplace_back("timing", cfg.timing ? "on" : "off");
  kv.emplace_back("problem.p", std::to_string(cfg.p));
  kv.emplace_back("problem.n", std::to_string(cfg.n));
  kv.emplace_back("problem.J", std::to_string(cfg.J));
  kv.emplace_back("problem.sigma", num(cfg.sigma));
  kv.emplace_back("problem.rho", num(cfg.rho));
  kv.emplace_back("problem.regularizer",
                  cfg.regularizer == Regularizer::Convex ? "convex" : "nonconvex");
  kv.emplace_back("problem.seed", std::to_string(cfg.problem_seed));
  kv.emplace_back("graph.extra_edge_prob", num(cfg.extra_edge_prob));
  kv.emplace_back("graph.seed", std::to_string(cfg.graph_seed));
  kv.emplace_back("compressor.x", to_string(cfg.spec_x));
  kv.emplace_back("compressor.y", to_string(cfg.spec_y));
  kv.emplace_back("algo.alpha_x", num(cfg.alpha_x));
  kv.emplace_back("algo.alpha_y", num(cfg.alpha_y));
  kv.emplace_back("algo.gamma_x", num(cfg.gamma_x));
  kv.emplace_back("algo.gamma_y", num(cfg.gamma_y));
  kv.emplace_back("algo.lambda", num(cfg.lambda_uniform));
  for (const auto& [i, v] : cfg.lambda_overrides)
    kv.emplace_back("algo.lambda." + std::to_string(i), num(v));
  kv.emplace_back("algo.schedule.a0", num(cfg.schedule_a0));
  kv.emplace_back("algo.schedule.a", num(cfg.schedule_a));
  kv.emplace_back("algo.r", num(cfg.r_scale));
  kv.emplace_back("algo.iterations", std::to_string(cfg.iterations));
  kv.emplace_back("algo.broadcast_bits", cfg.broadcast_bits ? "true" : "false");
  kv.emplace_back("algo.allow_constant_schedule", cfg.allow_constant_schedule ? "true" : "false");
  kv.emplace_back("init.shared", cfg.shared_init ? "true" : "false");
  kv.emplace_back("reference.tol", num(cfg.reference_tol));
  kv.emplace_back("output.csv", cfg.csv_name);
  kv.emplace_back("output.svg", cfg.svg_name);
  return kv;
}

}  // namespace pushpull
