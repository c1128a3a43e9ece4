#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "pushpull/config.hpp"
#include "pushpull/metrics.hpp"
#include "pushpull/rcpp.hpp"
#include "pushpull/svg.hpp"
#include "pushpull/theory.hpp"

namespace pushpull {

// --- trace CSV --------------------------------------------------------------
// Header block: "# pushpull trace v1" then one "# key = value" line per
// resolved config key; the column set and order below are fixed.

inline constexpr const char* kTraceColumns =
    "k,residual,grad_norm,consensus_err,tracking_err,tracking_gap,bits,s_k,wall_ms";

namespace detail {

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + tmp + " for writing");
    os << content;
    if (!os) throw std::runtime_error("write failed for " + tmp);
  }
  std::remove(path.c_str());
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

}  // namespace detail

inline std::string format_trace_csv(const ExperimentConfig& cfg,
                                    const std::vector<MetricsRecord>& trace) {
  std::string out = "# pushpull trace v1\n";
  for (const auto& [k, v] : canonical_kv(cfg)) out += "# " + k + " = " + v + "\n";
  out += kTraceColumns;
  out += "\n";
  for (const auto& r : trace) {
    out += std::to_string(r.k);
    out += ",";
    out += detail::csv_num(r.residual);
    out += ",";
    out += detail::csv_num(r.grad_norm);
    out += ",";
    out += detail::csv_num(r.consensus_error);
    out += ",";
    out += detail::csv_num(r.tracking_error);
    out += ",";
    out += detail::csv_num(r.tracking_gap);
    out += ",";
    out += std::to_string(r.cumulative_bits);
    out += ",";
    out += detail::csv_num(r.s_k);
    out += ",";
    out += detail::csv_num(r.wall_ms);
    out += "\n";
  }
  return out;
}

// Recovers the full configuration embedded in a trace header; the trace is
// regenerable from it.
inline ExperimentConfig parse_trace_header(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line, kvtext;
  while (std::getline(is, line)) {
    if (line.rfind("# ", 0) != 0) break;
    const std::string body = line.substr(2);
    if (body.find('=') != std::string::npos) kvtext += body + "\n";
  }
  return build_experiment_config(KeyValueConfig::parse_text(kvtext, path + " (header)"));
}

// --- experiment driver -------------------------------------------------------

inline Matrix initial_decision_matrix(const ExperimentConfig& cfg) {
  RngStream rng(derive_seed(cfg.seed, 0x9e3779b9ULL));
  Matrix X0(cfg.n, cfg.p);
  if (cfg.shared_init) {
    Vector row(cfg.p);
    for (int t = 0; t < cfg.p; ++t) row(t) = rng.uniform();
    for (int i = 0; i < cfg.n; ++i) X0.row(i) = row.transpose();
  } else {
    for (int i = 0; i < cfg.n; ++i)
      for (int t = 0; t < cfg.p; ++t) X0(i, t) = rng.uniform();
  }
  return X0;
}

struct ExperimentArtifacts {
  ExperimentConfig config;
  std::vector<MetricsRecord> trace;
  std::string csv_path;  // empty when not written
  std::string svg_path;
};

inline ExperimentArtifacts run_experiment(const ExperimentConfig& cfg,
                                          const std::string& out_dir = "",
                                          bool write_svg = false) {
  ExperimentArtifacts art;
  art.config = cfg;

  const LogisticProblem prob =
      generate_problem(cfg.p, cfg.n, cfg.J, cfg.sigma, cfg.rho, cfg.regularizer, cfg.problem_seed);
  const MixingPair pair = build_mixing_pair(generate_digraph(cfg.n, cfg.extra_edge_prob, cfg.graph_seed));

  ReferenceSolution reference;
  const ReferenceSolution* ref = nullptr;
  if (cfg.mode == MetricMode::ConvexResidual) {
    reference = solve_reference(prob, cfg.reference_tol);
    ref = &reference;
  }

  const Matrix X0 = initial_decision_matrix(cfg);
  RunResult result =
      run(prob, pair, cfg.rcpp_params(), X0, cfg.seed, cfg.record_every, ref, cfg.timing);
  art.trace = std::move(result.trace);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    art.csv_path = (std::filesystem::path(out_dir) / cfg.csv_name).string();
    detail::write_file_atomic(art.csv_path, format_trace_csv(cfg, art.trace));
    if (write_svg && !cfg.svg_name.empty()) {
      PlotSeries vk{cfg.csv_name, {}}, vb{cfg.csv_name, {}};
      for (const auto& r : art.trace) {
        const double metric = cfg.mode == MetricMode::ConvexResidual ? r.residual : r.grad_norm;
        vk.points.emplace_back(static_cast<double>(r.k), metric);
        vb.points.emplace_back(static_cast<double>(r.cumulative_bits), metric);
      }
      const std::string ylabel =
          cfg.mode == MetricMode::ConvexResidual ? "residual f(xbar) - f*" : "gradient norm";
      art.svg_path = (std::filesystem::path(out_dir) / cfg.svg_name).string();
      write_two_panel_svg(art.svg_path, "pushpull experiment", ylabel, {vk}, {vb});
    }
  }
  return art;
}

// --- suites -------------------------------------------------------------------

struct SuiteMember {
  std::string run_name;
  std::uint64_t seed = 0;
  ExperimentConfig config;
  ExperimentArtifacts artifacts;
};

struct SuiteArtifacts {
  std::string name;
  std::vector<SuiteMember> members;  // run-major, then seed
  std::vector<std::string> run_names;
  std::vector<std::uint64_t> seeds;
  std::string summary_csv_path;
  std::string overlay_svg_path;
};

namespace detail {

inline int suite_thread_budget() {
  if (const char* env = std::getenv("PUSHPULL_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (tok.empty()) continue;
    seeds.push_back(static_cast<std::uint64_t>(std::stoull(tok)));
  }
  if (seeds.empty()) throw std::runtime_error("suite.seeds: empty seed list");
  return seeds;
}

}  // namespace detail

// Suite file = base experiment keys + suite.name / suite.seeds +
// run.<idx>.<key> overrides (run.<idx>.name labels the run).
inline SuiteArtifacts run_suite(const KeyValueConfig& kv, const std::string& out_dir,
                                bool write_svg = true) {
  SuiteArtifacts suite;
  suite.name = kv.get_or("suite.name", "suite");

  KeyValueConfig base = KeyValueConfig::parse_text("", kv.origin());
  std::map<int, std::map<std::string, std::string>> overrides;
  for (const auto& key : kv.order()) {
    if (key.rfind("run.", 0) == 0) {
      const auto dot = key.find('.', 4);
      if (dot == std::string::npos)
        throw std::runtime_error(kv.origin() + ": malformed run override '" + key + "'");
      int idx = 0;
      try {
        std::size_t pos = 0;
        const std::string num = key.substr(4, dot - 4);
        idx = std::stoi(num, &pos);
        if (pos != num.size()) throw std::invalid_argument(num);
      } catch (const std::exception&) {
        throw std::runtime_error(kv.origin() + ": malformed run index in '" + key + "'");
      }
      overrides[idx][key.substr(dot + 1)] = kv.get(key);
    } else if (key == "suite.name" || key == "suite.seeds") {
      continue;
    } else if (key.rfind("suite.", 0) == 0) {
      throw std::runtime_error(kv.origin() + ": unknown suite key '" + key + "'");
    } else {
      base.set(key, kv.get(key));
    }
  }
  if (overrides.empty()) overrides[0] = {};  // suite of one

  suite.seeds = kv.has("suite.seeds")
                    ? detail::parse_seed_list(kv.get("suite.seeds"))
                    : std::vector<std::uint64_t>{static_cast<std::uint64_t>(base.has("seed") ? std::stoull(base.get("seed")) : 1ull)};

  for (const auto& [idx, ov] : overrides) {
    std::string name = "run" + std::to_string(idx);
    if (const auto it = ov.find("name"); it != ov.end()) name = it->second;
    suite.run_names.push_back(name);
    for (const std::uint64_t seed : suite.seeds) {
      KeyValueConfig member = base;
      for (const auto& [k, v] : ov)
        if (k != "name") member.set(k, v);
      member.set("seed", std::to_string(seed));
      member.set("output.csv", suite.name + "_" + name + "_seed" + std::to_string(seed) + ".csv");
      member.set("output.svg", "");
      SuiteMember m;
      m.run_name = name;
      m.seed = seed;
      m.config = build_experiment_config(member);
      suite.members.push_back(std::move(m));
    }
  }

  // members run independently; outputs are per-member files, so any thread
  // count produces identical artifacts
  const int budget = detail::suite_thread_budget();
  std::size_t next = 0;
  while (next < suite.members.size()) {
    const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(budget),
                                                    suite.members.size() - next);
    std::vector<std::thread> workers;
    std::vector<std::string> errors(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      SuiteMember& m = suite.members[next + b];
      workers.emplace_back([&m, &out_dir, &errors, b]() {
        try {
          m.artifacts = run_experiment(m.config, out_dir, false);
        } catch (const std::exception& e) {
          errors[b] = e.what();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (const auto& err : errors)
      if (!err.empty()) throw std::runtime_error("suite member failed: " + err);
    next += batch;
  }

  // summary: one row per run; per-seed columns plus a mean column
  std::string csv = "# pushpull suite summary v1\n# suite = " + suite.name + "\n";
  csv += "run";
  for (const auto s : suite.seeds) {
    const std::string tag = "[s" + std::to_string(s) + "]";
    csv += ",final_residual" + tag + ",final_grad_norm" + tag + ",bits" + tag;
  }
  csv += ",final_residual[mean],final_grad_norm[mean],bits[mean]\n";
  const std::size_t per_run = suite.seeds.size();
  for (std::size_t r = 0; r < suite.run_names.size(); ++r) {
    csv += suite.run_names[r];
    double res_sum = 0, grad_sum = 0, bits_sum = 0;
    for (std::size_t s = 0; s < per_run; ++s) {
      const auto& rec = suite.members[r * per_run + s].artifacts.trace.back();
      csv += "," + detail::csv_num(rec.residual) + "," + detail::csv_num(rec.grad_norm) + "," +
             std::to_string(rec.cumulative_bits);
      res_sum += rec.residual;
      grad_sum += rec.grad_norm;
      bits_sum += static_cast<double>(rec.cumulative_bits);
    }
    const double dn = static_cast<double>(per_run);
    csv += "," + detail::csv_num(res_sum / dn) + "," + detail::csv_num(grad_sum / dn) + "," +
           detail::csv_num(bits_sum / dn) + "\n";
  }
  std::filesystem::create_directories(out_dir);
  suite.summary_csv_path =
      (std::filesystem::path(out_dir) / (suite.name + "_summary.csv")).string();
  detail::write_file_atomic(suite.summary_csv_path, csv);

  if (write_svg) {
    std::vector<PlotSeries> vk, vb;
    for (std::size_t r = 0; r < suite.run_names.size(); ++r) {
      const auto& member = suite.members[r * per_run];  // first seed per run
      PlotSeries sk{suite.run_names[r], {}}, sb{suite.run_names[r], {}};
      for (const auto& rec : member.artifacts.trace) {
        const double metric =
            member.config.mode == MetricMode::ConvexResidual ? rec.residual : rec.grad_norm;
        sk.points.emplace_back(static_cast<double>(rec.k), metric);
        sb.points.emplace_back(static_cast<double>(rec.cumulative_bits), metric);
      }
      vk.push_back(std::move(sk));
      vb.push_back(std::move(sb));
    }
    const bool convex = !suite.members.empty() &&
                        suite.members.front().config.mode == MetricMode::ConvexResidual;
    suite.overlay_svg_path =
        (std::filesystem::path(out_dir) / (suite.name + "_overlay.svg")).string();
    write_two_panel_svg(suite.overlay_svg_path, "pushpull suite: " + suite.name,
                        convex ? "residual f(xbar) - f*" : "gradient norm", vk, vb);
  }
  return suite;
}

// --- theory report -------------------------------------------------------------

// Renders the provable parameter region next to the configured parameters.
// The norm-equivalence constants cannot be derived here; they must be given
// explicitly under theory.* (no defaults).
inline std::string print_theory_report(const KeyValueConfig& kv) {
  const ExperimentConfig cfg = build_experiment_config(kv);

  static const char* required[] = {"theory.L",        "theory.theta_R",  "theory.theta_C",
                                   "theory.delta_R2", "theory.delta_C2", "theory.C",
                                   "theory.delta",    "theory.r",        "theory.sigma2",
                                   "theory.sigma2_r", "theory.M",        "theory.mu"};
  std::string missing;
  for (const char* k : required)
    if (!kv.has(k)) missing += std::string(missing.empty() ? "" : ", ") + k;
  if (!missing.empty())
    throw std::runtime_error(kv.origin() + ": theory report needs explicit constants; missing: " +
                             missing);

  const MixingPair pair =
      build_mixing_pair(generate_digraph(cfg.n, cfg.extra_edge_prob, cfg.graph_seed));

  TheoryInputs in;
  in.L = kv.get_double("theory.L");
  in.theta_R = kv.get_double("theory.theta_R");
  in.theta_C = kv.get_double("theory.theta_C");
  in.delta_R2 = kv.get_double("theory.delta_R2");
  in.delta_C2 = kv.get_double("theory.delta_C2");
  in.C = kv.get_double("theory.C");
  in.delta = kv.get_double("theory.delta");
  in.r = kv.get_double("theory.r");
  in.sigma2 = kv.get_double("theory.sigma2");
  in.sigma2_r = kv.get_double("theory.sigma2_r");
  in.M = kv.get_double("theory.M");
  in.mu = kv.get_double("theory.mu");
  in.alpha_x = cfg.alpha_x;
  in.alpha_y = cfg.alpha_y;
  in.n = cfg.n;
  in.norm_uR = pair.u_R.norm();
  in.norm_uC = pair.u_C.norm();

  const double lam_hat = cfg.lambda_vector().maxCoeff();
  const TheoryBounds best = theory_bounds(in);
  const TheoryBounds at = theory_bounds_at(in, cfg.gamma_x, cfg.gamma_y, lam_hat);

  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };
  auto verdict = [&](bool ok) { return ok ? "inside" : "OUTSIDE"; };

  std::ostringstream os;
  os << "provable parameter region (graph: n=" << cfg.n << ", |u_R|=" << num(in.norm_uR)
     << ", |u_C|=" << num(in.norm_uC) << ")\n";
  os << "  constants: e1=" << num(at.e1) << " e2=" << num(at.e2) << " e3=" << num(at.e3)
     << " e4=" << num(at.e4) << " e5=" << num(at.e5) << "\n";
  os << "             A=" << num(at.A) << " B=" << num(at.B) << " D=" << num(at.D)
     << " E=" << num(at.E) << " beta=" << num(at.beta) << "\n";
  os << "  largest provable point: gamma_y<=" << num(best.gamma_y_max)
     << ", gamma_x<=" << num(best.gamma_x_max) << ", lambda_hat<=" << num(best.lambda_hat_max)
     << " (rho_tilde=" << num(best.rho_tilde) << ")\n";
  os << "  configured: gamma_x=" << num(cfg.gamma_x) << ", gamma_y=" << num(cfg.gamma_y)
     << ", lambda_hat=" << num(lam_hat) << "\n";
  const bool ok_gy = cfg.gamma_y <= best.gamma_y_max;
  const bool ok_gx = cfg.gamma_x <= theory_gamma_x_max(in, cfg.gamma_y);
  const bool ok_lh = lam_hat <= at.lambda_hat_max;
  os << "  checks: gamma_y " << verdict(ok_gy) << " (max " << num(best.gamma_y_max) << ")"
     << "; gamma_x " << verdict(ok_gx) << " (max " << num(theory_gamma_x_max(in, cfg.gamma_y))
     << " at configured gamma_y)"
     << "; lambda_hat " << verdict(ok_lh) << " (max " << num(at.lambda_hat_max)
     << " at configured gammas)\n";
  os << "  linear rate factor at configured point: rho_tilde=" << num(at.rho_tilde)
     << " (mu=" << num(in.mu) << ")\n";
  os << "  overall: " << ((ok_gy && ok_gx && ok_lh) ? "parameters are inside the provable region"
                                                    : "parameters are OUTSIDE the provable region")
     << "\n";
  return os.str();
}

}  // namespace pushpull
