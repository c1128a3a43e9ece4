#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pushpull/compression.hpp"
#include "pushpull/graph.hpp"
#include "pushpull/metrics.hpp"
#include "pushpull/problems.hpp"
#include "pushpull/rng.hpp"

namespace pushpull {

// Decaying scale schedule s_k^2 = a0 * a^k. a = 1 keeps the scale constant
// and is only meant for the no-dynamic-scaling ablation.
struct Schedule {
  double a0 = 1.0;
  double a = 0.99;
};

inline double scaling(long k, const Schedule& s) {
  if (k < 0) throw std::invalid_argument("scaling: k must be >= 0");
  return std::sqrt(s.a0) * std::pow(s.a, 0.5 * static_cast<double>(k));
}

struct RcppParams {
  double alpha_x = 0.5;  // in (0, 1/r]
  double alpha_y = 0.5;
  double gamma_x = 0.5;  // in (0, 1]
  double gamma_y = 0.5;
  Vector lambda;  // per-agent step-sizes, each >= 0 (diagonal of Lambda)
  Schedule schedule;
  CompressorSpec spec_x;
  CompressorSpec spec_y;
  long iterations = 1000;
  double r_scale = 1.0;  // the r of the compressor contract; bounds alpha
  bool broadcast_bits = false;  // one payload per agent instead of per out-edge
  bool allow_constant_schedule = false;

  void validate(int n) const {
    if (!(r_scale > 0.0)) throw std::invalid_argument("RcppParams: r must be positive");
    const double amax = 1.0 / r_scale;
    if (!(alpha_x > 0.0 && alpha_x <= amax) || !(alpha_y > 0.0 && alpha_y <= amax))
      throw std::invalid_argument("RcppParams: alpha_x, alpha_y must lie in (0, 1/r]");
    if (!(gamma_x > 0.0 && gamma_x <= 1.0) || !(gamma_y > 0.0 && gamma_y <= 1.0))
      throw std::invalid_argument("RcppParams: gamma_x, gamma_y must lie in (0, 1]");
    if (lambda.size() != n) throw std::invalid_argument("RcppParams: lambda must have one entry per agent");
    for (int i = 0; i < n; ++i)
      if (!(lambda(i) >= 0.0)) throw std::invalid_argument("RcppParams: step-sizes must be >= 0");
    if (!(schedule.a0 > 0.0)) throw std::invalid_argument("RcppParams: schedule a0 must be positive");
    if (!(schedule.a > 0.0 && schedule.a <= 1.0))
      throw std::invalid_argument("RcppParams: schedule a must lie in (0, 1]");
    if (schedule.a == 1.0 && !allow_constant_schedule)
      throw std::invalid_argument("RcppParams: a = 1 is the constant-scale ablation; set allow_constant_schedule");
    if (iterations < 0) throw std::invalid_argument("RcppParams: iterations must be >= 0");
    validate_spec(spec_x);
    validate_spec(spec_y);
  }
};

// Full per-iteration algorithm state. The H_R/H_C aggregates track R*H_x and
// C*H_y without storing neighbors' reference points.
struct RcppState {
  long k = 0;
  Matrix X;
  Matrix Y;
  Matrix Hx;
  Matrix Hy;
  Matrix HR;
  Matrix HC;
  std::uint64_t cumulative_bits = 0;
};

inline RcppState init_state(const LogisticProblem& prob, const Matrix& X0) {
  if (X0.rows() != prob.n || X0.cols() != prob.p)
    throw std::invalid_argument("init_state: X0 must be n x p");
  RcppState st;
  st.X = X0;
  st.Y = gradient_matrix(prob, X0);
  st.Hx = Matrix::Zero(prob.n, prob.p);
  st.Hy = Matrix::Zero(prob.n, prob.p);
  st.HR = Matrix::Zero(prob.n, prob.p);
  st.HC = Matrix::Zero(prob.n, prob.p);
  return st;
}

// One compression stream per agent per chain, split deterministically from
// the run seed so traces are independent of evaluation order.
struct ChainRngs {
  std::vector<RngStream> x;
  std::vector<RngStream> y;

  static ChainRngs make(std::uint64_t seed, int n) {
    ChainRngs r;
    r.x.reserve(static_cast<std::size_t>(n));
    r.y.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      r.x.emplace_back(derive_seed(seed, 2 * static_cast<std::uint64_t>(i)));
      r.y.emplace_back(derive_seed(seed, 2 * static_cast<std::uint64_t>(i) + 1));
    }
    return r;
  }
};

struct StepStats {
  std::uint64_t x_bits = 0;  // payload bits charged to the x-chain this round
  std::uint64_t y_bits = 0;
  double x_compression_error = 0.0;  // |Xhat - Xtilde|_F
  double y_compression_error = 0.0;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(long k, const std::string& diag)
      : std::runtime_error("rcpp: non-finite state at iteration " + std::to_string(k) + "; " + diag),
        iteration(k) {}
  long iteration;
};

namespace detail {

// out-degrees (self excluded) in the support graph of a mixing matrix:
// column i of M carries the edges agent i transmits on.
inline std::vector<int> transmit_degrees(const Matrix& M) {
  const int n = static_cast<int>(M.rows());
  std::vector<int> deg(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i && M(j, i) > 0.0) ++deg[static_cast<std::size_t>(i)];
  return deg;
}

}  // namespace detail

inline StepStats step(RcppState& st, const RcppParams& params, const MixingPair& pair,
                      const LogisticProblem& prob, ChainRngs& rngs) {
  const int n = prob.n;
  const int p = prob.p;
  const double s_k = scaling(st.k, params.schedule);
  StepStats stats;

  const auto deg_x = detail::transmit_degrees(pair.R);
  const auto deg_y = detail::transmit_degrees(pair.C);

  auto diagnostics = [&](double sk) {
    std::ostringstream diag;
    diag << "|X|_F=" << st.X.norm() << " |Y|_F=" << st.Y.norm() << " s_k=" << sk
         << " lambda_max=" << params.lambda.maxCoeff();
    return diag.str();
  };

  // x-chain: local update, difference compression, pull mixing
  Matrix Xt = st.X - params.lambda.asDiagonal() * st.Y;
  if (!Xt.allFinite()) throw DivergenceError(st.k, diagnostics(s_k));
  Matrix Qx(n, p);
  for (int i = 0; i < n; ++i) {
    const Vector diff = (Xt.row(i) - st.Hx.row(i)).transpose();
    ScaledCompression sc = dynamic_scale_compress(params.spec_x, diff, s_k, rngs.x[static_cast<std::size_t>(i)]);
    Qx.row(i) = sc.recovered.transpose();
    const std::uint64_t mult = params.broadcast_bits ? 1u : static_cast<std::uint64_t>(deg_x[static_cast<std::size_t>(i)]);
    stats.x_bits += static_cast<std::uint64_t>(sc.message.bit_count) * mult;
  }
  Matrix Xhat = st.Hx + Qx;
  Matrix XhatR = st.HR + pair.R * Qx;
  st.Hx = (1.0 - params.alpha_x) * st.Hx + params.alpha_x * Xhat;
  st.HR = (1.0 - params.alpha_x) * st.HR + params.alpha_x * XhatR;
  Matrix Xnew = Xt - params.gamma_x * (Xhat - XhatR);
  stats.x_compression_error = (Xhat - Xt).norm();

  // y-chain: gradient-tracking update, difference compression, push mixing.
  // Grouped as (Y - grad) + grad so a consensual tracker cancels exactly.
  Matrix Yt = (st.Y - gradient_matrix(prob, st.X)) + gradient_matrix(prob, Xnew);
  if (!Yt.allFinite()) throw DivergenceError(st.k, diagnostics(s_k));
  Matrix Qy(n, p);
  for (int i = 0; i < n; ++i) {
    const Vector diff = (Yt.row(i) - st.Hy.row(i)).transpose();
    ScaledCompression sc = dynamic_scale_compress(params.spec_y, diff, s_k, rngs.y[static_cast<std::size_t>(i)]);
    Qy.row(i) = sc.recovered.transpose();
    const std::uint64_t mult = params.broadcast_bits ? 1u : static_cast<std::uint64_t>(deg_y[static_cast<std::size_t>(i)]);
    stats.y_bits += static_cast<std::uint64_t>(sc.message.bit_count) * mult;
  }
  Matrix Yhat = st.Hy + Qy;
  Matrix YhatC = st.HC + pair.C * Qy;
  st.Hy = (1.0 - params.alpha_y) * st.Hy + params.alpha_y * Yhat;
  st.HC = (1.0 - params.alpha_y) * st.HC + params.alpha_y * YhatC;
  Matrix Ynew = Yt - params.gamma_y * (Yhat - YhatC);
  stats.y_compression_error = (Yhat - Yt).norm();

  st.X = std::move(Xnew);
  st.Y = std::move(Ynew);
  st.cumulative_bits += stats.x_bits + stats.y_bits;
  ++st.k;

  if (!st.X.allFinite() || !st.Y.allFinite()) throw DivergenceError(st.k, diagnostics(s_k));
  return stats;
}

struct RunResult {
  std::vector<MetricsRecord> trace;
  RcppState final_state;
};

inline RunResult run(const LogisticProblem& prob, const MixingPair& pair, const RcppParams& params,
                     const Matrix& X0, std::uint64_t seed, long record_every = 1,
                     const ReferenceSolution* reference = nullptr, bool collect_timing = false) {
  params.validate(prob.n);
  if (record_every < 1) throw std::invalid_argument("run: record_every must be >= 1");
  RcppState st = init_state(prob, X0);
  ChainRngs rngs = ChainRngs::make(seed, prob.n);
  RunResult result;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed_ms = [&]() {
    if (!collect_timing) return 0.0;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };
  result.trace.push_back(
      compute_record(0, st.X, st.Y, st.cumulative_bits, scaling(0, params.schedule), prob, pair, reference));
  result.trace.back().wall_ms = elapsed_ms();
  for (long k = 1; k <= params.iterations; ++k) {
    step(st, params, pair, prob, rngs);
    if (k % record_every == 0 || k == params.iterations) {
      result.trace.push_back(compute_record(k, st.X, st.Y, st.cumulative_bits,
                                            scaling(k, params.schedule), prob, pair, reference));
      result.trace.back().wall_ms = elapsed_ms();
    }
  }
  result.final_state = std::move(st);
  return result;
}

// --- checkpoint format ------------------------------------------------------
// "PPCHKPT1", u64 n, p, k, cumulative_bits, the six state matrices as
// row-major little-endian f64, then the 2n rng streams as length-prefixed
// text dumps (x streams first).

inline void save_checkpoint(const std::string& path, const RcppState& st, const ChainRngs& rngs) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  os.write("PPCHKPT1", 8);
  const auto n = static_cast<std::uint64_t>(st.X.rows());
  const auto p = static_cast<std::uint64_t>(st.X.cols());
  detail::write_u64_le(os, n);
  detail::write_u64_le(os, p);
  detail::write_u64_le(os, static_cast<std::uint64_t>(st.k));
  detail::write_u64_le(os, st.cumulative_bits);
  for (const Matrix* m : {&st.X, &st.Y, &st.Hx, &st.Hy, &st.HR, &st.HC})
    for (Eigen::Index i = 0; i < m->rows(); ++i)
      for (Eigen::Index j = 0; j < m->cols(); ++j) detail::write_f64_le(os, (*m)(i, j));
  auto write_stream = [&](const RngStream& s) {
    const std::string dump = s.save_state();
    detail::write_u64_le(os, dump.size());
    os.write(dump.data(), static_cast<std::streamsize>(dump.size()));
  };
  detail::write_u64_le(os, static_cast<std::uint64_t>(rngs.x.size()));
  for (const auto& s : rngs.x) write_stream(s);
  for (const auto& s : rngs.y) write_stream(s);
  if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

inline void load_checkpoint(const std::string& path, RcppState& st, ChainRngs& rngs) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != "PPCHKPT1")
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  const auto n = static_cast<Eigen::Index>(detail::read_u64_le(is));
  const auto p = static_cast<Eigen::Index>(detail::read_u64_le(is));
  st.k = static_cast<long>(detail::read_u64_le(is));
  st.cumulative_bits = detail::read_u64_le(is);
  for (Matrix* m : {&st.X, &st.Y, &st.Hx, &st.Hy, &st.HR, &st.HC}) {
    m->resize(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < p; ++j) (*m)(i, j) = detail::read_f64_le(is);
  }
  const auto streams = static_cast<std::size_t>(detail::read_u64_le(is));
  auto read_stream = [&](RngStream& s) {
    const auto len = detail::read_u64_le(is);
    std::string dump(len, '\0');
    is.read(dump.data(), static_cast<std::streamsize>(len));
    if (!is) throw std::runtime_error("load_checkpoint: truncated rng state");
    s.load_state(dump);
  };
  rngs.x.assign(streams, RngStream());
  rngs.y.assign(streams, RngStream());
  for (auto& s : rngs.x) read_stream(s);
  for (auto& s : rngs.y) read_stream(s);
}

}  // namespace pushpull
