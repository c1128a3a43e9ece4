#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>

#include "pushpull/graph.hpp"
#include "pushpull/problems.hpp"

namespace pushpull {

// One row of the per-iteration trace. residual is NaN in gradient-norm mode;
// wall_ms is zero unless timing collection is switched on (traces stay
// byte-reproducible by default).
struct MetricsRecord {
  long k = 0;
  double residual = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = 0.0;
  double consensus_error = 0.0;  // |X - 1 xbar^T|_F^2
  double tracking_error = 0.0;   // |Y - u_C ybar^T|_F^2
  double tracking_gap = 0.0;     // |1^T Y - 1^T grad F(X)|
  std::uint64_t cumulative_bits = 0;
  double s_k = 0.0;
  double wall_ms = 0.0;
};

// xbar = (1/n) u_R^T X
inline Vector weighted_average(const Vector& u_R, const Matrix& X) {
  if (u_R.size() != X.rows()) throw std::invalid_argument("weighted_average: shape mismatch");
  return (X.transpose() * u_R) / static_cast<double>(X.rows());
}

inline Matrix gradient_matrix(const LogisticProblem& prob, const Matrix& X) {
  Matrix G(X.rows(), X.cols());
  for (int i = 0; i < prob.n; ++i) G.row(i) = local_gradient(prob, i, X.row(i).transpose()).transpose();
  return G;
}

inline MetricsRecord compute_record(long k, const Matrix& X, const Matrix& Y,
                                    std::uint64_t cumulative_bits, double s_k,
                                    const LogisticProblem& prob, const MixingPair& pair,
                                    const ReferenceSolution* reference) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  MetricsRecord rec;
  rec.k = k;
  rec.cumulative_bits = cumulative_bits;
  rec.s_k = s_k;

  const Vector xbar = weighted_average(pair.u_R, X);
  rec.grad_norm = global_gradient(prob, xbar).norm();
  if (reference) rec.residual = global_objective(prob, xbar) - reference->f_star;

  double cons = 0.0;
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < p; ++t) {
      const double d = X(i, t) - xbar(t);
      cons += d * d;
    }
  rec.consensus_error = cons;

  Vector ybar = Vector::Zero(p);
  for (int i = 0; i < n; ++i) ybar += Y.row(i).transpose();
  ybar /= static_cast<double>(n);
  double track = 0.0;
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < p; ++t) {
      const double d = Y(i, t) - pair.u_C(i) * ybar(t);
      track += d * d;
    }
  rec.tracking_error = track;

  const Matrix G = gradient_matrix(prob, X);
  rec.tracking_gap = ((Y - G).colwise().sum()).norm();
  return rec;
}

}  // namespace pushpull
