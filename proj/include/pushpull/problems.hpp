#pragma once

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pushpull/rng.hpp"

namespace pushpull {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Regularizer { Convex, Nonconvex };

// Synthetic distributed logistic regression. Each agent i holds J samples
// (u_{i,j}, v_{i,j}) and the local objective
//   f_i(x) = (1/J) sum_j ln(1 + exp(-v_{i,j} u_{i,j}^T x)) + (rho/2) R(x)
// with R(x) = |x|^2 (convex) or sum_t x_t^2/(1+x_t^2) (nonconvex).
struct LogisticProblem {
  int n = 0;  // agents
  int J = 0;  // samples per agent
  int p = 0;  // dimension
  double sigma = 1.0;
  double rho = 0.0;
  Regularizer regularizer = Regularizer::Convex;
  std::uint64_t seed = 0;
  Vector model;                  // generating parameter
  std::vector<Matrix> features;  // per agent, J x p
  std::vector<Vector> labels;    // per agent, entries exactly +-1
};

namespace detail {

// logistic sigmoid, stable for |t| up to ~745
inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// ln(1 + exp(-m)) without overflow
inline double softplus_neg(double m) {
  if (m >= 0.0) return std::log1p(std::exp(-m));
  return -m + std::log1p(std::exp(m));
}

}  // namespace detail

// Draw order (fixed): model (p normals), then per agent, per sample:
// p feature normals followed by one label uniform.
inline LogisticProblem generate_problem(int p, int n, int J, double sigma, double rho,
                                        Regularizer reg, std::uint64_t seed) {
  if (p < 1 || n < 1 || J < 1) throw std::invalid_argument("generate_problem: counts must be positive");
  if (rho < 0.0) throw std::invalid_argument("generate_problem: rho must be >= 0");
  LogisticProblem prob;
  prob.n = n;
  prob.J = J;
  prob.p = p;
  prob.sigma = sigma;
  prob.rho = rho;
  prob.regularizer = reg;
  prob.seed = seed;
  RngStream rng(seed);
  prob.model.resize(p);
  for (int t = 0; t < p; ++t) prob.model(t) = rng.normal();
  prob.features.reserve(static_cast<std::size_t>(n));
  prob.labels.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Matrix U(J, p);
    Vector v(J);
    for (int j = 0; j < J; ++j) {
      for (int t = 0; t < p; ++t) U(j, t) = sigma * rng.normal();
      const double z = rng.uniform();
      const double m = U.row(j).dot(prob.model);
      v(j) = (z <= detail::sigmoid(m)) ? 1.0 : -1.0;
    }
    prob.features.push_back(std::move(U));
    prob.labels.push_back(std::move(v));
  }
  return prob;
}

inline double regularizer_value(const LogisticProblem& prob, const Vector& x) {
  if (prob.regularizer == Regularizer::Convex) return x.squaredNorm();
  double r = 0.0;
  for (int t = 0; t < prob.p; ++t) {
    const double x2 = x(t) * x(t);
    r += x2 / (1.0 + x2);
  }
  return r;
}

inline Vector regularizer_gradient(const LogisticProblem& prob, const Vector& x) {
  if (prob.regularizer == Regularizer::Convex) return 2.0 * x;
  Vector g(prob.p);
  for (int t = 0; t < prob.p; ++t) {
    const double d = 1.0 + x(t) * x(t);
    g(t) = 2.0 * x(t) / (d * d);
  }
  return g;
}

inline double local_objective(const LogisticProblem& prob, int i, const Vector& x) {
  if (i < 0 || i >= prob.n) throw std::out_of_range("local_objective: agent index out of range");
  const auto& U = prob.features[static_cast<std::size_t>(i)];
  const auto& v = prob.labels[static_cast<std::size_t>(i)];
  double h = 0.0;
  for (int j = 0; j < prob.J; ++j) h += detail::softplus_neg(v(j) * U.row(j).dot(x));
  return h / static_cast<double>(prob.J) + 0.5 * prob.rho * regularizer_value(prob, x);
}

inline Vector local_gradient(const LogisticProblem& prob, int i, const Vector& x) {
  if (i < 0 || i >= prob.n) throw std::out_of_range("local_gradient: agent index out of range");
  const auto& U = prob.features[static_cast<std::size_t>(i)];
  const auto& v = prob.labels[static_cast<std::size_t>(i)];
  Vector g = Vector::Zero(prob.p);
  for (int j = 0; j < prob.J; ++j) {
    const double m = v(j) * U.row(j).dot(x);
    g.noalias() += (-v(j) * detail::sigmoid(-m)) * U.row(j).transpose();
  }
  g /= static_cast<double>(prob.J);
  g.noalias() += (0.5 * prob.rho) * regularizer_gradient(prob, x);
  return g;
}

inline double global_objective(const LogisticProblem& prob, const Vector& x) {
  double f = 0.0;
  for (int i = 0; i < prob.n; ++i) f += local_objective(prob, i, x);
  return f / static_cast<double>(prob.n);
}

inline Vector global_gradient(const LogisticProblem& prob, const Vector& x) {
  Vector g = Vector::Zero(prob.p);
  for (int i = 0; i < prob.n; ++i) g.noalias() += local_gradient(prob, i, x);
  return g / static_cast<double>(prob.n);
}

struct ReferenceSolution {
  Vector x_star;
  double f_star = 0.0;
  double gradient_norm = 0.0;
  long iterations = 0;
};

// Gradient descent with Armijo backtracking on arbitrary (f, grad) callables;
// kept generic so fixtures can exercise it directly.
template <class F, class G>
ReferenceSolution minimize_gradient_descent(F&& f, G&& grad, Vector x, double tol,
                                            long max_iters = 500000) {
  double fx = f(x);
  Vector g = grad(x);
  double t = 1.0;
  bool frozen = false;  // step growth stops once descent is unresolvable in double
  long it = 0;
  for (; it < max_iters; ++it) {
    const double gn2 = g.squaredNorm();
    if (std::sqrt(gn2) <= tol) break;
    if (!frozen) t = std::min(t * 2.0, 1e6);
    Vector xn = x - t * g;
    double fn = f(xn);
    // epsilon slack keeps the search moving once descent drops below the
    // objective's floating-point resolution (the gradient still contracts)
    const double slack = 16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(fx));
    while (!(fn <= fx - 1e-4 * t * gn2 + slack)) {
      t *= 0.5;
      if (t < 1e-20)
        throw std::runtime_error("minimize_gradient_descent: line search failed (non-smooth or non-finite objective?)");
      xn = x - t * g;
      fn = f(xn);
    }
    if (!frozen && 1e-4 * t * gn2 < slack) {
      frozen = true;
      t *= 0.5;  // margin for the fixed-step tail
      xn = x - t * g;
      fn = f(xn);
    }
    x = std::move(xn);
    fx = fn;
    g = grad(x);
  }
  if (it == max_iters && g.norm() > tol)
    throw std::runtime_error("minimize_gradient_descent: iteration cap reached before tolerance");
  ReferenceSolution sol;
  sol.x_star = std::move(x);
  sol.f_star = fx;
  sol.gradient_norm = g.norm();
  sol.iterations = it;
  return sol;
}

// Centralized reference optimum for the residual metric. Only the convex
// regularizer defines one; nonconvex runs report gradient norms instead.
inline ReferenceSolution solve_reference(const LogisticProblem& prob, double tol = 1e-10) {
  if (prob.regularizer != Regularizer::Convex)
    throw std::invalid_argument(
        "solve_reference: no reference optimum for the nonconvex regularizer; use gradient-norm mode");
  return minimize_gradient_descent([&](const Vector& x) { return global_objective(prob, x); },
                                   [&](const Vector& x) { return global_gradient(prob, x); },
                                   Vector::Zero(prob.p), tol);
}

// --- binary dataset format -------------------------------------------------
// 8-byte magic "PPLOGRG1", then little-endian u64 n, J, p, seed, f64 sigma,
// rho, u8 regularizer tag, f64 model[p], and per agent J*p row-major feature
// doubles followed by J label doubles.

namespace detail {

inline void write_u64_le(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t read_u64_le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("dataset: truncated file");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline void write_f64_le(std::ostream& os, double d) { write_u64_le(os, std::bit_cast<std::uint64_t>(d)); }

inline double read_f64_le(std::istream& is) { return std::bit_cast<double>(read_u64_le(is)); }

}  // namespace detail

inline void save_problem(const std::string& path, const LogisticProblem& prob) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_problem: cannot open " + path);
  os.write("PPLOGRG1", 8);
  detail::write_u64_le(os, static_cast<std::uint64_t>(prob.n));
  detail::write_u64_le(os, static_cast<std::uint64_t>(prob.J));
  detail::write_u64_le(os, static_cast<std::uint64_t>(prob.p));
  detail::write_u64_le(os, prob.seed);
  detail::write_f64_le(os, prob.sigma);
  detail::write_f64_le(os, prob.rho);
  os.put(prob.regularizer == Regularizer::Convex ? '\0' : '\1');
  for (int t = 0; t < prob.p; ++t) detail::write_f64_le(os, prob.model(t));
  for (int i = 0; i < prob.n; ++i) {
    const auto& U = prob.features[static_cast<std::size_t>(i)];
    for (int j = 0; j < prob.J; ++j)
      for (int t = 0; t < prob.p; ++t) detail::write_f64_le(os, U(j, t));
    for (int j = 0; j < prob.J; ++j) detail::write_f64_le(os, prob.labels[static_cast<std::size_t>(i)](j));
  }
  if (!os) throw std::runtime_error("save_problem: write failed for " + path);
}

inline LogisticProblem load_problem(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_problem: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != "PPLOGRG1")
    throw std::runtime_error("load_problem: bad magic in " + path);
  LogisticProblem prob;
  prob.n = static_cast<int>(detail::read_u64_le(is));
  prob.J = static_cast<int>(detail::read_u64_le(is));
  prob.p = static_cast<int>(detail::read_u64_le(is));
  prob.seed = detail::read_u64_le(is);
  prob.sigma = detail::read_f64_le(is);
  prob.rho = detail::read_f64_le(is);
  const int tag = is.get();
  if (tag != 0 && tag != 1) throw std::runtime_error("load_problem: bad regularizer tag");
  prob.regularizer = tag == 0 ? Regularizer::Convex : Regularizer::Nonconvex;
  prob.model.resize(prob.p);
  for (int t = 0; t < prob.p; ++t) prob.model(t) = detail::read_f64_le(is);
  prob.features.reserve(static_cast<std::size_t>(prob.n));
  prob.labels.reserve(static_cast<std::size_t>(prob.n));
  for (int i = 0; i < prob.n; ++i) {
    Matrix U(prob.J, prob.p);
    for (int j = 0; j < prob.J; ++j)
      for (int t = 0; t < prob.p; ++t) U(j, t) = detail::read_f64_le(is);
    Vector v(prob.J);
    for (int j = 0; j < prob.J; ++j) v(j) = detail::read_f64_le(is);
    prob.features.push_back(std::move(U));
    prob.labels.push_back(std::move(v));
  }
  return prob;
}

}  // namespace pushpull
