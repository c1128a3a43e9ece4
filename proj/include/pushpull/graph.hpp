#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pushpull/rng.hpp"

namespace pushpull {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Directed communication graph. An edge (i, j) means i transmits to j.
// Self-loops are always present and counted in the edge set.
struct Digraph {
  int n = 0;
  std::vector<std::vector<int>> out;  // sorted out-neighbor lists, self included

  bool has_edge(int i, int j) const {
    const auto& o = out[static_cast<std::size_t>(i)];
    return std::binary_search(o.begin(), o.end(), j);
  }

  std::size_t edge_count() const {
    std::size_t m = 0;
    for (const auto& o : out) m += o.size();
    return m;
  }

  std::vector<std::vector<int>> in_neighbors() const {
    std::vector<std::vector<int>> in(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      for (int j : out[static_cast<std::size_t>(i)]) in[static_cast<std::size_t>(j)].push_back(i);
    for (auto& v : in) std::sort(v.begin(), v.end());
    return in;
  }
};

// Ring backbone 0->1->...->n-1->0 guarantees strong connectivity; every other
// ordered pair is added independently with probability extra_edge_prob.
inline Digraph generate_digraph(int n, double extra_edge_prob, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_digraph: n must be >= 1");
  if (!(extra_edge_prob >= 0.0 && extra_edge_prob <= 1.0))
    throw std::invalid_argument("generate_digraph: extra_edge_prob must be in [0, 1]");
  Digraph g;
  g.n = n;
  g.out.assign(static_cast<std::size_t>(n), {});
  std::vector<std::vector<char>> adj(static_cast<std::size_t>(n),
                                     std::vector<char>(static_cast<std::size_t>(n), 0));
  for (int i = 0; i < n; ++i) {
    adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1;
    if (n > 1) adj[static_cast<std::size_t>(i)][static_cast<std::size_t>((i + 1) % n)] = 1;
  }
  RngStream rng(seed);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j || adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) continue;
      if (rng.uniform() < extra_edge_prob) adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1;
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) g.out[static_cast<std::size_t>(i)].push_back(j);
  return g;
}

// Right eigenvector of M for eigenvalue 1, rescaled so entries sum to n.
// Plain power iteration; a running Cesaro average is also tested against the
// tolerance to cover near-periodic supports (self-loops normally make the
// plain iterates converge on their own).
inline Vector perron_right(const Matrix& M, double tol = 1e-12, long max_iters = 1000000) {
  const auto n = M.rows();
  if (n != M.cols()) throw std::invalid_argument("perron_right: matrix must be square");
  const double dn = static_cast<double>(n);
  Vector v = Vector::Ones(n);
  Vector avg = v;
  for (long t = 1; t <= max_iters; ++t) {
    Vector w = M * v;
    const double s = w.sum();
    if (!(s > 0.0)) throw std::runtime_error("perron_right: iterate collapsed to zero");
    v = (dn / s) * w;
    if ((M * v - v).lpNorm<Eigen::Infinity>() <= tol) return v;
    avg += (v - avg) / static_cast<double>(t + 1);
    Vector a = (dn / avg.sum()) * avg;
    if ((M * a - a).lpNorm<Eigen::Infinity>() <= tol) return a;
  }
  throw std::runtime_error("perron_right: power iteration did not reach tolerance");
}

// Row-stochastic pull matrix R, column-stochastic push matrix C and their
// Perron vectors. R_ij = 1/|in(i)| for in-neighbors j (self included);
// C_ij = 1/|out(j)| for out-neighbors i (self included).
struct MixingPair {
  Matrix R;
  Matrix C;
  Vector u_R;  // left Perron vector of R, sum = n
  Vector u_C;  // right Perron vector of C, sum = n
};

inline MixingPair build_mixing_pair(const Digraph& g) {
  const int n = g.n;
  MixingPair pair;
  pair.R = Matrix::Zero(n, n);
  pair.C = Matrix::Zero(n, n);
  const auto in = g.in_neighbors();
  for (int i = 0; i < n; ++i) {
    const auto& ins = in[static_cast<std::size_t>(i)];
    const double w = 1.0 / static_cast<double>(ins.size());
    for (int j : ins) pair.R(i, j) = w;
  }
  for (int j = 0; j < n; ++j) {
    const auto& outs = g.out[static_cast<std::size_t>(j)];
    const double w = 1.0 / static_cast<double>(outs.size());
    for (int i : outs) pair.C(i, j) = w;
  }
  pair.u_R = perron_right(pair.R.transpose());
  pair.u_C = perron_right(pair.C);
  return pair;
}

struct AssumptionReport {
  double row_stochasticity_residual = 0.0;  // max_i |sum_j R_ij - 1|
  double col_stochasticity_residual = 0.0;  // max_j |sum_i C_ij - 1|
  double uR_eigen_residual = 0.0;           // max |u_R^T R - u_R^T|
  double uC_eigen_residual = 0.0;           // max |C u_C - u_C|
  std::vector<int> roots_R;                 // support of u_R
  std::vector<int> roots_CT;                // support of u_C
  bool intersection_nonempty = false;
  double uR_dot_uC = 0.0;
};

// Support threshold 1e-9 separates Perron mass from entries that are exact
// zeros in exact arithmetic.
inline AssumptionReport check_assumption_one(const MixingPair& pair, double support_tol = 1e-9) {
  AssumptionReport rep;
  const auto n = pair.R.rows();
  rep.row_stochasticity_residual =
      (pair.R * Vector::Ones(n) - Vector::Ones(n)).lpNorm<Eigen::Infinity>();
  rep.col_stochasticity_residual =
      (pair.C.transpose() * Vector::Ones(n) - Vector::Ones(n)).lpNorm<Eigen::Infinity>();
  rep.uR_eigen_residual = (pair.R.transpose() * pair.u_R - pair.u_R).lpNorm<Eigen::Infinity>();
  rep.uC_eigen_residual = (pair.C * pair.u_C - pair.u_C).lpNorm<Eigen::Infinity>();
  for (int i = 0; i < n; ++i) {
    if (pair.u_R(i) > support_tol) rep.roots_R.push_back(i);
    if (pair.u_C(i) > support_tol) rep.roots_CT.push_back(i);
  }
  std::vector<int> inter;
  std::set_intersection(rep.roots_R.begin(), rep.roots_R.end(), rep.roots_CT.begin(),
                        rep.roots_CT.end(), std::back_inserter(inter));
  rep.intersection_nonempty = !inter.empty();
  rep.uR_dot_uC = pair.u_R.dot(pair.u_C);
  return rep;
}

// --- plain-text serialization -------------------------------------------

inline void save_edge_list(const std::string& path, const Digraph& g) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_edge_list: cannot open " + path);
  os << g.n << "\n";
  for (int i = 0; i < g.n; ++i)
    for (int j : g.out[static_cast<std::size_t>(i)]) os << i << " " << j << "\n";
}

inline Digraph load_edge_list(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_edge_list: cannot open " + path);
  Digraph g;
  if (!(is >> g.n) || g.n < 1) throw std::runtime_error("load_edge_list: bad node count");
  g.out.assign(static_cast<std::size_t>(g.n), {});
  int a, b;
  while (is >> a >> b) {
    if (a < 0 || a >= g.n || b < 0 || b >= g.n)
      throw std::runtime_error("load_edge_list: edge endpoint out of range");
    g.out[static_cast<std::size_t>(a)].push_back(b);
  }
  for (auto& o : g.out) std::sort(o.begin(), o.end());
  return g;
}

inline void save_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_matrix_csv: cannot open " + path);
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      os << (j ? "," : "") << buf;
    }
    os << "\n";
  }
}

}  // namespace pushpull
