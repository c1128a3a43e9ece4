#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pushpull {

// Inputs for the provable parameter region. theta/delta constants come from
// the norm equivalences of the mixing matrices; they are supplied by the
// caller (the construction behind them lives outside this artifact) and the
// compression constants (C, delta, r, sigma terms) describe the operator
// contract. mu is the PL constant used for the linear-rate factor.
struct TheoryInputs {
  double L = 1.0;
  double theta_R = 0.5;
  double theta_C = 0.5;
  double delta_R2 = 1.0;
  double delta_C2 = 1.0;
  double C = 0.0;
  double delta = 1.0;
  double r = 1.0;
  double sigma2 = 0.0;
  double sigma2_r = 0.0;
  double alpha_x = 0.5;
  double alpha_y = 0.5;
  double M = 1.0;
  double norm_uR = 1.0;
  double norm_uC = 1.0;
  int n = 1;
  double mu = 1.0;

  void validate() const {
    if (!(L > 0.0)) throw std::invalid_argument("theory: L must be positive");
    if (!(theta_R > 0.0 && theta_R <= 1.0) || !(theta_C > 0.0 && theta_C <= 1.0))
      throw std::invalid_argument("theory: theta_R, theta_C must lie in (0, 1]");
    if (!(delta_R2 > 0.0) || !(delta_C2 > 0.0))
      throw std::invalid_argument("theory: delta_R2, delta_C2 must be positive");
    if (!(C >= 0.0)) throw std::invalid_argument("theory: C must be >= 0");
    if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("theory: delta must lie in (0, 1]");
    if (!(r > 0.0)) throw std::invalid_argument("theory: r must be positive");
    if (!(sigma2 >= 0.0) || !(sigma2_r >= 0.0))
      throw std::invalid_argument("theory: sigma2, sigma2_r must be >= 0");
    if (!(alpha_x > 0.0 && alpha_x <= 1.0 / r) || !(alpha_y > 0.0 && alpha_y <= 1.0 / r))
      throw std::invalid_argument("theory: alpha_x, alpha_y must lie in (0, 1/r]");
    if (!(M > 0.0)) throw std::invalid_argument("theory: M must be positive");
    if (!(norm_uR > 0.0) || !(norm_uC > 0.0))
      throw std::invalid_argument("theory: Perron vector norms must be positive");
    if (n < 1) throw std::invalid_argument("theory: n must be >= 1");
    if (!(mu > 0.0)) throw std::invalid_argument("theory: mu must be positive");
  }
};

struct TheoryBounds {
  double gamma_y_max = 0.0;
  double gamma_x_max = 0.0;
  double lambda_hat_max = 0.0;
  double rho_tilde = 0.0;
  double e1 = 0.0, e2 = 0.0, e3 = 0.0, e4 = 0.0, e5 = 0.0;
  double A = 0.0, B = 0.0, D = 0.0, E = 0.0, beta = 0.0;
  // evaluation point for the gamma_x-/gamma_y-dependent quantities
  double gamma_x = 0.0, gamma_y = 0.0, lambda_hat = 0.0;
};

namespace theory_detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double e1_of(const TheoryInputs& in) { return 2.0 * in.delta_C2 * in.delta_C2 * (1.0 + 18.0 * in.C); }

inline double e2_of(const TheoryInputs& in) { return 108.0 * in.C + 112.0; }

inline double e3_of(const TheoryInputs& in, double gamma_x) {
  const double denom = 1.0 - in.theta_R * gamma_x;
  const double first = denom > 0.0 ? (1.0 / (2.0 * in.delta_R2)) * (in.theta_R / denom) : kInf;
  return std::min(first, 1.0);
}

inline double e4_of(const TheoryInputs& in, double gamma_x) {
  const double denom = 36.0 * (1.0 - in.theta_R * gamma_x);
  const double first = denom > 0.0 ? in.theta_R / denom : kInf;
  return std::min(first, 1.0 / (3.0 * std::sqrt(3.0)));
}

inline double e5_of(const TheoryInputs& in) {
  return std::min(in.theta_R / (432.0 * std::sqrt(2.0) * in.delta_R2), 1.0 / 72.0);
}

inline double E_of(const TheoryInputs& in) {
  return in.norm_uR * in.norm_uC / (static_cast<double>(in.n) * static_cast<double>(in.n) * in.M);
}

}  // namespace theory_detail

inline double theory_gamma_y_max(const TheoryInputs& in) {
  using theory_detail::kInf;
  const double e1 = theory_detail::e1_of(in);
  const double e2 = theory_detail::e2_of(in);
  const double q = in.alpha_y * in.r * in.delta;
  double m = 1.0;
  m = std::min(m, in.theta_C * e2 / (432.0 * e1));
  m = std::min(m, in.C > 0.0 ? in.theta_C * (q * q) / (432.0 * e2 * in.C) : kInf);
  m = std::min(m, in.C > 0.0 ? q / std::sqrt(1728.0 * in.C) : kInf);
  return m;
}

inline double theory_gamma_x_max(const TheoryInputs& in, double gamma_y) {
  using theory_detail::kInf;
  const double e1 = theory_detail::e1_of(in);
  const double e5 = theory_detail::e5_of(in);
  double m = 1.0;
  m = std::min(m, in.C > 0.0 ? e5 * in.alpha_x * in.r * in.delta / std::sqrt(in.C) : kInf);
  m = std::min(m, std::sqrt(in.M * in.norm_uC) / std::sqrt(108.0 * in.norm_uR * e1) * in.theta_C * gamma_y);
  return m;
}

inline double theory_lambda_hat_max(const TheoryInputs& in, double gamma_x, double gamma_y) {
  using theory_detail::kInf;
  const double e1 = theory_detail::e1_of(in);
  const double e3 = theory_detail::e3_of(in, gamma_x);
  const double e4 = theory_detail::e4_of(in, gamma_x);
  const double E = theory_detail::E_of(in);
  double m = 1.0 / 6.0;
  m = std::min(m, in.C > 0.0 ? 1.0 / (6.0 * std::sqrt(in.C)) : kInf);
  m = std::min(m, 1.0 / in.M);
  m = std::min(m, in.theta_C / std::sqrt(54.0 * e1));
  m = std::min(m, e3 * gamma_x / (std::sqrt(96.0 * E) * in.norm_uC));
  m = std::min(m, e4 * in.theta_C * gamma_y / std::sqrt(48.0 * e1));
  return m / in.L;
}

inline double theory_rho_tilde(const TheoryInputs& in, double gamma_x, double gamma_y,
                               double lambda_hat) {
  double rho = 1.0 - 0.5 * in.M * lambda_hat * in.mu;
  rho = std::max(rho, 1.0 - in.theta_R * gamma_x / 16.0);
  rho = std::max(rho, 1.0 - in.theta_C * gamma_y / 8.0);
  rho = std::max(rho, 1.0 - in.alpha_x * in.r * in.delta / 4.0);
  rho = std::max(rho, 1.0 - in.alpha_y * in.r * in.delta / 16.0);
  return rho;
}

// Evaluates every quantity at a given (gamma_x, gamma_y, lambda_hat) point.
inline TheoryBounds theory_bounds_at(const TheoryInputs& in, double gamma_x, double gamma_y,
                                     double lambda_hat) {
  in.validate();
  if (!(gamma_x > 0.0 && gamma_x <= 1.0) || !(gamma_y > 0.0 && gamma_y <= 1.0))
    throw std::invalid_argument("theory: gamma_x, gamma_y must lie in (0, 1]");
  if (!(lambda_hat > 0.0)) throw std::invalid_argument("theory: lambda_hat must be positive");
  TheoryBounds out;
  out.gamma_x = gamma_x;
  out.gamma_y = gamma_y;
  out.lambda_hat = lambda_hat;
  out.e1 = theory_detail::e1_of(in);
  out.e2 = theory_detail::e2_of(in);
  out.e3 = theory_detail::e3_of(in, gamma_x);
  out.e4 = theory_detail::e4_of(in, gamma_x);
  out.e5 = theory_detail::e5_of(in);
  out.E = theory_detail::E_of(in);
  out.beta = in.theta_R * gamma_x / 8.0;
  out.A = in.theta_C * gamma_y * in.theta_R / (108.0 * out.e1 * gamma_x);
  out.B = in.L * in.L * in.alpha_x * in.r * in.delta * in.theta_R / (1296.0 * gamma_x);
  out.D = in.theta_C * gamma_y * in.alpha_y * in.r * in.delta * in.theta_R / (108.0 * out.e2 * gamma_x);
  out.gamma_y_max = theory_gamma_y_max(in);
  out.gamma_x_max = theory_gamma_x_max(in, gamma_y);
  out.lambda_hat_max = theory_lambda_hat_max(in, gamma_x, gamma_y);
  out.rho_tilde = theory_rho_tilde(in, gamma_x, gamma_y, lambda_hat);
  return out;
}

// Largest provable parameter point: gamma_y bound depends only on constants,
// gamma_x on gamma_y, lambda_hat on both.
inline TheoryBounds theory_bounds(const TheoryInputs& in) {
  in.validate();
  const double gy = theory_gamma_y_max(in);
  const double gx = theory_gamma_x_max(in, gy);
  const double lh = theory_lambda_hat_max(in, gx, gy);
  return theory_bounds_at(in, gx, gy, lh);
}

}  // namespace pushpull
