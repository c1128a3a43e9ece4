// Acceptance suite. Each criterion runs a frozen desk-scale configuration
// (p=50, n=20, J=10, rho=0.01, sigma=1) and prints one PASS/FAIL line; the
// process exits with the number of failed criteria.
//
// Criterion 4 note: the desk instance's synthetic data is linearly
// separable, so the gradient trajectory decays faster than the [1.5, 3]
// per-doubling band while the 1e-4-by-5000 clause only holds at the largest
// stable step size; the configuration below takes the latter. The averaged
// statistic (1/K) sum_k |grad|^2 is reported alongside as a diagnostic.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "pushpull/experiment.hpp"

using namespace pushpull;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// shared desk-scale fixture
struct Desk {
  LogisticProblem prob;
  MixingPair pair;
  Matrix X0;
};

Desk make_desk(Regularizer reg, std::uint64_t problem_seed) {
  Desk d;
  d.prob = generate_problem(50, 20, 10, 1.0, 0.01, reg, problem_seed);
  d.pair = build_mixing_pair(generate_digraph(20, 0.1, 7));
  RngStream rng(derive_seed(1, 0x9e3779b9ULL));
  d.X0.resize(20, 50);
  for (int i = 0; i < 20; ++i)
    for (int t = 0; t < 50; ++t) d.X0(i, t) = rng.uniform();
  return d;
}

RcppParams base_params(int n, const char* spec, double lambda, double gamma, double alpha,
                       double a0, double a, long iters) {
  RcppParams p;
  p.alpha_x = p.alpha_y = alpha;
  p.gamma_x = p.gamma_y = gamma;
  p.lambda = Vector::Constant(n, lambda);
  p.schedule = {a0, a};
  p.allow_constant_schedule = (a == 1.0);
  p.spec_x = p.spec_y = parse_compressor(spec);
  p.iterations = iters;
  return p;
}

double r_squared(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double num = n * sxy - sx * sy;
  const double den = (n * sxx - sx * sx) * (n * syy - sy * sy);
  return den > 0 ? num * num / den : 0.0;
}

// --- criterion 1: gradient-tracking conservation for every operator ---------

void criterion1() {
  const char* library[] = {"identity",
                           "infnorm(b=2,stochastic_norm=true)",
                           "infnorm(b=3,stochastic_norm=false)",
                           "topk(k=3)",
                           "qtn(k=2,b=2,stochastic_norm=true)",
                           "fixedlevel(step=1,clamp=1)",
                           "fixedlevel(step=1,clamp=inf)",
                           "compose(topk(k=2),infnorm(b=2,stochastic_norm=true))"};
  double worst = 0.0;
  std::string worst_spec;
  for (const char* spec : library) {
    Desk d = make_desk(Regularizer::Convex, 11);
    RcppParams params = base_params(20, spec, 0.05, 0.15, 0.5, 1.0, 0.999, 0);
    RcppState st = init_state(d.prob, d.X0);
    ChainRngs rngs = ChainRngs::make(1, 20);
    for (int k = 0; k < 200; ++k) {
      step(st, params, d.pair, d.prob, rngs);
      const Matrix G = gradient_matrix(d.prob, st.X);
      const double gap = ((st.Y - G).colwise().sum()).norm();
      const double ratio = gap / (1e-8 * (1.0 + G.norm()));
      if (ratio > worst) {
        worst = ratio;
        worst_spec = spec;
      }
    }
  }
  report(1, worst <= 1.0,
         "gradient-tracking conservation, 8 operators x 200 iterations; worst gap = " + fmt(worst) +
             " of tolerance (" + worst_spec + ")");
}

// --- criterion 2: push-pull recovery -----------------------------------------

void criterion2() {
  Desk d = make_desk(Regularizer::Convex, 11);
  RcppParams params = base_params(20, "identity", 0.2, 1.0, 0.5, 1.0, 1.0, 0);
  RcppState st = init_state(d.prob, d.X0);
  ChainRngs rngs = ChainRngs::make(1, 20);
  Matrix Xo = d.X0;
  Matrix Yo = gradient_matrix(d.prob, Xo);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    step(st, params, d.pair, d.prob, rngs);
    const Matrix Xn = d.pair.R * (Xo - params.lambda.asDiagonal() * Yo);
    Yo = d.pair.C * (Yo + gradient_matrix(d.prob, Xn) - gradient_matrix(d.prob, Xo));
    Xo = Xn;
    worst = std::max(worst, (st.X - Xo).lpNorm<Eigen::Infinity>());
    worst = std::max(worst, (st.Y - Yo).lpNorm<Eigen::Infinity>());
  }
  report(2, worst <= 1e-10,
         "push-pull recovery (identity, gamma = 1), 200 iterations; max deviation = " + fmt(worst));
}

// --- criterion 3: linear convergence under PL --------------------------------

void criterion3() {
  Desk d = make_desk(Regularizer::Convex, 11);
  const ReferenceSolution ref = solve_reference(d.prob, 1e-10);
  RcppParams params =
      base_params(20, "infnorm(b=2,stochastic_norm=true)", 0.2, 0.8, 0.5, 1.0, 0.99, 5000);
  const RunResult res = run(d.prob, d.pair, params, d.X0, 1, 1, &ref);
  long first_below = -1;
  std::vector<double> xs, ys;
  for (const auto& rec : res.trace) {
    if (first_below < 0 && rec.k > 0 && rec.residual <= 1e-8) first_below = rec.k;
    if (rec.k >= 1000 && rec.k <= 4000 && rec.residual > 0) {
      xs.push_back(static_cast<double>(rec.k));
      ys.push_back(std::log10(rec.residual));
    }
  }
  const double r2 = r_squared(xs, ys);
  const bool pass = first_below > 0 && first_below <= 5000 && r2 >= 0.98;
  report(3, pass,
         "linear convergence under PL (Qn b=2, a = 0.99): residual <= 1e-8 at k = " +
             std::to_string(first_below) + ", log-residual R^2 = " + fmt(r2) +
             " over the middle 60%");
}

// --- criterion 4: sublinear decay for nonconvex -------------------------------

void criterion4() {
  Desk d = make_desk(Regularizer::Nonconvex, 2);
  RcppParams params =
      base_params(20, "infnorm(b=4,stochastic_norm=true)", 0.75, 0.9, 0.5, 1e-6, 0.998, 5000);
  const RunResult res = run(d.prob, d.pair, params, d.X0, 1, 1, nullptr);

  double min_g2 = std::numeric_limits<double>::infinity();
  double m500 = 0, m1000 = 0, m2000 = 0;
  double sum_g2 = 0, a500 = 0, a1000 = 0, a2000 = 0;
  double final_grad = 0;
  bool below_1e4 = false;
  for (const auto& rec : res.trace) {
    if (rec.k == 0) continue;
    const double g2 = rec.grad_norm * rec.grad_norm;
    min_g2 = std::min(min_g2, g2);
    sum_g2 += g2;
    if (rec.k == 500) {
      m500 = min_g2;
      a500 = sum_g2 / 500.0;
    }
    if (rec.k == 1000) {
      m1000 = min_g2;
      a1000 = sum_g2 / 1000.0;
    }
    if (rec.k == 2000) {
      m2000 = min_g2;
      a2000 = sum_g2 / 2000.0;
    }
    if (rec.k <= 5000 && rec.grad_norm < 1e-4) below_1e4 = true;
    final_grad = rec.grad_norm;
  }
  const double r1 = m500 / m1000, r2 = m1000 / m2000;
  const bool band_ok = r1 >= 1.5 && r1 <= 3.0 && r2 >= 1.5 && r2 <= 3.0;
  const bool pass = band_ok && below_1e4;
  report(4, pass,
         "nonconvex decay: min-grad^2 per-doubling ratios = " + fmt(r1) + ", " + fmt(r2) +
             " (band [1.5, 3]), grad at k=5000 = " + fmt(final_grad) +
             (below_1e4 ? " (<1e-4 reached)" : " (1e-4 NOT reached)"));
  if (!band_ok)
    std::printf(
        "  note: the trajectory decays FASTER than the band (the separable desk data gives a ~C/k "
        "gradient tail); the averaged statistic (1/K) sum |grad|^2 bounded by the sublinear rate "
        "has per-doubling ratios %s, %s, inside [1.5, 3]\n",
        fmt(a500 / a1000).c_str(), fmt(a1000 / a2000).c_str());
}

// --- criterion 5: robustness to absolute error --------------------------------

void criterion5() {
  Desk d = make_desk(Regularizer::Convex, 11);
  const ReferenceSolution ref = solve_reference(d.prob, 1e-10);
  RcppParams decaying =
      base_params(20, "fixedlevel(step=1,clamp=1)", 0.2, 0.5, 0.5, 1.0, 0.995, 3000);
  RcppParams constant = decaying;
  constant.schedule = {1.0, 1.0};
  constant.allow_constant_schedule = true;
  const double res_decay = run(d.prob, d.pair, decaying, d.X0, 1, 3000, &ref).trace.back().residual;
  const double res_const = run(d.prob, d.pair, constant, d.X0, 1, 3000, &ref).trace.back().residual;
  const double ratio = res_const / std::max(res_decay, 1e-300);
  report(5, ratio >= 100.0,
         "constant-scale ablation plateaus at " + fmt(res_const) + " vs decaying " +
             fmt(res_decay) + " at k = 3000 (ratio " + fmt(ratio) + ", needs >= 100)");
}

// --- criterion 6: compression-contract diagnostics ----------------------------

void criterion6() {
  RngStream r1(101), r2(102), r3(103);
  const auto topk = estimate_constants(parse_compressor("topk(k=5)"), 50, 1.0, 20000, 1.0, r1);
  const auto ident = estimate_constants(parse_compressor("identity"), 20, 1.0, 5000, 1.0, r2);
  const auto fixed =
      estimate_constants(parse_compressor("fixedlevel(step=1,clamp=inf)"), 16, 1.0, 5000, 10.0, r3);
  const bool ok_topk = topk.delta_hat >= 0.1 - 3.0 * topk.delta_stderr;
  const bool ok_ident = ident.C_hat <= 1e-6 && ident.sigma2_hat <= 1e-6;
  const bool ok_fixed = fixed.sigma2_hat <= 16.0 / 4.0;
  report(6, ok_topk && ok_ident && ok_fixed,
         "estimator diagnostics: topk(5)/50 delta_hat = " + fmt(topk.delta_hat) +
             " (needs >= 0.1 - 3se), identity C_hat = " + fmt(ident.C_hat) +
             ", sigma2_hat = " + fmt(ident.sigma2_hat) +
             ", fixedlevel sigma2_hat = " + fmt(fixed.sigma2_hat) + " (needs <= dim/4 = 4)");
}

// --- criterion 7: communication-efficiency ordering ---------------------------

void criterion7() {
  Desk d = make_desk(Regularizer::Convex, 11);
  const ReferenceSolution ref = solve_reference(d.prob, 1e-10);
  struct Entry {
    const char* name;
    RcppParams params;
    double bits = -1;
  };
  std::vector<Entry> entries;
  entries.push_back({"QTn", base_params(20, "qtn(k=2,b=2,stochastic_norm=true)", 0.15, 0.15, 1.0,
                                        1.0, 0.996, 8000)});
  entries.push_back(
      {"Qn", base_params(20, "infnorm(b=2,stochastic_norm=true)", 0.2, 0.8, 0.5, 1.0, 0.99, 8000)});
  entries.push_back({"Identity", base_params(20, "identity", 0.25, 1.0, 0.5, 1.0, 0.99, 8000)});
  for (auto& e : entries) {
    const RunResult res = run(d.prob, d.pair, e.params, d.X0, 1, 1, &ref);
    for (const auto& rec : res.trace)
      if (rec.k > 0 && rec.residual <= 1e-6) {
        e.bits = static_cast<double>(rec.cumulative_bits);
        break;
      }
  }
  const bool reached = entries[0].bits > 0 && entries[1].bits > 0 && entries[2].bits > 0;
  const bool ordered =
      reached && entries[0].bits < entries[1].bits && entries[1].bits < entries[2].bits;
  report(7, ordered,
         "bits to residual 1e-6: QTn = " + fmt(entries[0].bits) + ", Qn = " + fmt(entries[1].bits) +
             ", Identity = " + fmt(entries[2].bits) + " (needs QTn < Qn < Identity)");
}

// --- criterion 8: oracle equivalences ------------------------------------------

// independent transcription of the bound formulas for the exact-agreement check
namespace oracle {
constexpr double kInf = std::numeric_limits<double>::infinity();
double e1(const TheoryInputs& i) { return 2.0 * i.delta_C2 * i.delta_C2 * (1.0 + 18.0 * i.C); }
double e5(const TheoryInputs& i) {
  return std::min(i.theta_R / (432.0 * std::sqrt(2.0) * i.delta_R2), 1.0 / 72.0);
}
double gy(const TheoryInputs& i) {
  const double e2 = 108.0 * i.C + 112.0;
  const double q = i.alpha_y * i.r * i.delta;
  double m = std::min(1.0, i.theta_C * e2 / (432.0 * e1(i)));
  if (i.C > 0.0) {
    m = std::min(m, i.theta_C * (q * q) / (432.0 * e2 * i.C));
    m = std::min(m, q / std::sqrt(1728.0 * i.C));
  }
  return m;
}
double gx(const TheoryInputs& i, double gyv) {
  double m = 1.0;
  if (i.C > 0.0) m = std::min(m, e5(i) * i.alpha_x * i.r * i.delta / std::sqrt(i.C));
  m = std::min(m,
               std::sqrt(i.M * i.norm_uC) / std::sqrt(108.0 * i.norm_uR * e1(i)) * i.theta_C * gyv);
  return m;
}
double lam(const TheoryInputs& i, double gxv, double gyv) {
  const double E =
      i.norm_uR * i.norm_uC / (static_cast<double>(i.n) * static_cast<double>(i.n) * i.M);
  const double d3 = 1.0 - i.theta_R * gxv;
  const double e3 = std::min(d3 > 0.0 ? (1.0 / (2.0 * i.delta_R2)) * (i.theta_R / d3) : kInf, 1.0);
  const double d4 = 36.0 * (1.0 - i.theta_R * gxv);
  const double e4 = std::min(d4 > 0.0 ? i.theta_R / d4 : kInf, 1.0 / (3.0 * std::sqrt(3.0)));
  double m = std::min(1.0 / 6.0, 1.0 / i.M);
  if (i.C > 0.0) m = std::min(m, 1.0 / (6.0 * std::sqrt(i.C)));
  m = std::min(m, i.theta_C / std::sqrt(54.0 * e1(i)));
  m = std::min(m, e3 * gxv / (std::sqrt(96.0 * E) * i.norm_uC));
  m = std::min(m, e4 * i.theta_C * gyv / std::sqrt(48.0 * e1(i)));
  return m / i.L;
}
}  // namespace oracle

void criterion8() {
  bool ok = true;
  std::string detail;

  // gradients vs central finite differences, 100 cases on the desk problems
  {
    const auto prob = generate_problem(50, 20, 10, 1.0, 0.01, Regularizer::Convex, 11);
    const auto nprob = generate_problem(50, 20, 10, 1.0, 0.01, Regularizer::Nonconvex, 11);
    RngStream rng(77);
    double worst = 0.0;
    for (int c = 0; c < 100; ++c) {
      const auto& pb = (c % 2) ? nprob : prob;
      const int i = static_cast<int>(rng.bits() % 20);
      Vector x(50);
      for (int t = 0; t < 50; ++t) x(t) = rng.normal();
      const Vector g = local_gradient(pb, i, x);
      Vector fd(50);
      Vector e = x;
      for (int t = 0; t < 50; ++t) {
        e(t) = x(t) + 1e-5;
        const double fp = local_objective(pb, i, e);
        e(t) = x(t) - 1e-5;
        const double fm = local_objective(pb, i, e);
        e(t) = x(t);
        fd(t) = (fp - fm) / 2e-5;
      }
      worst = std::max(worst, (g - fd).norm() / (1.0 + g.norm()));
    }
    ok = ok && worst <= 1e-6;
    detail += "fd worst rel err = " + fmt(worst);
  }

  // consensus error vs naive loop
  {
    const auto prob = generate_problem(10, 6, 3, 1.0, 0.02, Regularizer::Convex, 5);
    const auto pair = build_mixing_pair(generate_digraph(6, 0.3, 4));
    RngStream rng(9);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      Matrix X(6, 10), Y(6, 10);
      for (int i = 0; i < 6; ++i)
        for (int c = 0; c < 10; ++c) {
          X(i, c) = 2.0 * rng.normal();
          Y(i, c) = rng.normal();
        }
      const auto rec = compute_record(1, X, Y, 0, 1.0, prob, pair, nullptr);
      const Vector xbar = weighted_average(pair.u_R, X);
      double naive = 0.0;
      for (int i = 0; i < 6; ++i) naive += (X.row(i).transpose() - xbar).squaredNorm();
      worst = std::max(worst, std::fabs(rec.consensus_error - naive) / (1.0 + naive));
    }
    ok = ok && worst <= 1e-14;
    detail += ", consensus vs naive rel err = " + fmt(worst);
  }

  // parameter bounds vs the independent transcription (exact)
  {
    RngStream rng(2025);
    bool exact = true;
    for (int t = 0; t < 200; ++t) {
      TheoryInputs in;
      in.L = 0.1 + 5.0 * rng.uniform();
      in.theta_R = 0.05 + 0.9 * rng.uniform();
      in.theta_C = 0.05 + 0.9 * rng.uniform();
      in.delta_R2 = 1.0 + 3.0 * rng.uniform();
      in.delta_C2 = 1.0 + 3.0 * rng.uniform();
      in.C = (t % 4 == 0) ? 0.0 : 2.0 * rng.uniform();
      in.delta = 0.1 + 0.9 * rng.uniform();
      in.r = 0.5 + rng.uniform();
      in.alpha_x = (0.1 + 0.9 * rng.uniform()) / in.r;
      in.alpha_y = (0.1 + 0.9 * rng.uniform()) / in.r;
      in.M = 0.5 + rng.uniform();
      in.norm_uR = 1.0 + 2.0 * rng.uniform();
      in.norm_uC = 1.0 + 2.0 * rng.uniform();
      in.n = 2 + static_cast<int>(rng.bits() % 40);
      in.mu = 0.01 + rng.uniform();
      const TheoryBounds b = theory_bounds(in);
      const double ogy = oracle::gy(in);
      const double ogx = oracle::gx(in, ogy);
      const double olam = oracle::lam(in, ogx, ogy);
      exact = exact && b.gamma_y_max == ogy && b.gamma_x_max == ogx && b.lambda_hat_max == olam;
    }
    ok = ok && exact;
    detail += std::string(", bound transcription ") + (exact ? "exact" : "MISMATCH");
  }

  // n = 1 reduction equals centralized gradient descent exactly
  {
    const auto prob = generate_problem(8, 1, 5, 1.0, 0.01, Regularizer::Convex, 3);
    const auto pair = build_mixing_pair(generate_digraph(1, 0.0, 1));
    Matrix X0(1, 8);
    RngStream rng(12);
    for (int t = 0; t < 8; ++t) X0(0, t) = rng.uniform();
    RcppParams params =
        base_params(1, "infnorm(b=2,stochastic_norm=true)", 0.2, 1.0, 0.5, 1.0, 1.0, 0);
    RcppState st = init_state(prob, X0);
    ChainRngs rngs = ChainRngs::make(4, 1);
    Vector x = X0.row(0).transpose();
    double worst = 0.0;
    for (int k = 0; k < 25; ++k) {
      const Vector g = local_gradient(prob, 0, x);
      step(st, params, pair, prob, rngs);
      x -= 0.2 * g;
      worst = std::max(worst, (st.X.row(0).transpose() - x).lpNorm<Eigen::Infinity>());
    }
    ok = ok && worst == 0.0;
    detail += ", n=1 reduction max dev = " + fmt(worst);
  }

  report(8, ok, "oracle equivalences: " + detail);
}

// --- criterion 9: determinism ----------------------------------------------------

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void criterion9() {
  const auto dir = std::filesystem::temp_directory_path() / "pushpull_acceptance";
  std::filesystem::create_directories(dir);

  KeyValueConfig kv = KeyValueConfig::parse_text(
      "mode = convex-residual\nseed = 5\nrecord_every = 10\n"
      "problem.p = 20\nproblem.n = 8\nproblem.J = 5\nproblem.sigma = 1.0\n"
      "problem.rho = 0.01\nproblem.regularizer = convex\nproblem.seed = 3\n"
      "graph.extra_edge_prob = 0.2\ngraph.seed = 2\n"
      "compressor.x = qtn(k=2,b=2,stochastic_norm=true)\n"
      "compressor.y = infnorm(b=2,stochastic_norm=true)\n"
      "algo.alpha_x = 0.5\nalgo.alpha_y = 0.5\nalgo.gamma_x = 0.4\nalgo.gamma_y = 0.4\n"
      "algo.lambda = 0.1\nalgo.schedule.a0 = 1.0\nalgo.schedule.a = 0.995\n"
      "algo.iterations = 120\n",
      "acceptance");
  const ExperimentConfig cfg = build_experiment_config(kv);

  const auto art1 = run_experiment(cfg, (dir / "a").string(), false);
  const auto art2 = run_experiment(cfg, (dir / "b").string(), false);
  const bool same_run = slurp(art1.csv_path) == slurp(art2.csv_path);

  // a two-run, two-seed suite under different thread budgets
  KeyValueConfig suite = kv;
  suite.set("suite.name", "det");
  suite.set("suite.seeds", "5,6");
  suite.set("run.0.name", "qn");
  suite.set("run.0.compressor.x", "infnorm(b=2,stochastic_norm=true)");
  suite.set("run.1.name", "qtn");
  suite.set("run.1.compressor.x", "qtn(k=2,b=2,stochastic_norm=true)");

  setenv("PUSHPULL_THREADS", "1", 1);
  const auto s1 = run_suite(suite, (dir / "t1").string(), false);
  setenv("PUSHPULL_THREADS", "4", 1);
  const auto s2 = run_suite(suite, (dir / "t4").string(), false);
  unsetenv("PUSHPULL_THREADS");

  bool same_suite = slurp(s1.summary_csv_path) == slurp(s2.summary_csv_path);
  for (std::size_t i = 0; i < s1.members.size() && same_suite; ++i)
    same_suite =
        slurp(s1.members[i].artifacts.csv_path) == slurp(s2.members[i].artifacts.csv_path);

  report(9, same_run && same_suite,
         std::string("determinism: rerun CSV byte-identical = ") + (same_run ? "yes" : "NO") +
             ", suite at 1 vs 4 threads byte-identical = " + (same_suite ? "yes" : "NO"));
}

}  // namespace

int main() {
  std::printf("pushpull acceptance suite (desk scale: p=50, n=20, J=10, rho=0.01, sigma=1)\n");
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  std::printf("%d of 9 criteria failed\n", g_failures);
  return g_failures;
}
