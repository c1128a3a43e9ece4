// Command-line front-end: run single experiments, comparison suites, the
// parameter-region report, and compressor-constant estimation.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pushpull/experiment.hpp"

using namespace pushpull;

namespace {

bool parse_on_off(const std::string& v, const char* flag) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw CLI::ValidationError(std::string(flag) + " must be 'on' or 'off'");
}

void apply_common_overrides(KeyValueConfig& kv, long seed, bool seed_set, long record_every,
                            bool record_set, const std::string& timing) {
  if (seed_set) kv.set("seed", std::to_string(seed));
  if (record_set) kv.set("record_every", std::to_string(record_every));
  if (!timing.empty()) kv.set("timing", parse_on_off(timing, "--timing") ? "on" : "off");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized compressed push-pull simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", svg = "on", timing;
  long seed = 0, record_every = 0;
  bool seed_set = false, record_set = false;

  auto add_common = [&](CLI::App* cmd, bool with_out) {
    cmd->add_option("--config", config_path, "experiment config file")->required();
    if (with_out) cmd->add_option("--out", out_dir, "output directory (default .)");
    cmd->add_option("--seed", seed, "override the experiment seed")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--record-every", record_every, "override the trace recording stride")
        ->each([&](const std::string&) { record_set = true; });
    cmd->add_option("--svg", svg, "write SVG plots: on|off (default on)");
    cmd->add_option("--timing", timing, "record wall-clock times: on|off (default off; traces stay byte-reproducible)");
  };

  CLI::App* cmd_run = app.add_subcommand("run", "run one experiment, write its trace CSV");
  add_common(cmd_run, true);
  CLI::App* cmd_suite = app.add_subcommand("suite", "run a comparison suite, write traces + summary");
  add_common(cmd_suite, true);
  CLI::App* cmd_theory = app.add_subcommand("theory", "report the provable parameter region");
  cmd_theory->add_option("--config", config_path, "experiment config with theory.* constants")->required();

  CLI::App* cmd_est = app.add_subcommand("estimate-compressor",
                                         "sample the compression-contract constants of an operator");
  std::string spec_text;
  int est_dim = 50;
  double est_r = 1.0, est_scale = 1.0;
  long est_samples = 20000, est_seed = 1;
  cmd_est->add_option("--spec", spec_text, "compressor spec, e.g. 'topk(k=5)'")->required();
  cmd_est->add_option("--dim", est_dim, "vector dimension (default 50)");
  cmd_est->add_option("--r", est_r, "scaling factor r of the contract (default 1)");
  cmd_est->add_option("--samples", est_samples, "Monte-Carlo sample count (default 20000)");
  cmd_est->add_option("--scale", est_scale, "input scale for the isotropic draws (default 1)");
  cmd_est->add_option("--seed", est_seed, "rng seed (default 1)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      KeyValueConfig kv = KeyValueConfig::parse_file(config_path);
      apply_common_overrides(kv, seed, seed_set, record_every, record_set, timing);
      const ExperimentConfig cfg = build_experiment_config(kv);
      const auto art = run_experiment(cfg, out_dir, parse_on_off(svg, "--svg"));
      const auto& last = art.trace.back();
      std::printf("wrote %s (%zu records)\n", art.csv_path.c_str(), art.trace.size());
      if (!art.svg_path.empty()) std::printf("wrote %s\n", art.svg_path.c_str());
      std::printf("final k=%ld residual=%.6g grad_norm=%.6g bits=%llu\n", last.k, last.residual,
                  last.grad_norm, static_cast<unsigned long long>(last.cumulative_bits));
    } else if (cmd_suite->parsed()) {
      KeyValueConfig kv = KeyValueConfig::parse_file(config_path);
      apply_common_overrides(kv, seed, seed_set, record_every, record_set, timing);
      if (seed_set) kv.set("suite.seeds", std::to_string(seed));
      const auto suite = run_suite(kv, out_dir, parse_on_off(svg, "--svg"));
      std::printf("suite '%s': %zu runs x %zu seeds\n", suite.name.c_str(),
                  suite.run_names.size(), suite.seeds.size());
      std::printf("wrote %s\n", suite.summary_csv_path.c_str());
      if (!suite.overlay_svg_path.empty()) std::printf("wrote %s\n", suite.overlay_svg_path.c_str());
    } else if (cmd_theory->parsed()) {
      const KeyValueConfig kv = KeyValueConfig::parse_file(config_path);
      std::fputs(print_theory_report(kv).c_str(), stdout);
    } else if (cmd_est->parsed()) {
      const CompressorSpec spec = parse_compressor(spec_text);
      RngStream rng(static_cast<std::uint64_t>(est_seed));
      const auto c = estimate_constants(spec, est_dim, est_r, est_samples, est_scale, rng);
      std::printf("compressor: %s  (dim=%d, r=%.6g, samples=%ld, scale=%.6g)\n",
                  to_string(spec).c_str(), c.dim, c.r, c.sample_count, est_scale);
      std::printf("  C_hat        = %.6g  (stderr %.2g)\n", c.C_hat, c.C_stderr);
      std::printf("  sigma2_hat   = %.6g  (stderr %.2g)\n", c.sigma2_hat, c.sigma2_stderr);
      std::printf("  delta_hat    = %.6g  (stderr %.2g)\n", c.delta_hat, c.delta_stderr);
      std::printf("  sigma2_r_hat = %.6g\n", c.sigma2_r_hat);
      std::printf("these are sampled diagnostics, not certified bounds\n");
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
