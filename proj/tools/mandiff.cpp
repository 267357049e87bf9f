// Command-line front end: config-driven data generation, training,
// sampling, evaluation and theorem verification.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mandiff/experiment.hpp"

namespace {

struct CommonOpts {
  std::string preset;
  std::string config_file;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--preset", opts.preset,
                  "built-in preset (hyperplane, hyperplane-desk, bunny, spot, "
                  "mesh-desk, so10, so3-desk)");
  cmd->add_option("--config", opts.config_file, "config file (key = value)");
  cmd->add_option("--set", opts.overrides, "override, key=value (repeatable)");
}

mandiff::FlatConfig build_flat(const CommonOpts& opts) {
  mandiff::FlatConfig flat;
  if (!opts.preset.empty()) flat = mandiff::preset_config(opts.preset);
  if (!opts.config_file.empty()) {
    const mandiff::FlatConfig file =
        mandiff::FlatConfig::parse_file(opts.config_file);
    for (const auto& [k, v] : file.entries()) flat.set(k, v);
  }
  for (const auto& ov : opts.overrides) flat.set_override(ov);
  return flat;
}

mandiff::ExperimentConfig build_config(const CommonOpts& opts) {
  return mandiff::ExperimentConfig::from_flat(build_flat(opts));
}

void print_seed_metrics(const mandiff::SeedOutcome& outcome) {
  std::printf("  seed %d:", outcome.seed_index);
  for (const auto& [name, value] : outcome.metrics)
    std::printf(" %s=%.6g", name.c_str(), value);
  std::printf("  (%.1fs, %s)\n", outcome.wall_seconds,
              outcome.directory.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion models for manifold-structured data"};
  app.require_subcommand(1);

  CommonOpts gen_opts, train_opts, sample_opts, eval_opts, run_opts, ver_opts;
  int seed_index = 0;

  auto* gen = app.add_subcommand("generate-data", "generate the dataset");
  add_common(gen, gen_opts);
  gen->add_option("--seed-index", seed_index, "seed index within the run");

  auto* train = app.add_subcommand("train", "train the score network");
  add_common(train, train_opts);
  train->add_option("--seed-index", seed_index, "seed index within the run");

  auto* sample = app.add_subcommand("sample", "draw samples from a trained model");
  add_common(sample, sample_opts);
  sample->add_option("--seed-index", seed_index, "seed index within the run");

  auto* eval = app.add_subcommand("evaluate", "metrics vs the held-out split");
  add_common(eval, eval_opts);
  eval->add_option("--seed-index", seed_index, "seed index within the run");

  auto* run = app.add_subcommand("run", "end-to-end experiment over all seeds");
  add_common(run, run_opts);

  std::string csv_out = "verification.csv";
  auto* verify = app.add_subcommand("verify-theorems",
                                    "numerical checks of the score scaling");
  add_common(verify, ver_opts);
  verify->add_option("--csv", csv_out, "sweep output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto cfg = build_config(gen_opts);
      cfg.validate();
      const Eigen::MatrixXd data = mandiff::stage_generate(cfg, seed_index);
      std::printf("dataset: %lld rows x %lld cols -> %s\n",
                  static_cast<long long>(data.rows()),
                  static_cast<long long>(data.cols()),
                  mandiff::seed_directory(cfg, seed_index).c_str());
    } else if (train->parsed()) {
      const auto cfg = build_config(train_opts);
      cfg.validate();
      std::vector<double> trace;
      mandiff::stage_train(cfg, seed_index, &trace);
      std::printf("trained %zu steps, final loss %.6g -> %s/checkpoint.bin\n",
                  trace.size(), trace.empty() ? 0.0 : trace.back(),
                  mandiff::seed_directory(cfg, seed_index).c_str());
    } else if (sample->parsed()) {
      const auto cfg = build_config(sample_opts);
      cfg.validate();
      const Eigen::MatrixXd samples = mandiff::stage_sample(cfg, seed_index);
      std::printf("samples: %lld rows -> %s/samples.csv\n",
                  static_cast<long long>(samples.rows()),
                  mandiff::seed_directory(cfg, seed_index).c_str());
    } else if (eval->parsed()) {
      const auto cfg = build_config(eval_opts);
      cfg.validate();
      print_seed_metrics(mandiff::stage_evaluate(cfg, seed_index));
    } else if (run->parsed()) {
      const auto cfg = build_config(run_opts);
      const mandiff::RunReport report = mandiff::run_experiment(cfg);
      std::printf("run %s (%d seeds, %.1fs)\n", report.config_hash.c_str(),
                  static_cast<int>(report.seeds.size()), report.wall_seconds);
      for (const auto& outcome : report.seeds) print_seed_metrics(outcome);
      for (const auto& [name, mean] : report.metric_mean)
        std::printf("  %s: mean=%.6g std=%.6g\n", name.c_str(), mean,
                    report.metric_std.at(name));
    } else if (verify->parsed()) {
      const auto flat = build_flat(ver_opts);
      const mandiff::TheoremReport report =
          mandiff::verify_theorems(flat, csv_out);
      std::printf("normal-score slope: %.4f (R2 %.6f) [%s]\n",
                  report.iso_normal.fit.slope, report.iso_normal.fit.r_squared,
                  report.iso_normal_pass() ? "pass" : "FAIL");
      std::printf("tangential exponent: %.4f [%s]\n",
                  report.iso_tangential.fit.slope,
                  report.iso_tangential_pass() ? "pass" : "FAIL");
      std::printf(
          "niso normal, worst rel err (sigma<=0.01): %.4f, saturation %.4f "
          "[%s]\n",
          report.niso_normal.worst_rel_error_small_sigma,
          report.niso_normal.saturation_ratio,
          report.niso_normal_pass() ? "pass" : "FAIL");
      std::printf("niso tangential exponent: %.4f [%s]\n",
                  report.niso_tangential.fit.slope,
                  report.niso_tangential_pass() ? "pass" : "FAIL");
      std::printf("sweep CSV: %s\n", csv_out.c_str());
      return report.all_pass() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
