// Command-line front end: run experiments from a config file, the variance
// sweep, the distribution-matching protocol, and the self-check suite.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "dasgrad/config.hpp"
#include "dasgrad/errors.hpp"
#include "dasgrad/experiment.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw CLI::ValidationError("--sigmas", "bad number '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError("--sigmas", "empty list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Double adaptive stochastic gradient experiments"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment described by a config file");
  run_cmd->add_option("--config", config_path, "Experiment config file")->required();

  dasgrad::SweepOptions sweep;
  std::string sigmas = "0.1,1,10";
  auto* sweep_cmd =
      app.add_subcommand("sweep-variance", "Centroid learning across feature scales");
  sweep_cmd->add_option("--sigmas", sigmas, "Comma-separated feature standard deviations");
  sweep_cmd->add_option("--seeds", sweep.seeds, "Number of seeds (1..N)");
  sweep_cmd->add_option("--steps", sweep.steps, "Steps per run");
  sweep_cmd->add_option("--n", sweep.n, "Examples");
  sweep_cmd->add_option("--d", sweep.d, "Dimension");
  sweep_cmd->add_option("--alpha", sweep.alpha, "Base step size");
  sweep_cmd->add_option("--batch", sweep.batch_size, "Batch size");
  sweep_cmd->add_option("--refresh", sweep.refresh_period, "Probability refresh period J");
  sweep_cmd->add_option("--data-seed", sweep.data_seed, "Dataset seed");
  sweep_cmd->add_option("--threads", sweep.threads, "Worker threads");
  sweep_cmd->add_option("--output", sweep.output, "Output directory");

  dasgrad::MatchingOptions matching;
  auto* match_cmd = app.add_subcommand(
      "matching", "Unbalanced training set, target-weighted vs training-weighted DASGrad");
  match_cmd->add_option("--seeds", matching.seeds, "Number of seeds (1..N)");
  match_cmd->add_option("--steps", matching.steps, "Steps per run");
  match_cmd->add_option("--n", matching.n, "Training examples before unbalancing");
  match_cmd->add_option("--d", matching.d, "Dimension");
  match_cmd->add_option("--classes", matching.classes, "Number of classes");
  match_cmd->add_option("--margin", matching.margin, "Distance between class centers");
  match_cmd->add_option("--keep", matching.keep_fraction, "Fraction kept of dropped classes");
  match_cmd->add_option("--alpha", matching.alpha, "Base step size");
  match_cmd->add_option("--tick", matching.metric_tick, "Metric tick");
  match_cmd->add_option("--threads", matching.threads, "Worker threads");
  match_cmd->add_option("--output", matching.output, "Output directory");

  auto* check_cmd = app.add_subcommand("check", "Run the self-verification suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (*run_cmd) {
      const auto config = dasgrad::load_config(config_path);
      const auto result = dasgrad::run_experiment(config);
      std::size_t diverged = 0;
      for (const auto& runs : result.optimizers) diverged += runs.runs.size() - runs.successful().size();
      std::cout << "wrote " << result.files.size() << " files to " << config.output.string();
      if (diverged) std::cout << " (" << diverged << " runs diverged, see runs.csv)";
      std::cout << '\n';
      return 0;
    }
    if (*sweep_cmd) {
      sweep.sigmas = parse_reals(sigmas);
      const auto points = dasgrad::sweep_variance(sweep);
      for (const auto& p : points) {
        std::printf("sigma=%g amsgrad=%.6g dasgrad=%.6g gap=%.6g [%.6g, %.6g]\n", p.sigma,
                    p.amsgrad_final_regret, p.dasgrad_final_regret, p.gap.mean, p.gap.low,
                    p.gap.high);
      }
      return 0;
    }
    if (*match_cmd) {
      const auto r = dasgrad::distribution_matching(matching);
      std::printf("weighted=%.4f unweighted=%.4f improvement=%.4f [%.4f, %.4f]\n",
                  r.weighted_accuracy, r.unweighted_accuracy, r.improvement.mean,
                  r.improvement.low, r.improvement.high);
      return 0;
    }
    if (*check_cmd) {
      bool ok = true;
      for (const auto& c : dasgrad::self_check()) {
        std::printf("[%s] %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
        ok = ok && c.passed;
      }
      return ok ? 0 : kExitFailure;
    }
  } catch (const dasgrad::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const dasgrad::ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
