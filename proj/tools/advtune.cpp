// advtune: adversarial tuning of stochastic scene-generator priors.
// Subcommands: tune (run the loop), generate (emit a dataset from a prior),
// stats (compare two dataset directories).

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "advtune/experiment.hpp"

namespace {

// Machine-readable error record on stderr, one JSON object per failure.
int fail(const char* type, const std::string& message) {
  nlohmann::json record = {{"error", {{"type", type}, {"message", message}}}};
  std::cerr << record.dump() << std::endl;
  return 1;
}

template <class Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return 0;
  } catch (const advtune::ConfigError& e) {
    return fail("ConfigError", e.what());
  } catch (const advtune::IoError& e) {
    return fail("IoError", e.what());
  } catch (const advtune::BinningMismatch& e) {
    return fail("BinningMismatch", e.what());
  } catch (const advtune::EmptyDataset& e) {
    return fail("EmptyDataset", e.what());
  } catch (const advtune::RetryExhausted& e) {
    return fail("RetryExhausted", e.what());
  } catch (const advtune::DegenerateTable& e) {
    return fail("DegenerateTable", e.what());
  } catch (const advtune::NonFiniteLoss& e) {
    return fail("NonFiniteLoss", e.what());
  } catch (const std::exception& e) {
    return fail("Error", e.what());
  }
}

advtune::ExperimentConfig load_config(const std::string& config_path,
                                      const std::string& out_override,
                                      std::uint64_t seed_override,
                                      bool has_seed_override) {
  advtune::ExperimentConfig cfg = advtune::ExperimentConfig::load(config_path);
  if (!out_override.empty()) cfg.output_dir = out_override;
  if (has_seed_override) cfg.seed = seed_override;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial tuning for stochastic scene-generator priors"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed_override = 0;
  bool has_seed = false;

  auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* opt = cmd->add_option("--config", config_path, "experiment config (JSON)");
    if (config_required) opt->required();
    cmd->add_option("--out", out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", seed_override, "master seed (overrides config)")
        ->each([&](const std::string&) { has_seed = true; });
  };

  CLI::App* tune = app.add_subcommand("tune", "run the adversarial tuning loop");
  add_common(tune, true);

  CLI::App* generate =
      app.add_subcommand("generate", "sample scenes from a prior and write a dataset");
  add_common(generate, true);
  int count = 0;
  std::string prior_path;
  generate->add_option("--count", count, "number of samples")->required();
  generate->add_option("--prior", prior_path,
                       "prior tables JSON (defaults to the uniform prior)");

  CLI::App* stats =
      app.add_subcommand("stats", "compare intensity/label statistics of two datasets");
  std::string dir_a, dir_b, stats_out = "stats_out";
  int bins = 64, bins_a = 0, bins_b = 0;
  stats->add_option("dir_a", dir_a, "first dataset directory")->required();
  stats->add_option("dir_b", dir_b, "second dataset directory")->required();
  stats->add_option("--out", stats_out, "output directory");
  stats->add_option("--bins", bins, "intensity histogram bins");
  stats->add_option("--bins-a", bins_a, "override bins for dataset A");
  stats->add_option("--bins-b", bins_b, "override bins for dataset B");

  CLI11_PARSE(app, argc, argv);

  if (tune->parsed()) {
    return guarded([&] {
      const advtune::ExperimentConfig cfg =
          load_config(config_path, out_dir, seed_override, has_seed);
      const advtune::TuningReport report = advtune::run_tune(cfg, cfg.output_dir);
      std::cout << "stop_reason=" << report.stop_reason
                << " iterations=" << report.records.size() << '\n';
      for (const advtune::IterationRecord& rec : report.records) {
        std::cout << "iteration " << rec.iteration
                  << " heldout_accuracy=" << rec.heldout_accuracy << '\n';
      }
      std::cout << "report written to " << cfg.output_dir << '\n';
    });
  }
  if (generate->parsed()) {
    return guarded([&] {
      const advtune::ExperimentConfig cfg =
          load_config(config_path, out_dir, seed_override, has_seed);
      advtune::run_generate(cfg, prior_path, count, cfg.output_dir);
      std::cout << "wrote " << count << " samples to " << cfg.output_dir << '\n';
    });
  }
  if (stats->parsed()) {
    return guarded([&] {
      const int effective_a = bins_a > 0 ? bins_a : bins;
      const int effective_b = bins_b > 0 ? bins_b : bins;
      const advtune::StatsResult result =
          advtune::run_stats(dir_a, dir_b, stats_out, effective_a, effective_b);
      std::cout << "kl_a_to_b=" << result.kl_a_to_b
                << " kl_b_to_a=" << result.kl_b_to_a << '\n';
      std::cout << "stats written to " << stats_out << '\n';
    });
  }
  return 0;
}
