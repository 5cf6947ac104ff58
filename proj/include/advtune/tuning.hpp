#pragma once

#include <chrono>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "advtune/common.hpp"
#include "advtune/discriminator.hpp"
#include "advtune/kde.hpp"
#include "advtune/priors.hpp"
#include "advtune/render.hpp"
#include "advtune/scene.hpp"

namespace advtune {

struct LoopConfig {
  int n_v = 1000;                     // generated samples per iteration
  int max_iterations = 6;
  // Stop once held-out accuracy <= 0.5 + epsilon. Negative values put the
  // threshold below any reachable accuracy, so the loop always runs the
  // full iteration budget.
  double convergence_epsilon = 0.05;
  double kde_bandwidth = 0.1;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {64, 32};

  ParameterSpace space = default_parameter_space();
  TrainConfig train;
  GibbsConfig gibbs;
  LayoutSampleOptions layout;
  WorldRegion region;
  RenderConfig render;
  std::vector<ObjectClass> classes{default_object_classes().begin(),
                                   default_object_classes().end()};

  void validate() const {
    if (n_v < 10) throw ConfigError("loop.n_v must be >= 10");
    if (max_iterations < 1 || max_iterations > 100) {
      throw ConfigError("loop.max_iterations must be in [1, 100]");
    }
    if (!(convergence_epsilon >= -1.0) || !(convergence_epsilon <= 0.5)) {
      throw ConfigError("loop.convergence_epsilon must be in [-1, 0.5]");
    }
    if (!(kde_bandwidth > 0.0)) {
      throw ConfigError("loop.kde_bandwidth must be positive");
    }
    if (!(holdout_fraction > 0.0) || !(holdout_fraction < 1.0)) {
      throw ConfigError("loop.holdout_fraction must be in (0, 1)");
    }
    space.validate();
    gibbs.validate();
    render.validate();
    train.validate();
  }
};

struct IterationRecord {
  int iteration = 0;                        // 1-based, after the update
  double heldout_accuracy = 0.0;
  std::vector<std::vector<double>> tables;  // prior snapshot after the update
  std::vector<double> kl_to_target;         // per dim; empty when Q unknown
  double wall_seconds = 0.0;                // excluded from serialized reports
};

struct TuningReport {
  std::vector<IterationRecord> records;
  std::string stop_reason;  // max_iterations | converged | degenerate
  JointPrior final_prior;
  std::vector<double> initial_kl_to_target;  // KL(uniform, Q) per dim
};

struct GeneratedBatch {
  std::vector<SceneParameters> thetas;
  Eigen::MatrixXd features;  // one flattened FeatureImage per row
};

// Samples n thetas from the prior, draws a layout per theta and renders it.
// Layout/render work fans out across workers with per-sample seeds, so the
// result is independent of the thread count.
inline GeneratedBatch generate_batch(const JointPrior& prior, int n,
                                     const LoopConfig& cfg, const Rng& rng) {
  GeneratedBatch batch;
  batch.thetas.resize(static_cast<std::size_t>(n));
  Rng theta_rng = rng.fork(0);
  for (int i = 0; i < n; ++i) {
    batch.thetas[static_cast<std::size_t>(i)] = sample_theta(prior, theta_rng);
  }
  const std::size_t dim = static_cast<std::size_t>(cfg.render.width) *
                          static_cast<std::size_t>(cfg.render.height) *
                          kFeatureChannels;
  batch.features.resize(n, static_cast<Eigen::Index>(dim));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    Rng layout_rng = rng.fork(1 + static_cast<std::uint64_t>(i));
    const SceneParameters& theta = batch.thetas[i];
    const SceneLayout layout = sample_layout(theta, cfg.region, cfg.gibbs,
                                             layout_rng, cfg.classes, cfg.layout);
    const FeatureImage img = render(theta, layout, cfg.render);
    const std::vector<double> flat = flatten_features(img);
    for (std::size_t j = 0; j < dim; ++j) {
      batch.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          flat[j];
    }
  });
  return batch;
}

struct IterationResult {
  JointPrior prior;
  IterationRecord record;
};

namespace detail {

// Deterministic without-replacement subsample of row indices.
inline std::vector<Eigen::Index> subsample_rows(Eigen::Index total,
                                                Eigen::Index want, Rng& rng) {
  std::vector<Eigen::Index> indices(static_cast<std::size_t>(total));
  std::iota(indices.begin(), indices.end(), 0);
  rng.shuffle(indices);
  indices.resize(static_cast<std::size_t>(std::min(total, want)));
  return indices;
}

inline Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m,
                                 const std::vector<Eigen::Index>& rows,
                                 std::size_t begin, std::size_t end) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(end - begin), m.cols());
  for (std::size_t i = begin; i < end; ++i) {
    out.row(static_cast<Eigen::Index>(i - begin)) = m.row(rows[i]);
  }
  return out;
}

}  // namespace detail

// One tuning pass: sample -> render -> train a fresh discriminator on a
// holdout split (default 80/20) -> score the generated batch -> KDE
// likelihood -> Bayes update. Throws DegenerateTable when the classifier
// assigns zero realness everywhere (the caller keeps the previous prior).
inline IterationResult run_iteration(const JointPrior& prior,
                                     const Eigen::MatrixXd& target_features,
                                     const LoopConfig& cfg, const Rng& rng) {
  if (target_features.rows() == 0) {
    throw EmptyDataset("run_iteration: target set is empty");
  }
  const auto start = std::chrono::steady_clock::now();

  GeneratedBatch generated = generate_batch(prior, cfg.n_v, cfg, rng.fork(100));

  // per-iteration target subsample, without replacement
  Rng subsample_rng = rng.fork(200);
  const std::vector<Eigen::Index> target_rows = detail::subsample_rows(
      target_features.rows(), static_cast<Eigen::Index>(cfg.n_v), subsample_rng);

  // class-balanced holdout split: shuffle each side once, carve the tail
  // off as the held-out set
  Rng split_rng = rng.fork(300);
  std::vector<Eigen::Index> fake_rows(static_cast<std::size_t>(cfg.n_v));
  std::iota(fake_rows.begin(), fake_rows.end(), 0);
  split_rng.shuffle(fake_rows);

  const std::size_t n_real = target_rows.size();
  const std::size_t n_fake = fake_rows.size();
  const std::size_t real_train =
      std::max<std::size_t>(1, static_cast<std::size_t>(
          static_cast<double>(n_real) * (1.0 - cfg.holdout_fraction)));
  const std::size_t fake_train =
      std::max<std::size_t>(1, static_cast<std::size_t>(
          static_cast<double>(n_fake) * (1.0 - cfg.holdout_fraction)));
  if (real_train >= n_real || fake_train >= n_fake) {
    throw ConfigError("run_iteration: holdout split left no held-out samples");
  }

  const Eigen::MatrixXd train_real =
      detail::take_rows(target_features, target_rows, 0, real_train);
  const Eigen::MatrixXd held_real =
      detail::take_rows(target_features, target_rows, real_train, n_real);
  const Eigen::MatrixXd train_fake =
      detail::take_rows(generated.features, fake_rows, 0, fake_train);
  const Eigen::MatrixXd held_fake =
      detail::take_rows(generated.features, fake_rows, fake_train, n_fake);

  // fresh discriminator every iteration (no warm start)
  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = rng.fork(400).seed();
  ClassifierModel model = init_model(static_cast<int>(target_features.cols()),
                                     rng.fork(500).seed(), cfg.hidden);
  TrainResult trained = train(std::move(model), train_real, train_fake, train_cfg);

  Eigen::MatrixXd held(held_real.rows() + held_fake.rows(), held_real.cols());
  held << held_real, held_fake;
  std::vector<int> held_labels(static_cast<std::size_t>(held.rows()), 0);
  for (Eigen::Index i = 0; i < held_real.rows(); ++i) {
    held_labels[static_cast<std::size_t>(i)] = 1;
  }
  const double heldout_accuracy = accuracy(trained.model, held, held_labels);

  const std::vector<double> scores =
      score_batch(trained.model, generated.features);
  const std::vector<std::vector<double>> likelihood = likelihood_tables(
      generated.thetas, scores, prior.space, cfg.kde_bandwidth);

  IterationResult result{bayes_update(prior, likelihood), {}};
  result.record.iteration = result.prior.iteration;
  result.record.heldout_accuracy = heldout_accuracy;
  result.record.tables.reserve(result.prior.tables.size());
  for (const PriorTable& t : result.prior.tables) {
    result.record.tables.push_back(t.values);
  }
  result.record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

// Full adversarial tuning run. `target_tables`, when provided (synthetic
// targets), enables the per-dimension KL-to-target trajectory.
inline TuningReport run(
    const LoopConfig& cfg, const Eigen::MatrixXd& target_features,
    const std::vector<std::vector<double>>* target_tables = nullptr) {
  JointPrior prior = uniform_prior(cfg.space);
  TuningReport report;
  report.stop_reason = "max_iterations";

  auto kl_per_dim = [&](const JointPrior& p) {
    std::vector<double> kl;
    if (target_tables == nullptr) return kl;
    if (target_tables->size() != p.tables.size()) {
      throw LengthMismatch("run: target table count does not match space");
    }
    kl.reserve(p.tables.size());
    for (std::size_t d = 0; d < p.tables.size(); ++d) {
      kl.push_back(table_kl(p.tables[d].values, (*target_tables)[d]));
    }
    return kl;
  };
  report.initial_kl_to_target = kl_per_dim(prior);

  const Rng master(cfg.seed);
  for (int i = 0; i < cfg.max_iterations; ++i) {
    IterationResult result;
    try {
      result = run_iteration(prior, target_features, cfg,
                             master.fork(static_cast<std::uint64_t>(i)));
    } catch (const DegenerateTable&) {
      report.stop_reason = "degenerate";
      break;
    }
    prior = std::move(result.prior);
    result.record.kl_to_target = kl_per_dim(prior);
    report.records.push_back(std::move(result.record));
    if (report.records.back().heldout_accuracy <=
        0.5 + cfg.convergence_epsilon) {
      report.stop_reason = "converged";
      break;
    }
  }
  report.final_prior = std::move(prior);
  return report;
}

}  // namespace advtune
