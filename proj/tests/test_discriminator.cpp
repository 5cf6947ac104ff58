#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "advtune/common.hpp"
#include "advtune/discriminator.hpp"

using namespace advtune;

namespace {

ClassifierModel logistic_unit(double w, double b) {
  ClassifierModel model;
  model.weights = {Eigen::MatrixXd::Constant(1, 1, w)};
  model.biases = {Eigen::VectorXd::Constant(1, b)};
  return model;
}

Eigen::MatrixXd gaussian_rows(int rows, int cols, double mean, double stddev,
                              Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = mean + stddev * rng.normal();
  }
  return m;
}

double max_gradient_error(const ClassifierModel& model,
                          const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Gradients grads;
  loss_and_gradients(model, x, y, &grads);
  const Eigen::VectorXd analytic = flatten_gradients(grads);
  const Eigen::VectorXd params = get_parameters(model);

  ClassifierModel probe = model;
  const double step = 1e-5;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    Eigen::VectorXd shifted = params;
    shifted[i] = params[i] + step;
    set_parameters(probe, shifted);
    const double up = loss_and_gradients(probe, x, y, nullptr);
    shifted[i] = params[i] - step;
    set_parameters(probe, shifted);
    const double down = loss_and_gradients(probe, x, y, nullptr);
    const double numeric = (up - down) / (2.0 * step);
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("init is deterministic per seed and varies across seeds",
          "[discriminator]") {
  const ClassifierModel a = init_model(12, 7);
  const ClassifierModel b = init_model(12, 7);
  const ClassifierModel c = init_model(12, 8);
  CHECK(get_parameters(a) == get_parameters(b));
  CHECK(get_parameters(a) != get_parameters(c));

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(12);
  const double p = forward(a, zero);
  CHECK(p > 0.0);
  CHECK(p < 1.0);
}

TEST_CASE("forward matches the logistic closed forms", "[discriminator]") {
  ClassifierModel zeros;
  zeros.weights = {Eigen::MatrixXd::Zero(3, 4), Eigen::MatrixXd::Zero(4, 1)};
  zeros.biases = {Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(1)};
  Eigen::VectorXd x(3);
  x << 0.3, -2.0, 5.0;
  CHECK(forward(zeros, x) == 0.5);

  const ClassifierModel unit = logistic_unit(1.0, 0.0);
  CHECK(forward(unit, Eigen::VectorXd::Zero(1)) == 0.5);
  CHECK(forward(unit, Eigen::VectorXd::Constant(1, std::log(3.0))) ==
        Catch::Approx(0.75).margin(1e-12));

  CHECK_THROWS_AS(forward(unit, Eigen::VectorXd::Zero(2)), DimensionMismatch);
}

TEST_CASE("backprop matches central finite differences", "[discriminator]") {
  Rng rng(101);
  const struct {
    int input;
    std::vector<int> hidden;
  } shapes[] = {{3, {}}, {5, {4}}, {6, {5, 3}}, {10, {8, 4}}};
  for (const auto& shape : shapes) {
    for (int trial = 0; trial < 5; ++trial) {
      const ClassifierModel model =
          init_model(shape.input, rng.bits(), shape.hidden);
      REQUIRE(model.parameter_count() <= 200);
      const Eigen::MatrixXd x = gaussian_rows(6, shape.input, 0.0, 1.0, rng);
      Eigen::VectorXd y(6);
      for (int i = 0; i < 6; ++i) y[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
      CHECK(max_gradient_error(model, x, y) < 1e-4);
    }
  }
}

TEST_CASE("training on indistinguishable classes stays at chance",
          "[discriminator]") {
  TrainConfig cfg;
  cfg.epochs = 120;
  cfg.batch_size = 32;
  double accuracy_sum = 0.0;
  const int seeds = 5;
  for (int seed = 1; seed <= seeds; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed) * 17);
    const Eigen::MatrixXd real = gaussian_rows(200, 6, 0.0, 1.0, rng);
    const Eigen::MatrixXd fake = gaussian_rows(200, 6, 0.0, 1.0, rng);
    const Eigen::MatrixXd held_real = gaussian_rows(100, 6, 0.0, 1.0, rng);
    const Eigen::MatrixXd held_fake = gaussian_rows(100, 6, 0.0, 1.0, rng);
    cfg.seed = static_cast<std::uint64_t>(seed);
    const TrainResult trained =
        train(init_model(6, cfg.seed, {16, 8}), real, fake, cfg);

    Eigen::MatrixXd held(200, 6);
    held << held_real, held_fake;
    std::vector<int> labels(200, 0);
    for (int i = 0; i < 100; ++i) labels[static_cast<std::size_t>(i)] = 1;
    accuracy_sum += accuracy(trained.model, held, labels);
  }
  const double mean_accuracy = accuracy_sum / seeds;
  INFO("mean held-out accuracy " << mean_accuracy);
  CHECK(mean_accuracy >= 0.45);
  CHECK(mean_accuracy <= 0.55);
}

TEST_CASE("separable blobs are learned nearly perfectly", "[discriminator]") {
  Rng rng(303);
  const double sigma = 0.5;
  // centers 4 sigma apart leave a ~2 sigma margin per side
  const Eigen::MatrixXd real = gaussian_rows(200, 2, 1.0, sigma, rng);
  const Eigen::MatrixXd fake = gaussian_rows(200, 2, -1.0, sigma, rng);
  const Eigen::MatrixXd held_real = gaussian_rows(100, 2, 1.0, sigma, rng);
  const Eigen::MatrixXd held_fake = gaussian_rows(100, 2, -1.0, sigma, rng);

  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.seed = 1;
  const TrainResult trained =
      train(init_model(2, 9, {16, 8}), real, fake, cfg);
  CHECK(trained.loss_history.back() <= trained.loss_history.front());

  Eigen::MatrixXd held(200, 2);
  held << held_real, held_fake;
  std::vector<int> labels(200, 0);
  for (int i = 0; i < 100; ++i) labels[static_cast<std::size_t>(i)] = 1;
  CHECK(accuracy(trained.model, held, labels) > 0.95);
}

TEST_CASE("full-batch loss is monotone at a small learning rate",
          "[discriminator]") {
  Rng rng(404);
  const Eigen::MatrixXd real = gaussian_rows(60, 3, 0.8, 1.0, rng);
  const Eigen::MatrixXd fake = gaussian_rows(60, 3, -0.8, 1.0, rng);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 150;
  cfg.batch_size = 120;  // full batch
  cfg.early_stop_window = 0;
  const TrainResult trained = train(init_model(3, 2, {8}), real, fake, cfg);
  int increases = 0;
  for (std::size_t e = 1; e < trained.loss_history.size(); ++e) {
    if (trained.loss_history[e] > trained.loss_history[e - 1]) ++increases;
  }
  CHECK(static_cast<double>(increases) <=
        0.05 * static_cast<double>(trained.loss_history.size()));
}

TEST_CASE("poisoned parameters raise NonFiniteLoss", "[discriminator]") {
  Rng rng(505);
  const Eigen::MatrixXd real = gaussian_rows(20, 3, 0.5, 1.0, rng);
  const Eigen::MatrixXd fake = gaussian_rows(20, 3, -0.5, 1.0, rng);
  ClassifierModel model = init_model(3, 1, {4});
  Eigen::VectorXd params = get_parameters(model);
  params.setConstant(1e200);  // overflows the logits on the first batch
  set_parameters(model, params);
  TrainConfig cfg;
  cfg.epochs = 3;
  CHECK_THROWS_AS(train(std::move(model), real, fake, cfg), NonFiniteLoss);
}

TEST_CASE("score_batch preserves order and composition", "[discriminator]") {
  const ClassifierModel model = init_model(4, 21, {6});
  CHECK(score_batch(model, Eigen::MatrixXd(0, 4)).empty());

  Rng rng(606);
  const Eigen::MatrixXd batch = gaussian_rows(10, 4, 0.0, 1.0, rng);
  const std::vector<double> scores = score_batch(model, batch);
  REQUIRE(scores.size() == 10);
  CHECK(scores[0] == forward(model, batch.row(0).transpose()));

  Eigen::MatrixXd reversed(10, 4);
  for (int i = 0; i < 10; ++i) reversed.row(i) = batch.row(9 - i);
  const std::vector<double> reversed_scores = score_batch(model, reversed);
  for (int i = 0; i < 10; ++i) {
    CHECK(reversed_scores[static_cast<std::size_t>(i)] ==
          Catch::Approx(scores[static_cast<std::size_t>(9 - i)]).margin(1e-12));
  }
}

TEST_CASE("accuracy applies the tie-predicts-zero rule", "[discriminator]") {
  // w=4, b=-2 separates x<0.5 (label 0) from x>0.5 (label 1)
  const ClassifierModel model = logistic_unit(4.0, -2.0);
  Eigen::MatrixXd x(4, 1);
  x << 0.0, 0.2, 0.8, 1.0;
  const std::vector<int> labels = {0, 0, 1, 1};
  CHECK(accuracy(model, x, labels) == 1.0);
  const std::vector<int> flipped = {1, 1, 0, 0};
  CHECK(accuracy(model, x, flipped) == 0.0);

  // all-zero model outputs exactly 0.5 -> predicts 0 everywhere
  const ClassifierModel constant = logistic_unit(0.0, 0.0);
  Eigen::MatrixXd xs(3, 1);
  xs << -1.0, 0.0, 2.0;
  const std::vector<int> mixed = {1, 0, 0};
  CHECK(accuracy(constant, xs, mixed) == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("model checkpoint round-trips through JSON", "[discriminator]") {
  const ClassifierModel model = init_model(5, 77, {4, 3});
  const ClassifierModel back =
      model_from_json(nlohmann::json::parse(model_to_json(model).dump()));
  CHECK(get_parameters(back) == get_parameters(model));

  Rng rng(707);
  const Eigen::MatrixXd x = gaussian_rows(4, 5, 0.0, 1.0, rng);
  CHECK(forward_batch(back, x) == forward_batch(model, x));
}
