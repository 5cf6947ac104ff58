#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "advtune/common.hpp"

namespace advtune {

// Feedforward binary classifier: rectifier hidden layers, logistic output.
// weights[l] has shape (fan_in x fan_out); activations flow as row vectors.
struct ClassifierModel {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  int input_dim() const {
    return weights.empty() ? 0 : static_cast<int>(weights.front().rows());
  }
  std::size_t layer_count() const { return weights.size(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      n += static_cast<std::size_t>(weights[l].size()) +
           static_cast<std::size_t>(biases[l].size());
    }
    return n;
  }
};

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 500;
  int batch_size = 32;
  std::uint64_t seed = 0;
  // stop once the epoch loss moved less than this over the trailing window
  double early_stop_delta = 1e-6;
  int early_stop_window = 20;

  void validate() const {
    if (!(learning_rate > 0.0)) {
      throw ConfigError("train.learning_rate must be positive");
    }
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  }
};

// Uniform init with std 1/sqrt(fan_in) for weights and biases alike; a
// nonzero bias draw keeps rectifier pre-activations off the exact kink.
// Fill order is fixed (layer, weight rows, then bias) so a seed pins every
// parameter.
inline ClassifierModel init_model(int input_dim, std::uint64_t seed,
                                  const std::vector<int>& hidden = {64, 32}) {
  if (input_dim < 1) throw ConfigError("init_model: input_dim must be >= 1");
  std::vector<int> sizes;
  sizes.push_back(input_dim);
  for (int h : hidden) {
    if (h < 1) throw ConfigError("init_model: hidden sizes must be >= 1");
    sizes.push_back(h);
  }
  sizes.push_back(1);

  Rng rng(seed);
  ClassifierModel model;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    const double limit = std::sqrt(3.0) / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd w(fan_in, fan_out);
    for (int r = 0; r < fan_in; ++r) {
      for (int c = 0; c < fan_out; ++c) w(r, c) = rng.uniform(-limit, limit);
    }
    Eigen::VectorXd b(fan_out);
    for (int c = 0; c < fan_out; ++c) b[c] = rng.uniform(-limit, limit);
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }
  return model;
}

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log(1 + exp(z)) without overflow
inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Pre-activation logits for a batch (rows = samples).
inline Eigen::VectorXd forward_logits(const ClassifierModel& model,
                                      const Eigen::MatrixXd& x,
                                      std::vector<Eigen::MatrixXd>* activations) {
  Eigen::MatrixXd a = x;
  if (activations) activations->push_back(a);
  for (std::size_t l = 0; l + 1 < model.layer_count(); ++l) {
    a = ((a * model.weights[l]).rowwise() + model.biases[l].transpose())
            .cwiseMax(0.0);
    if (activations) activations->push_back(a);
  }
  const std::size_t last = model.layer_count() - 1;
  return (a * model.weights[last]).rowwise() +
         model.biases[last].transpose();
}

inline double clamp_probability(double p) {
  return std::clamp(p, 1e-12, 1.0 - 1e-12);
}

}  // namespace detail

inline Eigen::VectorXd forward_batch(const ClassifierModel& model,
                                     const Eigen::MatrixXd& x) {
  if (x.cols() != model.input_dim()) {
    throw DimensionMismatch("forward: input has " + std::to_string(x.cols()) +
                            " features, model expects " +
                            std::to_string(model.input_dim()));
  }
  Eigen::VectorXd z = detail::forward_logits(model, x, nullptr);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z[i] = detail::clamp_probability(detail::sigmoid(z[i]));
  }
  return z;
}

inline double forward(const ClassifierModel& model, const Eigen::VectorXd& x) {
  return forward_batch(model, x.transpose())[0];
}

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Mean binary cross-entropy over the batch, computed on logits for
// stability; gradients (if requested) are the exact analytic backprop,
// reduced over the batch by dense products in a fixed order.
inline double loss_and_gradients(const ClassifierModel& model,
                                 const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& y, Gradients* grads) {
  if (x.cols() != model.input_dim()) {
    throw DimensionMismatch("loss_and_gradients: feature width mismatch");
  }
  if (x.rows() != y.size()) {
    throw LengthMismatch("loss_and_gradients: labels do not match batch");
  }
  std::vector<Eigen::MatrixXd> activations;
  const Eigen::VectorXd z = detail::forward_logits(model, x, &activations);

  const double n = static_cast<double>(x.rows());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    loss += detail::softplus(z[i]) - y[i] * z[i];
  }
  loss /= n;
  if (grads == nullptr) return loss;

  grads->weights.assign(model.weights.begin(), model.weights.end());
  grads->biases.assign(model.biases.begin(), model.biases.end());

  // d(loss)/d(logit) = (sigmoid(z) - y) / n
  Eigen::MatrixXd delta(x.rows(), 1);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    delta(i, 0) = (detail::sigmoid(z[i]) - y[i]) / n;
  }
  for (std::size_t l = model.layer_count(); l-- > 0;) {
    grads->weights[l] = activations[l].transpose() * delta;
    grads->biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd upstream = delta * model.weights[l].transpose();
      // rectifier gate: activations[l] is post-ReLU of layer l-1's output
      delta = upstream.cwiseProduct(
          (activations[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

struct TrainResult {
  ClassifierModel model;
  std::vector<double> loss_history;  // one mean training loss per epoch
};

// Mini-batch SGD over real (label 1) vs fake (label 0) samples.
inline TrainResult train(ClassifierModel model, const Eigen::MatrixXd& real,
                         const Eigen::MatrixXd& fake, const TrainConfig& cfg) {
  cfg.validate();
  if (real.rows() == 0 || fake.rows() == 0) {
    throw EmptyDataset("train: both datasets must be nonempty");
  }
  if (real.cols() != fake.cols()) {
    throw DimensionMismatch("train: real/fake feature widths differ");
  }
  const Eigen::Index n = real.rows() + fake.rows();
  Eigen::MatrixXd x(n, real.cols());
  x << real, fake;
  Eigen::VectorXd y(n);
  y.head(real.rows()).setOnes();
  y.tail(fake.rows()).setZero();

  Rng rng(cfg.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  TrainResult result{std::move(model), {}};
  result.loss_history.reserve(static_cast<std::size_t>(cfg.epochs));
  Gradients grads;
  Eigen::MatrixXd batch_x;
  Eigen::VectorXd batch_y;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    int batches = 0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index size = std::min<Eigen::Index>(cfg.batch_size, n - start);
      batch_x.resize(size, x.cols());
      batch_y.resize(size);
      for (Eigen::Index i = 0; i < size; ++i) {
        batch_x.row(i) = x.row(order[static_cast<std::size_t>(start + i)]);
        batch_y[i] = y[order[static_cast<std::size_t>(start + i)]];
      }
      const double loss = loss_and_gradients(result.model, batch_x, batch_y, &grads);
      if (!std::isfinite(loss)) {
        throw NonFiniteLoss("train: loss diverged at epoch " +
                            std::to_string(epoch) +
                            "; lower the learning rate");
      }
      for (std::size_t l = 0; l < result.model.layer_count(); ++l) {
        result.model.weights[l] -= cfg.learning_rate * grads.weights[l];
        result.model.biases[l] -= cfg.learning_rate * grads.biases[l];
      }
      epoch_loss += loss;
      ++batches;
    }
    result.loss_history.push_back(epoch_loss / batches);
    const std::size_t e = result.loss_history.size();
    if (cfg.early_stop_window > 0 &&
        e > static_cast<std::size_t>(cfg.early_stop_window)) {
      const double drift =
          std::abs(result.loss_history[e - 1 - static_cast<std::size_t>(cfg.early_stop_window)] -
                   result.loss_history[e - 1]);
      if (drift < cfg.early_stop_delta) break;
    }
  }
  return result;
}

inline std::vector<double> score_batch(const ClassifierModel& model,
                                       const Eigen::MatrixXd& samples) {
  if (samples.rows() == 0) return {};
  const Eigen::VectorXd p = forward_batch(model, samples);
  return std::vector<double>(p.data(), p.data() + p.size());
}

// Thresholded accuracy; a probability of exactly 0.5 predicts label 0.
inline double accuracy(const ClassifierModel& model, const Eigen::MatrixXd& x,
                       const std::vector<int>& labels) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw LengthMismatch("accuracy: labels do not match samples");
  }
  if (labels.empty()) throw EmptyDataset("accuracy: empty labeled set");
  const Eigen::VectorXd p = forward_batch(model, x);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const int predicted = p[i] > 0.5 ? 1 : 0;
    if (predicted == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

// Flat parameter view in (layer, row, column) order; used by the
// finite-difference gradient check and the JSON checkpoint.
inline Eigen::VectorXd get_parameters(const ClassifierModel& model) {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(model.parameter_count()));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    for (Eigen::Index r = 0; r < model.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < model.weights[l].cols(); ++c) {
        flat[at++] = model.weights[l](r, c);
      }
    }
    for (Eigen::Index i = 0; i < model.biases[l].size(); ++i) {
      flat[at++] = model.biases[l][i];
    }
  }
  return flat;
}

inline void set_parameters(ClassifierModel& model, const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(model.parameter_count())) {
    throw DimensionMismatch("set_parameters: wrong parameter count");
  }
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    for (Eigen::Index r = 0; r < model.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < model.weights[l].cols(); ++c) {
        model.weights[l](r, c) = flat[at++];
      }
    }
    for (Eigen::Index i = 0; i < model.biases[l].size(); ++i) {
      model.biases[l][i] = flat[at++];
    }
  }
}

inline Eigen::VectorXd flatten_gradients(const Gradients& grads) {
  ClassifierModel view;
  view.weights = grads.weights;
  view.biases = grads.biases;
  return get_parameters(view);
}

inline nlohmann::json model_to_json(const ClassifierModel& model) {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < model.weights[l].rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < model.weights[l].cols(); ++c) {
        row.push_back(model.weights[l](r, c));
      }
      rows.push_back(std::move(row));
    }
    nlohmann::json bias = nlohmann::json::array();
    for (Eigen::Index i = 0; i < model.biases[l].size(); ++i) {
      bias.push_back(model.biases[l][i]);
    }
    layers.push_back({{"weights", std::move(rows)}, {"bias", std::move(bias)}});
  }
  return {{"layers", std::move(layers)}};
}

inline ClassifierModel model_from_json(const nlohmann::json& j) {
  ClassifierModel model;
  for (const auto& layer : j.at("layers")) {
    const auto& rows = layer.at("weights");
    if (rows.empty()) throw ConfigError("model_from_json: empty weight matrix");
    const std::size_t fan_in = rows.size();
    const std::size_t fan_out = rows[0].size();
    Eigen::MatrixXd w(fan_in, fan_out);
    for (std::size_t r = 0; r < fan_in; ++r) {
      if (rows[r].size() != fan_out) {
        throw ConfigError("model_from_json: ragged weight matrix");
      }
      for (std::size_t c = 0; c < fan_out; ++c) {
        w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            rows[r][c].get<double>();
      }
    }
    const auto& bias = layer.at("bias");
    if (bias.size() != fan_out) {
      throw ConfigError("model_from_json: bias length mismatch");
    }
    Eigen::VectorXd b(fan_out);
    for (std::size_t i = 0; i < fan_out; ++i) {
      b[static_cast<Eigen::Index>(i)] = bias[i].get<double>();
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }
  return model;
}

}  // namespace advtune
