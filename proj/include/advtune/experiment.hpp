#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "advtune/common.hpp"
#include "advtune/io.hpp"
#include "advtune/priors.hpp"
#include "advtune/stats.hpp"
#include "advtune/tuning.hpp"

namespace advtune {

namespace detail {

// Tracks which keys of a JSON object were consumed; anything left over is a
// config error, reported with its full path.
class StrictObject {
 public:
  StrictObject(const nlohmann::json& obj, std::string path)
      : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) {
      throw ConfigError("config node '" + path_ + "' must be an object");
    }
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!obj_.contains(key)) return fallback;
    try {
      return obj_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config key '" + path_ + "." + key +
                        "': " + e.what());
    }
  }

  const nlohmann::json* child(const std::string& key) {
    seen_.insert(key);
    if (!obj_.contains(key)) return nullptr;
    return &obj_.at(key);
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError("unknown config key '" + path_ + "." + it.key() +
                          "'");
      }
    }
  }

 private:
  const nlohmann::json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

struct TargetConfig {
  std::string type = "synthetic";  // synthetic | directory
  std::string path;                // directory mode
  int count = 1000;                // synthetic mode: rendered target samples
  // synthetic mode: per-dimension Q tables by dimension name; unlisted
  // dimensions stay uniform
  std::map<std::string, std::vector<double>> tables;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "advtune_out";

  int bins = 32;
  double rate_upper = 0.003;

  GibbsConfig gibbs;
  LayoutSampleOptions layout;
  WorldRegion region;
  RenderConfig render;
  TrainConfig train;
  std::vector<int> hidden = {64, 32};

  int n_v = 1000;
  int max_iterations = 6;
  double convergence_epsilon = 0.05;
  double kde_bandwidth = 0.1;
  double holdout_fraction = 0.2;

  TargetConfig target;
  int histogram_bins = 64;
  std::string generate_format = "pgm";

  LoopConfig to_loop_config() const {
    LoopConfig loop;
    loop.n_v = n_v;
    loop.max_iterations = max_iterations;
    loop.convergence_epsilon = convergence_epsilon;
    loop.kde_bandwidth = kde_bandwidth;
    loop.holdout_fraction = holdout_fraction;
    loop.seed = seed;
    loop.hidden = hidden;
    loop.space = default_parameter_space(bins, rate_upper);
    loop.train = train;
    loop.gibbs = gibbs;
    loop.layout = layout;
    loop.region = region;
    loop.render = render;
    return loop;
  }

  void validate() const {
    to_loop_config().validate();
    if (histogram_bins < 2) {
      throw ConfigError("stats.histogram_bins must be >= 2");
    }
    if (generate_format != "pgm" && generate_format != "csv") {
      throw ConfigError("generate.format must be 'pgm' or 'csv'");
    }
    if (target.type == "synthetic") {
      const ParameterSpace space = default_parameter_space(bins, rate_upper);
      for (const auto& [name, table] : target.tables) {
        bool found = false;
        for (const Dimension& d : space.dims) {
          if (d.name != name) continue;
          found = true;
          if (table.size() != static_cast<std::size_t>(d.bins)) {
            throw ConfigError("target.tables." + name + " must have " +
                              std::to_string(d.bins) + " entries");
          }
          double maxv = 0.0;
          for (double v : table) {
            if (!(v >= 0.0)) {
              throw ConfigError("target.tables." + name +
                                " entries must be nonnegative");
            }
            maxv = std::max(maxv, v);
          }
          if (!(maxv > 0.0)) {
            throw ConfigError("target.tables." + name + " is all zero");
          }
        }
        if (!found) {
          throw ConfigError("target.tables names unknown dimension '" + name +
                            "'");
        }
      }
      if (target.count < 10) {
        throw ConfigError("target.count must be >= 10 for synthetic targets");
      }
    } else if (target.type == "directory") {
      if (target.path.empty()) {
        throw ConfigError("target.path required when target.type=directory");
      }
    } else {
      throw ConfigError("target.type must be 'synthetic' or 'directory'");
    }
  }

  nlohmann::json effective_json() const {
    nlohmann::json tables = nlohmann::json::object();
    for (const auto& [name, table] : target.tables) tables[name] = table;
    nlohmann::json target_json = {{"type", target.type}};
    if (target.type == "directory") {
      target_json["path"] = target.path;
    } else {
      target_json["count"] = target.count;
      target_json["tables"] = std::move(tables);
    }
    return {
        {"seed", seed},
        {"output_dir", output_dir},
        {"space", {{"bins", bins}, {"rate_upper", rate_upper}}},
        {"gibbs", {{"k", gibbs.k}, {"energy_cap", gibbs.energy_cap}}},
        {"layout",
         {{"scale_min", layout.scale_min},
          {"scale_max", layout.scale_max},
          {"retry_budget", layout.retry_budget}}},
        {"region",
         {{"min_x", region.min_x},
          {"min_y", region.min_y},
          {"max_x", region.max_x},
          {"max_y", region.max_y}}},
        {"render",
         {{"width", render.width},
          {"height", render.height},
          {"view_scale", render.view_scale},
          {"depth_ref", render.depth_ref},
          {"depth_cap", render.depth_cap}}},
        {"train",
         {{"learning_rate", train.learning_rate},
          {"epochs", train.epochs},
          {"batch_size", train.batch_size},
          {"hidden", hidden},
          {"early_stop_delta", train.early_stop_delta},
          {"early_stop_window", train.early_stop_window}}},
        {"loop",
         {{"n_v", n_v},
          {"max_iterations", max_iterations},
          {"convergence_epsilon", convergence_epsilon},
          {"kde_bandwidth", kde_bandwidth},
          {"holdout_fraction", holdout_fraction}}},
        {"target", std::move(target_json)},
        {"stats", {{"histogram_bins", histogram_bins}}},
        {"generate", {{"format", generate_format}}},
    };
  }

  static ExperimentConfig from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    detail::StrictObject root(j, "config");
    cfg.seed = root.get<std::uint64_t>("seed", cfg.seed);
    cfg.output_dir = root.get<std::string>("output_dir", cfg.output_dir);

    if (const nlohmann::json* node = root.child("space")) {
      detail::StrictObject s(*node, "config.space");
      cfg.bins = s.get<int>("bins", cfg.bins);
      cfg.rate_upper = s.get<double>("rate_upper", cfg.rate_upper);
      s.finish();
    }
    if (const nlohmann::json* node = root.child("gibbs")) {
      detail::StrictObject s(*node, "config.gibbs");
      cfg.gibbs.k = s.get<double>("k", cfg.gibbs.k);
      cfg.gibbs.energy_cap = s.get<double>("energy_cap", cfg.gibbs.energy_cap);
      s.finish();
    }
    if (const nlohmann::json* node = root.child("layout")) {
      detail::StrictObject s(*node, "config.layout");
      cfg.layout.scale_min = s.get<double>("scale_min", cfg.layout.scale_min);
      cfg.layout.scale_max = s.get<double>("scale_max", cfg.layout.scale_max);
      cfg.layout.retry_budget = s.get<int>("retry_budget", cfg.layout.retry_budget);
      s.finish();
    }
    if (const nlohmann::json* node = root.child("region")) {
      detail::StrictObject s(*node, "config.region");
      cfg.region.min_x = s.get<double>("min_x", cfg.region.min_x);
      cfg.region.min_y = s.get<double>("min_y", cfg.region.min_y);
      cfg.region.max_x = s.get<double>("max_x", cfg.region.max_x);
      cfg.region.max_y = s.get<double>("max_y", cfg.region.max_y);
      s.finish();
    }
    if (const nlohmann::json* node = root.child("render")) {
      detail::StrictObject s(*node, "config.render");
      cfg.render.width = s.get<int>("width", cfg.render.width);
      cfg.render.height = s.get<int>("height", cfg.render.height);
      cfg.render.view_scale = s.get<double>("view_scale", cfg.render.view_scale);
      cfg.render.depth_ref = s.get<double>("depth_ref", cfg.render.depth_ref);
      cfg.render.depth_cap = s.get<double>("depth_cap", cfg.render.depth_cap);
      s.finish();
    }
    if (const nlohmann::json* node = root.child("train")) {
      detail::StrictObject s(*node, "config.train");
      cfg.train.learning_rate = s.get<double>("learning_rate", cfg.train.learning_rate);
      cfg.train.epochs = s.get<int>("epochs", cfg.train.epochs);
      cfg.train.batch_size = s.get<int>("batch_size", cfg.train.batch_size);
      cfg.hidden = s.get<std::vector<int>>("hidden", cfg.hidden);
      cfg.train.early_stop_delta = s.get<double>("early_stop_delta", cfg.train.early_stop_delta);
      cfg.train.early_stop_window = s.get<int>("early_stop_window", cfg.train.early_stop_window);
      s.finish();
    }
    if (const nlohmann::json* node = root.child("loop")) {
      detail::StrictObject s(*node, "config.loop");
      cfg.n_v = s.get<int>("n_v", cfg.n_v);
      cfg.max_iterations = s.get<int>("max_iterations", cfg.max_iterations);
      cfg.convergence_epsilon = s.get<double>("convergence_epsilon", cfg.convergence_epsilon);
      cfg.kde_bandwidth = s.get<double>("kde_bandwidth", cfg.kde_bandwidth);
      cfg.holdout_fraction = s.get<double>("holdout_fraction", cfg.holdout_fraction);
      s.finish();
    }
    if (const nlohmann::json* node = root.child("target")) {
      detail::StrictObject s(*node, "config.target");
      cfg.target.type = s.get<std::string>("type", cfg.target.type);
      cfg.target.path = s.get<std::string>("path", cfg.target.path);
      cfg.target.count = s.get<int>("count", cfg.target.count);
      if (const nlohmann::json* tables = s.child("tables")) {
        if (!tables->is_object()) {
          throw ConfigError("config.target.tables must be an object");
        }
        for (auto it = tables->begin(); it != tables->end(); ++it) {
          cfg.target.tables[it.key()] = it.value().get<std::vector<double>>();
        }
      }
      s.finish();
    }
    if (const nlohmann::json* node = root.child("stats")) {
      detail::StrictObject s(*node, "config.stats");
      cfg.histogram_bins = s.get<int>("histogram_bins", cfg.histogram_bins);
      s.finish();
    }
    if (const nlohmann::json* node = root.child("generate")) {
      detail::StrictObject s(*node, "config.generate");
      cfg.generate_format = s.get<std::string>("format", cfg.generate_format);
      s.finish();
    }
    root.finish();
    cfg.validate();
    return cfg;
  }

  static ExperimentConfig load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
      throw IoError("config file not found: " + path.string());
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file " + path.string() +
                        " is not valid JSON: " + e.what());
    }
    return from_json(j);
  }
};

struct TargetData {
  Eigen::MatrixXd features;
  std::vector<std::vector<double>> tables;  // Q, when known
  bool has_tables = false;
};

inline constexpr std::uint64_t kTargetStream = 0x7a6765745f746774ULL;

// Synthetic targets build Q from the config tables and render through the
// same proxy pipeline as the generator; directory targets are ingested from
// disk and Q stays unknown.
inline TargetData build_target(const ExperimentConfig& cfg) {
  TargetData data;
  const LoopConfig loop = cfg.to_loop_config();
  if (cfg.target.type == "directory") {
    const Dataset dataset = load_dataset(cfg.target.path);
    if (dataset.images.empty()) {
      throw EmptyDataset("target dataset is empty: " + cfg.target.path);
    }
    data.features = features_matrix(dataset.images);
    return data;
  }
  JointPrior q = uniform_prior(loop.space);
  for (const auto& [name, table] : cfg.target.tables) {
    for (std::size_t d = 0; d < loop.space.dims.size(); ++d) {
      if (loop.space.dims[d].name == name) {
        q.tables[d] = max_normalize(PriorTable{static_cast<int>(d), table});
      }
    }
  }
  const GeneratedBatch batch = generate_batch(
      q, cfg.target.count, loop, Rng(derive_seed(cfg.seed, kTargetStream)));
  data.features = batch.features;
  data.has_tables = true;
  data.tables.reserve(q.tables.size());
  for (const PriorTable& t : q.tables) data.tables.push_back(t.values);
  return data;
}

namespace detail {

inline nlohmann::json report_to_json(const ExperimentConfig& cfg,
                                     const TuningReport& report) {
  nlohmann::json iterations = nlohmann::json::array();
  for (const IterationRecord& rec : report.records) {
    nlohmann::json entry = {{"iteration", rec.iteration},
                            {"heldout_accuracy", rec.heldout_accuracy},
                            {"tables", rec.tables}};
    if (!rec.kl_to_target.empty()) entry["kl_to_target"] = rec.kl_to_target;
    iterations.push_back(std::move(entry));
  }
  nlohmann::json j = {{"config", cfg.effective_json()},
                      {"stop_reason", report.stop_reason},
                      {"iterations", std::move(iterations)},
                      {"final_prior", prior_to_json(report.final_prior)}};
  if (!report.initial_kl_to_target.empty()) {
    j["initial_kl_to_target"] = report.initial_kl_to_target;
  }
  return j;
}

}  // namespace detail

// Runs the tuning loop for a config and writes every artifact under
// `out_dir`: report.json (deterministic; no timing), trajectory/tables CSVs
// for plotting, the final prior tables, and wall-clock timings.
inline TuningReport run_tune(const ExperimentConfig& cfg,
                             const std::filesystem::path& out_dir) {
  cfg.validate();
  const LoopConfig loop = cfg.to_loop_config();
  const TargetData target = build_target(cfg);
  TuningReport report =
      run(loop, target.features, target.has_tables ? &target.tables : nullptr);

  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir / "report.json",
                  detail::report_to_json(cfg, report).dump(2) + "\n");
  write_text_file(out_dir / "priors_final.json",
                  prior_to_json(report.final_prior).dump(2) + "\n");

  std::string trajectory = "iteration,heldout_accuracy";
  const bool has_kl = !report.initial_kl_to_target.empty();
  if (has_kl) {
    for (const Dimension& d : loop.space.dims) trajectory += ",kl_" + d.name;
  }
  trajectory += "\n";
  if (has_kl) {
    trajectory += "0,";  // uniform prior baseline, no accuracy yet
    for (std::size_t d = 0; d < report.initial_kl_to_target.size(); ++d) {
      trajectory += ",";
      trajectory += format_double(report.initial_kl_to_target[d]);
    }
    trajectory += "\n";
  }
  std::string timings = "iteration,wall_seconds\n";
  std::string tables_csv = "iteration,dim,dim_name,bin,value\n";
  for (const IterationRecord& rec : report.records) {
    trajectory += std::to_string(rec.iteration) + "," +
                  format_double(rec.heldout_accuracy);
    for (double kl : rec.kl_to_target) {
      trajectory += "," + format_double(kl);
    }
    trajectory += "\n";
    timings += std::to_string(rec.iteration) + "," +
               format_double(rec.wall_seconds) + "\n";
    for (std::size_t d = 0; d < rec.tables.size(); ++d) {
      for (std::size_t b = 0; b < rec.tables[d].size(); ++b) {
        tables_csv += std::to_string(rec.iteration) + "," + std::to_string(d) +
                      "," + loop.space.dims[d].name + "," + std::to_string(b) +
                      "," + format_double(rec.tables[d][b]) + "\n";
      }
    }
  }
  write_text_file(out_dir / "trajectory.csv", trajectory);
  write_text_file(out_dir / "tables.csv", tables_csv);
  write_text_file(out_dir / "timings.csv", timings);
  return report;
}

// Samples `count` scenes from a prior (uniform unless a prior-table file is
// given), renders features and labels, and writes the dataset plus layout
// records and a manifest.
inline void run_generate(const ExperimentConfig& cfg,
                         const std::filesystem::path& prior_path, int count,
                         const std::filesystem::path& out_dir) {
  cfg.validate();
  if (count < 0) throw ConfigError("generate count must be >= 0");
  const LoopConfig loop = cfg.to_loop_config();
  JointPrior prior = uniform_prior(loop.space);
  if (!prior_path.empty()) {
    prior = prior_from_json(nlohmann::json::parse(read_text_file(prior_path)));
  }

  std::filesystem::create_directories(out_dir);
  const Rng rng(derive_seed(cfg.seed, 0x67656e65ULL));
  Dataset data;
  data.images.resize(static_cast<std::size_t>(count));
  data.labels.resize(static_cast<std::size_t>(count));
  std::vector<SceneLayout> layouts(static_cast<std::size_t>(count));
  std::vector<SceneParameters> thetas(static_cast<std::size_t>(count));
  Rng theta_rng = rng.fork(0);
  for (int i = 0; i < count; ++i) {
    thetas[static_cast<std::size_t>(i)] = sample_theta(prior, theta_rng);
  }
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
    Rng layout_rng = rng.fork(1 + static_cast<std::uint64_t>(i));
    layouts[i] = sample_layout(thetas[i], loop.region, loop.gibbs, layout_rng,
                               loop.classes, loop.layout);
    data.images[i] = render(thetas[i], layouts[i], loop.render);
    data.labels[i] = render_labels(thetas[i], layouts[i], loop.render);
  });
  save_dataset(out_dir, data, cfg.generate_format, cfg.seed);
  for (int i = 0; i < count; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "sample_%06d", i);
    std::ofstream os(out_dir / (std::string(stem) + ".layout.txt"),
                     std::ios::binary);
    if (!os) throw IoError("cannot write layout record for " + std::string(stem));
    write_layout(os, layouts[static_cast<std::size_t>(i)], loop.region,
                 cfg.seed);
  }
}

struct StatsResult {
  double kl_a_to_b = 0.0;
  double kl_b_to_a = 0.0;
};

// Compares two dataset directories: intensity histograms, their KL in both
// directions, and per-class pixel proportions, all emitted as CSV.
inline StatsResult run_stats(const std::filesystem::path& dir_a,
                             const std::filesystem::path& dir_b,
                             const std::filesystem::path& out_dir, int bins_a,
                             int bins_b) {
  const Dataset a = load_dataset(dir_a);
  const Dataset b = load_dataset(dir_b);
  if (a.images.empty() || b.images.empty()) {
    throw EmptyDataset("stats: both datasets must contain images");
  }
  const Histogram ha = intensity_histogram(a.images, bins_a);
  const Histogram hb = intensity_histogram(b.images, bins_b);
  StatsResult result;
  result.kl_a_to_b = histogram_kl(ha, hb);
  result.kl_b_to_a = histogram_kl(hb, ha);

  std::filesystem::create_directories(out_dir);
  auto histogram_csv = [](const Histogram& h) {
    std::string csv = "bin_left,bin_right,frequency\n";
    for (int i = 0; i < h.bins; ++i) {
      csv += format_double(static_cast<double>(i) / h.bins) + "," +
             format_double(static_cast<double>(i + 1) / h.bins) + "," +
             format_double(h.values[static_cast<std::size_t>(i)]) + "\n";
    }
    return csv;
  };
  write_text_file(out_dir / "histogram_a.csv", histogram_csv(ha));
  write_text_file(out_dir / "histogram_b.csv", histogram_csv(hb));
  write_text_file(out_dir / "kl.csv",
                  "direction,kl\na_to_b," + format_double(result.kl_a_to_b) +
                      "\nb_to_a," + format_double(result.kl_b_to_a) + "\n");

  std::string proportions = "dataset,class_id,class_name,fraction\n";
  auto add_proportions = [&](const char* tag, const Dataset& d) {
    if (d.labels.empty()) return;
    const ClassProportions p = class_pixel_proportions(d.labels);
    for (int c = 0; c < kClassCount; ++c) {
      proportions += std::string(tag) + "," + std::to_string(c) + "," +
                     default_object_classes()[static_cast<std::size_t>(c)].name +
                     "," +
                     format_double(p.all_background
                                       ? 0.0
                                       : p.fraction[static_cast<std::size_t>(c)]) +
                     "\n";
    }
  };
  add_proportions("a", a);
  add_proportions("b", b);
  write_text_file(out_dir / "class_proportions.csv", proportions);
  return result;
}

}  // namespace advtune
