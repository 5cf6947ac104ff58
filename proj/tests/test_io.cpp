#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "advtune/common.hpp"
#include "advtune/experiment.hpp"
#include "advtune/io.hpp"

using namespace advtune;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("advtune_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

FeatureImage sample_image(Rng& rng, int width, int height) {
  FeatureImage img;
  img.width = width;
  img.height = height;
  const std::size_t cells =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  img.intensity.resize(cells);
  for (double& v : img.intensity) v = rng.uniform01();
  for (auto& channel : img.occupancy) {
    channel.resize(cells);
    for (auto& v : channel) v = rng.bernoulli(0.3) ? 1 : 0;
  }
  return img;
}

LabelImage sample_labels(Rng& rng, int width, int height) {
  LabelImage img;
  img.width = width;
  img.height = height;
  img.labels.resize(static_cast<std::size_t>(width) *
                    static_cast<std::size_t>(height));
  for (auto& v : img.labels) {
    v = rng.bernoulli(0.4)
            ? kBackgroundLabel
            : static_cast<std::uint8_t>(rng.uniform_index(kClassCount));
  }
  return img;
}

}  // namespace

TEST_CASE("pgm files round-trip byte-exact", "[io]") {
  TempDir dir("pgm");
  Rng rng(1);
  std::vector<std::uint8_t> data(6 * 4);
  for (auto& v : data) v = static_cast<std::uint8_t>(rng.uniform_index(256));
  write_pgm(dir.path / "img.pgm", 6, 4, data);
  const PgmImage back = read_pgm(dir.path / "img.pgm");
  CHECK(back.width == 6);
  CHECK(back.height == 4);
  CHECK(back.data == data);

  CHECK_THROWS_AS(read_pgm(dir.path / "missing.pgm"), IoError);
}

TEST_CASE("feature pgm bundles quantize intensity and keep occupancy exact",
          "[io]") {
  TempDir dir("fpgm");
  Rng rng(2);
  const FeatureImage img = sample_image(rng, 8, 8);
  write_feature_pgms(dir.path, "sample_000000", img);
  const FeatureImage back = read_feature_pgms(dir.path, "sample_000000");
  REQUIRE(back.intensity.size() == img.intensity.size());
  for (std::size_t i = 0; i < img.intensity.size(); ++i) {
    CHECK(back.intensity[i] ==
          Catch::Approx(img.intensity[i]).margin(0.5 / 255.0 + 1e-12));
  }
  for (int c = 0; c < kClassCount; ++c) {
    CHECK(back.occupancy[static_cast<std::size_t>(c)] ==
          img.occupancy[static_cast<std::size_t>(c)]);
  }
}

TEST_CASE("csv datasets round-trip doubles exactly", "[io]") {
  TempDir dir("csv");
  Rng rng(3);
  std::vector<FeatureImage> images = {sample_image(rng, 5, 3),
                                      sample_image(rng, 5, 3)};
  write_features_csv(dir.path / "features.csv", images);
  const std::vector<FeatureImage> back =
      read_features_csv(dir.path / "features.csv");
  REQUIRE(back.size() == images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    CHECK(back[i].intensity == images[i].intensity);
    for (int c = 0; c < kClassCount; ++c) {
      CHECK(back[i].occupancy[static_cast<std::size_t>(c)] ==
            images[i].occupancy[static_cast<std::size_t>(c)]);
    }
  }

  std::vector<LabelImage> labels = {sample_labels(rng, 5, 3)};
  write_labels_csv(dir.path / "labels.csv", labels);
  const std::vector<LabelImage> labels_back =
      read_labels_csv(dir.path / "labels.csv");
  REQUIRE(labels_back.size() == 1);
  CHECK(labels_back[0].labels == labels[0].labels);
}

TEST_CASE("datasets round-trip through both directory formats", "[io]") {
  Rng rng(4);
  Dataset data;
  for (int i = 0; i < 3; ++i) {
    data.images.push_back(sample_image(rng, 4, 4));
    data.labels.push_back(sample_labels(rng, 4, 4));
  }
  for (const std::string format : {"pgm", "csv"}) {
    TempDir dir("dataset_" + format);
    save_dataset(dir.path, data, format, 99);
    const Dataset back = load_dataset(dir.path);
    REQUIRE(back.images.size() == 3);
    REQUIRE(back.labels.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      for (int c = 0; c < kClassCount; ++c) {
        CHECK(back.images[i].occupancy[static_cast<std::size_t>(c)] ==
              data.images[i].occupancy[static_cast<std::size_t>(c)]);
      }
      CHECK(back.labels[i].labels == data.labels[i].labels);
    }
  }
  CHECK_THROWS_AS(load_dataset("/nonexistent/dataset/dir"), IoError);
}

TEST_CASE("format_double round-trips the shortest representation", "[io]") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double v = rng.uniform(-1e6, 1e6) * std::pow(10.0, rng.uniform(-9, 9));
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.0) == "0");
}

TEST_CASE("experiment config applies defaults and validates", "[io]") {
  const ExperimentConfig cfg = ExperimentConfig::from_json(
      nlohmann::json::parse(R"({"seed": 7, "loop": {"n_v": 50}})"));
  CHECK(cfg.seed == 7);
  CHECK(cfg.n_v == 50);
  CHECK(cfg.max_iterations == 6);
  CHECK(cfg.bins == 32);
  CHECK(cfg.train.epochs == 500);
  CHECK(cfg.target.type == "synthetic");
}

TEST_CASE("unknown config keys are rejected with their path", "[io]") {
  try {
    ExperimentConfig::from_json(
        nlohmann::json::parse(R"({"loop": {"n_v": 50, "nv_typo": 2}})"));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("config.loop.nv_typo") != std::string::npos);
  }
  CHECK_THROWS_AS(ExperimentConfig::from_json(
                      nlohmann::json::parse(R"({"unknown_section": {}})")),
                  ConfigError);
}

TEST_CASE("config validation rejects bad values", "[io]") {
  CHECK_THROWS_AS(ExperimentConfig::from_json(
                      nlohmann::json::parse(R"({"loop": {"n_v": 5}})")),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(
                      R"({"loop": {"max_iterations": 0}})")),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(
                      R"({"target": {"type": "nonsense"}})")),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(
                      R"({"target": {"type": "synthetic",
                          "tables": {"no_such_dim": [1.0]}}})")),
                  ConfigError);
}

TEST_CASE("missing config file errors with the path", "[io]") {
  try {
    ExperimentConfig::load("/no/such/config.json");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/no/such/config.json") !=
          std::string::npos);
  }
}

TEST_CASE("effective config echo reproduces itself", "[io]") {
  nlohmann::json doc = nlohmann::json::parse(R"({
    "seed": 11,
    "space": {"bins": 16},
    "render": {"width": 8, "height": 8},
    "loop": {"n_v": 64, "max_iterations": 2},
    "target": {"type": "synthetic", "count": 40}
  })");
  const ExperimentConfig cfg = ExperimentConfig::from_json(doc);
  const nlohmann::json echoed = cfg.effective_json();
  const ExperimentConfig reloaded = ExperimentConfig::from_json(echoed);
  CHECK(reloaded.effective_json() == echoed);
  CHECK(reloaded.seed == cfg.seed);
  CHECK(reloaded.bins == 16);
  CHECK(reloaded.render.width == 8);
}

TEST_CASE("stats on a dataset against itself reads zero KL", "[io]") {
  Rng rng(6);
  Dataset data;
  for (int i = 0; i < 4; ++i) {
    data.images.push_back(sample_image(rng, 6, 6));
    data.labels.push_back(sample_labels(rng, 6, 6));
  }
  TempDir a("stats_a"), out("stats_out");
  save_dataset(a.path, data, "csv", 1);
  const StatsResult result = run_stats(a.path, a.path, out.path, 32, 32);
  CHECK(result.kl_a_to_b == 0.0);
  CHECK(result.kl_b_to_a == 0.0);
  CHECK(fs::exists(out.path / "histogram_a.csv"));
  CHECK(fs::exists(out.path / "kl.csv"));
  CHECK(fs::exists(out.path / "class_proportions.csv"));

  CHECK_THROWS_AS(run_stats(a.path, a.path, out.path, 32, 64),
                  BinningMismatch);
}
