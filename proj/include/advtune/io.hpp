#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "advtune/common.hpp"
#include "advtune/render.hpp"

namespace advtune {

// Shortest decimal representation that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw IoError("format_double failed");
  return std::string(buf, end);
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << content;
  if (!os) throw IoError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

// ----- PGM (binary P5, maxval 255) -----

inline void write_pgm(const std::filesystem::path& path, int width, int height,
                      const std::vector<std::uint8_t>& data) {
  if (data.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw DimensionMismatch("write_pgm: data does not match grid");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << "P5\n" << width << ' ' << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(data.data()),
           static_cast<std::streamsize>(data.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

struct PgmImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;
};

inline PgmImage read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  auto next_token = [&]() -> std::string {
    std::string tok;
    while (is >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(is, rest);
        continue;
      }
      return tok;
    }
    throw IoError("truncated PGM header: " + path.string());
  };
  if (next_token() != "P5") throw IoError("not a binary PGM: " + path.string());
  PgmImage img;
  img.width = std::stoi(next_token());
  img.height = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (img.width < 1 || img.height < 1 || maxval != 255) {
    throw IoError("unsupported PGM geometry/maxval: " + path.string());
  }
  is.get();  // single whitespace after maxval
  img.data.resize(static_cast<std::size_t>(img.width) *
                  static_cast<std::size_t>(img.height));
  is.read(reinterpret_cast<char*>(img.data.data()),
          static_cast<std::streamsize>(img.data.size()));
  if (is.gcount() != static_cast<std::streamsize>(img.data.size())) {
    throw IoError("truncated PGM payload: " + path.string());
  }
  return img;
}

// ----- per-sample PGM bundles -----

inline std::uint8_t quantize_unit(double v) {
  const double t = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(t * 255.0));
}

// Writes <stem>.pgm (intensity) plus <stem>.occK.pgm per occupancy channel.
inline void write_feature_pgms(const std::filesystem::path& dir,
                               const std::string& stem,
                               const FeatureImage& img) {
  std::vector<std::uint8_t> bytes(img.intensity.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = quantize_unit(img.intensity[i]);
  }
  write_pgm(dir / (stem + ".pgm"), img.width, img.height, bytes);
  for (int c = 0; c < kClassCount; ++c) {
    const auto& channel = img.occupancy[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < bytes.size(); ++i) {
      bytes[i] = channel[i] ? 255 : 0;
    }
    write_pgm(dir / (stem + ".occ" + std::to_string(c) + ".pgm"), img.width,
              img.height, bytes);
  }
}

inline FeatureImage read_feature_pgms(const std::filesystem::path& dir,
                                      const std::string& stem) {
  const PgmImage intensity = read_pgm(dir / (stem + ".pgm"));
  FeatureImage img;
  img.width = intensity.width;
  img.height = intensity.height;
  img.intensity.resize(intensity.data.size());
  for (std::size_t i = 0; i < intensity.data.size(); ++i) {
    img.intensity[i] = intensity.data[i] / 255.0;
  }
  for (int c = 0; c < kClassCount; ++c) {
    const PgmImage occ =
        read_pgm(dir / (stem + ".occ" + std::to_string(c) + ".pgm"));
    if (occ.width != img.width || occ.height != img.height) {
      throw DimensionMismatch("occupancy grid mismatch for " + stem);
    }
    auto& channel = img.occupancy[static_cast<std::size_t>(c)];
    channel.resize(occ.data.size());
    for (std::size_t i = 0; i < occ.data.size(); ++i) {
      channel[i] = occ.data[i] > 127 ? 1 : 0;
    }
  }
  return img;
}

inline void write_label_pgm(const std::filesystem::path& dir,
                            const std::string& stem, const LabelImage& img) {
  write_pgm(dir / (stem + ".labels.pgm"), img.width, img.height, img.labels);
}

inline LabelImage read_label_pgm(const std::filesystem::path& dir,
                                 const std::string& stem) {
  const PgmImage pgm = read_pgm(dir / (stem + ".labels.pgm"));
  LabelImage img;
  img.width = pgm.width;
  img.height = pgm.height;
  img.labels = pgm.data;
  return img;
}

// ----- CSV datasets (lossless doubles, one sample per row) -----

inline void write_features_csv(const std::filesystem::path& path,
                               const std::vector<FeatureImage>& images) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  if (!images.empty()) {
    os << "# advtune-features " << images.front().width << ' '
       << images.front().height << ' ' << kFeatureChannels << '\n';
  } else {
    os << "# advtune-features 0 0 " << kFeatureChannels << '\n';
  }
  for (const FeatureImage& img : images) {
    const std::vector<double> flat = flatten_features(img);
    for (std::size_t i = 0; i < flat.size(); ++i) {
      if (i) os << ',';
      os << format_double(flat[i]);
    }
    os << '\n';
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline std::vector<FeatureImage> read_features_csv(
    const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty features CSV: " + path.string());
  int width = 0, height = 0, channels = 0;
  {
    std::istringstream header(line);
    std::string tag, magic;
    header >> tag >> magic >> width >> height >> channels;
    if (tag != "#" || magic != "advtune-features" || channels != kFeatureChannels) {
      throw IoError("bad features CSV header: " + path.string());
    }
  }
  std::vector<FeatureImage> images;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                 kFeatureChannels);
    std::istringstream row(line);
    std::string tok;
    while (std::getline(row, tok, ',')) flat.push_back(std::stod(tok));
    images.push_back(unflatten_features(flat, width, height));
  }
  return images;
}

inline void write_labels_csv(const std::filesystem::path& path,
                             const std::vector<LabelImage>& labels) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  if (!labels.empty()) {
    os << "# advtune-labels " << labels.front().width << ' '
       << labels.front().height << '\n';
  } else {
    os << "# advtune-labels 0 0\n";
  }
  for (const LabelImage& img : labels) {
    for (std::size_t i = 0; i < img.labels.size(); ++i) {
      if (i) os << ',';
      os << static_cast<int>(img.labels[i]);
    }
    os << '\n';
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline std::vector<LabelImage> read_labels_csv(
    const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty labels CSV: " + path.string());
  int width = 0, height = 0;
  {
    std::istringstream header(line);
    std::string tag, magic;
    header >> tag >> magic >> width >> height;
    if (tag != "#" || magic != "advtune-labels") {
      throw IoError("bad labels CSV header: " + path.string());
    }
  }
  std::vector<LabelImage> labels;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    LabelImage img;
    img.width = width;
    img.height = height;
    std::istringstream row(line);
    std::string tok;
    while (std::getline(row, tok, ',')) {
      img.labels.push_back(static_cast<std::uint8_t>(std::stoi(tok)));
    }
    if (img.labels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw DimensionMismatch("labels CSV row does not match grid");
    }
    labels.push_back(std::move(img));
  }
  return labels;
}

// ----- dataset directories (manifest-driven) -----

struct Dataset {
  std::vector<FeatureImage> images;
  std::vector<LabelImage> labels;
};

// Writes a dataset directory in the requested format ("pgm" or "csv") plus
// a manifest.json describing it.
inline void save_dataset(const std::filesystem::path& dir, const Dataset& data,
                         const std::string& format, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = format;
  manifest["count"] = data.images.size();
  manifest["seed"] = seed;
  manifest["width"] = data.images.empty() ? 0 : data.images.front().width;
  manifest["height"] = data.images.empty() ? 0 : data.images.front().height;
  if (format == "pgm") {
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = 0; i < data.images.size(); ++i) {
      char stem[32];
      std::snprintf(stem, sizeof(stem), "sample_%06zu", i);
      write_feature_pgms(dir, stem, data.images[i]);
      if (i < data.labels.size()) write_label_pgm(dir, stem, data.labels[i]);
      entries.push_back(stem);
    }
    manifest["entries"] = std::move(entries);
  } else if (format == "csv") {
    write_features_csv(dir / "features.csv", data.images);
    write_labels_csv(dir / "labels.csv", data.labels);
    manifest["features"] = "features.csv";
    manifest["labels"] = "labels.csv";
  } else {
    throw ConfigError("save_dataset: unknown format '" + format + "'");
  }
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw IoError("no manifest.json in dataset directory: " + dir.string());
  }
  const nlohmann::json manifest = nlohmann::json::parse(read_text_file(manifest_path));
  const std::string format = manifest.at("format").get<std::string>();
  Dataset data;
  if (format == "pgm") {
    for (const auto& entry : manifest.at("entries")) {
      const std::string stem = entry.get<std::string>();
      data.images.push_back(read_feature_pgms(dir, stem));
      if (std::filesystem::exists(dir / (stem + ".labels.pgm"))) {
        data.labels.push_back(read_label_pgm(dir, stem));
      }
    }
  } else if (format == "csv") {
    data.images = read_features_csv(dir / manifest.at("features").get<std::string>());
    if (manifest.contains("labels")) {
      const std::filesystem::path labels = dir / manifest.at("labels").get<std::string>();
      if (std::filesystem::exists(labels)) data.labels = read_labels_csv(labels);
    }
  } else {
    throw IoError("load_dataset: unknown format '" + format + "'");
  }
  return data;
}

inline Eigen::MatrixXd features_matrix(const std::vector<FeatureImage>& images) {
  if (images.empty()) return Eigen::MatrixXd(0, 0);
  const std::size_t dim = static_cast<std::size_t>(images.front().width) *
                          static_cast<std::size_t>(images.front().height) *
                          kFeatureChannels;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(images.size()),
                    static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::vector<double> flat = flatten_features(images[i]);
    if (flat.size() != dim) {
      throw DimensionMismatch("features_matrix: inconsistent grids");
    }
    for (std::size_t j = 0; j < dim; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flat[j];
    }
  }
  return m;
}

}  // namespace advtune
