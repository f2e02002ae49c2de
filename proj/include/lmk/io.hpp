// Copyright 2026 The lmk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <iterator>
#include <span>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "lmk/camera.hpp"
#include "lmk/error.hpp"
#include "lmk/point_cloud.hpp"
#include "lmk/ssl/model.hpp"

namespace lmk::io {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

[[nodiscard]] inline std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const fs::path& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline void write_text(const fs::path& path, const std::string& text) {
  write_bytes(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

template <typename T>
[[nodiscard]] T load_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void store_le(std::vector<unsigned char>& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

// ---------------------------------------------------------------------------
// KITTI scans: float32 (x, y, z, intensity) records; labels are uint32 words
// with the semantic id in the low 16 bits and the instance id in the high 16.

[[nodiscard]] inline PointCloud decode_scan(std::span<const unsigned char> points,
                                            std::optional<std::span<const unsigned char>> labels = std::nullopt) {
  if (points.size() % 16 != 0) {
    throw FormatError("scan byte length " + std::to_string(points.size()) + " is not a multiple of 16",
                      points.size() - points.size() % 16);
  }
  const std::size_t n = points.size() / 16;
  PointCloud cloud;
  cloud.coords.resize(n);
  cloud.intensity.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* rec = points.data() + 16 * i;
    const float x = load_le<float>(rec), y = load_le<float>(rec + 4), z = load_le<float>(rec + 8);
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
      throw FormatError("non-finite coordinate in point " + std::to_string(i), 16 * i);
    }
    cloud.coords[i] = {x, y, z};
    cloud.intensity[i] = load_le<float>(rec + 12);
  }
  if (labels) {
    if (labels->size() % 4 != 0) {
      throw FormatError("label byte length is not a multiple of 4", labels->size() - labels->size() % 4);
    }
    const std::size_t nl = labels->size() / 4;
    if (nl != n) {
      throw FormatError("label count " + std::to_string(nl) + " != point count " + std::to_string(n),
                        4 * std::min(nl, n));
    }
    cloud.labels.resize(n);
    cloud.instances.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto word = load_le<std::uint32_t>(labels->data() + 4 * i);
      cloud.labels[i] = static_cast<Label>(word & 0xFFFFu);
      cloud.instances[i] = static_cast<std::uint16_t>(word >> 16);
    }
    cloud.set_labeled(true);
  }
  return cloud;
}

[[nodiscard]] inline std::vector<unsigned char> encode_points(const PointCloud& cloud) {
  std::vector<unsigned char> out;
  out.reserve(cloud.size() * 16);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) store_le(out, static_cast<float>(cloud.coords[i][k]));
    store_le(out, static_cast<float>(cloud.intensity[i]));
  }
  return out;
}

[[nodiscard]] inline std::vector<unsigned char> encode_labels(const PointCloud& cloud) {
  std::vector<unsigned char> out;
  out.reserve(cloud.labels.size() * 4);
  for (std::size_t i = 0; i < cloud.labels.size(); ++i) {
    const std::uint32_t inst = cloud.instances.empty() ? 0u : cloud.instances[i];
    store_le(out, static_cast<std::uint32_t>(cloud.labels[i]) | (inst << 16));
  }
  return out;
}

[[nodiscard]] inline PointCloud read_scan(const fs::path& bin, const std::optional<fs::path>& label = std::nullopt) {
  const auto points = read_bytes(bin);
  try {
    if (label) {
      const auto labels = read_bytes(*label);
      return decode_scan(points, std::span<const unsigned char>(labels));
    }
    return decode_scan(points);
  } catch (const FormatError& e) {
    throw e.with_context(bin.string());
  }
}

inline void write_scan(const fs::path& bin, const PointCloud& cloud, const std::optional<fs::path>& label = std::nullopt) {
  write_bytes(bin, encode_points(cloud));
  if (label) {
    if (!cloud.has_labels()) throw InvalidArgument("write_scan: cloud has no labels");
    write_bytes(*label, encode_labels(cloud));
  }
}

// ---------------------------------------------------------------------------
// Images: binary PPM (P6, 8-bit) and the FMAP float container.

namespace detail {

// Reads one whitespace-delimited header token of a netpbm file, skipping comments.
inline std::string pnm_token(std::span<const unsigned char> bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') tok.push_back(static_cast<char>(bytes[pos++]));
  if (tok.empty()) throw FormatError("truncated netpbm header", pos);
  return tok;
}

inline std::size_t pnm_number(std::span<const unsigned char> bytes, std::size_t& pos) {
  const std::size_t start = pos;
  const std::string tok = pnm_token(bytes, pos);
  if (!std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw FormatError("bad netpbm header field '" + tok + "'", start);
  }
  return std::stoul(tok);
}

}  // namespace detail

[[nodiscard]] inline ImagePlane decode_ppm(std::span<const unsigned char> bytes) {
  std::size_t pos = 0;
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw FormatError("not a binary PPM (P6)", 0);
  pos = 2;
  const std::size_t w = detail::pnm_number(bytes, pos);
  const std::size_t h = detail::pnm_number(bytes, pos);
  const std::size_t maxval_pos = pos;
  const std::size_t maxval = detail::pnm_number(bytes, pos);
  if (maxval == 0 || maxval > 255) throw FormatError("only 8-bit PPM is supported", maxval_pos);
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("missing PPM header terminator", pos);
  ++pos;
  const std::size_t need = w * h * 3;
  if (bytes.size() - pos < need) throw FormatError("short PPM payload", bytes.size());
  ImagePlane img(w, h, 3);
  for (std::size_t i = 0; i < need; ++i) img.data[i] = static_cast<double>(bytes[pos + i]) / static_cast<double>(maxval);
  return img;
}

[[nodiscard]] inline std::vector<unsigned char> encode_ppm(const ImagePlane& img) {
  if (img.channels != 3) throw InvalidArgument("PPM needs exactly 3 channels");
  const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  for (double v : img.data) out.push_back(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  return out;
}

/// 8-bit graymap (P5) of values in [0, 1].
[[nodiscard]] inline std::vector<unsigned char> encode_pgm(std::size_t width, std::size_t height,
                                                           std::span<const double> values) {
  if (values.size() != width * height) throw InvalidArgument("PGM: value count mismatch");
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  for (double v : values) out.push_back(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  return out;
}

inline constexpr std::size_t kFmapHeaderBytes = 16;

[[nodiscard]] inline ImagePlane decode_fmap(std::span<const unsigned char> bytes) {
  if (bytes.size() < kFmapHeaderBytes) throw FormatError("short FMAP header", bytes.size());
  if (std::memcmp(bytes.data(), "FMAP", 4) != 0) throw FormatError("bad FMAP magic", 0);
  const auto w = load_le<std::uint32_t>(bytes.data() + 4);
  const auto h = load_le<std::uint32_t>(bytes.data() + 8);
  const auto d = load_le<std::uint32_t>(bytes.data() + 12);
  const std::uint64_t count = std::uint64_t{w} * h * d;
  const std::uint64_t need = kFmapHeaderBytes + 4 * count;
  if (bytes.size() < need) throw FormatError("short FMAP payload", bytes.size());
  if (bytes.size() > need) throw FormatError("trailing bytes after FMAP payload", need);
  ImagePlane img(w, h, d);
  for (std::uint64_t i = 0; i < count; ++i) {
    const float v = load_le<float>(bytes.data() + kFmapHeaderBytes + 4 * i);
    if (!std::isfinite(v)) throw FormatError("non-finite FMAP value", kFmapHeaderBytes + 4 * i);
    img.data[i] = v;
  }
  return img;
}

[[nodiscard]] inline std::vector<unsigned char> encode_fmap(const ImagePlane& img) {
  std::vector<unsigned char> out{'F', 'M', 'A', 'P'};
  store_le(out, static_cast<std::uint32_t>(img.width));
  store_le(out, static_cast<std::uint32_t>(img.height));
  store_le(out, static_cast<std::uint32_t>(img.channels));
  for (double v : img.data) store_le(out, static_cast<float>(v));
  return out;
}

/// P6 or FMAP, chosen by magic.
[[nodiscard]] inline ImagePlane read_image(const fs::path& path) {
  const auto bytes = read_bytes(path);
  try {
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), "FMAP", 4) == 0) return decode_fmap(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
    throw FormatError("unrecognized image magic", 0);
  } catch (const FormatError& e) {
    throw e.with_context(path.string());
  }
}

// ---------------------------------------------------------------------------
// Model weights: FMAP with W = d + 1 (bias last), H = C, D = 1.

[[nodiscard]] inline std::vector<unsigned char> encode_weights(const ssl::ModelParams& model) {
  const auto c = static_cast<std::size_t>(model.classes());
  const auto d = static_cast<std::size_t>(model.dims());
  ImagePlane img(d + 1, c, 1);
  for (std::size_t r = 0; r < c; ++r) {
    for (std::size_t j = 0; j < d; ++j) img.at(j, r, 0) = model.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
    img.at(d, r, 0) = model.bias(static_cast<Eigen::Index>(r));
  }
  return encode_fmap(img);
}

[[nodiscard]] inline ssl::ModelParams decode_weights(std::span<const unsigned char> bytes) {
  const ImagePlane img = decode_fmap(bytes);
  if (img.channels != 1 || img.width < 2 || img.height < 1) throw FormatError("weights FMAP must have D = 1, W >= 2, H >= 1", 4);
  const auto c = static_cast<Eigen::Index>(img.height);
  const auto d = static_cast<Eigen::Index>(img.width - 1);
  auto model = ssl::ModelParams::zeros(c, d);
  for (Eigen::Index r = 0; r < c; ++r) {
    for (Eigen::Index j = 0; j < d; ++j) model.weights(r, j) = img.at(static_cast<std::size_t>(j), static_cast<std::size_t>(r), 0);
    model.bias(r) = img.at(static_cast<std::size_t>(d), static_cast<std::size_t>(r), 0);
  }
  return model;
}

// ---------------------------------------------------------------------------
// KITTI calibration text: "P2: <12 reals>" (3x4 projection) and "Tr: <12 reals>"
// (3x4 LiDAR -> camera). Image size is not part of the file.

[[nodiscard]] inline CalibrationParams parse_kitti_calib(std::string_view text, std::size_t width, std::size_t height) {
  std::optional<Eigen::Matrix<double, 3, 4>> p2, tr;
  std::size_t offset = 0;
  while (offset < text.size()) {
    const std::size_t eol = std::min(text.find('\n', offset), text.size());
    const std::string line(text.substr(offset, eol - offset));
    const std::size_t line_start = offset;
    offset = eol + 1;
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, colon);
    if (key != "P2" && key != "Tr" && key != "Tr_velo_to_cam") continue;
    std::istringstream in(line.substr(colon + 1));
    Eigen::Matrix<double, 3, 4> m;
    for (int i = 0; i < 12; ++i) {
      if (!(in >> m(i / 4, i % 4))) throw FormatError("calibration entry '" + key + "' needs 12 reals", line_start);
    }
    (key == "P2" ? p2 : tr) = m;
  }
  if (!p2) throw FormatError("calibration lacks P2", text.size());
  if (!tr) throw FormatError("calibration lacks Tr", text.size());
  CalibrationParams calib;
  calib.intrinsic = p2->leftCols<3>();
  // P2 = K [I | t]; fold t into the extrinsic.
  const Eigen::Vector3d offset_cam = calib.intrinsic.inverse() * p2->col(3);
  calib.extrinsic.setIdentity();
  calib.extrinsic.topRows<3>() = *tr;
  calib.extrinsic.topRightCorner<3, 1>() += offset_cam;
  calib.width = width;
  calib.height = height;
  calib.validate();
  return calib;
}

[[nodiscard]] inline std::string format_kitti_calib(const CalibrationParams& calib) {
  std::ostringstream out;
  out.precision(12);
  Eigen::Matrix<double, 3, 4> p2 = Eigen::Matrix<double, 3, 4>::Zero();
  p2.leftCols<3>() = calib.intrinsic;
  out << "P2:";
  for (int i = 0; i < 12; ++i) out << ' ' << p2(i / 4, i % 4);
  out << "\nTr:";
  for (int i = 0; i < 12; ++i) out << ' ' << calib.extrinsic(i / 4, i % 4);
  out << '\n';
  return out.str();
}

[[nodiscard]] inline CalibrationParams read_kitti_calib(const fs::path& path, std::size_t width, std::size_t height) {
  const auto bytes = read_bytes(path);
  return parse_kitti_calib(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), width, height);
}

// ---------------------------------------------------------------------------
// Flat key = value text with optional [section] headers. '#' starts a comment.

struct KeyValueSection {
  std::string name;
  std::map<std::string, std::string> values;
  std::size_t line = 0;

  [[nodiscard]] std::optional<std::string> get(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return it->second;
  }
};

struct KeyValueDoc {
  KeyValueSection global;
  std::vector<KeyValueSection> sections;
};

[[nodiscard]] inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[nodiscard]] inline KeyValueDoc parse_key_values(std::string_view text) {
  KeyValueDoc doc;
  KeyValueSection* current = &doc.global;
  std::size_t offset = 0, line_no = 0;
  while (offset <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', offset), text.size());
    std::string_view raw = text.substr(offset, eol - offset);
    const std::size_t line_start = offset;
    offset = eol + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) {
      if (eol == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') throw FormatError("unterminated section header on line " + std::to_string(line_no), line_start);
      doc.sections.push_back({trim(line.substr(1, line.size() - 2)), {}, line_no});
      current = &doc.sections.back();
    } else {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw FormatError("expected key = value on line " + std::to_string(line_no), line_start);
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) throw FormatError("empty key on line " + std::to_string(line_no), line_start);
      if (current->values.count(key)) throw FormatError("duplicate key '" + key + "' on line " + std::to_string(line_no), line_start);
      current->values[key] = trim(line.substr(eq + 1));
    }
    if (eol == text.size()) break;
  }
  return doc;
}

[[nodiscard]] inline KeyValueDoc read_key_values(const fs::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return parse_key_values(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  } catch (const FormatError& e) {
    throw e.with_context(path.string());
  }
}

[[nodiscard]] inline std::vector<double> parse_reals(const std::string& s, const std::string& key) {
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (...) {
      used = 0;
    }
    if (used != tok.size()) throw ConfigError("key '" + key + "': '" + tok + "' is not a number");
    out.push_back(v);
  }
  return out;
}

[[nodiscard]] inline double parse_real(const std::string& s, const std::string& key) {
  const auto v = parse_reals(s, key);
  if (v.size() != 1) throw ConfigError("key '" + key + "' expects one number");
  return v[0];
}

[[nodiscard]] inline std::uint64_t parse_count(const std::string& s, const std::string& key) {
  const double v = parse_real(s, key);
  if (v < 0 || v != std::floor(v)) throw ConfigError("key '" + key + "' expects a nonnegative integer");
  return static_cast<std::uint64_t>(v);
}

// ---------------------------------------------------------------------------
// Dataset directories: velodyne/NNNNNN.bin, labels/NNNNNN.label, and for
// camera data image_2/NNNNNN.ppm + calib/NNNNNN.txt.

struct DatasetEntry {
  fs::path scan;
  std::optional<fs::path> label;
  std::optional<fs::path> image;
  std::optional<fs::path> calib;
};

/// Entries sorted lexicographically by scan path.
[[nodiscard]] inline std::vector<DatasetEntry> list_dataset(const fs::path& root) {
  const fs::path velo = root / "velodyne";
  if (!fs::is_directory(velo)) throw Error("dataset '" + root.string() + "' has no velodyne/ directory");
  std::vector<DatasetEntry> entries;
  for (const auto& e : fs::directory_iterator(velo)) {
    if (e.path().extension() != ".bin") continue;
    DatasetEntry entry;
    entry.scan = e.path();
    const std::string stem = e.path().stem().string();
    auto maybe = [&](const char* dir, const char* ext) -> std::optional<fs::path> {
      fs::path p = root / dir / (stem + ext);
      return fs::exists(p) ? std::optional(p) : std::nullopt;
    };
    entry.label = maybe("labels", ".label");
    entry.image = maybe("image_2", ".ppm");
    if (!entry.image) entry.image = maybe("image_2", ".fmap");
    entry.calib = maybe("calib", ".txt");
    entries.push_back(std::move(entry));
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.scan < b.scan; });
  return entries;
}

/// Per-class prototype rows: "<class id> <v_1> ... <v_D>" per line.
[[nodiscard]] inline Eigen::MatrixXd read_prototypes(const fs::path& path, std::size_t num_classes) {
  const auto bytes = read_bytes(path);
  const std::string text(bytes.begin(), bytes.end());
  std::istringstream lines(text);
  std::string line;
  std::vector<std::vector<double>> rows(num_classes);
  std::size_t offset = 0;
  while (std::getline(lines, line)) {
    const std::size_t start = offset;
    offset += line.size() + 1;
    const std::string t = trim(line.substr(0, line.find('#')));
    if (t.empty()) continue;
    std::vector<double> v;
    try {
      v = parse_reals(t, "prototype");
    } catch (const ConfigError& e) {
      throw FormatError(path.string() + ": " + e.what(), start);
    }
    if (v.size() < 2 || v[0] < 0 || v[0] >= static_cast<double>(num_classes) || v[0] != std::floor(v[0])) {
      throw FormatError(path.string() + ": bad prototype row", start);
    }
    rows[static_cast<std::size_t>(v[0])] = std::vector<double>(v.begin() + 1, v.end());
  }
  const std::size_t d = rows.empty() ? 0 : rows[0].size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(num_classes), static_cast<Eigen::Index>(d));
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (rows[c].size() != d || d == 0) throw FormatError(path.string() + ": prototype rows missing or uneven", bytes.size());
    for (std::size_t j = 0; j < d; ++j) out(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) = rows[c][j];
  }
  return out;
}

}  // namespace lmk::io
