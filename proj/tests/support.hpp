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


// Shared fixtures for the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Core>

#include "lmk/lmk.hpp"

namespace lmk::test {

inline PointCloud make_cloud(std::vector<Eigen::Vector3d> pts, std::vector<Label> labels = {}) {
  PointCloud c;
  c.coords = std::move(pts);
  c.intensity.assign(c.coords.size(), 0.5);
  c.labels = std::move(labels);
  c.set_labeled(!c.labels.empty());
  return c;
}

/// Random labeled scan with `n` points spread over +-30 degrees of inclination.
inline PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, std::size_t classes = 5, Eigen::Index painted = 0) {
  std::uniform_real_distribution<double> az(-3.14159, 3.14159), el(-0.5, 0.5), r(1.0, 50.0), u(0.0, 1.0);
  std::uniform_int_distribution<int> lab(0, static_cast<int>(classes) - 1);
  PointCloud c;
  c.set_labeled(true);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = az(rng), e = el(rng), rr = r(rng);
    c.coords.emplace_back(rr * std::cos(e) * std::cos(a), rr * std::cos(e) * std::sin(a), rr * std::sin(e));
    c.intensity.push_back(u(rng));
    c.labels.push_back(static_cast<Label>(lab(rng)));
  }
  if (painted > 0) {
    c.painted.resize(static_cast<Eigen::Index>(n), painted);
    for (Eigen::Index i = 0; i < c.painted.size(); ++i) c.painted.data()[i] = u(rng);
  }
  return c;
}

/// Every per-point field flattened into one sortable record.
inline std::vector<std::vector<double>> point_records(const PointCloud& c) {
  std::vector<std::vector<double>> out;
  out.reserve(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::vector<double> r{c.coords[i].x(), c.coords[i].y(), c.coords[i].z(), c.intensity[i]};
    r.push_back(c.has_labels() ? c.labels[i] : -1.0);
    for (Eigen::Index j = 0; j < c.painted_dims(); ++j) r.push_back(c.painted(static_cast<Eigen::Index>(i), j));
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<std::vector<double>> multiset(std::initializer_list<const PointCloud*> clouds) {
  std::vector<std::vector<double>> all;
  for (const auto* c : clouds) {
    auto r = point_records(*c);
    all.insert(all.end(), r.begin(), r.end());
  }
  std::sort(all.begin(), all.end());
  return all;
}

inline bool same_multiset(const PointCloud& a, const PointCloud& b) { return multiset({&a}) == multiset({&b}); }

/// Relative error ||g - g_fd|| / max(||g||, ||g_fd||) between an analytic
/// gradient and central differences of `f` around `x`.
inline double fd_relative_error(const std::function<double(const Eigen::MatrixXd&)>& f, const Eigen::MatrixXd& x,
                                const Eigen::MatrixXd& analytic, double step = 1e-5) {
  Eigen::MatrixXd xp = x;
  Eigen::MatrixXd numeric(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = xp.data()[i];
    xp.data()[i] = orig + step;
    const double up = f(xp);
    xp.data()[i] = orig - step;
    const double down = f(xp);
    xp.data()[i] = orig;
    numeric.data()[i] = (up - down) / (2.0 * step);
  }
  const double scale = std::max(analytic.norm(), numeric.norm());
  return scale == 0.0 ? 0.0 : (analytic - numeric).norm() / scale;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("lmk_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace lmk::test
