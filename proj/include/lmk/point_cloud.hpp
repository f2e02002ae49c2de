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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lmk/error.hpp"

namespace lmk {

using Label = std::uint16_t;
inline constexpr Label kIgnoreLabel = 255;

/// A LiDAR scan in the sensor frame (x forward, y left, z up; meters).
///
/// `labels` and `instances` are either empty or hold one entry per point.
/// `painted` is N x D; D == 0 means the scan carries no image evidence. When the
/// channels come from `paint_points`, the last column is the correspondence mask.
struct PointCloud {
  std::vector<Eigen::Vector3d> coords;
  std::vector<double> intensity;
  std::vector<Label> labels;
  std::vector<std::uint16_t> instances;
  Eigen::MatrixXd painted;

  [[nodiscard]] std::size_t size() const noexcept { return coords.size(); }
  [[nodiscard]] bool empty() const noexcept { return coords.empty(); }
  [[nodiscard]] bool has_labels() const noexcept { return !labels.empty() || (empty() && labels_present_); }
  [[nodiscard]] Eigen::Index painted_dims() const noexcept { return painted.cols(); }

  /// Marks a zero-point cloud as labeled so that label presence survives filtering.
  void set_labeled(bool labeled) noexcept { labels_present_ = labeled; }

  /// Throws InvalidArgument if any invariant is violated. When `num_classes` is
  /// given, every label must be below it or equal to the ignore id.
  void validate(std::optional<std::size_t> num_classes = std::nullopt) const {
    const std::size_t n = size();
    if (intensity.size() != n) {
      throw InvalidArgument("point cloud: intensity count " + std::to_string(intensity.size()) +
                            " != point count " + std::to_string(n));
    }
    if (!labels.empty() && labels.size() != n) {
      throw InvalidArgument("point cloud: label count != point count");
    }
    if (!instances.empty() && instances.size() != n) {
      throw InvalidArgument("point cloud: instance count != point count");
    }
    if (painted.cols() > 0 && static_cast<std::size_t>(painted.rows()) != n) {
      throw InvalidArgument("point cloud: painted row count != point count");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!coords[i].allFinite()) {
        throw InvalidArgument("point cloud: non-finite coordinate at point " + std::to_string(i));
      }
    }
    if (num_classes) {
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != kIgnoreLabel && labels[i] >= *num_classes) {
          throw InvalidArgument("point cloud: label " + std::to_string(labels[i]) + " at point " +
                                std::to_string(i) + " exceeds class count");
        }
      }
    }
  }

 private:
  bool labels_present_ = false;
};

namespace detail {

inline void require_same_layout(const PointCloud& a, const PointCloud& b) {
  if (a.has_labels() != b.has_labels()) {
    throw InvalidArgument("scans disagree on label presence");
  }
  if (a.painted_dims() != b.painted_dims()) {
    throw InvalidArgument("painted channel dimensions differ: " + std::to_string(a.painted_dims()) +
                          " vs " + std::to_string(b.painted_dims()));
  }
}

}  // namespace detail

/// Builds a cloud from `a[ia...]` followed by `b[ib...]`, copying every per-point
/// field as one tuple. Both inputs must share the same layout.
inline PointCloud gather(const PointCloud& a, std::span<const std::size_t> ia, const PointCloud& b,
                         std::span<const std::size_t> ib) {
  detail::require_same_layout(a, b);
  const bool with_instances = !a.instances.empty() && (!b.instances.empty() || ib.empty());
  PointCloud out;
  const std::size_t n = ia.size() + ib.size();
  out.coords.reserve(n);
  out.intensity.reserve(n);
  if (a.has_labels()) out.labels.reserve(n);
  out.set_labeled(a.has_labels());
  if (with_instances) out.instances.reserve(n);
  out.painted.resize(a.painted_dims() > 0 ? static_cast<Eigen::Index>(n) : 0, a.painted_dims());

  Eigen::Index row = 0;
  auto take = [&](const PointCloud& src, std::span<const std::size_t> idx) {
    for (std::size_t i : idx) {
      out.coords.push_back(src.coords[i]);
      out.intensity.push_back(src.intensity[i]);
      if (src.has_labels()) out.labels.push_back(src.labels[i]);
      if (with_instances) out.instances.push_back(src.instances[i]);
      if (src.painted_dims() > 0) out.painted.row(row) = src.painted.row(static_cast<Eigen::Index>(i));
      ++row;
    }
  };
  take(a, ia);
  take(b, ib);
  return out;
}

/// Subset of `cloud` at the given indices, in the given order.
inline PointCloud select(const PointCloud& cloud, std::span<const std::size_t> idx) {
  return gather(cloud, idx, cloud, {});
}

}  // namespace lmk
