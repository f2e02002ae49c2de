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
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lmk/error.hpp"
#include "lmk/point_cloud.hpp"

namespace lmk {

namespace detail {

inline void require_finite(const Eigen::Vector3d& p) {
  if (!p.allFinite()) {
    throw InvalidArgument("non-finite point coordinates");
  }
}

}  // namespace detail

/// Elevation of `p` above the sensor's horizontal plane, in radians.
/// Points on the vertical axis map to +pi/2, -pi/2 or 0 depending on the sign of z.
[[nodiscard]] inline double inclination(const Eigen::Vector3d& p) {
  detail::require_finite(p);
  return std::atan2(p.z(), std::hypot(p.x(), p.y()));
}

/// Horizontal angle around the vertical axis, in [-pi, pi). (0, 0, z) maps to 0.
[[nodiscard]] inline double azimuth(const Eigen::Vector3d& p) {
  detail::require_finite(p);
  const double a = std::atan2(p.y(), p.x());
  return a >= std::numbers::pi ? -std::numbers::pi : a;
}

[[nodiscard]] constexpr double deg2rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
[[nodiscard]] constexpr double rad2deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

/// m inclination areas delimited by m+1 strictly increasing bounds (radians).
///
/// Interior bounds are half-open, [b_k, b_k+1). The last area is closed on the
/// right, and inclinations outside [b_0, b_m] clamp to the nearest end area.
class BeamPartition {
 public:
  explicit BeamPartition(std::vector<double> bounds) : bounds_(std::move(bounds)) {
    if (bounds_.size() < 2) {
      throw InvalidArgument("beam partition needs at least two bounds");
    }
    for (std::size_t k = 0; k < bounds_.size(); ++k) {
      const double b = bounds_[k];
      if (!std::isfinite(b) || b <= -std::numbers::pi / 2 || b >= std::numbers::pi / 2) {
        throw InvalidArgument("beam partition bound " + std::to_string(b) + " outside (-pi/2, pi/2)");
      }
      if (k > 0 && !(bounds_[k - 1] < b)) {
        throw InvalidArgument("beam partition bounds must be strictly increasing");
      }
    }
  }

  [[nodiscard]] std::size_t areas() const noexcept { return bounds_.size() - 1; }
  [[nodiscard]] const std::vector<double>& bounds() const noexcept { return bounds_; }

  [[nodiscard]] std::size_t area_of(double phi) const noexcept {
    const auto it = std::upper_bound(bounds_.begin(), bounds_.end(), phi);
    const auto k = static_cast<std::ptrdiff_t>(it - bounds_.begin()) - 1;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(areas()) - 1));
  }

  friend bool operator==(const BeamPartition&, const BeamPartition&) = default;

 private:
  std::vector<double> bounds_;
};

/// `azimuth_count` equal sectors starting at -pi crossed with inclination areas.
/// Flattened cell index = sector * inclination_areas + inclination_area.
class GridPartition {
 public:
  GridPartition(BeamPartition inclination, std::size_t azimuth_count)
      : inclination_(std::move(inclination)), azimuth_count_(azimuth_count) {
    if (azimuth_count_ < 1) {
      throw InvalidArgument("grid partition needs at least one azimuth sector");
    }
  }

  [[nodiscard]] const BeamPartition& inclination() const noexcept { return inclination_; }
  [[nodiscard]] std::size_t azimuth_count() const noexcept { return azimuth_count_; }
  [[nodiscard]] std::size_t cells() const noexcept { return azimuth_count_ * inclination_.areas(); }

  [[nodiscard]] std::size_t sector_of(double alpha) const noexcept {
    const double width = 2.0 * std::numbers::pi / static_cast<double>(azimuth_count_);
    const double s = std::floor((alpha + std::numbers::pi) / width);
    return static_cast<std::size_t>(std::clamp(s, 0.0, static_cast<double>(azimuth_count_ - 1)));
  }

  friend bool operator==(const GridPartition&, const GridPartition&) = default;

 private:
  BeamPartition inclination_;
  std::size_t azimuth_count_;
};

/// Evenly spaced bounds: bounds[k] = phi_min + k * (phi_max - phi_min) / m.
[[nodiscard]] inline BeamPartition make_inclination_partition(double phi_min, double phi_max, std::size_t m) {
  if (m < 1) throw InvalidArgument("partition needs m >= 1");
  if (!(phi_min < phi_max)) throw InvalidArgument("partition needs phi_min < phi_max");
  std::vector<double> bounds(m + 1);
  const double span = phi_max - phi_min;
  for (std::size_t k = 0; k <= m; ++k) {
    bounds[k] = phi_min + static_cast<double>(k) * span / static_cast<double>(m);
  }
  bounds[m] = phi_max;
  return BeamPartition(std::move(bounds));
}

/// Area index in [0, m) for every point.
[[nodiscard]] inline std::vector<std::size_t> assign_areas(const PointCloud& cloud, const BeamPartition& partition) {
  std::vector<std::size_t> areas(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    areas[i] = partition.area_of(inclination(cloud.coords[i]));
  }
  return areas;
}

/// Flattened grid cell index in [0, i*j) for every point.
[[nodiscard]] inline std::vector<std::size_t> assign_grid_areas(const PointCloud& cloud, const GridPartition& grid) {
  const std::size_t j = grid.inclination().areas();
  std::vector<std::size_t> cells(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.coords[i];
    cells[i] = grid.sector_of(azimuth(p)) * j + grid.inclination().area_of(inclination(p));
  }
  return cells;
}

/// Inclination range over a set of scans. Throws EmptyInput when no points exist.
template <typename Range>
[[nodiscard]] std::pair<double, double> inclination_extent(const Range& clouds) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const PointCloud& c : clouds) {
    for (const auto& p : c.coords) {
      const double phi = inclination(p);
      lo = std::min(lo, phi);
      hi = std::max(hi, phi);
    }
  }
  if (!(lo <= hi)) throw EmptyInput("no points to measure inclination extent");
  return {lo, hi};
}

/// H x W raster of a scan: rows are inclination areas (row 0 lowest), columns
/// are azimuth bins starting at -pi. Each cell keeps the nearest return.
struct RangeImage {
  static constexpr long kEmpty = -1;

  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> depth;
  std::vector<Label> label;
  std::vector<long> point_index;

  RangeImage() = default;
  RangeImage(std::size_t h, std::size_t w)
      : height(h), width(w), depth(h * w, 0.0), label(h * w, kIgnoreLabel), point_index(h * w, kEmpty) {}

  [[nodiscard]] std::size_t cell(std::size_t row, std::size_t col) const noexcept { return row * width + col; }
};

[[nodiscard]] inline std::size_t azimuth_column(double alpha, std::size_t width) noexcept {
  const double c = std::floor((alpha + std::numbers::pi) / (2.0 * std::numbers::pi) * static_cast<double>(width));
  return static_cast<std::size_t>(std::clamp(c, 0.0, static_cast<double>(width - 1)));
}

/// Ties on range keep the lower point index.
[[nodiscard]] inline RangeImage range_view_rasterize(const PointCloud& cloud, const BeamPartition& partition,
                                                     std::size_t width) {
  if (width < 1) throw InvalidArgument("range image width must be >= 1");
  RangeImage img(partition.areas(), width);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.coords[i];
    const std::size_t row = partition.area_of(inclination(p));
    const std::size_t col = azimuth_column(azimuth(p), width);
    const std::size_t c = img.cell(row, col);
    const double r = p.norm();
    if (img.point_index[c] == RangeImage::kEmpty || r < img.depth[c]) {
      img.point_index[c] = static_cast<long>(i);
      img.depth[c] = r;
      img.label[c] = cloud.has_labels() ? cloud.labels[i] : kIgnoreLabel;
    }
  }
  return img;
}

}  // namespace lmk
