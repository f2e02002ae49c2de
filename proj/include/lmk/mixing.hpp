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

#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "lmk/error.hpp"
#include "lmk/geometry.hpp"
#include "lmk/point_cloud.hpp"

namespace lmk {

enum class Source : std::uint8_t { kScanA = 0, kScanB = 1 };
enum class Parity : std::uint8_t { kEven = 0, kOdd = 1 };

/// Where an output point came from.
struct Provenance {
  Source source;
  std::size_t index;  // position in the source scan

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Axis-aligned box, inclusive on both faces.
struct Box {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  [[nodiscard]] bool degenerate() const noexcept { return ((max - min).array() <= 0.0).any(); }
  [[nodiscard]] bool contains(const Eigen::Vector3d& p) const noexcept {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

struct MixupRatio {
  double ratio;
  std::uint64_t seed;
};

using MixDescriptor = std::variant<std::monostate, BeamPartition, GridPartition, Box, MixupRatio>;

/// Two mixed scenes plus per-point provenance.
///
/// Output order is fixed: every scan_a-sourced point in its original order, then
/// every scan_b-sourced point. For area-based mixes scan_a keeps the areas whose
/// 0-based index has parity `scan_a_keeps`.
struct MixOutput {
  PointCloud mixed_a;
  PointCloud mixed_b;
  std::vector<Provenance> provenance_a;
  std::vector<Provenance> provenance_b;
  MixDescriptor partition_used;
  Parity scan_a_keeps = Parity::kEven;
};

namespace detail {

// route_a[i] / route_b[i] name the output (kScanA -> mixed_a, kScanB -> mixed_b).
inline MixOutput route_points(const PointCloud& a, const PointCloud& b, const std::vector<Source>& route_a,
                              const std::vector<Source>& route_b, MixDescriptor descriptor) {
  require_same_layout(a, b);
  std::vector<std::size_t> a_to_a, a_to_b, b_to_a, b_to_b;
  for (std::size_t i = 0; i < a.size(); ++i) (route_a[i] == Source::kScanA ? a_to_a : a_to_b).push_back(i);
  for (std::size_t i = 0; i < b.size(); ++i) (route_b[i] == Source::kScanA ? b_to_a : b_to_b).push_back(i);

  MixOutput out;
  out.mixed_a = gather(a, a_to_a, b, b_to_a);
  out.mixed_b = gather(a, a_to_b, b, b_to_b);
  auto tag = [](std::vector<Provenance>& dst, Source s, const std::vector<std::size_t>& idx) {
    for (std::size_t i : idx) dst.push_back({s, i});
  };
  tag(out.provenance_a, Source::kScanA, a_to_a);
  tag(out.provenance_a, Source::kScanB, b_to_a);
  tag(out.provenance_b, Source::kScanA, a_to_b);
  tag(out.provenance_b, Source::kScanB, b_to_b);
  out.partition_used = std::move(descriptor);
  return out;
}

inline std::vector<Source> route_by_parity(const std::vector<std::size_t>& keys, bool first_scan) {
  std::vector<Source> route(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const bool even = keys[i] % 2 == 0;
    route[i] = (even == first_scan) ? Source::kScanA : Source::kScanB;
  }
  return route;
}

}  // namespace detail

/// Swaps alternating inclination areas between two scans. mixed_a holds scan_a's
/// even areas and scan_b's odd areas; mixed_b holds the rest.
[[nodiscard]] inline MixOutput laser_mix(const PointCloud& scan_a, const PointCloud& scan_b,
                                         const BeamPartition& partition) {
  const auto route_a = detail::route_by_parity(assign_areas(scan_a, partition), true);
  const auto route_b = detail::route_by_parity(assign_areas(scan_b, partition), false);
  return detail::route_points(scan_a, scan_b, route_a, route_b, partition);
}

/// LaserMix over painted scans. Image channels (including the trailing mask
/// column written by paint_points) travel with their points.
[[nodiscard]] inline MixOutput multi_modal_laser_mix(const PointCloud& pair_a, const PointCloud& pair_b,
                                                     const BeamPartition& partition) {
  if (pair_a.painted_dims() != pair_b.painted_dims()) {
    throw InvalidArgument("multi-modal mix: painted dimensions differ");
  }
  return laser_mix(pair_a, pair_b, partition);
}

/// Checkerboard mix over an azimuth x inclination grid; scan_a keeps cells with
/// (sector + inclination_area) even.
[[nodiscard]] inline MixOutput grid_mix(const PointCloud& scan_a, const PointCloud& scan_b, const GridPartition& grid) {
  const std::size_t j = grid.inclination().areas();
  auto parity_keys = [&](const PointCloud& c) {
    auto cells = assign_grid_areas(c, grid);
    for (auto& cell : cells) cell = cell / j + cell % j;
    return cells;
  };
  const auto route_a = detail::route_by_parity(parity_keys(scan_a), true);
  const auto route_b = detail::route_by_parity(parity_keys(scan_b), false);
  return detail::route_points(scan_a, scan_b, route_a, route_b, grid);
}

/// Random per-point routing: every point of either scan lands in mixed_a with
/// probability `ratio`, otherwise in mixed_b. Deterministic for a fixed seed.
[[nodiscard]] inline MixOutput point_mixup(const PointCloud& scan_a, const PointCloud& scan_b, double ratio,
                                           std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw InvalidArgument("mixup ratio must lie in [0, 1]");
  std::mt19937_64 rng(seed);
  auto draw = [&](std::size_t n) {
    std::vector<Source> route(n);
    for (auto& r : route) {
      r = std::generate_canonical<double, 53>(rng) < ratio ? Source::kScanA : Source::kScanB;
    }
    return route;
  };
  const auto route_a = draw(scan_a.size());
  const auto route_b = draw(scan_b.size());
  return detail::route_points(scan_a, scan_b, route_a, route_b, MixupRatio{ratio, seed});
}

/// Exchanges the points of both scans that lie inside `box`. A zero-volume box
/// leaves both scans untouched.
[[nodiscard]] inline MixOutput cutmix_area(const PointCloud& scan_a, const PointCloud& scan_b, const Box& box) {
  auto route = [&](const PointCloud& c, bool first) {
    std::vector<Source> r(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      const bool inside = !box.degenerate() && box.contains(c.coords[i]);
      r[i] = (inside != first) ? Source::kScanA : Source::kScanB;
    }
    return r;
  };
  return detail::route_points(scan_a, scan_b, route(scan_a, true), route(scan_b, false), box);
}

/// Axis-aligned bounding box of the union of two scans.
[[nodiscard]] inline Box bounding_box(const PointCloud& a, const PointCloud& b) {
  Box box;
  box.min = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  box.max = -box.min;
  for (const PointCloud* c : {&a, &b}) {
    for (const auto& p : c->coords) {
      box.min = box.min.cwiseMin(p);
      box.max = box.max.cwiseMax(p);
    }
  }
  if (a.empty() && b.empty()) return Box{};
  return box;
}

/// Seeded random box: center uniform inside `scene`, side lengths uniform in
/// [side_min, side_max] per axis.
[[nodiscard]] inline Box random_box(const Box& scene, double side_min, double side_max, std::uint64_t seed) {
  if (!(side_min >= 0.0 && side_min <= side_max)) throw InvalidArgument("random box: need 0 <= side_min <= side_max");
  std::mt19937_64 rng(seed);
  Box box;
  for (int k = 0; k < 3; ++k) {
    const double c = scene.min[k] + std::generate_canonical<double, 53>(rng) * (scene.max[k] - scene.min[k]);
    const double s = side_min + std::generate_canonical<double, 53>(rng) * (side_max - side_min);
    box.min[k] = c - s / 2;
    box.max[k] = c + s / 2;
  }
  return box;
}

/// Drops the points whose area index has the given parity; survivors keep order.
[[nodiscard]] inline PointCloud cutout_area(const PointCloud& scan, const BeamPartition& partition, Parity drop) {
  const auto areas = assign_areas(scan, partition);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    if (static_cast<Parity>(areas[i] % 2) != drop) keep.push_back(i);
  }
  return select(scan, keep);
}

/// Plain union of two scans, scan_a first.
[[nodiscard]] inline PointCloud scene_concat(const PointCloud& scan_a, const PointCloud& scan_b) {
  std::vector<std::size_t> ia(scan_a.size()), ib(scan_b.size());
  std::iota(ia.begin(), ia.end(), std::size_t{0});
  std::iota(ib.begin(), ib.end(), std::size_t{0});
  return gather(scan_a, ia, scan_b, ib);
}

}  // namespace lmk
