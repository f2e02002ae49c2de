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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lmk/error.hpp"
#include "lmk/geometry.hpp"
#include "lmk/point_cloud.hpp"

namespace lmk {

/// Per-class beam-area statistics of a labeled corpus. Entropies are in nats.
struct PriorReport {
  std::vector<double> class_proportions;                // C
  std::vector<std::vector<double>> area_distributions;  // C x m, zero rows for absent classes
  std::vector<std::uint64_t> class_counts;              // C
  double conditional_entropy = 0.0;                     // H(Y | A)
  double marginal_entropy = 0.0;                        // H(Y)
};

namespace detail {

// -sum p log p over a histogram, with 0 log 0 = 0.
inline double histogram_entropy(std::span<const std::uint64_t> counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) return 0.0;
  double h = 0.0;
  const double n = static_cast<double>(total);
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

inline void check_label(Label y, std::size_t num_classes) {
  if (y != kIgnoreLabel && y >= num_classes) {
    throw InvalidArgument("label " + std::to_string(y) + " outside [0, " + std::to_string(num_classes) + ")");
  }
}

}  // namespace detail

struct LabelEntropy {
  double marginal = 0.0;     // H(Y)
  double conditional = 0.0;  // H(Y | A)
};

/// H(Y) from the global label histogram and H(Y|A) = sum_k (n_k / N) H(Y | area k).
/// Ignore-labeled points are skipped.
[[nodiscard]] inline LabelEntropy label_entropy_given_areas(std::span<const Label> labels,
                                                            std::span<const std::size_t> areas, std::size_t m,
                                                            std::size_t num_classes) {
  if (labels.size() != areas.size()) throw InvalidArgument("label/area count mismatch");
  std::vector<std::uint64_t> joint(m * num_classes, 0);
  std::vector<std::uint64_t> marginal(num_classes, 0);
  std::vector<std::uint64_t> per_area(m, 0);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    detail::check_label(labels[i], num_classes);
    if (labels[i] == kIgnoreLabel) continue;
    if (areas[i] >= m) throw InvalidArgument("area index out of range");
    ++joint[areas[i] * num_classes + labels[i]];
    ++marginal[labels[i]];
    ++per_area[areas[i]];
    ++total;
  }
  if (total == 0) throw EmptyInput("label entropy: no valid labels");
  LabelEntropy h;
  h.marginal = detail::histogram_entropy(marginal);
  for (std::size_t k = 0; k < m; ++k) {
    if (per_area[k] == 0) continue;
    const double w = static_cast<double>(per_area[k]) / static_cast<double>(total);
    h.conditional += w * detail::histogram_entropy(std::span(joint).subspan(k * num_classes, num_classes));
  }
  return h;
}

/// Mean per-point prediction entropy, accumulated per area and recombined with
/// area point-count weights. Rows of `probs` must sum to 1 within 1e-6.
[[nodiscard]] inline double empirical_conditional_entropy(const Eigen::MatrixXd& probs,
                                                          std::span<const std::size_t> areas, std::size_t m) {
  const auto n = static_cast<std::size_t>(probs.rows());
  if (n == 0) throw EmptyInput("conditional entropy: no points");
  if (areas.size() != n) throw InvalidArgument("conditional entropy: area count mismatch");
  std::vector<double> sum(m, 0.0);
  std::vector<std::size_t> count(m, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = probs.row(static_cast<Eigen::Index>(i));
    if (std::abs(row.sum() - 1.0) > 1e-6 || (row.array() < 0.0).any()) {
      throw InvalidArgument("conditional entropy: row " + std::to_string(i) + " is not a distribution");
    }
    if (areas[i] >= m) throw InvalidArgument("conditional entropy: area index out of range");
    double h = 0.0;
    for (Eigen::Index c = 0; c < row.size(); ++c) {
      if (row[c] > 0.0) h -= row[c] * std::log(row[c]);
    }
    sum[areas[i]] += h;
    ++count[areas[i]];
  }
  double total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    if (count[k] == 0) continue;
    const double weight = static_cast<double>(count[k]) / static_cast<double>(n);
    total += weight * (sum[k] / static_cast<double>(count[k]));
  }
  return total;
}

/// Class proportions, per-class area distributions and label entropies over a
/// set of labeled scans. Throws EmptyInput if no point carries a valid label.
template <typename Range>
[[nodiscard]] PriorReport class_area_distribution(const Range& clouds, const BeamPartition& partition,
                                                  std::size_t num_classes) {
  const std::size_t m = partition.areas();
  std::vector<Label> labels;
  std::vector<std::size_t> areas;
  for (const PointCloud& cloud : clouds) {
    if (!cloud.has_labels()) throw InvalidArgument("class_area_distribution: scan without labels");
    const auto a = assign_areas(cloud, partition);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      detail::check_label(cloud.labels[i], num_classes);
      if (cloud.labels[i] == kIgnoreLabel) continue;
      labels.push_back(cloud.labels[i]);
      areas.push_back(a[i]);
    }
  }
  if (labels.empty()) throw EmptyInput("class_area_distribution: no valid points");

  PriorReport report;
  report.class_counts.assign(num_classes, 0);
  std::vector<std::vector<std::uint64_t>> joint(num_classes, std::vector<std::uint64_t>(m, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++report.class_counts[labels[i]];
    ++joint[labels[i]][areas[i]];
  }
  const double total = static_cast<double>(labels.size());
  report.class_proportions.resize(num_classes);
  report.area_distributions.assign(num_classes, std::vector<double>(m, 0.0));
  for (std::size_t c = 0; c < num_classes; ++c) {
    const auto n = report.class_counts[c];
    report.class_proportions[c] = static_cast<double>(n) / total;
    if (n == 0) continue;
    for (std::size_t k = 0; k < m; ++k) {
      report.area_distributions[c][k] = static_cast<double>(joint[c][k]) / static_cast<double>(n);
    }
  }
  const auto h = label_entropy_given_areas(labels, areas, m, num_classes);
  report.marginal_entropy = h.marginal;
  report.conditional_entropy = h.conditional;
  return report;
}

/// Likelihood grid (rows = inclination areas, row 0 lowest; columns = azimuth
/// bins): fraction of scans where a point of `class_id` falls in each cell.
struct Heatmap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  [[nodiscard]] double at(std::size_t row, std::size_t col) const { return values[row * width + col]; }
};

template <typename Range>
[[nodiscard]] Heatmap prior_heatmap(const Range& clouds, const BeamPartition& partition, Label class_id,
                                    std::size_t width, std::size_t num_classes) {
  if (class_id >= num_classes) throw InvalidArgument("prior_heatmap: unknown class id " + std::to_string(class_id));
  if (width < 1) throw InvalidArgument("prior_heatmap: width must be >= 1");
  Heatmap map{partition.areas(), width, std::vector<double>(partition.areas() * width, 0.0)};
  std::vector<std::uint32_t> hits(map.values.size(), 0);
  std::vector<std::uint8_t> seen(map.values.size());
  std::size_t scans = 0;
  for (const PointCloud& cloud : clouds) {
    ++scans;
    std::fill(seen.begin(), seen.end(), 0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (!cloud.has_labels() || cloud.labels[i] != class_id) continue;
      const auto& p = cloud.coords[i];
      seen[partition.area_of(inclination(p)) * width + azimuth_column(azimuth(p), width)] = 1;
    }
    for (std::size_t c = 0; c < seen.size(); ++c) hits[c] += seen[c];
  }
  if (scans == 0) return map;
  for (std::size_t c = 0; c < hits.size(); ++c) map.values[c] = static_cast<double>(hits[c]) / static_cast<double>(scans);
  return map;
}

}  // namespace lmk
