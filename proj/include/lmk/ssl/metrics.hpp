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
#include <optional>
#include <span>
#include <vector>

#include "lmk/error.hpp"
#include "lmk/point_cloud.hpp"

namespace lmk::ssl {

/// Confusion counts; rows are ground truth, columns predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {}

  /// Ignore-labeled ground truth is skipped.
  void add(std::span<const Label> truth, std::span<const Label> prediction) {
    if (truth.size() != prediction.size()) throw InvalidArgument("confusion: size mismatch");
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] == kIgnoreLabel) continue;
      if (truth[i] >= classes_ || prediction[i] >= classes_) throw InvalidArgument("confusion: class id out of range");
      ++counts_[truth[i] * classes_ + prediction[i]];
    }
  }

  [[nodiscard]] std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * classes_ + pred]; }
  [[nodiscard]] std::size_t classes() const noexcept { return classes_; }

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

/// Per-class IoU (nullopt when the class is absent from both prediction and
/// ground truth), their mean, and mean per-class recall.
struct Metrics {
  std::vector<std::optional<double>> iou;
  double miou = 0.0;
  double macc = 0.0;
};

[[nodiscard]] inline Metrics compute_metrics(const ConfusionMatrix& cm) {
  const std::size_t c = cm.classes();
  Metrics m;
  m.iou.resize(c);
  double iou_sum = 0.0, acc_sum = 0.0;
  std::size_t iou_n = 0, acc_n = 0;
  for (std::size_t k = 0; k < c; ++k) {
    std::uint64_t tp = cm.at(k, k), fp = 0, fn = 0;
    for (std::size_t j = 0; j < c; ++j) {
      if (j == k) continue;
      fp += cm.at(j, k);
      fn += cm.at(k, j);
    }
    const std::uint64_t denom = tp + fp + fn;
    if (denom > 0) {
      m.iou[k] = static_cast<double>(tp) / static_cast<double>(denom);
      iou_sum += *m.iou[k];
      ++iou_n;
    }
    if (tp + fn > 0) {
      acc_sum += static_cast<double>(tp) / static_cast<double>(tp + fn);
      ++acc_n;
    }
  }
  m.miou = iou_n ? iou_sum / static_cast<double>(iou_n) : 0.0;
  m.macc = acc_n ? acc_sum / static_cast<double>(acc_n) : 0.0;
  return m;
}

}  // namespace lmk::ssl
