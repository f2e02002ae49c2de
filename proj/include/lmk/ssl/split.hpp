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
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "lmk/error.hpp"

namespace lmk::ssl {

enum class SplitStrategy { kRandom, kUniform, kSequential };

[[nodiscard]] inline SplitStrategy parse_split_strategy(std::string_view s) {
  if (s == "random") return SplitStrategy::kRandom;
  if (s == "uniform") return SplitStrategy::kUniform;
  if (s == "sequential") return SplitStrategy::kSequential;
  throw InvalidArgument("unknown split strategy '" + std::string(s) + "'");
}

/// Labeled / unlabeled frame indices, both ascending.
struct SplitPlan {
  std::vector<std::size_t> labeled;
  std::vector<std::size_t> unlabeled;
  SplitStrategy strategy = SplitStrategy::kUniform;
  std::uint64_t seed = 0;
};

/// k = round(ratio * total), at least 1. RANDOM takes the first k of a seeded
/// shuffle, UNIFORM takes floor(i * total / k), SEQUENTIAL the first k.
[[nodiscard]] inline SplitPlan split_frames(std::size_t total, double ratio, SplitStrategy strategy, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw InvalidArgument("split ratio must lie in (0, 1]");
  if (total == 0) throw InvalidArgument("split: no frames");
  const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ratio * static_cast<double>(total))));
  SplitPlan plan;
  plan.strategy = strategy;
  plan.seed = seed;
  std::vector<std::uint8_t> is_labeled(total, 0);
  switch (strategy) {
    case SplitStrategy::kRandom: {
      std::vector<std::size_t> order(total);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::mt19937_64 rng(seed);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t i = 0; i < k; ++i) is_labeled[order[i]] = 1;
      break;
    }
    case SplitStrategy::kUniform:
      for (std::size_t i = 0; i < k; ++i) is_labeled[i * total / k] = 1;
      break;
    case SplitStrategy::kSequential:
      for (std::size_t i = 0; i < k; ++i) is_labeled[i] = 1;
      break;
  }
  for (std::size_t i = 0; i < total; ++i) (is_labeled[i] ? plan.labeled : plan.unlabeled).push_back(i);
  return plan;
}

}  // namespace lmk::ssl
