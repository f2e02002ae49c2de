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

#include <set>
#include <string>

#include "lmk/error.hpp"
#include "lmk/geometry.hpp"
#include "lmk/io.hpp"
#include "lmk/ssl/trainer.hpp"

namespace lmk::ssl {

/// Training job as read from a key = value file: the trainer settings plus the
/// data locations the CLI needs.
struct TrainJob {
  TrainConfig config;
  std::string train_data;
  std::string val_data;
  std::string prototypes;
};

/// Recognized keys: ratio, split, strategy, m_min, m_max, threshold, ema, lr,
/// epochs, seed, num_classes, weight.{mix,mt,c2l,lkg}, phi_min_deg,
/// phi_max_deg, train_data, val_data, prototypes.
[[nodiscard]] inline TrainJob parse_train_config(const io::KeyValueDoc& doc) {
  if (!doc.sections.empty()) throw ConfigError("training config takes no [sections]");
  static const std::set<std::string> known{"ratio",      "split",      "strategy",      "m_min",      "m_max",
                                           "threshold",  "ema",        "lr",            "epochs",     "seed",
                                           "num_classes", "weight.mix", "weight.mt",     "weight.c2l", "weight.lkg",
                                           "phi_min_deg", "phi_max_deg", "train_data",   "val_data",   "prototypes"};
  TrainJob job;
  auto& c = job.config;
  for (const auto& [key, value] : doc.global.values) {
    if (!known.count(key)) throw ConfigError("unknown training key '" + key + "'");
    try {
      if (key == "ratio") c.ratio = io::parse_real(value, key);
      else if (key == "split") c.split = parse_split_strategy(value);
      else if (key == "strategy") c.strategy = parse_strategy(value);
      else if (key == "m_min") c.m_min = io::parse_count(value, key);
      else if (key == "m_max") c.m_max = io::parse_count(value, key);
      else if (key == "threshold") c.threshold = io::parse_real(value, key);
      else if (key == "ema") c.ema = io::parse_real(value, key);
      else if (key == "lr") c.lr = io::parse_real(value, key);
      else if (key == "epochs") c.epochs = io::parse_count(value, key);
      else if (key == "seed") c.seed = io::parse_count(value, key);
      else if (key == "num_classes") c.num_classes = io::parse_count(value, key);
      else if (key == "weight.mix") c.weights.mix = io::parse_real(value, key);
      else if (key == "weight.mt") c.weights.mt = io::parse_real(value, key);
      else if (key == "weight.c2l") c.weights.c2l = io::parse_real(value, key);
      else if (key == "weight.lkg") c.weights.lkg = io::parse_real(value, key);
      else if (key == "train_data") job.train_data = value;
      else if (key == "val_data") job.val_data = value;
      else if (key == "prototypes") job.prototypes = value;
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  const auto lo = doc.global.get("phi_min_deg");
  const auto hi = doc.global.get("phi_max_deg");
  if (lo.has_value() != hi.has_value()) throw ConfigError("phi_min_deg and phi_max_deg must be given together");
  if (lo) c.inclination_range = {deg2rad(io::parse_real(*lo, "phi_min_deg")), deg2rad(io::parse_real(*hi, "phi_max_deg"))};
  if (job.train_data.empty()) throw ConfigError("training config lacks train_data");
  if (c.num_classes == 0) throw ConfigError("training config lacks num_classes");
  return job;
}

}  // namespace lmk::ssl
