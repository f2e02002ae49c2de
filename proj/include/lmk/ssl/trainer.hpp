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
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lmk/error.hpp"
#include "lmk/geometry.hpp"
#include "lmk/mixing.hpp"
#include "lmk/point_cloud.hpp"
#include "lmk/ssl/losses.hpp"
#include "lmk/ssl/metrics.hpp"
#include "lmk/ssl/model.hpp"
#include "lmk/ssl/split.hpp"

namespace lmk::ssl {

enum class Strategy { kSupOnly, kMeanTeacherOnly, kLaserMix, kLaserMixPP, kMixUnlabeledOnly };

[[nodiscard]] inline Strategy parse_strategy(std::string_view s) {
  if (s == "sup_only") return Strategy::kSupOnly;
  if (s == "mean_teacher_only") return Strategy::kMeanTeacherOnly;
  if (s == "lasermix") return Strategy::kLaserMix;
  if (s == "lasermix_pp") return Strategy::kLaserMixPP;
  if (s == "mix_unlabeled_only") return Strategy::kMixUnlabeledOnly;
  throw InvalidArgument("unknown training strategy '" + std::string(s) + "'");
}

[[nodiscard]] inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kSupOnly: return "sup_only";
    case Strategy::kMeanTeacherOnly: return "mean_teacher_only";
    case Strategy::kLaserMix: return "lasermix";
    case Strategy::kLaserMixPP: return "lasermix_pp";
    case Strategy::kMixUnlabeledOnly: return "mix_unlabeled_only";
  }
  return "unknown";
}

/// Source of text-aligned per-class image scores (N x C) for painted scans.
class ScoreProvider {
 public:
  virtual ~ScoreProvider() = default;
  [[nodiscard]] virtual Eigen::MatrixXd scores(const Eigen::MatrixXd& image_features) const = 0;
  [[nodiscard]] virtual Eigen::Index classes() const = 0;
};

/// Scores each point by the cosine similarity between its centered image
/// features and a fixed per-class prototype (C x D), both shifted by `center`.
class PrototypeScorer final : public ScoreProvider {
 public:
  explicit PrototypeScorer(Eigen::MatrixXd prototypes, double center = 0.5)
      : prototypes_(std::move(prototypes)), center_(center) {
    if (prototypes_.rows() < 1 || prototypes_.cols() < 1) throw InvalidArgument("prototype table is empty");
    centered_ = prototypes_.array() - center_;
    for (Eigen::Index c = 0; c < centered_.rows(); ++c) {
      const double n = centered_.row(c).norm();
      if (n > 0.0) centered_.row(c) /= n;
    }
  }

  [[nodiscard]] Eigen::MatrixXd scores(const Eigen::MatrixXd& image_features) const override {
    if (image_features.cols() != prototypes_.cols()) throw InvalidArgument("prototype scorer: channel mismatch");
    Eigen::MatrixXd f = image_features.array() - center_;
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      const double n = f.row(i).norm();
      if (n > 0.0) f.row(i) /= n;
    }
    return f * centered_.transpose();
  }

  [[nodiscard]] Eigen::Index classes() const override { return prototypes_.rows(); }
  [[nodiscard]] const Eigen::MatrixXd& prototypes() const noexcept { return prototypes_; }

 private:
  Eigen::MatrixXd prototypes_;
  Eigen::MatrixXd centered_;
  double center_;
};

struct TrainConfig {
  double ratio = 0.05;
  SplitStrategy split = SplitStrategy::kUniform;
  Strategy strategy = Strategy::kLaserMix;
  std::size_t m_min = 2;
  std::size_t m_max = 6;
  double threshold = 0.9;
  double ema = 0.99;
  double lr = 0.015;
  std::size_t epochs = 60;
  std::uint64_t seed = 0;
  LossWeights weights;
  std::size_t num_classes = 0;
  FeatureSpec features;
  /// Inclination range sampled for LaserMix areas; dataset min/max when unset.
  std::optional<std::pair<double, double>> inclination_range;
};

struct TrainResult {
  ModelParams teacher;
  ModelParams student;
  FeatureSpec features;
  std::vector<LossReport> epochs;
  Metrics metrics;
};

[[nodiscard]] inline Metrics evaluate(const ModelParams& model, const FeatureSpec& features,
                                      std::span<const PointCloud> clouds) {
  ConfusionMatrix cm(static_cast<std::size_t>(model.classes()));
  for (const auto& cloud : clouds) {
    if (!cloud.has_labels()) throw InvalidArgument("evaluate: scan without labels");
    cm.add(cloud.labels, predict(model, extract_features(cloud, features)));
  }
  return compute_metrics(cm);
}

namespace detail {

struct FrameCache {
  Eigen::MatrixXd features;
  Eigen::MatrixXd image_features;  // painted channels without the mask column
  std::vector<std::uint8_t> mask;
  Eigen::MatrixXd scores;
};

inline void gather_rows(const std::vector<Provenance>& prov, const Eigen::MatrixXd& from_a,
                        const Eigen::MatrixXd& from_b, Eigen::MatrixXd& out, Eigen::Index offset) {
  for (std::size_t i = 0; i < prov.size(); ++i) {
    const auto& src = prov[i].source == Source::kScanA ? from_a : from_b;
    out.row(offset + static_cast<Eigen::Index>(i)) = src.row(static_cast<Eigen::Index>(prov[i].index));
  }
}

// Per-column affine map x -> (x - mean) / scale over all training points.
// Training runs on standardized features; the final weights are folded back
// so that saved models consume the raw FeatureSpec features.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const std::vector<FrameCache>& cache, Eigen::Index dims) {
    Standardizer st{Eigen::RowVectorXd::Zero(dims), Eigen::RowVectorXd::Ones(dims)};
    double n = 0.0;
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(dims);
    Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(dims);
    for (const auto& c : cache) {
      sum += c.features.colwise().sum();
      sq += c.features.array().square().matrix().colwise().sum();
      n += static_cast<double>(c.features.rows());
    }
    if (n == 0.0) return st;
    st.mean = sum / n;
    for (Eigen::Index j = 0; j < dims; ++j) {
      const double var = sq(j) / n - st.mean(j) * st.mean(j);
      st.scale(j) = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
    return st;
  }

  void apply(Eigen::MatrixXd& x) const { x = ((x.rowwise() - mean).array().rowwise() / scale.array()).matrix(); }

  // Weights over standardized features -> weights over raw features.
  [[nodiscard]] ModelParams fold(const ModelParams& m) const {
    ModelParams out = m;
    out.weights = (m.weights.array().rowwise() / scale.array()).matrix();
    out.bias = m.bias - out.weights * mean.transpose();
    return out;
  }
};

struct RunningMean {
  double sum = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  [[nodiscard]] double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
};

}  // namespace detail

/// Student/teacher training over `frames` split by `plan`.
///
/// Each step pairs one unlabeled frame with a randomly drawn labeled frame:
/// supervised CE on the labeled frame, teacher pseudo-labels on the unlabeled
/// one, LaserMix between them (m drawn from [m_min, m_max]), CE on both mixed
/// scans, mean-teacher L2 on the unlabeled frame, and for LASERMIX_PP the
/// distillation terms on the mixed scans' camera-matched points. One SGD step
/// and one EMA update follow. `val` defaults to the labeled frames.
[[nodiscard]] inline TrainResult run_semi_supervised(std::span<const PointCloud> frames, const SplitPlan& plan,
                                                     const TrainConfig& cfg, const ScoreProvider* provider = nullptr,
                                                     std::span<const PointCloud> val = {}) {
  const Strategy strategy = cfg.strategy;
  const bool multimodal = strategy == Strategy::kLaserMixPP;
  const bool uses_mix =
      strategy == Strategy::kLaserMix || strategy == Strategy::kLaserMixPP || strategy == Strategy::kMixUnlabeledOnly;
  const bool uses_mt = strategy != Strategy::kSupOnly;

  // configuration checks, all before training starts
  if (cfg.num_classes < 1) throw ConfigError("num_classes must be >= 1");
  if (cfg.m_min < 1 || cfg.m_max < cfg.m_min) throw ConfigError("need 1 <= m_min <= m_max");
  if (!(cfg.threshold >= 0.0 && cfg.threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  if (!(cfg.ema >= 0.0 && cfg.ema < 1.0)) throw ConfigError("ema must lie in [0, 1)");
  if (!(cfg.lr > 0.0)) throw ConfigError("lr must be positive");
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  try {
    cfg.weights.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (plan.labeled.empty()) throw ConfigError("split has no labeled frames");
  if (uses_mt && plan.unlabeled.empty()) throw ConfigError(std::string(to_string(strategy)) + " needs unlabeled frames");
  if (strategy == Strategy::kMixUnlabeledOnly && plan.unlabeled.size() < 2) {
    throw ConfigError("mix_unlabeled_only needs at least two unlabeled frames");
  }
  for (auto idx : plan.labeled) {
    if (idx >= frames.size()) throw ConfigError("split index out of range");
    if (!frames[idx].has_labels() || frames[idx].empty()) throw ConfigError("labeled frame without labels or points");
  }
  for (auto idx : plan.unlabeled) {
    if (idx >= frames.size()) throw ConfigError("split index out of range");
  }

  FeatureSpec fspec = cfg.features;
  fspec.painted_dims = 0;
  if (multimodal) {
    const Eigen::Index dims = frames.empty() ? 0 : frames.front().painted_dims();
    if (dims < 2) throw ConfigError("lasermix_pp needs painted frames (image channels plus mask)");
    for (const auto& f : frames) {
      if (f.painted_dims() != dims) throw ConfigError("lasermix_pp: frames disagree on painted dimensions");
    }
    if (provider == nullptr) throw ConfigError("lasermix_pp needs a text-aligned score provider");
    if (provider->classes() != static_cast<Eigen::Index>(cfg.num_classes)) {
      throw ConfigError("score provider class count differs from num_classes");
    }
    fspec.painted_dims = dims;
  }
  for (const auto& f : frames) {
    try {
      f.validate(cfg.num_classes);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("invalid frame: ") + e.what());
    }
  }

  const auto classes = static_cast<Eigen::Index>(cfg.num_classes);
  std::pair<double, double> phi_range;
  if (cfg.inclination_range) {
    phi_range = *cfg.inclination_range;
  } else if (uses_mix) {
    phi_range = inclination_extent(frames);
  }
  if (uses_mix && !(phi_range.first < phi_range.second)) throw ConfigError("degenerate inclination range");

  std::vector<detail::FrameCache> cache(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    cache[i].features = extract_features(frames[i], fspec);
    if (multimodal) {
      const Eigen::Index d = frames[i].painted_dims() - 1;
      cache[i].image_features = frames[i].painted.leftCols(d);
      cache[i].mask.resize(frames[i].size());
      for (std::size_t k = 0; k < frames[i].size(); ++k) {
        cache[i].mask[k] = frames[i].painted(static_cast<Eigen::Index>(k), d) > 0.5 ? 1 : 0;
      }
      cache[i].scores = provider->scores(cache[i].image_features);
    }
  }

  const auto standardizer = detail::Standardizer::fit(cache, fspec.dims());
  for (auto& c : cache) standardizer.apply(c.features);

  ModelParams student = ModelParams::zeros(classes, fspec.dims());
  if (multimodal) {
    std::mt19937_64 init_rng(cfg.seed ^ 0x5eedULL);
    const Eigen::Index d = fspec.painted_dims - 1;
    student.projection.resize(d, classes);
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < classes; ++c) {
        student.projection(r, c) = std::generate_canonical<double, 53>(init_rng) - 0.5;
      }
    }
  }
  ModelParams teacher = student;

  std::mt19937_64 rng_order(cfg.seed);
  std::mt19937_64 rng_pair(cfg.seed + 1);
  std::mt19937_64 rng_mix(cfg.seed + 2);
  std::uniform_int_distribution<std::size_t> pick_labeled(0, plan.labeled.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_m(cfg.m_min, cfg.m_max);

  const std::vector<std::size_t>& steps = plan.unlabeled.empty() ? plan.labeled : plan.unlabeled;
  std::vector<std::size_t> order = steps;

  TrainResult result;
  result.features = fspec;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng_order);
    detail::RunningMean sup, mix, mt, c2l, lkg;
    for (std::size_t u : order) {
      const std::size_t l = plan.labeled[pick_labeled(rng_pair)];
      ModelGradient grad = zero_gradient(student);

      {
        const auto& x = cache[l].features;
        const auto ce = cross_entropy_loss(forward(student, x), frames[l].labels);
        accumulate_linear_grad(grad, x, ce.grad_logits);
        sup.add(ce.value);
      }

      const bool do_mt = uses_mt && cfg.weights.mt > 0.0;
      const bool do_mix = uses_mix && (cfg.weights.mix > 0.0 || (multimodal && (cfg.weights.c2l > 0.0 || cfg.weights.lkg > 0.0)));
      if (do_mt || do_mix) {
        const auto& xu = cache[u].features;
        const Eigen::MatrixXd teacher_u = forward(teacher, xu);
        if (do_mt) {
          const auto loss = mean_teacher_loss(forward(student, xu), teacher_u);
          accumulate_linear_grad(grad, xu, loss.grad_logits, cfg.weights.mt);
          mt.add(loss.value);
        }
        if (do_mix) {
          PointCloud target = frames[u];
          target.labels = generate_pseudo_labels(teacher_u, cfg.threshold).masked();
          std::size_t partner = l;
          PointCloud partner_cloud;
          if (strategy == Strategy::kMixUnlabeledOnly) {
            std::uniform_int_distribution<std::size_t> pick_u(0, plan.unlabeled.size() - 2);
            std::size_t k = pick_u(rng_mix);
            if (plan.unlabeled[k] == u) k = plan.unlabeled.size() - 1;
            partner = plan.unlabeled[k];
            partner_cloud = frames[partner];
            partner_cloud.labels =
                generate_pseudo_labels(forward(teacher, cache[partner].features), cfg.threshold).masked();
          } else {
            partner_cloud = frames[partner];
          }
          const BeamPartition partition = make_inclination_partition(phi_range.first, phi_range.second, pick_m(rng_mix));
          const MixOutput mixed = multimodal ? multi_modal_laser_mix(partner_cloud, target, partition)
                                             : laser_mix(partner_cloud, target, partition);

          const auto na = static_cast<Eigen::Index>(mixed.mixed_a.size());
          const auto n = na + static_cast<Eigen::Index>(mixed.mixed_b.size());
          Eigen::MatrixXd x(n, fspec.dims());
          detail::gather_rows(mixed.provenance_a, cache[partner].features, cache[u].features, x, 0);
          detail::gather_rows(mixed.provenance_b, cache[partner].features, cache[u].features, x, na);
          std::vector<Label> y = mixed.mixed_a.labels;
          y.insert(y.end(), mixed.mixed_b.labels.begin(), mixed.mixed_b.labels.end());

          const Eigen::MatrixXd z = logits(student, x);
          const Eigen::MatrixXd p = softmax(z);
          Eigen::MatrixXd grad_z = Eigen::MatrixXd::Zero(n, classes);
          if (cfg.weights.mix > 0.0 && std::any_of(y.begin(), y.end(), [](Label v) { return v != kIgnoreLabel; })) {
            const auto ce = cross_entropy_loss(p, y);
            grad_z += cfg.weights.mix * ce.grad_logits;
            mix.add(ce.value);
          }
          if (multimodal) {
            const Eigen::Index d = fspec.painted_dims - 1;
            Eigen::MatrixXd img(n, d);
            Eigen::MatrixXd scores(n, classes);
            detail::gather_rows(mixed.provenance_a, cache[partner].image_features, cache[u].image_features, img, 0);
            detail::gather_rows(mixed.provenance_b, cache[partner].image_features, cache[u].image_features, img, na);
            detail::gather_rows(mixed.provenance_a, cache[partner].scores, cache[u].scores, scores, 0);
            detail::gather_rows(mixed.provenance_b, cache[partner].scores, cache[u].scores, scores, na);
            std::vector<std::uint8_t> mask(static_cast<std::size_t>(n));
            for (std::size_t i = 0; i < mask.size(); ++i) {
              const auto& prov = i < static_cast<std::size_t>(na) ? mixed.provenance_a[i]
                                                                   : mixed.provenance_b[i - static_cast<std::size_t>(na)];
              mask[i] = cache[prov.source == Source::kScanA ? partner : u].mask[prov.index];
            }
            if (std::any_of(mask.begin(), mask.end(), [](auto v) { return v != 0; })) {
              if (cfg.weights.c2l > 0.0) {
                const auto loss = c2l_loss(z, student.projection, img, mask);
                grad_z += cfg.weights.c2l * loss.grad_logits;
                grad.projection += cfg.weights.c2l * loss.grad_projection;
                c2l.add(loss.value);
              }
              if (cfg.weights.lkg > 0.0) {
                const auto loss = lkg_loss(z, scores, mask);
                grad_z += cfg.weights.lkg * loss.grad_logits;
                lkg.add(loss.value);
              }
            }
          }
          accumulate_linear_grad(grad, x, grad_z);
        }
      }

      student = sgd_step(student, grad, cfg.lr);
      teacher = ema_update(teacher, student, cfg.ema);
    }

    LossReport report;
    report.sup = sup.mean();
    report.mix = mix.mean();
    report.mt = mt.mean();
    report.c2l = c2l.mean();
    report.lkg = lkg.mean();
    report.has_mix = mix.n > 0;
    report.has_mt = mt.n > 0;
    report.has_c2l = c2l.n > 0;
    report.has_lkg = lkg.n > 0;
    report.total = total_loss(report, cfg.weights);
    result.epochs.push_back(report);
    if (!student.all_finite()) throw Error("training diverged at epoch " + std::to_string(epoch));
  }

  result.teacher = standardizer.fold(teacher);
  result.student = standardizer.fold(student);
  if (val.empty()) {
    std::vector<PointCloud> labeled;
    for (auto idx : plan.labeled) labeled.push_back(frames[idx]);
    result.metrics = evaluate(result.teacher, fspec, labeled);
  } else {
    result.metrics = evaluate(result.teacher, fspec, val);
  }
  return result;
}

}  // namespace lmk::ssl
