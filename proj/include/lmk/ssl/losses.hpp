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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lmk/camera.hpp"
#include "lmk/error.hpp"
#include "lmk/point_cloud.hpp"
#include "lmk/ssl/model.hpp"

namespace lmk::ssl {

/// A scalar loss and its gradient with respect to the model logits (N x C).
struct LossValue {
  double value = 0.0;
  Eigen::MatrixXd grad_logits;
};

/// Mean of -log p[label] over points whose label is not the ignore id.
/// Logit gradient per point is (p - onehot) / N_valid.
[[nodiscard]] inline LossValue cross_entropy_loss(const Eigen::MatrixXd& probs, std::span<const Label> labels) {
  const Eigen::Index n = probs.rows();
  if (labels.size() != static_cast<std::size_t>(n)) throw InvalidArgument("cross entropy: label count mismatch");
  std::size_t valid = 0;
  for (Label y : labels) {
    if (y == kIgnoreLabel) continue;
    if (y >= probs.cols()) throw InvalidArgument("cross entropy: label outside class range");
    ++valid;
  }
  if (valid == 0) throw EmptyInput("cross entropy: no labeled points");
  const double inv = 1.0 / static_cast<double>(valid);
  LossValue out;
  out.grad_logits = Eigen::MatrixXd::Zero(n, probs.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Label y = labels[static_cast<std::size_t>(i)];
    if (y == kIgnoreLabel) continue;
    out.value -= std::log(probs(i, y));
    out.grad_logits.row(i) = probs.row(i) * inv;
    out.grad_logits(i, y) -= inv;
  }
  out.value *= inv;
  return out;
}

/// Mean squared L2 distance between student and teacher probability rows.
/// The teacher is a constant; the gradient goes through the student softmax.
[[nodiscard]] inline LossValue mean_teacher_loss(const Eigen::MatrixXd& student_probs, const Eigen::MatrixXd& teacher_probs) {
  if (student_probs.rows() != teacher_probs.rows() || student_probs.cols() != teacher_probs.cols()) {
    throw InvalidArgument("mean teacher loss: shape mismatch");
  }
  const Eigen::Index n = student_probs.rows();
  if (n == 0) throw EmptyInput("mean teacher loss: no points");
  const Eigen::MatrixXd diff = student_probs - teacher_probs;
  LossValue out;
  out.value = diff.squaredNorm() / static_cast<double>(n);
  // dL/dp = 2 (p - q) / N; through softmax: dL/dz = p * (g - <p, g>)
  const Eigen::MatrixXd g = 2.0 * diff / static_cast<double>(n);
  const Eigen::VectorXd pg = (student_probs.array() * g.array()).rowwise().sum();
  out.grad_logits = student_probs.array() * (g.colwise() - pg).array();
  return out;
}

/// Teacher predictions turned into hard labels; keep_mask marks rows whose
/// confidence reaches the threshold.
struct PseudoLabels {
  std::vector<Label> labels;
  std::vector<std::uint8_t> keep_mask;
  double threshold = 0.0;

  /// Labels with rejected points replaced by the ignore id.
  [[nodiscard]] std::vector<Label> masked() const {
    std::vector<Label> out = labels;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!keep_mask[i]) out[i] = kIgnoreLabel;
    }
    return out;
  }
};

[[nodiscard]] inline PseudoLabels generate_pseudo_labels(const Eigen::MatrixXd& teacher_probs, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidArgument("pseudo labels: threshold must lie in [0, 1]");
  PseudoLabels out;
  out.threshold = threshold;
  const auto n = static_cast<std::size_t>(teacher_probs.rows());
  out.labels.resize(n);
  out.keep_mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    const double p = teacher_probs.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
    out.labels[i] = static_cast<Label>(best);
    out.keep_mask[i] = p >= threshold ? 1 : 0;
  }
  return out;
}

/// Masked cosine distance between the student logits and text-aligned image
/// scores (both N x C).
[[nodiscard]] inline LossValue lkg_loss(const Eigen::MatrixXd& student_logits, const Eigen::MatrixXd& text_aligned_img,
                                        std::span<const std::uint8_t> mask) {
  auto r = masked_cosine_loss(student_logits, text_aligned_img, mask);
  return {r.loss, std::move(r.grad)};
}

struct C2LValue {
  double value = 0.0;
  Eigen::MatrixXd grad_logits;      // N x C
  Eigen::MatrixXd grad_projection;  // D x C
};

/// Point features for distillation: logits mapped by the projection layer,
/// plus the logits themselves when C == D.
[[nodiscard]] inline Eigen::MatrixXd project_features(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& projection) {
  Eigen::MatrixXd f = logits * projection.transpose();
  if (projection.rows() == projection.cols()) f += logits;
  return f;
}

/// Camera-to-LiDAR distillation: masked cosine distance between projected
/// point features and the painted image features.
[[nodiscard]] inline C2LValue c2l_loss(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& projection,
                                       const Eigen::MatrixXd& image_features, std::span<const std::uint8_t> mask) {
  if (projection.cols() != logits.cols()) throw InvalidArgument("c2l: projection input dimension mismatch");
  const Eigen::MatrixXd f = project_features(logits, projection);
  auto r = masked_cosine_loss(f, image_features, mask);
  C2LValue out;
  out.value = r.loss;
  out.grad_projection = r.grad.transpose() * logits;
  out.grad_logits = r.grad * projection;
  if (projection.rows() == projection.cols()) out.grad_logits += r.grad;
  return out;
}

struct LossWeights {
  double mix = 2.0;
  double mt = 250.0;
  double c2l = 1.5;
  double lkg = 1.0;

  void validate() const {
    if (mix < 0.0 || mt < 0.0 || c2l < 0.0 || lkg < 0.0) throw InvalidArgument("loss weights must be nonnegative");
  }
};

/// Loss terms of one step or averaged over an epoch. Absent terms stay 0 with
/// their presence flag cleared.
struct LossReport {
  double sup = 0.0;
  double mix = 0.0;
  double mt = 0.0;
  double c2l = 0.0;
  double lkg = 0.0;
  double total = 0.0;
  bool has_mix = false;
  bool has_mt = false;
  bool has_c2l = false;
  bool has_lkg = false;
};

[[nodiscard]] inline double total_loss(const LossReport& r, const LossWeights& w) {
  double t = r.sup;
  if (r.has_mix) t += w.mix * r.mix;
  if (r.has_mt) t += w.mt * r.mt;
  if (r.has_c2l) t += w.c2l * r.c2l;
  if (r.has_lkg) t += w.lkg * r.lkg;
  return t;
}

}  // namespace lmk::ssl
