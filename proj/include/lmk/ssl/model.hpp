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
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lmk/error.hpp"
#include "lmk/geometry.hpp"
#include "lmk/point_cloud.hpp"

namespace lmk::ssl {

/// Per-point input features: x, y, z, range, inclination, intensity, then the
/// painted channels. Geometric features are divided by fixed scales.
struct FeatureSpec {
  static constexpr Eigen::Index kGeometric = 6;

  double xy_scale = 20.0;
  double z_scale = 5.0;
  double range_scale = 20.0;
  double inclination_scale = 0.15;
  Eigen::Index painted_dims = 0;

  [[nodiscard]] Eigen::Index dims() const noexcept { return kGeometric + painted_dims; }
};

[[nodiscard]] inline Eigen::MatrixXd extract_features(const PointCloud& cloud, const FeatureSpec& spec) {
  if (spec.painted_dims > 0 && cloud.painted_dims() != spec.painted_dims) {
    throw InvalidArgument("features: scan has " + std::to_string(cloud.painted_dims()) + " painted channels, model expects " +
                          std::to_string(spec.painted_dims));
  }
  const auto n = static_cast<Eigen::Index>(cloud.size());
  Eigen::MatrixXd x(n, spec.dims());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = cloud.coords[static_cast<std::size_t>(i)];
    x(i, 0) = p.x() / spec.xy_scale;
    x(i, 1) = p.y() / spec.xy_scale;
    x(i, 2) = p.z() / spec.z_scale;
    x(i, 3) = p.norm() / spec.range_scale;
    x(i, 4) = inclination(p) / spec.inclination_scale;
    x(i, 5) = cloud.intensity[static_cast<std::size_t>(i)];
  }
  if (spec.painted_dims > 0) x.rightCols(spec.painted_dims) = cloud.painted;
  return x;
}

/// Linear softmax classifier over per-point features, plus an optional
/// projection layer (D x C) that maps logits into an image feature space.
struct ModelParams {
  Eigen::MatrixXd weights;     // C x d
  Eigen::VectorXd bias;        // C
  Eigen::MatrixXd projection;  // D x C, empty when unused

  [[nodiscard]] static ModelParams zeros(Eigen::Index classes, Eigen::Index dims) {
    return {Eigen::MatrixXd::Zero(classes, dims), Eigen::VectorXd::Zero(classes), Eigen::MatrixXd()};
  }

  [[nodiscard]] Eigen::Index classes() const noexcept { return weights.rows(); }
  [[nodiscard]] Eigen::Index dims() const noexcept { return weights.cols(); }

  [[nodiscard]] bool all_finite() const {
    return weights.allFinite() && bias.allFinite() && (projection.size() == 0 || projection.allFinite());
  }

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() && a.weights == b.weights &&
           a.bias.size() == b.bias.size() && a.bias == b.bias && a.projection.rows() == b.projection.rows() &&
           a.projection.cols() == b.projection.cols() && a.projection == b.projection;
  }
};

/// Gradient with the same shapes as ModelParams.
using ModelGradient = ModelParams;

[[nodiscard]] inline Eigen::MatrixXd logits(const ModelParams& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.dims()) throw InvalidArgument("forward: feature dimension mismatch");
  Eigen::MatrixXd z = features * model.weights.transpose();
  z.rowwise() += model.bias.transpose();
  return z;
}

/// Row-wise softmax with max subtraction.
[[nodiscard]] inline Eigen::MatrixXd softmax(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd p(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double mx = z.row(i).maxCoeff();
    p.row(i) = (z.row(i).array() - mx).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

[[nodiscard]] inline Eigen::MatrixXd forward(const ModelParams& model, const Eigen::MatrixXd& features) {
  return softmax(logits(model, features));
}

/// Class with the highest probability per row, lowest id on ties.
[[nodiscard]] inline std::vector<Label> predict(const ModelParams& model, const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd z = logits(model, features);
  std::vector<Label> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index best = 0;
    z.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<Label>(best);
  }
  return out;
}

/// Accumulates into `grad` the parameter gradient of a loss whose gradient
/// with respect to the logits of `features` is `grad_logits`.
inline void accumulate_linear_grad(ModelGradient& grad, const Eigen::MatrixXd& features,
                                   const Eigen::MatrixXd& grad_logits, double weight = 1.0) {
  grad.weights.noalias() += weight * grad_logits.transpose() * features;
  grad.bias.noalias() += weight * grad_logits.colwise().sum().transpose();
}

[[nodiscard]] inline ModelGradient zero_gradient(const ModelParams& model) {
  ModelGradient g;
  g.weights = Eigen::MatrixXd::Zero(model.weights.rows(), model.weights.cols());
  g.bias = Eigen::VectorXd::Zero(model.bias.size());
  g.projection = Eigen::MatrixXd::Zero(model.projection.rows(), model.projection.cols());
  return g;
}

/// w <- w - lr * g
[[nodiscard]] inline ModelParams sgd_step(const ModelParams& model, const ModelGradient& grad, double lr) {
  ModelParams out = model;
  out.weights -= lr * grad.weights;
  out.bias -= lr * grad.bias;
  if (out.projection.size() > 0) out.projection -= lr * grad.projection;
  return out;
}

/// teacher <- alpha * teacher + (1 - alpha) * student, elementwise.
[[nodiscard]] inline ModelParams ema_update(const ModelParams& teacher, const ModelParams& student, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw InvalidArgument("ema: alpha must lie in [0, 1)");
  if (teacher.weights.rows() != student.weights.rows() || teacher.weights.cols() != student.weights.cols() ||
      teacher.projection.rows() != student.projection.rows() || teacher.projection.cols() != student.projection.cols()) {
    throw InvalidArgument("ema: teacher and student shapes differ");
  }
  ModelParams out;
  out.weights = alpha * teacher.weights + (1.0 - alpha) * student.weights;
  out.bias = alpha * teacher.bias + (1.0 - alpha) * student.bias;
  out.projection = alpha * teacher.projection + (1.0 - alpha) * student.projection;
  return out;
}

}  // namespace lmk::ssl
