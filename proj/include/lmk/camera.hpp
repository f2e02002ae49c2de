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
#include <cstdint>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "lmk/error.hpp"
#include "lmk/point_cloud.hpp"

namespace lmk {

/// Pinhole camera: intrinsics K and the rigid LiDAR -> camera transform
/// (camera axes: z forward, x right, y down).
struct CalibrationParams {
  Eigen::Matrix3d intrinsic = Eigen::Matrix3d::Identity();
  Eigen::Matrix4d extrinsic = Eigen::Matrix4d::Identity();
  std::size_t width = 0;
  std::size_t height = 0;

  void validate() const {
    const auto& k = intrinsic;
    if (!k.allFinite() || !extrinsic.allFinite()) throw InvalidArgument("calibration: non-finite entries");
    if (k(2, 0) != 0.0 || k(2, 1) != 0.0 || k(2, 2) != 1.0) {
      throw InvalidArgument("calibration: intrinsic last row must be (0, 0, 1)");
    }
    if (!(k(0, 0) > 0.0 && k(1, 1) > 0.0)) throw InvalidArgument("calibration: focal lengths must be positive");
    const Eigen::Matrix3d r = extrinsic.topLeftCorner<3, 3>();
    if (((r * r.transpose()) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
      throw InvalidArgument("calibration: extrinsic rotation is not orthonormal");
    }
    if (std::abs(r.determinant() - 1.0) > 1e-6) throw InvalidArgument("calibration: extrinsic rotation det != +1");
    if (extrinsic.row(3) != Eigen::RowVector4d(0, 0, 0, 1)) {
      throw InvalidArgument("calibration: extrinsic last row must be (0, 0, 0, 1)");
    }
    if (width == 0 || height == 0) throw InvalidArgument("calibration: image size must be positive");
  }
};

/// Per-point pixel coordinates, correspondence mask and camera-frame depth.
/// Masked-out points carry (0, 0) pixel coordinates.
struct Correspondence {
  std::vector<Eigen::Vector2d> pixel;
  std::vector<std::uint8_t> mask;
  std::vector<double> depth;

  [[nodiscard]] std::size_t valid_count() const noexcept {
    std::size_t n = 0;
    for (auto m : mask) n += m;
    return n;
  }
};

/// W x H image with D channels per pixel, row-major, channel innermost.
struct ImagePlane {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<double> data;

  ImagePlane() = default;
  ImagePlane(std::size_t w, std::size_t h, std::size_t d, double fill = 0.0)
      : width(w), height(h), channels(d), data(w * h * d, fill) {}

  [[nodiscard]] double& at(std::size_t x, std::size_t y, std::size_t c) { return data[(y * width + x) * channels + c]; }
  [[nodiscard]] double at(std::size_t x, std::size_t y, std::size_t c) const {
    return data[(y * width + x) * channels + c];
  }
};

inline constexpr double kMinProjectionDepth = 1e-6;

/// Camera-frame point for a LiDAR-frame point.
[[nodiscard]] inline Eigen::Vector3d to_camera(const CalibrationParams& calib, const Eigen::Vector3d& p) {
  return calib.extrinsic.topLeftCorner<3, 3>() * p + calib.extrinsic.topRightCorner<3, 1>();
}

[[nodiscard]] inline Correspondence project_points(const PointCloud& cloud, const CalibrationParams& calib) {
  calib.validate();
  const std::size_t n = cloud.size();
  Correspondence corr;
  corr.pixel.assign(n, Eigen::Vector2d::Zero());
  corr.mask.assign(n, 0);
  corr.depth.resize(n);
  const double w = static_cast<double>(calib.width);
  const double h = static_cast<double>(calib.height);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d pc = to_camera(calib, cloud.coords[i]);
    corr.depth[i] = pc.z();
    if (!(pc.z() > kMinProjectionDepth)) continue;
    const Eigen::Vector3d uvw = calib.intrinsic * (pc / pc.z());
    const double u = uvw.x();
    const double v = uvw.y();
    if (u >= 0.0 && u < w && v >= 0.0 && v < h) {
      corr.pixel[i] = {u, v};
      corr.mask[i] = 1;
    }
  }
  return corr;
}

/// Nearest pixel for a projected coordinate: round half up, then clamp.
[[nodiscard]] inline std::size_t nearest_pixel(double coord, std::size_t extent) noexcept {
  const double r = std::floor(coord + 0.5);
  return static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(extent - 1)));
}

/// Returns a copy of `cloud` whose painted channels are the sampled image
/// values (D columns) followed by the correspondence mask (one column).
[[nodiscard]] inline PointCloud paint_points(const PointCloud& cloud, const ImagePlane& image, const Correspondence& corr) {
  if (corr.mask.size() != cloud.size()) throw InvalidArgument("paint: correspondence does not match cloud size");
  const auto d = static_cast<Eigen::Index>(image.channels);
  PointCloud out = cloud;
  out.painted = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cloud.size()), d + 1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!corr.mask[i]) continue;
    const std::size_t x = nearest_pixel(corr.pixel[i].x(), image.width);
    const std::size_t y = nearest_pixel(corr.pixel[i].y(), image.height);
    const auto row = static_cast<Eigen::Index>(i);
    for (Eigen::Index c = 0; c < d; ++c) out.painted(row, c) = image.at(x, y, static_cast<std::size_t>(c));
    out.painted(row, d) = 1.0;
  }
  return out;
}

struct CameraView {
  CalibrationParams calib;
  ImagePlane image;
};

/// Paints with several cameras. Masks are OR-ed; a point seen by more than one
/// camera keeps the first camera's values. All images must share D.
[[nodiscard]] inline PointCloud paint_points_multi(const PointCloud& cloud, std::span<const CameraView> views) {
  if (views.empty()) throw InvalidArgument("paint: no camera views");
  PointCloud out = paint_points(cloud, views[0].image, project_points(cloud, views[0].calib));
  const Eigen::Index d = out.painted.cols() - 1;
  for (std::size_t v = 1; v < views.size(); ++v) {
    if (static_cast<Eigen::Index>(views[v].image.channels) != d) throw InvalidArgument("paint: camera channel counts differ");
    const PointCloud next = paint_points(cloud, views[v].image, project_points(cloud, views[v].calib));
    for (Eigen::Index i = 0; i < out.painted.rows(); ++i) {
      if (out.painted(i, d) == 0.0 && next.painted(i, d) == 1.0) out.painted.row(i) = next.painted.row(i);
    }
  }
  return out;
}

struct CosineLossResult {
  double loss = 0.0;
  Eigen::MatrixXd grad;  // d loss / d features_p, N x D
};

/// Masked mean cosine distance: (1 / sum M) * sum M * (1 - cos(f_p, f_img)).
/// Gradient flows to `features_p` only. Zero-norm rows count as distance 1 with
/// zero gradient. Throws EmptyInput when the mask is all zero.
[[nodiscard]] inline CosineLossResult masked_cosine_loss(const Eigen::MatrixXd& features_p,
                                                         const Eigen::MatrixXd& features_img,
                                                         std::span<const std::uint8_t> mask) {
  const Eigen::Index n = features_p.rows();
  if (features_img.rows() != n || features_img.cols() != features_p.cols() ||
      mask.size() != static_cast<std::size_t>(n)) {
    throw InvalidArgument("cosine loss: shape mismatch");
  }
  if (features_p.cols() < 1) throw InvalidArgument("cosine loss: feature dimension must be >= 1");
  double count = 0.0;
  for (auto m : mask) count += m ? 1.0 : 0.0;
  if (count == 0.0) throw EmptyInput("cosine loss: correspondence mask is empty");

  CosineLossResult res;
  res.grad = Eigen::MatrixXd::Zero(n, features_p.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const auto a = features_p.row(i);
    const auto b = features_img.row(i);
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
      res.loss += 1.0;
      continue;
    }
    const double cos = a.dot(b) / (na * nb);
    res.loss += 1.0 - cos;
    res.grad.row(i) = -(b / (na * nb) - cos * a / (na * na)) / count;
  }
  res.loss /= count;
  return res;
}

}  // namespace lmk
