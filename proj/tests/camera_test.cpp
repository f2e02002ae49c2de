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


#include <random>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "support.hpp"

namespace lmk {
namespace {

using test::make_cloud;

CalibrationParams pinhole(std::size_t w = 128, std::size_t h = 64) {
  CalibrationParams c;
  c.intrinsic << 100, 0, 64, 0, 100, 32, 0, 0, 1;
  c.width = w;
  c.height = h;
  return c;
}

CalibrationParams lidar_to_camera() {
  auto c = pinhole();
  c.extrinsic.topLeftCorner<3, 3>() << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  return c;
}

TEST(Projection, PrincipalPointRay) {
  const auto corr = project_points(make_cloud({{0, 0, 2}}), pinhole());
  EXPECT_NEAR(corr.pixel[0].x(), 64.0, 1e-6);
  EXPECT_NEAR(corr.pixel[0].y(), 32.0, 1e-6);
  EXPECT_EQ(corr.mask[0], 1);
  EXPECT_DOUBLE_EQ(corr.depth[0], 2.0);
  // principal point outside a 64 x 32 image
  EXPECT_EQ(project_points(make_cloud({{0, 0, 2}}), pinhole(64, 32)).mask[0], 0);
}

TEST(Projection, RotatedFrame) {
  const auto calib = lidar_to_camera();
  EXPECT_TRUE(to_camera(calib, {10, 0, 0}).isApprox(Eigen::Vector3d(0, 0, 10)));
  const auto corr = project_points(make_cloud({{10, 0, 0}, {10, 1, 0.5}}), calib);
  EXPECT_NEAR(corr.pixel[0].x(), 64.0, 1e-6);
  EXPECT_NEAR(corr.pixel[0].y(), 32.0, 1e-6);
  // left and up in the LiDAR frame is left and up in the image
  EXPECT_NEAR(corr.pixel[1].x(), 64.0 - 100.0 * 1 / 10, 1e-6);
  EXPECT_NEAR(corr.pixel[1].y(), 32.0 - 100.0 * 0.5 / 10, 1e-6);
}

TEST(Projection, BehindCamera) {
  const auto corr = project_points(make_cloud({{0, 0, -1}, {0, 0, 0}}), pinhole());
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(corr.mask[i], 0);
    EXPECT_EQ(corr.pixel[i], Eigen::Vector2d::Zero());
  }
  EXPECT_DOUBLE_EQ(corr.depth[0], -1.0);
}

TEST(Projection, ScaleConsistent) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5, 5), d(0.5, 20), s(0.1, 10);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Vector3d p(u(rng), u(rng), d(rng));
    const double k = s(rng);
    const auto a = project_points(make_cloud({p}), CalibrationParams{pinhole().intrinsic, Eigen::Matrix4d::Identity(), 100000, 100000});
    const auto b = project_points(make_cloud({k * p}), CalibrationParams{pinhole().intrinsic, Eigen::Matrix4d::Identity(), 100000, 100000});
    EXPECT_NEAR(a.pixel[0].x(), b.pixel[0].x(), 1e-9);
    EXPECT_NEAR(a.pixel[0].y(), b.pixel[0].y(), 1e-9);
  }
}

TEST(Projection, MaskContractFuzz) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-30, 30);
  for (int t = 0; t < 200; ++t) {
    auto calib = lidar_to_camera();
    const Eigen::Matrix3d r = Eigen::Quaterniond::UnitRandom().toRotationMatrix();
    calib.extrinsic.topLeftCorner<3, 3>() = r;
    calib.extrinsic.topRightCorner<3, 1>() = Eigen::Vector3d(u(rng), u(rng), u(rng)) / 10;
    const auto cloud = test::random_cloud(rng, 50);
    const auto corr = project_points(cloud, calib);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (!corr.mask[i]) {
        EXPECT_EQ(corr.pixel[i], Eigen::Vector2d::Zero());
        continue;
      }
      EXPECT_GT(corr.depth[i], 0.0);
      EXPECT_GE(corr.pixel[i].x(), 0.0);
      EXPECT_LT(corr.pixel[i].x(), 128.0);
      EXPECT_GE(corr.pixel[i].y(), 0.0);
      EXPECT_LT(corr.pixel[i].y(), 64.0);
    }
  }
}

TEST(Calibration, Validation) {
  auto c = pinhole();
  EXPECT_NO_THROW(c.validate());
  c.intrinsic(2, 2) = 2;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = pinhole();
  c.intrinsic(0, 0) = -1;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = pinhole();
  c.extrinsic(0, 0) = 1.1;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = pinhole();
  c.extrinsic.topLeftCorner<3, 3>() = Eigen::Vector3d(1, 1, -1).asDiagonal();  // reflection
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = pinhole(0, 10);
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_THROW((void)project_points(make_cloud({{0, 0, 1}}), c), InvalidArgument);
}

// One-channel image whose value at (x, y) is 1000 x + y.
ImagePlane coordinate_image(std::size_t w, std::size_t h) {
  ImagePlane img(w, h, 1);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) img.at(x, y, 0) = 1000.0 * static_cast<double>(x) + static_cast<double>(y);
  }
  return img;
}

TEST(Paint, ExactPixelConstantImage) {
  CalibrationParams c;
  c.intrinsic << 100, 0, 0, 0, 100, 0, 0, 0, 1;
  c.width = 64;
  c.height = 64;
  const auto cloud = make_cloud({{0.10, 0.21, 1.0}});
  const auto painted = paint_points(cloud, ImagePlane(64, 64, 3, 0.5), project_points(cloud, c));
  ASSERT_EQ(painted.painted_dims(), 4);
  EXPECT_EQ(painted.painted.row(0), Eigen::RowVector4d(0.5, 0.5, 0.5, 1.0));
}

TEST(Paint, RoundsToNearestPixel) {
  CalibrationParams c;
  c.intrinsic << 100, 0, 0, 0, 100, 0, 0, 0, 1;
  c.width = 64;
  c.height = 64;
  const auto cloud = make_cloud({{0.104, 0.206, 1.0}});
  const auto corr = project_points(cloud, c);
  EXPECT_NEAR(corr.pixel[0].x(), 10.4, 1e-9);
  EXPECT_NEAR(corr.pixel[0].y(), 20.6, 1e-9);
  const auto painted = paint_points(cloud, coordinate_image(64, 64), corr);
  EXPECT_DOUBLE_EQ(painted.painted(0, 0), 1000.0 * 10 + 21);
  EXPECT_EQ(nearest_pixel(10.5, 64), 11u);
  EXPECT_EQ(nearest_pixel(63.7, 64), 63u);
  EXPECT_EQ(nearest_pixel(-0.2, 64), 0u);
}

TEST(Paint, MaskedOutPointIsZero) {
  const auto cloud = make_cloud({{0, 0, -3}});
  const auto painted = paint_points(cloud, ImagePlane(128, 64, 3, 0.7), project_points(cloud, pinhole()));
  EXPECT_EQ(painted.painted.row(0), Eigen::RowVector4d::Zero());
}

TEST(Paint, MatchesDirectLookup) {
  std::mt19937_64 rng(3);
  const auto calib = lidar_to_camera();
  const auto cloud = test::random_cloud(rng, 2000);
  const auto img = coordinate_image(128, 64);
  const auto corr = project_points(cloud, calib);
  const auto painted = paint_points(cloud, img, corr);
  std::size_t seen = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    EXPECT_EQ(painted.painted(row, 1), corr.mask[i]);
    if (!corr.mask[i]) continue;
    ++seen;
    const auto x = static_cast<std::size_t>(std::min(127.0, std::floor(corr.pixel[i].x() + 0.5)));
    const auto y = static_cast<std::size_t>(std::min(63.0, std::floor(corr.pixel[i].y() + 0.5)));
    EXPECT_EQ(painted.painted(row, 0), img.at(x, y, 0));
  }
  EXPECT_GT(seen, 0u);
}

TEST(Paint, MultiCameraOrsMasksAndKeepsFirst) {
  auto front = lidar_to_camera();
  auto back = front;
  back.extrinsic.topLeftCorner<3, 3>() << 0, 1, 0, 0, 0, -1, -1, 0, 0;
  const auto cloud = make_cloud({{10, 0, 0}, {-10, 0, 0}, {0, 10, 0}});
  const std::vector<CameraView> views{{front, ImagePlane(128, 64, 1, 0.25)}, {back, ImagePlane(128, 64, 1, 0.75)},
                                      {front, ImagePlane(128, 64, 1, 0.9)}};
  const auto p = paint_points_multi(cloud, views);
  EXPECT_EQ(p.painted.row(0), Eigen::RowVector2d(0.25, 1));
  EXPECT_EQ(p.painted.row(1), Eigen::RowVector2d(0.75, 1));
  EXPECT_EQ(p.painted.row(2), Eigen::RowVector2d(0, 0));
  EXPECT_THROW((void)paint_points_multi(cloud, {}), InvalidArgument);
}

TEST(CosineLoss, HandValues) {
  Eigen::MatrixXd a(2, 3), b(2, 3);
  a << 1, 2, 3, -1, 0.5, 2;
  const std::vector<std::uint8_t> all{1, 1};
  EXPECT_NEAR(masked_cosine_loss(a, a, all).loss, 0.0, 1e-15);
  a << 1, 0, 0, 0, 1, 0;
  b << 0, 1, 0, 0, 0, 1;
  EXPECT_NEAR(masked_cosine_loss(a, b, all).loss, 1.0, 1e-15);
  EXPECT_NEAR(masked_cosine_loss(a, -a, all).loss, 2.0, 1e-15);
}

TEST(CosineLoss, AntiParallelGradient) {
  Eigen::MatrixXd a(1, 3);
  a << 0.3, -0.2, 0.9;
  const Eigen::MatrixXd b = -2.0 * a;
  const std::vector<std::uint8_t> m{1};
  const auto r = masked_cosine_loss(a, b, m);
  EXPECT_NEAR(r.loss, 2.0, 1e-15);
  // the gradient vanishes at the maximum
  auto f = [&](const Eigen::MatrixXd& x) { return masked_cosine_loss(x, b, m).loss; };
  EXPECT_LE((r.grad).norm(), 1e-12);
  Eigen::MatrixXd a2(1, 3);
  a2 << 0.3, -0.25, 0.9;
  const auto r2 = masked_cosine_loss(a2, b, m);
  EXPECT_LE(test::fd_relative_error(f, a2, r2.grad), 1e-4);
}

TEST(CosineLoss, MaskZeroNormAndEmpty) {
  Eigen::MatrixXd a(3, 2), b(3, 2);
  a << 1, 0, 0, 0, 5, 5;
  b << 1, 0, 1, 1, -1, -1;
  const std::vector<std::uint8_t> m{1, 1, 0};
  const auto r = masked_cosine_loss(a, b, m);
  EXPECT_NEAR(r.loss, 0.5, 1e-15);  // (0 + 1) / 2
  EXPECT_EQ(r.grad.row(1), Eigen::RowVector2d::Zero());
  EXPECT_EQ(r.grad.row(2), Eigen::RowVector2d::Zero());
  const std::vector<std::uint8_t> none{0, 0, 0};
  EXPECT_THROW((void)masked_cosine_loss(a, b, none), EmptyInput);
}

TEST(CosineLoss, RangeAndScaleInvariance) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> s(0.01, 100);
  for (int t = 0; t < 100; ++t) {
    const auto a = test::random_matrix(rng, 20, 4);
    const auto b = test::random_matrix(rng, 20, 4);
    std::vector<std::uint8_t> m(20);
    for (auto& v : m) v = rng() % 2;
    m[0] = 1;
    const double l = masked_cosine_loss(a, b, m).loss;
    EXPECT_GE(l, 0.0);
    EXPECT_LE(l, 2.0);
    EXPECT_NEAR(masked_cosine_loss(s(rng) * a, b, m).loss, l, 1e-9);
    EXPECT_NEAR(masked_cosine_loss(a, s(rng) * b, m).loss, l, 1e-9);
  }
}

TEST(CosineLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto a = test::random_matrix(rng, 6, 3);
    const auto b = test::random_matrix(rng, 6, 3);
    std::vector<std::uint8_t> m(6, 1);
    m[t % 6] = 0;
    const auto r = masked_cosine_loss(a, b, m);
    auto f = [&](const Eigen::MatrixXd& x) { return masked_cosine_loss(x, b, m).loss; };
    EXPECT_LE(test::fd_relative_error(f, a, r.grad), 1e-4);
  }
}

}  // namespace
}  // namespace lmk
