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
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "lmk/camera.hpp"
#include "lmk/error.hpp"
#include "lmk/geometry.hpp"
#include "lmk/parallel.hpp"
#include "lmk/point_cloud.hpp"

namespace lmk::synth {

/// Horizontal plane z = 0 (world frame).
struct GroundPlane {};

/// Axis-aligned box; `extents` are full side lengths.
struct AxisBox {
  Eigen::Vector3d center;
  Eigen::Vector3d extents;
};

/// Vertical cylinder; `center` is the midpoint of its axis.
struct Cylinder {
  Eigen::Vector3d center;
  double radius;
  double height;
};

using Shape = std::variant<GroundPlane, AxisBox, Cylinder>;

struct Primitive {
  Label label;
  Shape shape;
};

struct ClassStyle {
  std::string name;
  double intensity = 0.5;
  Eigen::Vector3d color = Eigen::Vector3d::Constant(0.5);
};

/// A static scene seen by a rotating multi-beam sensor mounted at
/// (0, 0, sensor_height) in the world frame.
struct SceneSpec {
  double sensor_height = 1.8;
  std::vector<double> beam_inclinations;  // radians, ascending
  std::size_t azimuth_steps = 360;
  std::vector<Primitive> primitives;
  std::vector<ClassStyle> classes;
  double max_range = 60.0;
  std::uint64_t seed = 0;
  Eigen::Vector3d jitter = Eigen::Vector3d::Zero();  // per-axis std, meters
  double intensity_noise = 0.0;
  Eigen::Vector3d sky_color{0.55, 0.75, 1.0};
  double color_noise = 0.0;

  void validate() const {
    if (azimuth_steps < 4) throw InvalidArgument("scene: azimuth_steps must be >= 4");
    if (!(max_range > 0.0)) throw InvalidArgument("scene: max_range must be positive");
    if (!std::is_sorted(beam_inclinations.begin(), beam_inclinations.end())) {
      throw InvalidArgument("scene: beam inclinations must be ascending");
    }
    for (const auto& p : primitives) {
      if (p.label >= classes.size()) throw InvalidArgument("scene: primitive class id without class style");
    }
  }
};

struct Ray {
  Eigen::Vector3d origin;
  Eigen::Vector3d dir;  // unit length
};

inline constexpr double kMinHitDistance = 1e-9;

/// Distance along `ray` to the first intersection with `shape`, if any.
[[nodiscard]] inline std::optional<double> intersect(const Ray& ray, const Shape& shape) {
  const auto& o = ray.origin;
  const auto& d = ray.dir;
  return std::visit(
      [&](const auto& s) -> std::optional<double> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GroundPlane>) {
          if (d.z() >= 0.0) return std::nullopt;
          const double t = -o.z() / d.z();
          return t > kMinHitDistance ? std::optional(t) : std::nullopt;
        } else if constexpr (std::is_same_v<T, AxisBox>) {
          const Eigen::Vector3d lo = s.center - s.extents / 2;
          const Eigen::Vector3d hi = s.center + s.extents / 2;
          double t_in = -std::numeric_limits<double>::infinity();
          double t_out = std::numeric_limits<double>::infinity();
          for (int k = 0; k < 3; ++k) {
            if (d[k] == 0.0) {
              if (o[k] < lo[k] || o[k] > hi[k]) return std::nullopt;
              continue;
            }
            double t0 = (lo[k] - o[k]) / d[k];
            double t1 = (hi[k] - o[k]) / d[k];
            if (t0 > t1) std::swap(t0, t1);
            t_in = std::max(t_in, t0);
            t_out = std::min(t_out, t1);
          }
          if (t_in > t_out) return std::nullopt;
          if (t_in > kMinHitDistance) return t_in;
          if (t_out > kMinHitDistance) return t_out;
          return std::nullopt;
        } else {
          const double z_lo = s.center.z() - s.height / 2;
          const double z_hi = s.center.z() + s.height / 2;
          std::optional<double> best;
          auto consider = [&](double t) {
            if (t > kMinHitDistance && (!best || t < *best)) best = t;
          };
          // lateral surface
          const double ox = o.x() - s.center.x();
          const double oy = o.y() - s.center.y();
          const double a = d.x() * d.x() + d.y() * d.y();
          if (a > 0.0) {
            const double b = 2.0 * (ox * d.x() + oy * d.y());
            const double c = ox * ox + oy * oy - s.radius * s.radius;
            const double disc = b * b - 4.0 * a * c;
            if (disc >= 0.0) {
              const double sq = std::sqrt(disc);
              for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
                const double z = o.z() + t * d.z();
                if (z >= z_lo && z <= z_hi) consider(t);
              }
            }
          }
          // caps
          if (d.z() != 0.0) {
            for (double zc : {z_lo, z_hi}) {
              const double t = (zc - o.z()) / d.z();
              const double px = ox + t * d.x();
              const double py = oy + t * d.y();
              if (px * px + py * py <= s.radius * s.radius) consider(t);
            }
          }
          return best;
        }
      },
      shape);
}

struct Hit {
  double distance;
  std::size_t primitive;
};

/// Nearest primitive hit within `max_range`; ties keep the earlier primitive.
[[nodiscard]] inline std::optional<Hit> cast(const Ray& ray, const std::vector<Primitive>& primitives, double max_range) {
  std::optional<Hit> best;
  for (std::size_t k = 0; k < primitives.size(); ++k) {
    const auto t = intersect(ray, primitives[k].shape);
    if (t && *t <= max_range && (!best || *t < best->distance)) best = Hit{*t, k};
  }
  return best;
}

[[nodiscard]] inline Eigen::Vector3d beam_direction(double inclination, double azimuth) {
  return {std::cos(inclination) * std::cos(azimuth), std::cos(inclination) * std::sin(azimuth), std::sin(inclination)};
}

[[nodiscard]] inline double step_azimuth(std::size_t step, std::size_t steps) {
  return -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(step) / static_cast<double>(steps);
}

/// Casts one ray per (beam, azimuth step). Points come back in the sensor
/// frame (origin at the sensor, so the ground lies at z = -sensor_height),
/// beam-major in ascending inclination. Jitter is added after labeling.
[[nodiscard]] inline PointCloud simulate_scan(const SceneSpec& spec) {
  spec.validate();
  const Eigen::Vector3d origin(0.0, 0.0, spec.sensor_height);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  PointCloud cloud;
  cloud.set_labeled(true);
  for (double phi : spec.beam_inclinations) {
    for (std::size_t k = 0; k < spec.azimuth_steps; ++k) {
      const Ray ray{origin, beam_direction(phi, step_azimuth(k, spec.azimuth_steps))};
      const auto hit = cast(ray, spec.primitives, spec.max_range);
      if (!hit) continue;
      const Label label = spec.primitives[hit->primitive].label;
      Eigen::Vector3d p = ray.dir * hit->distance;
      if (spec.jitter != Eigen::Vector3d::Zero()) {
        for (int a = 0; a < 3; ++a) p[a] += spec.jitter[a] * gauss(rng);
      }
      double intensity = spec.classes[label].intensity;
      if (spec.intensity_noise > 0.0) intensity += spec.intensity_noise * gauss(rng);
      cloud.coords.push_back(p);
      cloud.intensity.push_back(std::clamp(intensity, 0.0, 1.0));
      cloud.labels.push_back(label);
    }
  }
  return cloud;
}

/// Forward-looking camera at the sensor origin with a 90 degree horizontal field
/// of view.
[[nodiscard]] inline CalibrationParams forward_camera(std::size_t width, std::size_t height) {
  CalibrationParams calib;
  const double f = static_cast<double>(width) / 2.0;
  calib.intrinsic << f, 0, static_cast<double>(width) / 2.0, 0, f, static_cast<double>(height) / 2.0, 0, 0, 1;
  calib.extrinsic.setIdentity();
  calib.extrinsic.topLeftCorner<3, 3>() << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  calib.width = width;
  calib.height = height;
  return calib;
}

/// Renders an RGB image of the scene by casting one ray per pixel center;
/// pixels see their primitive's class color plus seeded noise, or the sky.
[[nodiscard]] inline ImagePlane render_image(const SceneSpec& spec, const CalibrationParams& calib) {
  spec.validate();
  calib.validate();
  const Eigen::Matrix3d rot = calib.extrinsic.topLeftCorner<3, 3>();
  const Eigen::Vector3d cam_in_lidar = -rot.transpose() * calib.extrinsic.topRightCorner<3, 1>();
  const Eigen::Matrix3d k_inv = calib.intrinsic.inverse();
  const Eigen::Vector3d origin = cam_in_lidar + Eigen::Vector3d(0.0, 0.0, spec.sensor_height);
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ImagePlane img(calib.width, calib.height, 3);
  for (std::size_t y = 0; y < calib.height; ++y) {
    for (std::size_t x = 0; x < calib.width; ++x) {
      const Eigen::Vector3d dir_cam = k_inv * Eigen::Vector3d(static_cast<double>(x), static_cast<double>(y), 1.0);
      const Ray ray{origin, (rot.transpose() * dir_cam).normalized()};
      const auto hit = cast(ray, spec.primitives, std::numeric_limits<double>::infinity());
      Eigen::Vector3d color = hit ? spec.classes[spec.primitives[hit->primitive].label].color : spec.sky_color;
      for (int c = 0; c < 3; ++c) {
        double v = color[c];
        if (spec.color_noise > 0.0) v += spec.color_noise * gauss(rng);
        img.at(x, y, static_cast<std::size_t>(c)) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return img;
}

/// Scene `index` of a benchmark: each non-ground primitive is rotated about
/// the vertical axis, pushed radially and resized, all from seed + index.
[[nodiscard]] inline SceneSpec perturb_scene(const SceneSpec& tmpl, std::uint64_t seed, std::size_t index) {
  SceneSpec spec = tmpl;
  spec.seed = seed + index;
  std::mt19937_64 rng(spec.seed);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * std::generate_canonical<double, 53>(rng); };
  for (auto& prim : spec.primitives) {
    const double angle = uniform(-std::numbers::pi, std::numbers::pi);
    const double radial = uniform(0.8, 1.25);
    const double size = uniform(0.85, 1.15);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    auto move = [&](Eigen::Vector3d& center, double height) {
      const double x = radial * (c * center.x() - s * center.y());
      const double y = radial * (s * center.x() + c * center.y());
      const double base = center.z() - height / 2;
      center = {x, y, base + size * height / 2};
    };
    if (auto* box = std::get_if<AxisBox>(&prim.shape)) {
      move(box->center, box->extents.z());
      box->extents *= size;
    } else if (auto* cyl = std::get_if<Cylinder>(&prim.shape)) {
      move(cyl->center, cyl->height);
      cyl->radius *= size;
      cyl->height *= size;
    }
  }
  return spec;
}

/// A labeled scan plus, optionally, the synchronized camera frame.
struct Frame {
  PointCloud cloud;
  std::optional<CameraView> camera;
};

/// `num_scenes` perturbed scans of `tmpl`, scene i seeded with seed + i. With a
/// camera, each frame also carries a rendered image.
[[nodiscard]] inline std::vector<Frame> make_frames(const SceneSpec& tmpl, std::size_t num_scenes, std::uint64_t seed,
                                                    const std::optional<CalibrationParams>& camera = std::nullopt) {
  std::vector<Frame> frames(num_scenes);
  parallel_for(num_scenes, [&](std::size_t i) {
    const SceneSpec spec = perturb_scene(tmpl, seed, i);
    frames[i].cloud = simulate_scan(spec);
    if (camera) frames[i].camera = CameraView{*camera, render_image(spec, *camera)};
  });
  return frames;
}

[[nodiscard]] inline std::vector<PointCloud> make_benchmark(const SceneSpec& tmpl, std::size_t num_scenes,
                                                            std::uint64_t seed) {
  auto frames = make_frames(tmpl, num_scenes, seed);
  std::vector<PointCloud> clouds;
  clouds.reserve(frames.size());
  for (auto& f : frames) clouds.push_back(std::move(f.cloud));
  return clouds;
}

/// Street scene with road, cars, buildings, poles and vegetation seen by
/// eight beams spaced 3 degrees apart.
[[nodiscard]] inline SceneSpec default_scene() {
  SceneSpec spec;
  spec.sensor_height = 1.8;
  for (int k = 0; k < 8; ++k) spec.beam_inclinations.push_back(deg2rad(-16.0 + 3.0 * k));
  spec.azimuth_steps = 360;
  spec.max_range = 60.0;
  spec.intensity_noise = 0.12;
  spec.color_noise = 0.08;
  spec.classes = {
      {"road", 0.15, {0.35, 0.35, 0.38}},
      {"car", 0.60, {0.85, 0.15, 0.15}},
      {"building", 0.35, {0.80, 0.70, 0.50}},
      {"pole", 0.80, {0.90, 0.90, 0.10}},
      {"vegetation", 0.45, {0.10, 0.65, 0.20}},
  };
  spec.primitives.push_back({0, GroundPlane{}});
  const double tau = 2.0 * std::numbers::pi;
  for (int k = 0; k < 6; ++k) {
    const double a = tau * k / 6.0 + 0.3;
    const double r = 8.0 + 1.5 * k;
    spec.primitives.push_back({1, AxisBox{{r * std::cos(a), r * std::sin(a), 0.75}, {4.2, 1.8, 1.5}}});
  }
  for (int k = 0; k < 5; ++k) {
    const double a = tau * k / 5.0;
    const double r = 30.0 + 3.0 * k;
    spec.primitives.push_back({2, AxisBox{{r * std::cos(a), r * std::sin(a), 7.0}, {12.0, 10.0, 14.0}}});
  }
  for (int k = 0; k < 6; ++k) {
    const double a = tau * k / 6.0 + 0.8;
    const double r = 6.0 + 2.0 * k;
    spec.primitives.push_back({3, Cylinder{{r * std::cos(a), r * std::sin(a), 3.5}, 0.2, 7.0}});
  }
  for (int k = 0; k < 5; ++k) {
    const double a = tau * k / 5.0 + 1.9;
    const double r = 14.0 + 2.5 * k;
    spec.primitives.push_back({4, Cylinder{{r * std::cos(a), r * std::sin(a), 2.5}, 1.6, 5.0}});
  }
  return spec;
}

}  // namespace lmk::synth
