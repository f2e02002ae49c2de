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


// Acceptance suite. Prints one PASS/FAIL line per criterion.
//
// Exit status is 0 when the set of failing criteria is exactly the set named
// with --expect-fail (empty by default), so a criterion known to be out of
// reach still prints FAIL with its numbers while ctest flags any change.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "support.hpp"

namespace {

using namespace lmk;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome conservation_and_involution() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<std::size_t> size(0, 300), areas(1, 8), sectors(1, 12);
  std::size_t violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto a = test::random_cloud(rng, size(rng), 5, 3);
    const auto b = test::random_cloud(rng, size(rng), 5, 3);
    const auto pooled = test::multiset({&a, &b});
    auto conserved = [&](const MixOutput& o) { return test::multiset({&o.mixed_a, &o.mixed_b}) == pooled; };

    const auto part = make_inclination_partition(-0.45, 0.45, areas(rng));
    const auto lm = laser_mix(a, b, part);
    violations += !conserved(lm);
    const auto back = laser_mix(lm.mixed_a, lm.mixed_b, part);
    violations += !test::same_multiset(back.mixed_a, a) || !test::same_multiset(back.mixed_b, b);
    violations += !conserved(multi_modal_laser_mix(a, b, part));
    violations += !conserved(grid_mix(a, b, GridPartition(part, sectors(rng))));
    violations += !conserved(point_mixup(a, b, std::uniform_real_distribution<double>(0, 1)(rng), rng()));
    violations += !conserved(cutmix_area(a, b, random_box(bounding_box(a, b), 5, 40, rng())));
    const auto even = cutout_area(a, part, Parity::kEven);
    const auto odd = cutout_area(a, part, Parity::kOdd);
    violations += test::multiset({&even, &odd}) != test::multiset({&a});
    const auto both = scene_concat(a, b);
    violations += test::multiset({&both}) != pooled;
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 30.0, fmt("1000 pairs, %zu violations, %.1f s (limit 30 s)", violations, secs)};
}

// ---------------------------------------------------------------------------

std::size_t brute_area(double phi, const std::vector<double>& b) {
  const std::size_t m = b.size() - 1;
  if (phi < b[0]) return 0;
  if (phi >= b[m]) return m - 1;
  for (std::size_t k = 0; k < m; ++k) {
    if (phi >= b[k] && phi < b[k + 1]) return k;
  }
  return m - 1;
}

std::size_t brute_sector(double alpha, std::size_t s) {
  for (std::size_t k = 0; k + 1 < s; ++k) {
    const double hi = -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(k + 1) / static_cast<double>(s);
    if (alpha < hi) return k;
  }
  return s - 1;
}

Outcome partition_oracle() {
  std::mt19937_64 rng(7);
  std::size_t mismatches = 0, points = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = 1 + rng() % 10, s = 1 + rng() % 16;
    std::uniform_real_distribution<double> lo(-0.6, -0.1), span(0.05, 0.9);
    const double a = lo(rng);
    const auto part = make_inclination_partition(a, a + span(rng), m);
    const GridPartition grid(part, s);
    const auto cloud = test::random_cloud(rng, 100);
    const auto areas = assign_areas(cloud, part);
    const auto cells = assign_grid_areas(cloud, grid);
    for (std::size_t i = 0; i < cloud.size(); ++i, ++points) {
      const auto& p = cloud.coords[i];
      const double phi = std::atan2(p.z(), std::hypot(p.x(), p.y()));
      double alpha = std::atan2(p.y(), p.x());
      if (alpha >= std::numbers::pi) alpha = -std::numbers::pi;
      const std::size_t k = brute_area(phi, part.bounds());
      mismatches += areas[i] != k;
      mismatches += cells[i] != brute_sector(alpha, s) * m + k;
    }
  }
  return {mismatches == 0, fmt("%zu points, %zu mismatches", points, mismatches)};
}

// ---------------------------------------------------------------------------

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Vector4d q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Outcome projection_contract() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> f(20, 400), c(0, 1), t(-3, 3);
  std::size_t violations = 0, points = 0, valid = 0;
  for (int k = 0; k < 1000; ++k) {
    CalibrationParams calib;
    calib.width = 16 + rng() % 512;
    calib.height = 16 + rng() % 256;
    calib.intrinsic << f(rng), 0, c(rng) * calib.width, 0, f(rng), c(rng) * calib.height, 0, 0, 1;
    calib.extrinsic.topLeftCorner<3, 3>() = random_rotation(rng);
    calib.extrinsic.topRightCorner<3, 1>() << t(rng), t(rng), t(rng);
    const auto cloud = test::random_cloud(rng, 10);
    const auto corr = project_points(cloud, calib);
    for (std::size_t i = 0; i < cloud.size(); ++i, ++points) {
      if (!corr.mask[i]) continue;
      ++valid;
      const auto& px = corr.pixel[i];
      const bool ok = corr.depth[i] > 0.0 && px.x() >= 0.0 && px.x() < static_cast<double>(calib.width) &&
                      px.y() >= 0.0 && px.y() < static_cast<double>(calib.height);
      violations += !ok;
    }
  }
  // hand cases: principal-point ray and the LiDAR -> camera axis swap
  CalibrationParams pin;
  pin.intrinsic << 100, 0, 64, 0, 100, 32, 0, 0, 1;
  pin.width = 128;
  pin.height = 64;
  auto rot = pin;
  rot.extrinsic.topLeftCorner<3, 3>() << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  const auto a = project_points(test::make_cloud({{0, 0, 2}}), pin);
  const auto b = project_points(test::make_cloud({{10, 0, 0}, {10, 1, 0.5}}), rot);
  double err = 0.0;
  err = std::max(err, (a.pixel[0] - Eigen::Vector2d(64, 32)).cwiseAbs().maxCoeff());
  err = std::max(err, (b.pixel[0] - Eigen::Vector2d(64, 32)).cwiseAbs().maxCoeff());
  err = std::max(err, (b.pixel[1] - Eigen::Vector2d(54, 27)).cwiseAbs().maxCoeff());
  const bool hand = err <= 1e-6 && a.mask[0] && b.mask[0] && b.mask[1];
  return {violations == 0 && hand,
          fmt("%zu fuzzed points (%zu in view), %zu violations; hand cases max error %.2e px (limit 1e-6)", points, valid,
              violations, err)};
}

// ---------------------------------------------------------------------------

Outcome entropy_suite() {
  double worst_uniform = 0.0, worst_onehot = 0.0;
  for (std::size_t c = 2; c <= 20; ++c) {
    const Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(7, static_cast<Eigen::Index>(c), 1.0 / static_cast<double>(c));
    const std::vector<std::size_t> areas{0, 1, 1, 2, 2, 2, 0};
    worst_uniform = std::max(worst_uniform, std::abs(empirical_conditional_entropy(uniform, areas, 3) - std::log(c)));
    std::vector<Label> labels;
    std::vector<std::size_t> label_areas;
    for (std::size_t k = 0; k < c; ++k) {
      labels.push_back(static_cast<Label>(k));
      label_areas.push_back(0);
    }
    worst_uniform = std::max(worst_uniform, std::abs(label_entropy_given_areas(labels, label_areas, 1, c).marginal - std::log(c)));
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(7, static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < 7; ++i) onehot(i, i % static_cast<Eigen::Index>(c)) = 1.0;
    worst_onehot = std::max(worst_onehot, std::abs(empirical_conditional_entropy(onehot, areas, 3)));
  }
  std::mt19937_64 rng(5);
  std::size_t increases = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng() % 500, m = 1 + rng() % 8, c = 1 + rng() % 10;
    std::vector<Label> labels(n);
    std::vector<std::size_t> areas(n);
    for (std::size_t i = 0; i < n; ++i) {
      areas[i] = rng() % m;
      labels[i] = static_cast<Label>(rng() % 2 ? (areas[i] * 3) % c : rng() % c);
    }
    const auto h = label_entropy_given_areas(labels, areas, m, c);
    increases += h.conditional > h.marginal + 1e-12;
  }
  const std::vector<Label> hl{0, 1, 2, 2};
  const std::vector<std::size_t> ha{0, 0, 1, 1};
  const auto h = label_entropy_given_areas(hl, ha, 2, 3);
  const bool hand = std::abs(h.marginal - 1.0397) <= 1e-3 && std::abs(h.conditional - 0.3466) <= 1e-3;
  return {worst_uniform <= 1e-9 && worst_onehot == 0.0 && increases == 0 && hand,
          fmt("uniform |H - ln C| max %.1e (limit 1e-9), one-hot max %.1e, H(Y|A) > H(Y) in %zu/100, "
              "hand case %.4f/%.4f (want 1.0397/0.3466 +-1e-3)",
              worst_uniform, worst_onehot, increases, h.marginal, h.conditional)};
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  using namespace lmk::ssl;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(13);
  double worst[4] = {0, 0, 0, 0};
  const int instances = 100;
  for (int t = 0; t < instances; ++t) {
    const Eigen::Index n = 4 + static_cast<Eigen::Index>(rng() % 8), c = 2 + static_cast<Eigen::Index>(rng() % 6);
    // D >= 2: in one dimension the cosine is a constant +-1 and its gradient is zero
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng() % 6);
    const auto z = test::random_matrix(rng, n, c, 2.0);
    std::vector<Label> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = static_cast<Label>(rng() % static_cast<std::uint64_t>(c));
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n));
    for (auto& m : mask) m = rng() % 4 != 0;
    mask[0] = 1;

    auto ce = [&](const Eigen::MatrixXd& x) { return cross_entropy_loss(softmax(x), y).value; };
    worst[0] = std::max(worst[0], test::fd_relative_error(ce, z, cross_entropy_loss(softmax(z), y).grad_logits));

    const Eigen::MatrixXd q = softmax(test::random_matrix(rng, n, c, 2.0));
    auto mt = [&](const Eigen::MatrixXd& x) { return mean_teacher_loss(softmax(x), q).value; };
    worst[1] = std::max(worst[1], test::fd_relative_error(mt, z, mean_teacher_loss(softmax(z), q).grad_logits));

    const auto proj = test::random_matrix(rng, d, c, 0.5);
    const auto img = test::random_matrix(rng, n, d);
    const auto r = c2l_loss(z, proj, img, mask);
    auto c2l_z = [&](const Eigen::MatrixXd& x) { return c2l_loss(x, proj, img, mask).value; };
    auto c2l_p = [&](const Eigen::MatrixXd& x) { return c2l_loss(z, x, img, mask).value; };
    worst[2] = std::max({worst[2], test::fd_relative_error(c2l_z, z, r.grad_logits),
                         test::fd_relative_error(c2l_p, proj, r.grad_projection)});

    const auto s = test::random_matrix(rng, n, c);
    auto lkg = [&](const Eigen::MatrixXd& x) { return lkg_loss(x, s, mask).value; };
    worst[3] = std::max(worst[3], test::fd_relative_error(lkg, z, lkg_loss(z, s, mask).grad_logits));
  }
  const double secs = seconds_since(t0);
  const bool ok = *std::max_element(worst, worst + 4) <= 1e-4 && secs < 60.0;
  return {ok, fmt("%d instances each, max relative error CE %.1e, MT %.1e, c2l %.1e, lkg %.1e (limit 1e-4, step 1e-5), "
                  "%.1f s (limit 60 s)",
                  instances, worst[0], worst[1], worst[2], worst[3], secs)};
}

// ---------------------------------------------------------------------------

Outcome ema_exactness() {
  std::mt19937_64 rng(17);
  double worst = 0.0;
  for (double alpha : {0.0, 0.5, 0.9, 0.99, 0.999}) {
    const ssl::ModelParams w{test::random_matrix(rng, 5, 8), test::random_matrix(rng, 5, 1), test::random_matrix(rng, 3, 5)};
    const ssl::ModelParams t0{test::random_matrix(rng, 5, 8), test::random_matrix(rng, 5, 1), test::random_matrix(rng, 3, 5)};
    auto t = t0;
    for (int k = 1; k <= 100; ++k) {
      t = ssl::ema_update(t, w, alpha);
      const double ak = std::pow(alpha, k);
      auto check = [&](const Eigen::MatrixXd& tk, const Eigen::MatrixXd& wk, const Eigen::MatrixXd& t0k) {
        const Eigen::ArrayXXd lhs = (tk - wk).array().abs();
        const Eigen::ArrayXXd rhs = ak * (t0k - wk).array().abs();
        // relative to the magnitudes involved: a few ulps per update
        const double scale = std::max({1.0, t0k.cwiseAbs().maxCoeff(), wk.cwiseAbs().maxCoeff()});
        worst = std::max(worst, (lhs - rhs).abs().maxCoeff() / scale);
      };
      check(t.weights, w.weights, t0.weights);
      check(t.bias, w.bias, t0.bias);
      check(t.projection, w.projection, t0.projection);
    }
  }
  const double limit = 1e-13;
  return {worst <= limit, fmt("k <= 100, alpha in {0, .5, .9, .99, .999}, max deviation %.1e (limit %.0e)", worst, limit)};
}

// ---------------------------------------------------------------------------

Outcome spatial_prior() {
  const auto t0 = Clock::now();
  const auto tmpl = synth::default_scene();
  const auto frames = synth::make_benchmark(tmpl, 50, 1000);
  const auto [lo, hi] = inclination_extent(frames);
  const auto report = class_area_distribution(frames, make_inclination_partition(lo, hi, 8), tmpl.classes.size());
  const double secs = seconds_since(t0);
  const double gap = report.marginal_entropy - report.conditional_entropy;
  const bool ok = tmpl.classes.size() >= 4 && tmpl.beam_inclinations.size() == 8 && gap > 0.1 && secs < 60.0;
  return {ok, fmt("50 scenes, %zu classes, 8 beams: H(Y) %.4f, H(Y|A) %.4f, gap %.4f nat (need > 0.1), %.1f s",
                  tmpl.classes.size(), report.marginal_entropy, report.conditional_entropy, gap, secs)};
}

// ---------------------------------------------------------------------------

Outcome ssl_uplift() {
  using namespace lmk::ssl;
  const auto t0 = Clock::now();
  const auto tmpl = synth::default_scene();
  const auto cam = synth::forward_camera(128, 48);
  Eigen::MatrixXd protos(static_cast<Eigen::Index>(tmpl.classes.size()), 3);
  for (std::size_t c = 0; c < tmpl.classes.size(); ++c) protos.row(static_cast<Eigen::Index>(c)) = tmpl.classes[c].color.transpose();
  const PrototypeScorer scorer(protos);
  const Strategy strategies[3] = {Strategy::kSupOnly, Strategy::kLaserMix, Strategy::kLaserMixPP};
  constexpr std::size_t kSeeds = 5;

  auto painted = [&](std::uint64_t seed, std::size_t n) {
    std::vector<PointCloud> out;
    for (auto& f : synth::make_frames(tmpl, n, seed, cam)) {
      out.push_back(paint_points(f.cloud, f.camera->image, project_points(f.cloud, cam)));
    }
    return out;
  };
  std::vector<std::vector<PointCloud>> train(kSeeds), val(kSeeds);
  for (std::size_t s = 0; s < kSeeds; ++s) {
    train[s] = painted(1000 * (s + 1), 200);
    val[s] = painted(1000 * (s + 1) + 500, 50);
  }
  double miou[kSeeds][3] = {};
  parallel_for(kSeeds * 3, [&](std::size_t job) {
    const std::size_t s = job / 3, k = job % 3;
    TrainConfig cfg;  // default weights, T = 0.9, alpha = 0.99
    cfg.num_classes = tmpl.classes.size();
    cfg.seed = s + 1;
    cfg.strategy = strategies[k];
    const auto plan = split_frames(200, 0.05, SplitStrategy::kUniform, cfg.seed);
    miou[s][k] = run_semi_supervised(train[s], plan, cfg, &scorer, val[s]).metrics.miou;
  });
  double mean[3] = {};
  std::ostringstream per_seed;
  for (std::size_t s = 0; s < kSeeds; ++s) {
    per_seed << fmt(" [seed %zu: %.2f/%.2f/%.2f]", s + 1, 100 * miou[s][0], 100 * miou[s][1], 100 * miou[s][2]);
    for (int k = 0; k < 3; ++k) mean[k] += 100.0 * miou[s][k] / kSeeds;
  }
  const double secs = seconds_since(t0);
  const bool uplift = mean[1] >= mean[0] + 2.0;
  const bool keep = mean[2] >= mean[1] - 0.5;
  return {uplift && keep && secs < 600.0,
          fmt("val mIoU over 5 seeds: SUP_ONLY %.2f, LASERMIX %.2f (%+.2f, need >= +2.00: %s), LASERMIX_PP %.2f "
              "(%+.2f vs LASERMIX, need >= -0.50: %s), %.0f s (limit 600 s);",
              mean[0], mean[1], mean[1] - mean[0], uplift ? "met" : "NOT met", mean[2], mean[2] - mean[1],
              keep ? "met" : "NOT met", secs) +
              per_seed.str()};
}

// ---------------------------------------------------------------------------

int run_cli(const std::string& args) {
  const int status = std::system((std::string(LMK_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  const auto dir = test::temp_dir("acceptance_determinism");
  const std::string d = "'" + dir.string() + "'";
  bool ok = run_cli("synth --scenes 12 --seed 3 --out " + d + "/data") == 0;
  io::write_text(dir / "train.cfg",
                 "train_data = data\nnum_classes = 5\nratio = 0.25\nepochs = 3\nseed = 9\nstrategy = lasermix_pp\n"
                 "prototypes = " + std::string(LMK_DATA_DIR) + "/prototypes.txt\n");
  std::size_t compared = 0, differing = 0;
  for (int k = 0; k < 2 && ok; ++k) {
    const std::string o = d + "/run" + std::to_string(k);
    ok = run_cli("train " + d + "/train.cfg --weights " + o + "_w.fmap --log " + o + "_log.csv") == 0;
    for (const char* strategy : {"lasermix", "grid", "mixup", "cutmix", "cutout", "concat"}) {
      ok = ok && run_cli(std::string("mix --strategy ") + strategy + " --a " + d + "/data/velodyne/000000.bin --a-labels " +
                         d + "/data/labels/000000.label --b " + d + "/data/velodyne/000001.bin --b-labels " + d +
                         "/data/labels/000001.label --seed 5 --out " + o + "_" + strategy) == 0;
    }
  }
  if (!ok) return {false, "a CLI run failed"};
  auto same = [&](const std::filesystem::path& a, const std::filesystem::path& b) {
    ++compared;
    differing += io::read_bytes(a) != io::read_bytes(b);
  };
  same(dir / "run0_w.fmap", dir / "run1_w.fmap");
  same(dir / "run0_log.csv", dir / "run1_log.csv");
  for (const char* strategy : {"lasermix", "grid", "mixup", "cutmix", "cutout", "concat"}) {
    for (const auto& e : std::filesystem::directory_iterator(dir / (std::string("run0_") + strategy))) {
      same(e.path(), dir / (std::string("run1_") + strategy) / e.path().filename());
    }
  }
  return {differing == 0 && compared > 10, fmt("%zu output files compared across reruns, %zu differ", compared, differing)};
}

// ---------------------------------------------------------------------------

template <typename F>
bool rejects_at(F&& f, std::uint64_t offset) {
  try {
    f();
  } catch (const FormatError& e) {
    return e.offset() == offset && std::string(e.what()).find("offset " + std::to_string(offset)) != std::string::npos;
  }
  return false;
}

Outcome io_round_trips() {
  using Bytes = std::vector<unsigned char>;
  const Bytes points{0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x00, 0x40, 0x00, 0x00, 0x40, 0x40, 0x00, 0x00, 0x00, 0x3F,
                     0x00, 0x00, 0xC0, 0xBF, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x80, 0x3E, 0x00, 0x00, 0x80, 0x3F};
  const Bytes labels{0x01, 0x00, 0x07, 0x00, 0x02, 0x00, 0x00, 0x00};
  const Bytes fmap{'F', 'M', 'A', 'P', 2, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0x00, 0x00, 0xC0, 0x3F, 0x00, 0x00, 0x00, 0xC0};
  const auto dir = test::temp_dir("acceptance_io");
  std::size_t trips = 0, broken = 0;
  auto trip = [&](bool ok) { ++trips; broken += !ok; };

  io::write_bytes(dir / "a.bin", points);
  io::write_bytes(dir / "a.label", labels);
  const auto scan = io::read_scan(dir / "a.bin", dir / "a.label");
  trip(scan.coords[1] == Eigen::Vector3d(-1.5, 0, 0.25) && scan.labels[0] == 1 && scan.instances[0] == 7);
  io::write_scan(dir / "b.bin", scan, dir / "b.label");
  trip(io::read_bytes(dir / "b.bin") == points && io::read_bytes(dir / "b.label") == labels);
  io::write_bytes(dir / "e.bin", Bytes{});
  io::write_scan(dir / "f.bin", io::read_scan(dir / "e.bin"));
  trip(io::read_bytes(dir / "f.bin").empty());
  io::write_bytes(dir / "m.fmap", fmap);
  const auto img = io::read_image(dir / "m.fmap");
  trip(img.data == std::vector<double>{1.5, -2.0});
  trip(io::encode_fmap(img) == fmap);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    Bytes p(16 * (rng() % 64));
    for (std::size_t i = 0; i < p.size(); i += 4) {
      const float v = static_cast<float>(std::uniform_real_distribution<double>(-80, 80)(rng));
      std::memcpy(p.data() + i, &v, 4);
    }
    trip(io::encode_points(io::decode_scan(p)) == p);
  }

  std::size_t rejected = 0, malformed = 0;
  auto reject = [&](bool ok) { ++malformed; rejected += ok; };
  reject(rejects_at([] { (void)io::decode_scan(Bytes(17, 0)); }, 16));
  reject(rejects_at([&] { (void)io::decode_scan(points, std::span<const unsigned char>(labels.data(), 4)); }, 4));
  Bytes magic = fmap;
  magic[3] = 'Q';
  reject(rejects_at([&] { (void)io::decode_fmap(magic); }, 0));
  reject(rejects_at([&] { (void)io::decode_fmap(Bytes(fmap.begin(), fmap.end() - 2)); }, 22));
  Bytes trailing = fmap;
  trailing.push_back(0);
  reject(rejects_at([&] { (void)io::decode_fmap(trailing); }, 24));
  reject(rejects_at([] { (void)io::decode_ppm(Bytes{'P', '5'}); }, 0));
  reject(rejects_at([] { (void)io::parse_key_values("a = 1\nnonsense\n"); }, 6));
  reject(rejects_at([] { (void)io::parse_kitti_calib("P2: 1 2\n", 4, 4); }, 0));
  return {broken == 0 && rejected == malformed,
          fmt("%zu round trips, %zu broken; %zu/%zu malformed fixtures rejected at the expected offset", trips, broken,
              rejected, malformed)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> expected_failures;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--expect-fail") == 0 && i + 1 < argc) {
      expected_failures.insert(argv[++i]);
    } else {
      std::cerr << "usage: lmk_acceptance [--expect-fail NAME]...\n";
      return 2;
    }
  }
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"conservation_involution", conservation_and_involution},
      {"partition_oracle", partition_oracle},
      {"projection_contract", projection_contract},
      {"entropy_suite", entropy_suite},
      {"gradient_suite", gradient_suite},
      {"ema_exactness", ema_exactness},
      {"spatial_prior", spatial_prior},
      {"ssl_uplift", ssl_uplift},
      {"determinism", determinism},
      {"io_round_trips", io_round_trips},
  };
  std::set<std::string> failed;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) failed.insert(c.name);
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << std::endl;
  }
  std::cout << failed.size() << " of " << std::size(criteria) << " criteria failed";
  if (!expected_failures.empty()) {
    std::cout << "; expected to fail:";
    for (const auto& n : expected_failures) std::cout << ' ' << n;
  }
  std::cout << std::endl;
  return failed == expected_failures ? 0 : 1;
}
