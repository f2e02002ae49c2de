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

// lmk: command-line front end for scan mixing, prior statistics, camera
// projection, synthetic datasets and semi-supervised training.
//
// Exit status: 0 success, 1 data or configuration error, 2 usage error.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lmk/lmk.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

std::string real_str(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string frame_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return buf;
}

void write_provenance(const fs::path& path, const std::vector<lmk::Provenance>& prov) {
  std::string out = "index,source,source_index\n";
  for (std::size_t i = 0; i < prov.size(); ++i) {
    out += std::to_string(i) + (prov[i].source == lmk::Source::kScanA ? ",a," : ",b,") +
           std::to_string(prov[i].index) + "\n";
  }
  lmk::io::write_text(path, out);
}

void write_cloud(const fs::path& dir, const std::string& stem, const lmk::PointCloud& cloud) {
  std::optional<fs::path> label;
  if (cloud.has_labels()) label = dir / (stem + ".label");
  lmk::io::write_scan(dir / (stem + ".bin"), cloud, label);
}

lmk::PointCloud load_scan(const std::string& bin, const std::string& label) {
  return lmk::io::read_scan(bin, label.empty() ? std::nullopt : std::optional<fs::path>(label));
}

lmk::BeamPartition partition_for(std::span<const lmk::PointCloud> clouds, std::size_t m,
                                 const std::optional<double>& phi_min, const std::optional<double>& phi_max) {
  if (phi_min.has_value() != phi_max.has_value()) throw lmk::ConfigError("--phi-min and --phi-max go together");
  if (phi_min) return lmk::make_inclination_partition(lmk::deg2rad(*phi_min), lmk::deg2rad(*phi_max), m);
  const auto [lo, hi] = lmk::inclination_extent(clouds);
  if (!(lo < hi)) throw lmk::EmptyInput("scans span no inclination range");
  return lmk::make_inclination_partition(lo, hi, m);
}

// Scans of a dataset directory, painted from image_2/ + calib/ when `paint`.
std::vector<lmk::PointCloud> load_dataset(const fs::path& root, bool paint) {
  const auto entries = lmk::io::list_dataset(root);
  if (entries.empty()) throw lmk::EmptyInput("dataset '" + root.string() + "' has no scans");
  std::vector<lmk::PointCloud> clouds(entries.size());
  lmk::parallel_for(entries.size(), [&](std::size_t i) {
    const auto& e = entries[i];
    lmk::PointCloud cloud = lmk::io::read_scan(e.scan, e.label);
    if (paint) {
      if (!e.image || !e.calib) throw lmk::Error(e.scan.string() + ": no image_2/ or calib/ entry to paint from");
      const auto image = lmk::io::read_image(*e.image);
      const auto calib = lmk::io::read_kitti_calib(*e.calib, image.width, image.height);
      cloud = lmk::paint_points(cloud, image, lmk::project_points(cloud, calib));
    }
    clouds[i] = std::move(cloud);
  });
  return clouds;
}

// ---------------------------------------------------------------------------

struct MixArgs {
  std::string a, a_labels, b, b_labels, strategy = "lasermix", out;
  std::size_t areas = 4;
  std::size_t azimuth = 4;
  double ratio = 0.5;
  double side_min = 5.0;
  double side_max = 20.0;
  std::uint64_t seed = 0;
  std::string drop = "odd";
  std::optional<double> phi_min, phi_max;
};

void run_mix(const MixArgs& args) {
  const auto a = load_scan(args.a, args.a_labels);
  const auto b = load_scan(args.b, args.b_labels);
  fs::create_directories(args.out);
  const fs::path out = args.out;
  const std::vector<lmk::PointCloud> both{a, b};

  if (args.strategy == "concat") {
    write_cloud(out, "mixed", lmk::scene_concat(a, b));
    return;
  }
  if (args.strategy == "cutout") {
    const auto part = partition_for(both, args.areas, args.phi_min, args.phi_max);
    const auto drop = args.drop == "even" ? lmk::Parity::kEven : lmk::Parity::kOdd;
    write_cloud(out, "cut_a", lmk::cutout_area(a, part, drop));
    write_cloud(out, "cut_b", lmk::cutout_area(b, part, drop));
    return;
  }

  lmk::MixOutput mixed;
  if (args.strategy == "lasermix") {
    mixed = lmk::laser_mix(a, b, partition_for(both, args.areas, args.phi_min, args.phi_max));
  } else if (args.strategy == "grid") {
    mixed = lmk::grid_mix(a, b, lmk::GridPartition(partition_for(both, args.areas, args.phi_min, args.phi_max), args.azimuth));
  } else if (args.strategy == "mixup") {
    mixed = lmk::point_mixup(a, b, args.ratio, args.seed);
  } else {
    mixed = lmk::cutmix_area(a, b, lmk::random_box(lmk::bounding_box(a, b), args.side_min, args.side_max, args.seed));
  }
  write_cloud(out, "mixed_a", mixed.mixed_a);
  write_cloud(out, "mixed_b", mixed.mixed_b);
  write_provenance(out / "provenance_a.csv", mixed.provenance_a);
  write_provenance(out / "provenance_b.csv", mixed.provenance_b);
}

// ---------------------------------------------------------------------------

struct StatsArgs {
  std::string data, out;
  std::size_t classes = 0;
  std::size_t areas = 8;
  std::size_t width = 90;
  std::optional<double> phi_min, phi_max;
};

void run_stats(const StatsArgs& args) {
  const auto clouds = load_dataset(args.data, false);
  const auto part = partition_for(clouds, args.areas, args.phi_min, args.phi_max);
  const auto report = lmk::class_area_distribution(clouds, part, args.classes);

  fs::create_directories(args.out);
  const fs::path out = args.out;
  std::string csv = "class,count,proportion";
  for (std::size_t k = 0; k < args.areas; ++k) csv += ",area_" + std::to_string(k);
  csv += "\n";
  for (std::size_t c = 0; c < args.classes; ++c) {
    csv += std::to_string(c) + "," + std::to_string(report.class_counts[c]) + "," + real_str(report.class_proportions[c]);
    for (double v : report.area_distributions[c]) csv += "," + real_str(v);
    csv += "\n";
  }
  lmk::io::write_text(out / "prior_report.csv", csv);
  lmk::io::write_text(out / "entropy.csv", "marginal_entropy,conditional_entropy\n" +
                                                real_str(report.marginal_entropy) + "," +
                                                real_str(report.conditional_entropy) + "\n");

  for (std::size_t c = 0; c < args.classes; ++c) {
    const auto map = lmk::prior_heatmap(clouds, part, static_cast<lmk::Label>(c), args.width, args.classes);
    // highest inclination area on the top image row
    std::vector<double> flipped(map.values.size());
    for (std::size_t r = 0; r < map.height; ++r) {
      for (std::size_t col = 0; col < map.width; ++col) flipped[r * map.width + col] = map.at(map.height - 1 - r, col);
    }
    const auto pgm = lmk::io::encode_pgm(map.width, map.height, flipped);
    lmk::io::write_bytes(out / ("heatmap_class_" + std::to_string(c) + ".pgm"), pgm);
  }
  std::cout << "H(Y) " << real_str(report.marginal_entropy) << "\nH(Y|A) " << real_str(report.conditional_entropy)
            << "\n";
}

// ---------------------------------------------------------------------------

struct ProjectArgs {
  std::string scan, labels, calib, image, out;
};

void run_project(const ProjectArgs& args) {
  const auto cloud = load_scan(args.scan, args.labels);
  const auto image = lmk::io::read_image(args.image);
  const auto calib = lmk::io::read_kitti_calib(args.calib, image.width, image.height);
  const auto corr = lmk::project_points(cloud, calib);
  const auto painted = lmk::paint_points(cloud, image, corr);

  fs::create_directories(args.out);
  const fs::path out = args.out;
  std::string csv = "index,u,v,depth,mask\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    csv += std::to_string(i) + "," + real_str(corr.pixel[i].x()) + "," + real_str(corr.pixel[i].y()) + "," +
           real_str(corr.depth[i]) + "," + std::to_string(corr.mask[i]) + "\n";
  }
  lmk::io::write_text(out / "correspondence.csv", csv);

  // painted scan as a feature map: one row, one pixel per point, channels
  // x, y, z, intensity, image channels, mask
  const auto d = static_cast<std::size_t>(painted.painted_dims());
  lmk::ImagePlane table(painted.size(), 1, 4 + d);
  for (std::size_t i = 0; i < painted.size(); ++i) {
    for (int k = 0; k < 3; ++k) table.at(i, 0, static_cast<std::size_t>(k)) = painted.coords[i][k];
    table.at(i, 0, 3) = painted.intensity[i];
    for (std::size_t j = 0; j < d; ++j) {
      table.at(i, 0, 4 + j) = painted.painted(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  lmk::io::write_bytes(out / "painted.fmap", lmk::io::encode_fmap(table));
  std::cout << corr.valid_count() << " of " << cloud.size() << " points project into the image\n";
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string templ, out, camera = "128x48";
  std::size_t scenes = 10;
  std::uint64_t seed = 0;
  bool no_camera = false;
};

std::pair<std::size_t, std::size_t> parse_size(const std::string& s) {
  const auto x = s.find('x');
  std::size_t w = 0, h = 0;
  if (x == std::string::npos) throw CLI::ValidationError("--camera", "expected WxH");
  const auto rw = std::from_chars(s.data(), s.data() + x, w);
  const auto rh = std::from_chars(s.data() + x + 1, s.data() + s.size(), h);
  if (rw.ec != std::errc() || rw.ptr != s.data() + x || rh.ec != std::errc() || rh.ptr != s.data() + s.size() || w == 0 ||
      h == 0) {
    throw CLI::ValidationError("--camera", "expected WxH with positive integers");
  }
  return {w, h};
}

void run_synth(const SynthArgs& args) {
  const lmk::synth::SceneSpec tmpl =
      args.templ.empty() ? lmk::synth::default_scene() : lmk::io::parse_scene_template(lmk::io::read_key_values(args.templ));
  tmpl.validate();
  std::optional<lmk::CalibrationParams> cam;
  if (!args.no_camera) {
    const auto [w, h] = parse_size(args.camera);
    cam = lmk::synth::forward_camera(w, h);
  }
  const auto frames = lmk::synth::make_frames(tmpl, args.scenes, args.seed, cam);

  const fs::path out = args.out;
  for (const char* dir : {"velodyne", "labels"}) fs::create_directories(out / dir);
  if (cam) {
    fs::create_directories(out / "image_2");
    fs::create_directories(out / "calib");
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string name = frame_name(i);
    lmk::io::write_scan(out / "velodyne" / (name + ".bin"), frames[i].cloud, out / "labels" / (name + ".label"));
    if (frames[i].camera) {
      lmk::io::write_bytes(out / "image_2" / (name + ".ppm"), lmk::io::encode_ppm(frames[i].camera->image));
      lmk::io::write_text(out / "calib" / (name + ".txt"), lmk::io::format_kitti_calib(frames[i].camera->calib));
    }
  }
  std::string protos;
  for (std::size_t c = 0; c < tmpl.classes.size(); ++c) {
    const auto& col = tmpl.classes[c].color;
    protos += std::to_string(c) + " " + real_str(col.x()) + " " + real_str(col.y()) + " " + real_str(col.z()) + "\n";
  }
  lmk::io::write_text(out / "prototypes.txt", protos);
  lmk::io::write_text(out / "template.txt", lmk::io::format_scene_template(tmpl));
  std::cout << "wrote " << frames.size() << " scenes to " << out.string() << "\n";
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config, weights, log;
};

void run_train(const TrainArgs& args) {
  const auto job = lmk::ssl::parse_train_config(lmk::io::read_key_values(args.config));
  const fs::path base = fs::path(args.config).parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  const bool paint = job.config.strategy == lmk::ssl::Strategy::kLaserMixPP;
  const auto train = load_dataset(resolve(job.train_data), paint);
  std::vector<lmk::PointCloud> val;
  if (!job.val_data.empty()) val = load_dataset(resolve(job.val_data), paint);

  std::optional<lmk::ssl::PrototypeScorer> scorer;
  if (paint) {
    if (job.prototypes.empty()) throw lmk::ConfigError("lasermix_pp needs a prototypes file");
    scorer.emplace(lmk::io::read_prototypes(resolve(job.prototypes), job.config.num_classes));
  }

  const auto plan = lmk::ssl::split_frames(train.size(), job.config.ratio, job.config.split, job.config.seed);
  const auto result =
      lmk::ssl::run_semi_supervised(train, plan, job.config, scorer ? &*scorer : nullptr, val);

  lmk::io::write_bytes(args.weights, lmk::io::encode_weights(result.teacher));
  if (!args.log.empty()) {
    std::string csv = "epoch,sup,mix,mt,c2l,lkg,total\n";
    for (std::size_t e = 0; e < result.epochs.size(); ++e) {
      const auto& r = result.epochs[e];
      csv += std::to_string(e) + "," + real_str(r.sup) + "," + real_str(r.mix) + "," + real_str(r.mt) + "," +
             real_str(r.c2l) + "," + real_str(r.lkg) + "," + real_str(r.total) + "\n";
    }
    lmk::io::write_text(args.log, csv);
  }
  std::cout << "labeled " << plan.labeled.size() << " unlabeled " << plan.unlabeled.size() << "\n"
            << "mIoU " << real_str(result.metrics.miou) << "\n";
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string weights, data, out;
};

void run_eval(const EvalArgs& args) {
  const auto model = lmk::io::decode_weights(lmk::io::read_bytes(args.weights));
  lmk::ssl::FeatureSpec spec;
  if (model.dims() < lmk::ssl::FeatureSpec::kGeometric) {
    throw lmk::Error("weights have " + std::to_string(model.dims()) + " feature columns, need at least " +
                     std::to_string(lmk::ssl::FeatureSpec::kGeometric));
  }
  spec.painted_dims = model.dims() - lmk::ssl::FeatureSpec::kGeometric;
  const auto clouds = load_dataset(args.data, spec.painted_dims > 0);
  const auto metrics = lmk::ssl::evaluate(model, spec, clouds);

  std::string csv = "class,iou\n";
  for (std::size_t c = 0; c < metrics.iou.size(); ++c) {
    csv += std::to_string(c) + "," + (metrics.iou[c] ? real_str(*metrics.iou[c]) : std::string("absent")) + "\n";
  }
  csv += "miou," + real_str(metrics.miou) + "\nmacc," + real_str(metrics.macc) + "\n";
  if (args.out.empty()) {
    std::cout << csv;
  } else {
    lmk::io::write_text(args.out, csv);
  }
  char line[64];
  std::snprintf(line, sizeof line, "mIoU %.6f\n", metrics.miou);
  std::cout << line;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR scene mixing and semi-supervised segmentation toolkit"};
  app.require_subcommand(1);

  MixArgs mix;
  auto* mix_cmd = app.add_subcommand("mix", "mix two scans");
  mix_cmd->add_option("--a", mix.a, "first scan (.bin)")->required()->check(CLI::ExistingFile);
  mix_cmd->add_option("--a-labels", mix.a_labels, "labels of the first scan")->check(CLI::ExistingFile);
  mix_cmd->add_option("--b", mix.b, "second scan (.bin)")->required()->check(CLI::ExistingFile);
  mix_cmd->add_option("--b-labels", mix.b_labels, "labels of the second scan")->check(CLI::ExistingFile);
  mix_cmd->add_option("--strategy", mix.strategy)
      ->check(CLI::IsMember({"lasermix", "grid", "mixup", "cutmix", "cutout", "concat"}))
      ->capture_default_str();
  mix_cmd->add_option("--areas", mix.areas, "inclination areas")->check(CLI::PositiveNumber)->capture_default_str();
  mix_cmd->add_option("--azimuth", mix.azimuth, "azimuth sectors (grid)")->check(CLI::PositiveNumber)->capture_default_str();
  mix_cmd->add_option("--ratio", mix.ratio, "mixup ratio")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  mix_cmd->add_option("--side-min", mix.side_min, "cutmix box side, lower bound")->check(CLI::NonNegativeNumber);
  mix_cmd->add_option("--side-max", mix.side_max, "cutmix box side, upper bound")->check(CLI::NonNegativeNumber);
  mix_cmd->add_option("--drop", mix.drop, "area parity removed by cutout")->check(CLI::IsMember({"even", "odd"}));
  mix_cmd->add_option("--phi-min", mix.phi_min, "partition lower inclination, degrees");
  mix_cmd->add_option("--phi-max", mix.phi_max, "partition upper inclination, degrees");
  mix_cmd->add_option("--seed", mix.seed)->capture_default_str();
  mix_cmd->add_option("--out", mix.out, "output directory")->required();

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "class / inclination-area statistics of a dataset");
  stats_cmd->add_option("data", stats.data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  stats_cmd->add_option("--classes", stats.classes)->required()->check(CLI::Range(1, 255));
  stats_cmd->add_option("--areas", stats.areas)->check(CLI::PositiveNumber)->capture_default_str();
  stats_cmd->add_option("--width", stats.width, "heatmap azimuth bins")->check(CLI::PositiveNumber)->capture_default_str();
  stats_cmd->add_option("--phi-min", stats.phi_min, "partition lower inclination, degrees");
  stats_cmd->add_option("--phi-max", stats.phi_max, "partition upper inclination, degrees");
  stats_cmd->add_option("--out", stats.out, "output directory")->required();

  ProjectArgs project;
  auto* project_cmd = app.add_subcommand("project", "project a scan into a camera image and paint it");
  project_cmd->add_option("--scan", project.scan)->required()->check(CLI::ExistingFile);
  project_cmd->add_option("--labels", project.labels)->check(CLI::ExistingFile);
  project_cmd->add_option("--calib", project.calib, "KITTI calibration (P2, Tr)")->required()->check(CLI::ExistingFile);
  project_cmd->add_option("--image", project.image, ".ppm or .fmap")->required()->check(CLI::ExistingFile);
  project_cmd->add_option("--out", project.out, "output directory")->required();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic benchmark directory");
  synth_cmd->add_option("--template", synth.templ, "scene template (built-in street scene if omitted)")
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--scenes", synth.scenes)->check(CLI::PositiveNumber)->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--camera", synth.camera, "camera image size WxH")->capture_default_str();
  synth_cmd->add_flag("--no-camera", synth.no_camera, "skip images and calibration");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "semi-supervised training from a config file");
  train_cmd->add_option("config", train.config)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--weights", train.weights, "teacher weights output (.fmap)")->required();
  train_cmd->add_option("--log", train.log, "per-epoch loss CSV");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "per-class IoU of a weights file on a dataset");
  eval_cmd->add_option("--weights", eval.weights)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval.data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--out", eval.out, "IoU CSV (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*mix_cmd) run_mix(mix);
    if (*stats_cmd) run_stats(stats);
    if (*project_cmd) run_project(project);
    if (*synth_cmd) run_synth(synth);
    if (*train_cmd) run_train(train);
    if (*eval_cmd) run_eval(eval);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "lmk: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "lmk: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
