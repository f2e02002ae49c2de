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
#include <set>
#include <sstream>
#include <string>

#include "lmk/error.hpp"
#include "lmk/geometry.hpp"
#include "lmk/io.hpp"
#include "lmk/synth.hpp"

namespace lmk::io {

namespace detail {

inline Eigen::Vector3d vec3(const KeyValueSection& s, const std::string& key) {
  const auto v = s.get(key);
  if (!v) throw ConfigError("[" + s.name + "] on line " + std::to_string(s.line) + " lacks '" + key + "'");
  const auto r = parse_reals(*v, key);
  if (r.size() != 3) throw ConfigError("key '" + key + "' expects three numbers");
  return {r[0], r[1], r[2]};
}

inline double real(const KeyValueSection& s, const std::string& key) {
  const auto v = s.get(key);
  if (!v) throw ConfigError("[" + s.name + "] on line " + std::to_string(s.line) + " lacks '" + key + "'");
  return parse_real(*v, key);
}

inline void reject_unknown(const KeyValueSection& s, const std::set<std::string>& known) {
  for (const auto& [k, v] : s.values) {
    if (!known.count(k)) throw ConfigError("unknown key '" + k + "'" + (s.name.empty() ? "" : " in [" + s.name + "]"));
  }
}

}  // namespace detail

/// Scene template: global sensor keys, then [class], [ground], [box] and
/// [cylinder] sections. Angles are given in degrees.
[[nodiscard]] inline synth::SceneSpec parse_scene_template(const KeyValueDoc& doc) {
  synth::SceneSpec spec;
  const auto& g = doc.global;
  detail::reject_unknown(g, {"sensor_height", "beam_inclinations_deg", "azimuth_steps", "max_range", "seed", "jitter",
                             "intensity_noise", "color_noise", "sky_color"});
  if (auto v = g.get("sensor_height")) spec.sensor_height = parse_real(*v, "sensor_height");
  if (auto v = g.get("beam_inclinations_deg")) {
    for (double d : parse_reals(*v, "beam_inclinations_deg")) spec.beam_inclinations.push_back(deg2rad(d));
  }
  if (auto v = g.get("azimuth_steps")) spec.azimuth_steps = parse_count(*v, "azimuth_steps");
  if (auto v = g.get("max_range")) spec.max_range = parse_real(*v, "max_range");
  if (auto v = g.get("seed")) spec.seed = parse_count(*v, "seed");
  if (g.get("jitter")) spec.jitter = detail::vec3(g, "jitter");
  if (auto v = g.get("intensity_noise")) spec.intensity_noise = parse_real(*v, "intensity_noise");
  if (auto v = g.get("color_noise")) spec.color_noise = parse_real(*v, "color_noise");
  if (g.get("sky_color")) spec.sky_color = detail::vec3(g, "sky_color");

  for (const auto& s : doc.sections) {
    if (s.name == "class") {
      detail::reject_unknown(s, {"id", "name", "intensity", "color"});
      const auto id = static_cast<std::size_t>(parse_count(s.get("id").value_or(""), "id"));
      if (spec.classes.size() <= id) spec.classes.resize(id + 1);
      auto& style = spec.classes[id];
      style.name = s.get("name").value_or("class" + std::to_string(id));
      style.intensity = detail::real(s, "intensity");
      style.color = detail::vec3(s, "color");
      continue;
    }
    const auto label = static_cast<Label>(parse_count(s.get("class").value_or(""), "class"));
    if (s.name == "ground") {
      detail::reject_unknown(s, {"class"});
      spec.primitives.push_back({label, synth::GroundPlane{}});
    } else if (s.name == "box") {
      detail::reject_unknown(s, {"class", "center", "extents"});
      spec.primitives.push_back({label, synth::AxisBox{detail::vec3(s, "center"), detail::vec3(s, "extents")}});
    } else if (s.name == "cylinder") {
      detail::reject_unknown(s, {"class", "center", "radius", "height"});
      spec.primitives.push_back(
          {label, synth::Cylinder{detail::vec3(s, "center"), detail::real(s, "radius"), detail::real(s, "height")}});
    } else {
      throw ConfigError("unknown section [" + s.name + "] on line " + std::to_string(s.line));
    }
  }
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

[[nodiscard]] inline std::string format_scene_template(const synth::SceneSpec& spec) {
  std::ostringstream out;
  out.precision(10);
  auto v3 = [&](const Eigen::Vector3d& v) { out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n'; };
  out << "sensor_height = " << spec.sensor_height << "\nbeam_inclinations_deg =";
  for (double b : spec.beam_inclinations) out << ' ' << rad2deg(b);
  out << "\nazimuth_steps = " << spec.azimuth_steps << "\nmax_range = " << spec.max_range << "\nseed = " << spec.seed
      << "\nintensity_noise = " << spec.intensity_noise << "\ncolor_noise = " << spec.color_noise << "\njitter = ";
  v3(spec.jitter);
  out << "sky_color = ";
  v3(spec.sky_color);
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    out << "\n[class]\nid = " << c << "\nname = " << spec.classes[c].name << "\nintensity = " << spec.classes[c].intensity
        << "\ncolor = ";
    v3(spec.classes[c].color);
  }
  for (const auto& p : spec.primitives) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, synth::GroundPlane>) {
            out << "\n[ground]\nclass = " << p.label << '\n';
          } else if constexpr (std::is_same_v<T, synth::AxisBox>) {
            out << "\n[box]\nclass = " << p.label << "\ncenter = ";
            v3(s.center);
            out << "extents = ";
            v3(s.extents);
          } else {
            out << "\n[cylinder]\nclass = " << p.label << "\ncenter = ";
            v3(s.center);
            out << "radius = " << s.radius << "\nheight = " << s.height << '\n';
          }
        },
        p.shape);
  }
  return out.str();
}

}  // namespace lmk::io
