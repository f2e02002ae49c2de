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

#include "lmk/camera.hpp"
#include "lmk/error.hpp"
#include "lmk/geometry.hpp"
#include "lmk/io.hpp"
#include "lmk/mixing.hpp"
#include "lmk/parallel.hpp"
#include "lmk/point_cloud.hpp"
#include "lmk/priors.hpp"
#include "lmk/scene_template.hpp"
#include "lmk/ssl/config.hpp"
#include "lmk/ssl/losses.hpp"
#include "lmk/ssl/metrics.hpp"
#include "lmk/ssl/model.hpp"
#include "lmk/ssl/split.hpp"
#include "lmk/ssl/trainer.hpp"
#include "lmk/synth.hpp"
