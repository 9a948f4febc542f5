// Copyright 2026 The sunac-cpp Authors
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

#include "sunac/analysis.hpp"
#include "sunac/assignment.hpp"
#include "sunac/audio.hpp"
#include "sunac/codec.hpp"
#include "sunac/config.hpp"
#include "sunac/error.hpp"
#include "sunac/extractor.hpp"
#include "sunac/fixtures.hpp"
#include "sunac/io.hpp"
#include "sunac/numerics.hpp"
#include "sunac/pipeline.hpp"
#include "sunac/rng.hpp"
#include "sunac/rvq.hpp"
#include "sunac/spectral.hpp"
#include "sunac/stream.hpp"
#include "sunac/tensor.hpp"
#include "sunac/weights.hpp"
