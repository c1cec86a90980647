// Copyright 2026 The qzanneal Authors
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

// Everything in one include.

#pragma once

#include "qzanneal/bench.hpp"
#include "qzanneal/common.hpp"
#include "qzanneal/digitizer.hpp"
#include "qzanneal/dynamics.hpp"
#include "qzanneal/mcts.hpp"
#include "qzanneal/nn.hpp"
#include "qzanneal/qzero.hpp"
#include "qzanneal/sat.hpp"
#include "qzanneal/sat_io.hpp"
#include "qzanneal/schedule.hpp"
#include "qzanneal/sd.hpp"
