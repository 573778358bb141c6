// SPDX-License-Identifier: Apache-2.0
//
// pincast — pinched-waveguide antenna array simulator and max-min rate optimizer
// Copyright (C) 2026 pincast contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef PINCAST_BASELINES_HPP
#define PINCAST_BASELINES_HPP

#include "pincast/optim.hpp"

#include <string>

namespace pincast::baselines {

// The comparison schemes. Each reuses the optimizer with one documented
// deviation:
//   Proposed      — full block loop
//   Ideal         — lossless guide (upper bound)
//   NoBeam        — equal feed weights scaled to the budget, block 1 skipped
//   Single        — one element per guide
//   Naive         — lossless optimization, then re-evaluated under real loss
//                   with sequentially clamped powers
//   Conventional  — fixed feed-point antennas, beamforming only
enum class SchemeId { Proposed, Ideal, NoBeam, Single, Naive, Conventional };

const char* to_string(SchemeId id);
SchemeId scheme_from_string(const std::string& name);

struct SchemeOutcome {
    model::SystemConfig cfg_used; // the regime the state is feasible under
    model::ResourceState state;
    double min_snr = 0.0;
    double min_rate = 0.0;
    Eigen::VectorXd user_rates;
    std::vector<std::pair<double, double>> trajectory; // per round (t, min rate)
    bool degraded = false;
    bool positions_converged = true;
    double max_rank_gap_rel = 0.0;
    double extraction_residual = 0.0;
};

SchemeOutcome run_scheme(SchemeId id, const model::SystemConfig& cfg,
                         const model::UserSet& users, const optim::MmSettings& settings,
                         const optim::PenaltySettings& penalty,
                         const optim::TraceSink& sink = {});

} // namespace pincast::baselines

#endif
