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

#include "pincast/optim.hpp"

#include <cmath>

namespace pincast::optim {

using Eigen::MatrixXd;
using Eigen::VectorXcd;

namespace {

double state_min_snr(const model::SystemConfig& cfg, const model::ResourceState& st,
                     const model::UserSet& users) {
    const auto bundle = model::effective_channels(cfg, st.layout, st.p, st.w, users);
    return model::min_snr(bundle, st.w, cfg);
}

} // namespace

BcdState bcd(const model::SystemConfig& cfg, const model::UserSet& users,
             const MmSettings& settings, const PenaltySettings& penalty,
             const model::ResourceState& init, const TraceSink& sink, bool skip_beamforming,
             bool skip_positions) {
    {
        const auto rep = model::feasibility_check(init, cfg);
        if (!rep.feasible())
            throw OptimError("bcd needs a feasible starting state");
    }

    BcdState out;
    out.state = init;
    out.t = state_min_snr(cfg, init, users);

    double t_prev_round = out.t;
    for (int tau = 0; tau < settings.bcd_max_iters; ++tau) {
        // Block 1: beamformer. Powers may exceed the available-power bound
        // under the new feed levels, so they are re-clamped before judging.
        if (!skip_beamforming) {
            const auto bundle =
                model::effective_channels(cfg, out.state.layout, out.state.p, out.state.w, users);
            const auto res = solve_beamforming(bundle, cfg, settings, out.state.w, sink, tau);
            out.any_degraded = out.any_degraded || res.degraded;
            const MatrixXd p_ok = clamp_powers(cfg, res.w, out.state.layout, out.state.p);
            model::ResourceState cand{res.w, p_ok, out.state.layout};
            const double t_cand = state_min_snr(cfg, cand, users);
            if (t_cand >= out.t) {
                out.state = std::move(cand);
                out.t = t_cand;
            }
        }

        // Block 2: element powers.
        {
            const auto res = solve_power_allocation(cfg, out.state.layout, out.state.w, users,
                                                    settings, out.state.p, sink, tau);
            out.any_degraded = out.any_degraded || res.degraded;
            model::ResourceState cand{out.state.w, res.p, out.state.layout};
            const double t_cand = state_min_snr(cfg, cand, users);
            if (t_cand >= out.t) {
                out.state = std::move(cand);
                out.t = t_cand;
            }
        }

        // Block 3: element positions; accepted only if the honestly
        // re-evaluated min-SNR (with re-clamped powers) does not drop.
        if (!skip_positions) {
            const auto res = solve_positions(cfg, out.state.w, out.state.p, users, settings,
                                             penalty, out.state.layout, sink, tau);
            out.any_degraded = out.any_degraded || res.degraded;
            out.last_positions = res;
            if (res.t >= out.t) {
                out.state.layout = res.layout;
                out.state.p = clamp_powers(cfg, out.state.w, res.layout, out.state.p);
                out.t = res.t;
            }
        }

        const auto bundle =
            model::effective_channels(cfg, out.state.layout, out.state.p, out.state.w, users);
        out.trajectory.emplace_back(out.t, model::min_rate(bundle, out.state.w, cfg).second);
        out.rounds = tau + 1;

        if (std::abs(out.t - t_prev_round) <= settings.bcd_tol * std::max(out.t, 1e-30))
            break;
        t_prev_round = out.t;
    }
    return out;
}

} // namespace pincast::optim
