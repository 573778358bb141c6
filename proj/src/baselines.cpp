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

#include "pincast/baselines.hpp"

#include <cmath>

namespace pincast::baselines {

using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using model::cplx;

const char* to_string(SchemeId id) {
    switch (id) {
    case SchemeId::Proposed:
        return "proposed";
    case SchemeId::Ideal:
        return "ideal";
    case SchemeId::NoBeam:
        return "nobeam";
    case SchemeId::Single:
        return "single";
    case SchemeId::Naive:
        return "naive";
    case SchemeId::Conventional:
        return "conventional";
    }
    return "unknown";
}

SchemeId scheme_from_string(const std::string& name) {
    for (SchemeId id : {SchemeId::Proposed, SchemeId::Ideal, SchemeId::NoBeam, SchemeId::Single,
                        SchemeId::Naive, SchemeId::Conventional})
        if (name == to_string(id))
            return id;
    throw std::invalid_argument("unknown scheme: " + name);
}

namespace {

SchemeOutcome from_bcd(const model::SystemConfig& cfg, const model::UserSet& users,
                       const optim::BcdState& out) {
    SchemeOutcome o;
    o.cfg_used = cfg;
    o.state = out.state;
    o.min_snr = out.t;
    o.trajectory = out.trajectory;
    o.degraded = out.any_degraded;
    o.positions_converged = out.last_positions.converged;
    o.max_rank_gap_rel = out.last_positions.max_rank_gap_rel;
    o.extraction_residual = out.last_positions.extraction_residual;
    const auto bundle =
        model::effective_channels(cfg, out.state.layout, out.state.p, out.state.w, users);
    o.user_rates.resize(users.K());
    for (int k = 0; k < users.K(); ++k)
        o.user_rates[k] = model::user_rate(bundle.beta.row(k), out.state.w, cfg.sigma2[k]);
    o.min_rate = o.user_rates.minCoeff();
    return o;
}

} // namespace

SchemeOutcome run_scheme(SchemeId id, const model::SystemConfig& cfg,
                         const model::UserSet& users, const optim::MmSettings& settings,
                         const optim::PenaltySettings& penalty, const optim::TraceSink& sink) {
    cfg.validate();
    switch (id) {
    case SchemeId::Proposed: {
        return from_bcd(cfg, users,
                        optim::bcd(cfg, users, settings, penalty, optim::default_init(cfg), sink));
    }
    case SchemeId::Ideal: {
        auto lossless = cfg;
        lossless.tan_delta = 0.0;
        return from_bcd(lossless, users,
                        optim::bcd(lossless, users, settings, penalty,
                                   optim::default_init(lossless), sink));
    }
    case SchemeId::NoBeam: {
        // equal weights scaled to the full budget, never re-optimized
        const auto out = optim::bcd(cfg, users, settings, penalty, optim::default_init(cfg),
                                    sink, /*skip_beamforming=*/true);
        return from_bcd(cfg, users, out);
    }
    case SchemeId::Single: {
        auto single = cfg;
        single.M = 1;
        return from_bcd(single, users,
                        optim::bcd(single, users, settings, penalty,
                                   optim::default_init(single), sink));
    }
    case SchemeId::Naive: {
        // optimize pretending the guide is lossless, then live with the
        // consequences: clamp overdrawn elements in guide order and re-score
        auto lossless = cfg;
        lossless.tan_delta = 0.0;
        const auto ideal = optim::bcd(lossless, users, settings, penalty,
                                      optim::default_init(lossless), sink);
        SchemeOutcome o;
        o.cfg_used = cfg;
        o.state = ideal.state;
        o.state.p = optim::clamp_powers(cfg, ideal.state.w, ideal.state.layout, ideal.state.p);
        o.trajectory = ideal.trajectory;
        o.degraded = ideal.any_degraded;
        o.positions_converged = ideal.last_positions.converged;
        o.max_rank_gap_rel = ideal.last_positions.max_rank_gap_rel;
        o.extraction_residual = ideal.last_positions.extraction_residual;
        const auto bundle =
            model::effective_channels(cfg, o.state.layout, o.state.p, o.state.w, users);
        o.min_snr = model::min_snr(bundle, o.state.w, cfg);
        o.user_rates.resize(users.K());
        for (int k = 0; k < users.K(); ++k)
            o.user_rates[k] = model::user_rate(bundle.beta.row(k), o.state.w, cfg.sigma2[k]);
        o.min_rate = o.user_rates.minCoeff();
        return o;
    }
    case SchemeId::Conventional: {
        // One antenna per guide frozen at the feed point, inside the same
        // transmit convention as every other scheme (feed amplitude times the
        // extracted-power scaling; with the element at x = 0 the guide factor
        // is one and the channel is the bare spherical wave). The only live
        // optimization is the precoder; the position block never runs.
        auto conv = cfg;
        conv.M = 1;
        const int N = conv.N();
        model::ResourceState init;
        init.w = VectorXcd::Constant(N, std::sqrt(conv.P_max / N));
        init.layout.x = MatrixXd::Zero(N, 1);
        init.p.resize(N, 1);
        for (int n = 0; n < N; ++n)
            init.p(n, 0) = std::norm(init.w[n]); // full extraction at the feed
        const auto out = optim::bcd(conv, users, settings, penalty, init, sink,
                                    /*skip_beamforming=*/false, /*skip_positions=*/true);
        return from_bcd(conv, users, out);
    }
    }
    throw std::invalid_argument("unhandled scheme");
}

} // namespace pincast::baselines
