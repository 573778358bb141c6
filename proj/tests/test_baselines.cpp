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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pincast/baselines.hpp"
#include "pincast/harness.hpp"

using namespace pincast;
using namespace pincast::baselines;

namespace {

model::SystemConfig small_cfg(int N = 1, int M = 2, int K = 2) {
    auto cfg = model::SystemConfig::defaults(N, M, K);
    cfg.L = 12.0;
    return cfg;
}

model::UserSet users_for(std::uint64_t seed, const model::SystemConfig& cfg) {
    return harness::generate_users(seed, cfg.K(), cfg.area);
}

} // namespace

TEST_CASE("scheme names round-trip") {
    for (SchemeId id : {SchemeId::Proposed, SchemeId::Ideal, SchemeId::NoBeam, SchemeId::Single,
                        SchemeId::Naive, SchemeId::Conventional})
        CHECK(scheme_from_string(to_string(id)) == id);
    CHECK_THROWS(scheme_from_string("bogus"));
}

TEST_CASE("lossless config makes proposed and ideal coincide") {
    auto cfg = small_cfg();
    cfg.tan_delta = 0.0;
    const auto users = users_for(3, cfg);
    const auto a = run_scheme(SchemeId::Proposed, cfg, users, {}, {});
    const auto b = run_scheme(SchemeId::Ideal, cfg, users, {}, {});
    REQUIRE(a.trajectory.size() == b.trajectory.size());
    for (size_t i = 0; i < a.trajectory.size(); ++i)
        CHECK(a.trajectory[i].first == b.trajectory[i].first);
    CHECK(a.min_rate == b.min_rate);
}

TEST_CASE("single-element restriction is vacuous at M = 1") {
    auto cfg = small_cfg(1, 1, 2);
    const auto users = users_for(4, cfg);
    const auto a = run_scheme(SchemeId::Proposed, cfg, users, {}, {});
    const auto b = run_scheme(SchemeId::Single, cfg, users, {}, {});
    CHECK(a.min_rate == b.min_rate);
    CHECK((a.state.layout.x - b.state.layout.x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scheme ordering on matched trials") {
    auto cfg = small_cfg(1, 2, 2);
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        const auto users = users_for(seed, cfg);
        const auto ideal = run_scheme(SchemeId::Ideal, cfg, users, {}, {});
        const auto proposed = run_scheme(SchemeId::Proposed, cfg, users, {}, {});
        const auto naive = run_scheme(SchemeId::Naive, cfg, users, {}, {});
        CHECK(ideal.min_rate >= proposed.min_rate - 1e-6);
        CHECK(naive.min_rate <= ideal.min_rate + 1e-6);
    }
}

TEST_CASE("outputs are feasible under their own regime") {
    auto cfg = small_cfg(2, 2, 2);
    const auto users = users_for(6, cfg);
    for (SchemeId id : {SchemeId::Proposed, SchemeId::Ideal, SchemeId::NoBeam, SchemeId::Single,
                        SchemeId::Naive, SchemeId::Conventional}) {
        const auto out = run_scheme(id, cfg, users, {}, {});
        INFO("scheme ", to_string(id));
        CHECK(model::feasibility_check(out.state, out.cfg_used).feasible(1e-6));
        CHECK(out.min_rate == doctest::Approx(out.user_rates.minCoeff()));
    }
}

TEST_CASE("nobeam keeps the equal split") {
    auto cfg = small_cfg(2, 1, 2);
    const auto users = users_for(7, cfg);
    const auto out = run_scheme(SchemeId::NoBeam, cfg, users, {}, {});
    for (int n = 0; n < 2; ++n)
        CHECK(std::abs(out.state.w[n]) ==
              doctest::Approx(std::sqrt(cfg.P_max / 2.0)).epsilon(1e-12));
}
