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

#include "pincast/optim.hpp"
#include "pincast/oracle.hpp"
#include "pincast/rng.hpp"

using namespace pincast;
using namespace pincast::optim;

namespace {

// Tiny fixture in a short hall where the attenuation-balanced interior
// optimum is global and downstream of the uniform start.
model::SystemConfig tiny_cfg() {
    auto cfg = model::SystemConfig::defaults(1, 1, 1);
    cfg.L = 10.0;
    return cfg;
}

model::UserSet one_user(double x, double y) {
    model::UserSet u;
    u.phi.resize(1, 2);
    u.phi << x, y;
    return u;
}

} // namespace

TEST_CASE("tiny instance reaches the 1-D optimum") {
    auto cfg = tiny_cfg();
    const auto users = one_user(7.4, 21.5);
    const auto [x_star, t_star] = oracle::tiny_analytic_optimum(cfg, users.phi.row(0));
    REQUIRE(x_star > 5.0);

    const auto out = bcd(cfg, users, {}, {}, default_init(cfg));
    CHECK(out.t >= 0.99 * t_star);
    CHECK(out.t <= t_star * (1.0 + 1e-6));
    CHECK(model::feasibility_check(out.state, cfg).feasible(1e-6));
}

TEST_CASE("deterministic reruns") {
    auto cfg = tiny_cfg();
    const auto users = one_user(6.8, 18.0);
    const auto a = bcd(cfg, users, {}, {}, default_init(cfg));
    const auto b = bcd(cfg, users, {}, {}, default_init(cfg));
    REQUIRE(a.trajectory.size() == b.trajectory.size());
    for (size_t i = 0; i < a.trajectory.size(); ++i) {
        CHECK(a.trajectory[i].first == b.trajectory[i].first);
        CHECK(a.trajectory[i].second == b.trajectory[i].second);
    }
    CHECK((a.state.layout.x - b.state.layout.x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("optimal init is a fixed point") {
    auto cfg = tiny_cfg();
    const auto users = one_user(7.4, 21.5);
    const auto [x_star, t_star] = oracle::tiny_analytic_optimum(cfg, users.phi.row(0));
    model::ResourceState init;
    init.w.resize(1);
    init.w << std::sqrt(cfg.P_max);
    init.layout.x.resize(1, 1);
    init.layout.x << x_star;
    init.p.resize(1, 1);
    init.p << cfg.P_max * std::exp(-2.0 * model::attenuation_constant(cfg) * x_star);
    const auto out = bcd(cfg, users, {}, {}, init);
    for (const auto& [t, r] : out.trajectory)
        CHECK(std::abs(t - out.trajectory.front().first) <=
              1e-6 * out.trajectory.front().first);
    CHECK(out.t == doctest::Approx(t_star).epsilon(1e-6));
}

TEST_CASE("rounds never lose ground and runs terminate") {
    auto cfg = model::SystemConfig::defaults(2, 2, 3);
    cfg.P_max = 1.0;
    model::UserSet users;
    users.phi.resize(3, 2);
    auto rs = rng::substream(55, {1});
    for (int k = 0; k < 3; ++k)
        users.phi.row(k) << rs.uniform(2, 38), rs.uniform(2, 38);

    const auto out = bcd(cfg, users, {}, {}, default_init(cfg));
    REQUIRE(out.rounds >= 1);
    CHECK(out.rounds <= MmSettings{}.bcd_max_iters);
    for (size_t i = 1; i < out.trajectory.size(); ++i)
        CHECK(out.trajectory[i].first >= out.trajectory[i - 1].first - 1e-6);
    CHECK(model::feasibility_check(out.state, cfg).feasible(1e-6));
    CHECK(out.t == doctest::Approx(out.trajectory.back().first));
}

TEST_CASE("infeasible init is rejected") {
    auto cfg = tiny_cfg();
    const auto users = one_user(5.0, 20.0);
    auto init = default_init(cfg);
    init.p(0, 0) = 2.0 * cfg.P_max;
    CHECK_THROWS_AS(bcd(cfg, users, {}, {}, init), OptimError);
}

TEST_CASE("reported objective matches a fresh model evaluation") {
    auto cfg = tiny_cfg();
    const auto users = one_user(7.0, 22.0);
    const auto out = bcd(cfg, users, {}, {}, default_init(cfg));
    const auto bundle = model::effective_channels(cfg, out.state.layout, out.state.p,
                                                  out.state.w, users);
    const double recomputed = model::min_snr(bundle, out.state.w, cfg);
    CHECK(out.t == doctest::Approx(recomputed).epsilon(1e-8));
}
