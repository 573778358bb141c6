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
#include "pincast/rng.hpp"

using namespace pincast;
using namespace pincast::optim;

namespace {

double model_t(const model::SystemConfig& cfg, const model::PinLayout& layout,
               const Eigen::MatrixXd& p, const Eigen::VectorXcd& w,
               const model::UserSet& users) {
    const auto bundle = model::effective_channels(cfg, layout, p, w, users);
    return model::min_snr(bundle, w, cfg);
}

} // namespace

TEST_CASE("single element extracts everything available") {
    auto cfg = model::SystemConfig::defaults(1, 1, 1);
    model::UserSet users;
    users.phi.resize(1, 2);
    users.phi << 12.0, 18.0;
    model::PinLayout layout;
    layout.x.resize(1, 1);
    layout.x << 10.0;
    Eigen::VectorXcd w(1);
    w << std::sqrt(cfg.P_max);
    Eigen::MatrixXd p0(1, 1);
    p0 << 0.1 * cfg.P_max;

    MmSettings st;
    st.inner_tol = 1e-7;
    const auto res = solve_power_allocation(cfg, layout, w, users, st, p0);
    const double alpha = model::attenuation_constant(cfg);
    const double p_want = cfg.P_max * std::exp(-2.0 * alpha * 10.0);
    CHECK(res.p(0, 0) == doctest::Approx(p_want).epsilon(1e-4));
    CHECK(res.t == doctest::Approx(model_t(cfg, layout, res.p, w, users)).epsilon(1e-10));
}

TEST_CASE("lossless equidistant in-phase pair combines at full power") {
    auto cfg = model::SystemConfig::defaults(1, 2, 1);
    cfg.tan_delta = 0.0;
    // two elements a whole number of guided wavelengths apart, user centered
    const double lg = cfg.guide_wavelength();
    const double spacing = std::round(1.0 / lg) * lg;
    model::PinLayout layout;
    layout.x.resize(1, 2);
    layout.x << 10.0, 10.0 + spacing;
    model::UserSet users;
    users.phi.resize(1, 2);
    users.phi << 10.0 + spacing / 2.0, cfg.D[0];
    Eigen::VectorXcd w(1);
    w << std::sqrt(cfg.P_max);
    Eigen::MatrixXd p0 = Eigen::MatrixXd::Constant(1, 2, 0.25 * cfg.P_max);

    MmSettings st;
    st.inner_tol = 1e-8;
    st.inner_max_iters = 100;
    const auto res = solve_power_allocation(cfg, layout, w, users, st, p0);

    // closed form: amplitudes add in phase, equal split of the full budget
    const double r = std::hypot(spacing / 2.0, cfg.d);
    const double amp = std::sqrt(cfg.eta()) / r * 2.0 * std::sqrt(cfg.P_max * cfg.P_max / 2.0);
    const double t_want = amp * amp / cfg.sigma2[0];
    CHECK(res.t == doctest::Approx(t_want).epsilon(1e-3));
    CHECK(res.p.sum() == doctest::Approx(cfg.P_max).epsilon(1e-3));
}

TEST_CASE("random instance stays within one percent of a grid oracle") {
    auto cfg = model::SystemConfig::defaults(2, 2, 3);
    model::UserSet users;
    users.phi.resize(3, 2);
    auto rs = rng::substream(31, {1});
    for (int k = 0; k < 3; ++k)
        users.phi.row(k) << rs.uniform(5, 35), rs.uniform(5, 35);
    model::PinLayout layout;
    layout.x.resize(2, 2);
    layout.x << 8.0, 21.0, 14.0, 30.0;
    Eigen::VectorXcd w(2);
    w << std::sqrt(cfg.P_max / 2.0), std::complex<double>(0.3, -0.55) * std::sqrt(cfg.P_max);
    w *= std::sqrt(cfg.P_max) / w.norm();
    Eigen::MatrixXd p0 = Eigen::MatrixXd::Zero(2, 2);
    for (int n = 0; n < 2; ++n)
        for (int m = 0; m < 2; ++m)
            p0(n, m) = 0.25 * std::max(0.0, model::max_available_power(cfg, w[n],
                                                                       layout.x.row(n),
                                                                       p0.row(n), m));

    MmSettings st;
    st.inner_tol = 1e-7;
    st.inner_max_iters = 100;
    const auto res = solve_power_allocation(cfg, layout, w, users, st, p0);

    // sequential-fraction grid over the power box, 20 steps per element
    double best = 0.0;
    const int steps = 20;
    Eigen::MatrixXd p(2, 2);
    for (int a = 0; a <= steps; ++a)
        for (int b = 0; b <= steps; ++b)
            for (int c = 0; c <= steps; ++c)
                for (int d = 0; d <= steps; ++d) {
                    const double f[4] = {double(a) / steps, double(b) / steps,
                                         double(c) / steps, double(d) / steps};
                    p.setZero();
                    int idx = 0;
                    for (int n = 0; n < 2; ++n)
                        for (int m = 0; m < 2; ++m) {
                            const double avail = model::max_available_power(
                                cfg, w[n], layout.x.row(n), p.row(n), m);
                            p(n, m) = f[idx++] * std::max(0.0, avail);
                        }
                    best = std::max(best, model_t(cfg, layout, p, w, users));
                }
    CHECK(res.t >= best * 0.99);
}

TEST_CASE("infeasible start is rejected") {
    auto cfg = model::SystemConfig::defaults(1, 1, 1);
    model::UserSet users;
    users.phi.resize(1, 2);
    users.phi << 12.0, 18.0;
    model::PinLayout layout;
    layout.x.resize(1, 1);
    layout.x << 10.0;
    Eigen::VectorXcd w(1);
    w << std::sqrt(cfg.P_max);
    Eigen::MatrixXd p_bad(1, 1);
    p_bad << 2.0 * cfg.P_max;
    CHECK_THROWS_AS(solve_power_allocation(cfg, layout, w, users, {}, p_bad), OptimError);
}

TEST_CASE("default init is strictly feasible") {
    auto cfg = model::SystemConfig::defaults(3, 4, 2);
    const auto st = default_init(cfg);
    const auto rep = model::feasibility_check(st, cfg);
    CHECK(rep.feasible());
    // the beamformer uses the whole budget, so C4 is tight by construction
    CHECK(rep.c4 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rep.c1 > 0.0);
    CHECK(rep.c2 > 0.0);
    CHECK(rep.c3 > 0.0);
}
