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

#include "pincast/model.hpp"
#include "pincast/rng.hpp"

#include <cmath>
#include <complex>
#include <limits>

using namespace pincast;
using namespace pincast::model;

namespace {

// Golden value for the PTFE guide at 28 GHz, frozen from a 60-digit
// arbitrary-precision evaluation of lambda_g*eps_r*pi*f_c^2*c^-2*tan_delta.
constexpr double kAlphaPtfe28GHz = 0.08678569527518231729104201;

SystemConfig ptfe_cfg(int N = 1, int M = 3, int K = 1) {
    auto cfg = SystemConfig::defaults(N, M, K);
    cfg.validate();
    return cfg;
}

// Independent oracle for the available power: walk the guide segment by
// segment, attenuating the running power level and deducting extractions at
// each element. Shares no code with max_available_power.
double ledger_available(double alpha, double w2, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& p, int m) {
    double level = w2;
    double pos = 0.0;
    for (int t = 0; t <= m; ++t) {
        level *= std::exp(-2.0 * alpha * (x[t] - pos));
        pos = x[t];
        if (t < m)
            level -= p[t];
    }
    return level;
}

} // namespace

TEST_CASE("attenuation constant closed form") {
    auto cfg = ptfe_cfg();

    SUBCASE("lossless dielectric gives zero") {
        cfg.tan_delta = 0.0;
        CHECK(attenuation_constant(cfg) == 0.0);
    }
    SUBCASE("PTFE at 28 GHz matches the golden value") {
        CHECK(attenuation_constant(cfg) == doctest::Approx(kAlphaPtfe28GHz).epsilon(1e-14));
    }
    SUBCASE("linear in the loss tangent") {
        const double a1 = attenuation_constant(cfg);
        cfg.tan_delta *= 2.0;
        CHECK(attenuation_constant(cfg) == doctest::Approx(2.0 * a1).epsilon(1e-14));
    }
}

TEST_CASE("max available power") {
    auto cfg = ptfe_cfg();
    cfg.tan_delta = 0.0;
    Eigen::VectorXd x(3);
    x << 5.0, 10.0, 20.0;

    SUBCASE("no attenuation, first element sees the full feed power") {
        Eigen::VectorXd none(0);
        CHECK(max_available_power(cfg, {2.0, 0.0}, x, none, 0) == doctest::Approx(4.0));
    }
    SUBCASE("a draining predecessor leaves nothing") {
        Eigen::VectorXd p(1);
        p << 4.0;
        CHECK(max_available_power(cfg, {2.0, 0.0}, x, p, 1) == doctest::Approx(0.0));
    }
    SUBCASE("matches the segment-ledger oracle on random instances") {
        auto cfg_lossy = ptfe_cfg();
        const double alpha = attenuation_constant(cfg_lossy);
        auto rs = rng::substream(7, {1});
        for (int trial = 0; trial < 200; ++trial) {
            Eigen::VectorXd pos(3), p(3);
            pos[0] = rs.uniform(0.1, 10.0);
            pos[1] = pos[0] + rs.uniform(0.1, 10.0);
            pos[2] = pos[1] + rs.uniform(0.1, 10.0);
            const double w2 = rs.uniform(0.1, 4.0);
            const std::complex<double> w_n = std::sqrt(w2);
            for (int m = 0; m < 3; ++m) {
                const double avail = max_available_power(cfg_lossy, w_n, pos, p, m);
                const double want = ledger_available(alpha, w2, pos, p, m);
                CHECK(avail == doctest::Approx(want).epsilon(1e-12));
                p[m] = rs.uniform(0.0, 1.0) * std::max(0.0, avail); // keep the prefix feasible
            }
        }
    }
    SUBCASE("disordered positions are rejected") {
        Eigen::VectorXd bad(2), none(1);
        bad << 5.0, 4.0;
        none << 0.0;
        CHECK_THROWS_AS(max_available_power(cfg, {1.0, 0.0}, bad, none, 1), LayoutError);
    }
}

TEST_CASE("channel vector") {
    auto cfg = ptfe_cfg();
    const double se = std::sqrt(cfg.eta());
    Eigen::VectorXd x1(1);
    x1 << 12.0;

    SUBCASE("user directly below an element") {
        Eigen::Vector2d user(12.0, cfg.D[0]);
        const auto h = channel_vector(cfg, x1, cfg.D[0], user);
        CHECK(std::abs(h[0]) == doctest::Approx(se / cfg.d).epsilon(1e-12));
        const double want_phase =
            std::remainder(-2.0 * M_PI * cfg.d / cfg.wavelength(), 2.0 * M_PI);
        CHECK(std::remainder(std::arg(h[0]) - want_phase, 2.0 * M_PI) ==
              doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("magnitude decays as one over distance") {
        Eigen::Vector2d near(12.0, cfg.D[0]);
        const auto h_near = channel_vector(cfg, x1, cfg.D[0], near);
        // Doubling the 3-D distance: move the user so the range is exactly 2d.
        const double dy = std::sqrt(4.0 * cfg.d * cfg.d - cfg.d * cfg.d);
        Eigen::Vector2d far(12.0, cfg.D[0] + dy);
        const auto h_far = channel_vector(cfg, x1, cfg.D[0], far);
        CHECK(std::abs(h_far[0]) == doctest::Approx(0.5 * std::abs(h_near[0])).epsilon(1e-12));
    }
    SUBCASE("random geometry matches direct re-evaluation") {
        auto rs = rng::substream(7, {2});
        for (int trial = 0; trial < 1000; ++trial) {
            Eigen::VectorXd pos(1);
            pos << rs.uniform(0.0, cfg.L);
            Eigen::Vector2d user(rs.uniform(0.0, 40.0), rs.uniform(0.0, 40.0));
            const auto h = channel_vector(cfg, pos, cfg.D[0], user);
            const double r = std::hypot(user[0] - pos[0], user[1] - cfg.D[0], cfg.d);
            const std::complex<double> want =
                se * std::exp(std::complex<double>(0.0, -2.0 * M_PI * r / cfg.wavelength())) / r;
            // The comparison floor is set by phase conditioning: a 1-ulp
            // difference between the two norm routines moves the phase by
            // ~2*pi*r*eps/lambda, which dominates 1e-12 at tens of metres.
            const double tol = 64.0 * (2.0 * M_PI * r / cfg.wavelength()) *
                               std::numeric_limits<double>::epsilon();
            CHECK(std::abs(h[0] - want) <= tol * std::abs(want));
            CHECK(std::abs(h[0]) * r == doctest::Approx(se).epsilon(1e-12));
        }
    }
    SUBCASE("zero distance is singular") {
        auto cfg0 = cfg;
        cfg0.d = 0.0; // deliberately degenerate, bypasses validate()
        Eigen::Vector2d user(12.0, cfg.D[0]);
        CHECK_THROWS_AS(channel_vector(cfg0, x1, cfg.D[0], user), SingularGeometryError);
    }
}

TEST_CASE("phase vector") {
    auto cfg = ptfe_cfg();
    const double lg = cfg.guide_wavelength();
    Eigen::VectorXd x(3);
    x << 0.0, lg / 2.0, lg;
    const auto g = phase_vector(cfg, x);
    CHECK(std::abs(g[0] - std::complex<double>(1.0, 0.0)) < 1e-12);
    CHECK(std::abs(g[1] - std::complex<double>(-1.0, 0.0)) < 1e-12);
    CHECK(std::abs(g[2] - std::complex<double>(1.0, 0.0)) < 1e-12);

    SUBCASE("unit modulus everywhere") {
        auto rs = rng::substream(7, {3});
        Eigen::VectorXd pos(1);
        for (int trial = 0; trial < 1000; ++trial) {
            pos << rs.uniform(0.0, cfg.L);
            const auto e = phase_vector(cfg, pos);
            CHECK(std::abs(std::abs(e[0]) - 1.0) <= 1e-15);
        }
    }
}

TEST_CASE("effective channels") {
    auto cfg = ptfe_cfg(2, 2, 2);
    PinLayout layout;
    layout.x.resize(2, 2);
    layout.x << 5.0, 15.0, 8.0, 22.0;
    UserSet users;
    users.phi.resize(2, 2);
    users.phi << 10.0, 12.0, 30.0, 28.0;
    Eigen::VectorXcd w(2);
    w << std::complex<double>(0.6, 0.3), std::complex<double>(-0.2, 0.7);

    SUBCASE("zero powers give zero beta") {
        const auto bundle =
            effective_channels(cfg, layout, Eigen::MatrixXd::Zero(2, 2), w, users);
        CHECK(bundle.beta.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("single element reduces to a product") {
        auto cfg1 = ptfe_cfg(1, 1, 1);
        PinLayout l1;
        l1.x.resize(1, 1);
        l1.x << 7.0;
        UserSet u1;
        u1.phi.resize(1, 2);
        u1.phi << 3.0, 9.0;
        Eigen::MatrixXd p1(1, 1);
        p1 << 0.42;
        Eigen::VectorXcd w1(1);
        w1 << 1.0;
        const auto bundle = effective_channels(cfg1, l1, p1, w1, u1);
        const auto h = channel_vector(cfg1, l1.x.row(0), cfg1.D[0], u1.phi.row(0));
        const auto g = phase_vector(cfg1, l1.x.row(0));
        const auto want = std::sqrt(0.42) * h[0] * g[0];
        CHECK(std::abs(bundle.beta(0, 0) - want) < 1e-15);
    }
    SUBCASE("cross-parameterization identity") {
        auto rs = rng::substream(7, {4});
        for (int trial = 0; trial < 100; ++trial) {
            Eigen::MatrixXd p(2, 2);
            for (int i = 0; i < 4; ++i)
                p(i / 2, i % 2) = rs.uniform(0.0, 0.5);
            const auto bundle = effective_channels(cfg, layout, p, w, users);
            for (int k = 0; k < 2; ++k) {
                std::complex<double> via_hbar = 0.0;
                for (int n = 0; n < 2; ++n)
                    for (int m = 0; m < 2; ++m)
                        via_hbar += std::conj(bundle.hbar[k](n, m)) * std::sqrt(p(n, m));
                const std::complex<double> via_beta = bundle.beta.row(k).dot(w);
                CHECK(std::abs(via_hbar - via_beta) <= 1e-10 * std::max(1.0, std::abs(via_beta)));
            }
        }
    }
}

TEST_CASE("user rate and min rate") {
    auto cfg = ptfe_cfg(2, 1, 2);
    cfg.sigma2 = Eigen::VectorXd::Constant(2, 1.0);
    Eigen::VectorXcd w(2);
    w << 1.0, 1.0;

    ChannelBundle bundle;
    bundle.beta.resize(2, 2);

    SUBCASE("zero projection gives zero rate") {
        Eigen::VectorXcd beta = Eigen::VectorXcd::Zero(2);
        CHECK(user_rate(beta, w, 1.0) == 0.0);
    }
    SUBCASE("unit SNR gives one bit") {
        Eigen::VectorXcd beta(2);
        beta << 1.0, 0.0;
        CHECK(user_rate(beta, w, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("worst user picked, ties to the smallest index") {
        bundle.beta << std::sqrt(3.0), 0.0, 1.0, 0.0; // SNRs 3 and 1
        const auto [k, r] = min_rate(bundle, w, cfg);
        CHECK(k == 1);
        CHECK(r == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("SNR invariance under joint scaling") {
        auto rs = rng::substream(7, {5});
        for (int trial = 0; trial < 200; ++trial) {
            for (int k = 0; k < 2; ++k)
                for (int n = 0; n < 2; ++n)
                    bundle.beta(k, n) = {rs.uniform(-1, 1), rs.uniform(-1, 1)};
            const double rho = rs.uniform(0.1, 10.0);
            auto cfg_scaled = cfg;
            cfg_scaled.sigma2 *= rho;
            ChannelBundle scaled = bundle;
            scaled.beta *= std::sqrt(rho);
            const auto base = min_rate(bundle, w, cfg);
            const auto after = min_rate(scaled, w, cfg_scaled);
            CHECK(after.first == base.first);
            CHECK(after.second == doctest::Approx(base.second).epsilon(1e-12));
        }
    }
}

TEST_CASE("feasibility report") {
    auto cfg = ptfe_cfg(1, 2, 1);
    ResourceState st;
    st.w.resize(1);
    st.w << std::sqrt(cfg.P_max);
    st.layout.x.resize(1, 2);
    st.p = Eigen::MatrixXd::Zero(1, 2);

    SUBCASE("uniform construction is feasible") {
        st.layout.x << cfg.L / 4.0, 3.0 * cfg.L / 4.0;
        const auto rep = feasibility_check(st, cfg);
        CHECK(rep.feasible());
    }
    SUBCASE("half-gamma spacing reports the C2 deficit") {
        st.layout.x << 10.0, 10.0 + cfg.gamma / 2.0;
        const auto rep = feasibility_check(st, cfg);
        CHECK(rep.c2 == doctest::Approx(-cfg.gamma / 2.0).epsilon(1e-12));
    }
    SUBCASE("overdrawn element reports the C3 deficit") {
        st.layout.x << 10.0, 20.0;
        const double p_max = max_available_power(cfg, st.w[0], st.layout.x.row(0), st.p.row(0), 0);
        st.p(0, 0) = p_max + 1e-3;
        const auto rep = feasibility_check(st, cfg);
        CHECK(rep.c3 == doctest::Approx(-1e-3).epsilon(1e-9));
    }
}

TEST_CASE("lossless power conservation") {
    auto cfg = ptfe_cfg(1, 4, 1);
    cfg.tan_delta = 0.0;
    auto rs = rng::substream(7, {6});
    for (int trial = 0; trial < 1000; ++trial) {
        const double w2 = rs.uniform(0.1, 4.0);
        Eigen::VectorXd x(4), p(4);
        double pos = 0.0;
        for (int m = 0; m < 4; ++m) {
            pos += rs.uniform(0.1, 5.0);
            x[m] = pos;
        }
        for (int m = 0; m < 4; ++m) {
            const double avail = max_available_power(cfg, std::sqrt(w2), x, p, m);
            p[m] = rs.uniform(0.0, 1.0) * std::max(0.0, avail);
        }
        CHECK(p.sum() <= w2 + 1e-12);
    }
}

TEST_CASE("available power is non-increasing in the element position") {
    auto cfg = ptfe_cfg();
    Eigen::VectorXd p(1);
    p << 0.2;
    Eigen::VectorXd x(2);
    x << 4.0, 0.0;
    double prev = std::numeric_limits<double>::infinity();
    for (double x2 = 4.5; x2 < 40.0; x2 += 0.5) {
        x[1] = x2;
        const double avail = max_available_power(cfg, 1.0, x, p, 1);
        CHECK(avail <= prev + 1e-15);
        prev = avail;
    }
}
