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

#include "pincast/oracle.hpp"
#include "pincast/rng.hpp"

#include <Eigen/Dense>

using namespace pincast;
using namespace pincast::oracle;

namespace {

model::SystemConfig tiny_cfg() {
    auto cfg = model::SystemConfig::defaults(1, 1, 1);
    cfg.validate();
    return cfg;
}

model::UserSet one_user(double x, double y) {
    model::UserSet u;
    u.phi.resize(1, 2);
    u.phi << x, y;
    return u;
}

} // namespace

TEST_CASE("grid search matches the analytic single-element optimum") {
    auto cfg = tiny_cfg();
    const auto users = one_user(14.0, 18.5); // near the guide for a calm landscape
    const auto [x_star, t_star] = tiny_analytic_optimum(cfg, users.phi.row(0));
    const auto res = grid_search_tiny(cfg, users, 0.02);
    CHECK(res.t <= t_star * (1.0 + 1e-9)); // grid can never beat the continuum
    CHECK(res.t >= t_star * 0.999);
    CHECK(std::abs(res.layout.x(0, 0) - x_star) <= 0.05);
}

TEST_CASE("lossless grid puts the element under the user") {
    auto cfg = tiny_cfg();
    cfg.tan_delta = 0.0;
    const auto users = one_user(23.4, 20.0);
    const double res_m = 0.05;
    const auto res = grid_search_tiny(cfg, users, res_m);
    CHECK(std::abs(res.layout.x(0, 0) - 23.4) <= res_m + 1e-12);
}

TEST_CASE("grid refinement never loses ground") {
    auto cfg = tiny_cfg();
    const auto users = one_user(9.0, 22.0);
    const auto coarse = grid_search_tiny(cfg, users, 0.8);
    const auto fine = grid_search_tiny(cfg, users, 0.4);
    CHECK(fine.t >= coarse.t - 1e-15);
}

TEST_CASE("grid search refuses big instances") {
    auto cfg = model::SystemConfig::defaults(2, 2, 1);
    CHECK_THROWS_AS(grid_search_tiny(cfg, one_user(5, 5), 0.5), OracleError);
}

TEST_CASE("minorizer checker") {
    Fn f = [](const Eigen::VectorXd& x) { return x[0] * x[0]; };
    PairSampler sampler = [](rng::Stream& rs) {
        Eigen::VectorXd a(1), b(1);
        a[0] = rs.uniform(-5, 5);
        b[0] = rs.uniform(-5, 5);
        return std::make_pair(a, b);
    };
    SUBCASE("textbook tangent passes") {
        SurrogateBuilder sb = [](const Eigen::VectorXd& x0) {
            return [x0](const Eigen::VectorXd& x) { return 2.0 * x0[0] * x[0] - x0[0] * x0[0]; };
        };
        const auto rep = check_minorizer(f, sb, sampler, 1000, 3);
        CHECK(rep.ok());
        CHECK(rep.violations == 0);
    }
    SUBCASE("sign flip is caught") {
        SurrogateBuilder bad = [](const Eigen::VectorXd& x0) {
            return [x0](const Eigen::VectorXd& x) { return -2.0 * x0[0] * x[0] + x0[0] * x0[0]; };
        };
        const auto rep = check_minorizer(f, bad, sampler, 1000, 3);
        CHECK(rep.violations > 0);
    }
}

TEST_CASE("rank-one gap") {
    auto rs = rng::substream(5, {1});
    SUBCASE("rank one is flat") {
        Eigen::VectorXcd v(3);
        for (int i = 0; i < 3; ++i)
            v[i] = std::complex<double>(rs.uniform(-1, 1), rs.uniform(-1, 1));
        const Eigen::MatrixXcd X = v * v.adjoint();
        CHECK(rank_one_gap(X) <= 1e-12 * X.cwiseAbs().maxCoeff());
    }
    SUBCASE("identity has unit gap") {
        const Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(2, 2);
        CHECK(rank_one_gap(I2) == doctest::Approx(1.0));
    }
    SUBCASE("rank two matches the svd route") {
        for (int trial = 0; trial < 100; ++trial) {
            Eigen::MatrixXcd B(4, 2);
            for (int i = 0; i < 8; ++i)
                B(i / 2, i % 2) = std::complex<double>(rs.uniform(-1, 1), rs.uniform(-1, 1));
            const Eigen::MatrixXcd X = B * B.adjoint();
            const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(X);
            const auto sv = svd.singularValues();
            const double want = sv.sum() - sv.maxCoeff();
            CHECK(rank_one_gap(X) == doctest::Approx(want).epsilon(1e-9));
        }
    }
    SUBCASE("non-psd input is rejected") {
        Eigen::MatrixXd neg(2, 2);
        neg << 1.0, 0.0, 0.0, -0.5;
        CHECK_THROWS_AS(rank_one_gap(neg), OracleError);
    }
}
