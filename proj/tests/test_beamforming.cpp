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

#include <complex>

using namespace pincast;
using namespace pincast::optim;
using cplx = std::complex<double>;

namespace {

model::SystemConfig cfg_for(int N, int K, double p_max) {
    auto cfg = model::SystemConfig::defaults(N, 1, K, p_max);
    cfg.sigma2 = Eigen::VectorXd::Constant(K, 1.0);
    return cfg;
}

model::ChannelBundle bundle_from(const Eigen::MatrixXcd& beta) {
    model::ChannelBundle b;
    b.beta = beta;
    return b;
}

double min_snr(const Eigen::MatrixXcd& beta, const Eigen::VectorXcd& w,
               const Eigen::VectorXd& sigma2) {
    double t = std::numeric_limits<double>::infinity();
    for (int k = 0; k < beta.rows(); ++k)
        t = std::min(t, std::norm(cplx(beta.row(k).dot(w))) / sigma2[k]);
    return t;
}

} // namespace

TEST_CASE("scalar full-power transmission") {
    auto cfg = cfg_for(1, 1, 4.0);
    Eigen::MatrixXcd beta(1, 1);
    beta << 1.0;
    Eigen::VectorXcd w0(1);
    w0 << 1.0;
    const auto res = solve_beamforming(bundle_from(beta), cfg, {}, w0);
    CHECK(!res.degraded);
    CHECK(std::abs(res.w[0]) == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(res.t == doctest::Approx(4.0).epsilon(1e-5));
}

TEST_CASE("orthogonal users split the budget evenly") {
    auto cfg = cfg_for(2, 2, 1.0);
    Eigen::MatrixXcd beta(2, 2);
    beta << 1.0, 0.0, 0.0, 1.0;
    Eigen::VectorXcd w0(2);
    w0 << cplx(0.8, 0.0), cplx(0.5, 0.1); // asymmetric feasible start
    w0 *= std::sqrt(cfg.P_max) / w0.norm() * 0.99;
    MmSettings st;
    st.inner_tol = 1e-7;
    st.inner_max_iters = 100;
    const auto res = solve_beamforming(bundle_from(beta), cfg, st, w0);
    CHECK(res.t == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(std::abs(res.w[0]) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-2));
    CHECK(std::abs(res.w[1]) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-2));
}

TEST_CASE("random instance beats a large random search") {
    const int N = 3, K = 4;
    auto cfg = cfg_for(N, K, 1.0);
    auto rs = rng::substream(21, {1});
    Eigen::MatrixXcd beta(K, N);
    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n)
            beta(k, n) = cplx(rs.uniform(-1, 1), rs.uniform(-1, 1));

    Eigen::VectorXcd w0 = Eigen::VectorXcd::Constant(N, std::sqrt(cfg.P_max / N));
    MmSettings st;
    st.inner_tol = 1e-6;
    st.inner_max_iters = 100;
    const auto res = solve_beamforming(bundle_from(beta), cfg, st, w0);

    double oracle_t = 0.0;
    auto rs2 = rng::substream(21, {2});
    for (int trial = 0; trial < 1000000; ++trial) {
        Eigen::VectorXcd w(N);
        for (int n = 0; n < N; ++n)
            w[n] = cplx(rs2.normal(), rs2.normal());
        w *= std::sqrt(cfg.P_max) / w.norm();
        oracle_t = std::max(oracle_t, min_snr(beta, w, cfg.sigma2));
    }
    CHECK(res.t >= oracle_t - 1e-6);
}

TEST_CASE("monotone inner trajectory") {
    const int N = 2, K = 3;
    auto cfg = cfg_for(N, K, 1.0);
    auto rs = rng::substream(21, {3});
    Eigen::MatrixXcd beta(K, N);
    for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n)
            beta(k, n) = cplx(rs.uniform(-1, 1), rs.uniform(-1, 1));
    Eigen::VectorXcd w0 = Eigen::VectorXcd::Constant(N, std::sqrt(cfg.P_max / N));
    std::vector<double> ts;
    const auto res = solve_beamforming(bundle_from(beta), cfg, {}, w0,
                                       [&](const TraceRecord& r) { ts.push_back(r.t); });
    CHECK(!ts.empty());
    for (size_t i = 1; i < ts.size(); ++i)
        CHECK(ts[i] >= ts[i - 1] - 1e-6);
    CHECK(res.t >= min_snr(beta, w0, cfg.sigma2));
}

TEST_CASE("error paths") {
    auto cfg = cfg_for(2, 1, 1.0);
    Eigen::MatrixXcd beta(1, 2);
    beta << 1.0, -1.0;
    SUBCASE("budget violation is rejected") {
        Eigen::VectorXcd w0 = Eigen::VectorXcd::Constant(2, 10.0);
        CHECK_THROWS_AS(solve_beamforming(bundle_from(beta), cfg, {}, w0), OptimError);
    }
    SUBCASE("vanishing projection recovers by perturbation") {
        // beta^H w0 = 0 for the symmetric start; the retry contract applies
        Eigen::VectorXcd w0 = Eigen::VectorXcd::Constant(2, std::sqrt(0.5));
        const auto res = solve_beamforming(bundle_from(beta), cfg, {}, w0);
        CHECK(res.t > 0.1); // optimum is 2 with opposed phases
    }
}
