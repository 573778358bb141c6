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

#include "pincast/oracle.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace pincast::oracle {

using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

std::vector<double> position_grid(double L, double resolution) {
    // Anchored at zero so halving the resolution nests the grids.
    std::vector<double> g;
    const int n = static_cast<int>(std::floor(L / resolution));
    g.reserve(n + 1);
    for (int i = 0; i <= n; ++i)
        g.push_back(i * resolution);
    return g;
}

// All per-guide layouts over the grid that satisfy the spacing constraint.
void enumerate_layouts(const std::vector<double>& grid, int M, double gamma,
                       std::vector<std::vector<double>>& out) {
    if (M == 1) {
        for (double x : grid)
            out.push_back({x});
        return;
    }
    // M == 2 under the N*M <= 2 guard
    for (size_t i = 0; i < grid.size(); ++i)
        for (size_t j = i + 1; j < grid.size(); ++j)
            if (grid[j] - grid[i] >= gamma)
                out.push_back({grid[i], grid[j]});
}

} // namespace

GridResult grid_search_tiny(const model::SystemConfig& cfg, const model::UserSet& users,
                            double resolution) {
    const int N = cfg.N();
    const int M = cfg.M;
    const int K = users.K();
    if (N * M > 2 || K > 2)
        throw OracleError("grid_search_tiny refuses instances beyond N*M <= 2, K <= 2");
    if (resolution <= 0.0)
        throw OracleError("resolution must be positive");

    const auto grid = position_grid(cfg.L, resolution);
    std::vector<std::vector<double>> per_guide_layouts;
    enumerate_layouts(grid, M, cfg.gamma, per_guide_layouts);

    constexpr int kPowerSteps = 20;
    constexpr int kPhaseSteps = 32;

    GridResult best;
    best.t = -1.0;

    // Beamformer candidates: the full budget for N == 1, or a 20-step power
    // split with 32 relative phases for N == 2.
    std::vector<VectorXcd> beams;
    if (N == 1) {
        VectorXcd w(1);
        w << std::sqrt(cfg.P_max);
        beams.push_back(w);
    } else {
        for (int s = 0; s <= kPowerSteps; ++s) {
            const double frac = static_cast<double>(s) / kPowerSteps;
            for (int ph = 0; ph < kPhaseSteps; ++ph) {
                const double angle = 2.0 * M_PI * ph / kPhaseSteps;
                VectorXcd w(2);
                w[0] = std::sqrt(cfg.P_max * (1.0 - frac));
                w[1] = std::sqrt(cfg.P_max * frac) *
                       std::complex<double>(std::cos(angle), std::sin(angle));
                beams.push_back(w);
                if (s == 0 || s == kPowerSteps)
                    break; // phase is irrelevant when one side is dark
            }
        }
    }

    model::PinLayout layout;
    layout.x.resize(N, M);
    Eigen::MatrixXd p(N, M);

    std::vector<double> fracs(kPowerSteps + 1);
    for (int i = 0; i <= kPowerSteps; ++i)
        fracs[i] = static_cast<double>(i) / kPowerSteps;

    // Sequential power fractions: element m takes a fraction of whatever is
    // still available given elements 1..m-1.
    auto evaluate_powers = [&](const VectorXcd& w, auto&& self, int n, int m) -> void {
        if (n == N) {
            const auto bundle = model::effective_channels(cfg, layout, p, w, users);
            const double t = model::min_snr(bundle, w, cfg);
            if (t > best.t) {
                best.t = t;
                best.layout = layout;
                best.p = p;
                best.w = w;
            }
            return;
        }
        const int nn = m + 1 < M ? n : n + 1;
        const int nm = m + 1 < M ? m + 1 : 0;
        const double avail =
            model::max_available_power(cfg, w[n], layout.x.row(n), p.row(n), m);
        for (double f : fracs) {
            p(n, m) = f * std::max(0.0, avail);
            self(w, self, nn, nm);
        }
    };

    const size_t n_layouts = per_guide_layouts.size();
    std::vector<size_t> pick(N, 0);
    while (true) {
        for (int n = 0; n < N; ++n)
            for (int m = 0; m < M; ++m)
                layout.x(n, m) = per_guide_layouts[pick[n]][m];
        for (const auto& w : beams) {
            p.setZero();
            evaluate_powers(w, evaluate_powers, 0, 0);
        }
        int carry = N - 1;
        while (carry >= 0 && ++pick[static_cast<size_t>(carry)] == n_layouts) {
            pick[static_cast<size_t>(carry)] = 0;
            --carry;
        }
        if (carry < 0)
            break;
    }
    return best;
}

std::pair<double, double> tiny_analytic_optimum(const model::SystemConfig& cfg,
                                                const Eigen::Vector2d& user) {
    if (cfg.N() != 1 || cfg.M != 1)
        throw OracleError("tiny_analytic_optimum is defined for N = M = 1");
    const double alpha = model::attenuation_constant(cfg);
    const double s_hat = (user[1] - cfg.D[0]) * (user[1] - cfg.D[0]) + cfg.d * cfg.d;

    auto value = [&](double x) {
        const double dist2 = (x - user[0]) * (x - user[0]) + s_hat;
        return std::exp(-2.0 * alpha * x) / dist2;
    };

    std::vector<double> candidates = {0.0, cfg.L};
    if (alpha > 0.0) {
        // Stationary points of log value: alpha*delta^2 + delta + alpha*s_hat = 0.
        const double disc = 1.0 - 4.0 * alpha * alpha * s_hat;
        if (disc >= 0.0) {
            const double r = std::sqrt(disc);
            for (double delta : {(-1.0 + r) / (2.0 * alpha), (-1.0 - r) / (2.0 * alpha)}) {
                const double x = user[0] + delta;
                if (x > 0.0 && x < cfg.L)
                    candidates.push_back(x);
            }
        }
    } else {
        candidates.push_back(std::clamp(user[0], 0.0, cfg.L));
    }

    double best_x = candidates[0];
    double best_v = value(candidates[0]);
    for (double x : candidates) {
        if (value(x) > best_v) {
            best_v = value(x);
            best_x = x;
        }
    }
    const double t = cfg.P_max * cfg.eta() * best_v / cfg.sigma2[0];
    return {best_x, t};
}

namespace {

CheckReport run_check(const Fn& f, const SurrogateBuilder& surrogate, const PairSampler& sampler,
                      int n, std::uint64_t seed, double tol, double sign) {
    CheckReport rep;
    rep.samples = n;
    auto rs = rng::substream(seed, {0x5u});
    for (int i = 0; i < n; ++i) {
        const auto [x0, x] = sampler(rs);
        const Fn s = surrogate(x0);
        // sign = +1: minorizer (s <= f); sign = -1: majorizer (s >= f)
        const double trespass = sign * (s(x) - f(x));
        if (trespass > tol) {
            ++rep.violations;
            rep.max_violation = std::max(rep.max_violation, trespass);
        }
        rep.max_expansion_gap = std::max(rep.max_expansion_gap, std::abs(s(x0) - f(x0)));
    }
    return rep;
}

template <typename Matrix> double rank_one_gap_impl(const Matrix& X, double psd_tol) {
    if (X.rows() != X.cols())
        throw OracleError("rank_one_gap needs a square matrix");
    const double scale = std::max(1.0, X.cwiseAbs().maxCoeff());
    if ((Matrix(X - X.adjoint())).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw OracleError("rank_one_gap needs a Hermitian matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> es(X, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = es.eigenvalues();
    if (ev.minCoeff() < -psd_tol * scale)
        throw OracleError("rank_one_gap needs a PSD matrix");
    // PSD: singular values equal eigenvalues.
    return ev.sum() - ev.maxCoeff();
}

} // namespace

CheckReport check_minorizer(const Fn& f, const SurrogateBuilder& surrogate,
                            const PairSampler& sampler, int n, std::uint64_t seed, double tol) {
    return run_check(f, surrogate, sampler, n, seed, tol, +1.0);
}

CheckReport check_majorizer(const Fn& f, const SurrogateBuilder& surrogate,
                            const PairSampler& sampler, int n, std::uint64_t seed, double tol) {
    return run_check(f, surrogate, sampler, n, seed, tol, -1.0);
}

double rank_one_gap(const Eigen::MatrixXcd& X, double psd_tol) {
    return rank_one_gap_impl(X, psd_tol);
}
double rank_one_gap(const Eigen::MatrixXd& X, double psd_tol) {
    return rank_one_gap_impl(X, psd_tol);
}

} // namespace pincast::oracle
