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

#include "pincast/conic.hpp"
#include "pincast/optim.hpp"

#include <cmath>

namespace pincast::optim {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using model::cplx;

namespace {

// Received projection of user k as a function of element amplitudes:
// sum over (n, m) of conj(hbar_k(n, m)) * a(n, m). Equals beta_k^H w when
// a = sqrt(p).
cplx projection(const Eigen::MatrixXcd& hbar_k, const MatrixXd& a) {
    cplx acc = 0.0;
    for (int n = 0; n < a.rows(); ++n)
        for (int m = 0; m < a.cols(); ++m)
            acc += std::conj(hbar_k(n, m)) * a(n, m);
    return acc;
}

double min_snr_amp(const std::vector<Eigen::MatrixXcd>& hbar, const MatrixXd& a,
                   const model::SystemConfig& cfg) {
    double t = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < hbar.size(); ++k)
        t = std::min(t, std::norm(projection(hbar[k], a)) / cfg.sigma2[static_cast<int>(k)]);
    return t;
}

} // namespace

model::ResourceState default_init(const model::SystemConfig& cfg) {
    const int N = cfg.N();
    const int M = cfg.M;
    if (cfg.L / M < cfg.gamma)
        throw OptimError("guide too short for the uniform layout at this spacing");

    model::ResourceState st;
    st.w = Eigen::VectorXcd::Constant(N, std::sqrt(cfg.P_max / N));
    st.layout.x.resize(N, M);
    for (int n = 0; n < N; ++n)
        for (int m = 0; m < M; ++m)
            st.layout.x(n, m) = (m + 0.5) * cfg.L / M;
    st.p.setZero(N, M);
    for (int n = 0; n < N; ++n) {
        for (int m = 0; m < M; ++m) {
            const double avail =
                model::max_available_power(cfg, st.w[n], st.layout.x.row(n), st.p.row(n), m);
            // half of an equal split of whatever still flows past this element
            st.p(n, m) = 0.5 * std::max(0.0, avail) / (M - m);
        }
    }
    return st;
}

Eigen::MatrixXd clamp_powers(const model::SystemConfig& cfg, const Eigen::VectorXcd& w,
                             const model::PinLayout& layout, const Eigen::MatrixXd& p) {
    MatrixXd out = p;
    for (int n = 0; n < layout.N(); ++n) {
        for (int m = 0; m < layout.M(); ++m) {
            const double avail =
                model::max_available_power(cfg, w[n], layout.x.row(n), out.row(n), m);
            out(n, m) = std::clamp(out(n, m), 0.0, std::max(0.0, avail));
        }
    }
    return out;
}

PowerResult solve_power_allocation(const model::SystemConfig& cfg,
                                   const model::PinLayout& layout, const Eigen::VectorXcd& w,
                                   const model::UserSet& users, const MmSettings& settings,
                                   const Eigen::MatrixXd& p_init, const TraceSink& sink,
                                   int round) {
    const int N = layout.N();
    const int M = layout.M();
    const int K = users.K();
    const double alpha = model::attenuation_constant(cfg);

    // feasibility of the start: in-range against the sequential bound
    for (int n = 0; n < N; ++n) {
        for (int m = 0; m < M; ++m) {
            const double avail =
                model::max_available_power(cfg, w[n], layout.x.row(n), p_init.row(n), m);
            if (p_init(n, m) < -1e-12 || p_init(n, m) > avail + 1e-9 * std::max(1.0, avail))
                throw OptimError("p_init violates the available-power bound");
        }
    }

    // effective per-element channels (independent of p)
    const auto bundle = model::effective_channels(cfg, layout, p_init, w, users);
    const auto& hbar = bundle.hbar;

    MatrixXd a = p_init.cwiseMax(0.0).cwiseSqrt();

    // zero-projection jitter: blend toward the interior default, retry once
    for (int attempt = 0;; ++attempt) {
        bool any_zero = false;
        double c_scale = 0.0;
        for (int k = 0; k < K; ++k)
            c_scale = std::max(c_scale, std::abs(projection(hbar[k], a)));
        for (int k = 0; k < K; ++k)
            if (std::abs(projection(hbar[k], a)) <= 1e-9 * std::max(c_scale, 1e-300))
                any_zero = true;
        if (!any_zero)
            break;
        if (attempt >= 1)
            throw OptimError("projection vanished for some user after jitter");
        MatrixXd p_ref(N, M);
        p_ref.setZero();
        for (int n = 0; n < N; ++n)
            for (int m = 0; m < M; ++m) {
                const double avail =
                    model::max_available_power(cfg, w[n], layout.x.row(n), p_ref.row(n), m);
                p_ref(n, m) = 0.5 * std::max(0.0, avail) / (M - m);
            }
        a = (0.5 * a.array().square() + 0.5 * p_ref.array()).sqrt().matrix();
    }

    PowerResult best;
    best.p = a.array().square().matrix();
    best.t = min_snr_amp(hbar, a, cfg);
    double t_prev = best.t;

    for (int it = 0; it < settings.inner_max_iters; ++it) {
        std::vector<cplx> c0(K);
        for (int k = 0; k < K; ++k)
            c0[k] = projection(hbar[k], a);
        const double t_ref = std::max(best.t, 1e-30);

        conic::ConicProblem prob;
        auto av = prob.add_vector(N * M);
        auto tv = prob.add_scalar();
        auto idx = [M](int n, int m) { return n * M + m; };

        for (int i = 0; i < N * M; ++i)
            prob.add_nonneg(prob.var(av, i));

        // sequential available-power bounds as norm cones:
        // || e^{-alpha (x_m - x_t)} a_t, t <= m || <= |w_n| e^{-alpha x_m}
        for (int n = 0; n < N; ++n) {
            for (int m = 0; m < M; ++m) {
                std::vector<conic::LinExpr> rows;
                rows.push_back(
                    conic::LinExpr(std::abs(w[n]) * std::exp(-alpha * layout.x(n, m))));
                for (int t = 0; t <= m; ++t)
                    rows.push_back(std::exp(-alpha * (layout.x(n, m) - layout.x(n, t))) *
                                   prob.var(av, idx(n, t)));
                prob.add_second_order(std::move(rows));
            }
        }

        // linearized projection rows per user
        for (int k = 0; k < K; ++k) {
            const double level = std::norm(c0[k]);
            conic::LinExpr lin; // Re(conj(c0) * c(a))
            for (int n = 0; n < N; ++n)
                for (int m = 0; m < M; ++m)
                    lin += (std::conj(c0[k]) * std::conj(hbar[k](n, m))).real() *
                           prob.var(av, idx(n, m));
            conic::LinExpr row = 2.0 * lin - (cfg.sigma2[k] * t_ref) * prob.var(tv) -
                                 conic::LinExpr(level);
            prob.add_nonneg(row * (1.0 / std::max(level, 1e-300)));
        }
        prob.set_objective_maximize(prob.var(tv));

        conic::SolverSettings ss;
        ss.max_iters = 400;
        ss.tol_gap = 1e-6;
        ss.tol_feas = 1e-6;
        {
            // interior start: pull amplitudes toward the half-split reference
            VectorXd start = VectorXd::Zero(prob.n_slots());
            bool ok = true;
            MatrixXd a_start = a;
            for (int n = 0; n < N && ok; ++n) {
                Eigen::VectorXd p_row = Eigen::VectorXd::Zero(M);
                for (int m = 0; m < M; ++m) {
                    const double avail = model::max_available_power(
                        cfg, w[n], layout.x.row(n), p_row, m);
                    if (avail <= 0.0) {
                        ok = false;
                        break;
                    }
                    const double p_cur = a(n, m) * a(n, m);
                    const double p_int = 0.25 * avail / (M - m);
                    p_row[m] = std::min(0.98 * p_cur + 0.02 * p_int, 0.999 * avail);
                    a_start(n, m) = std::sqrt(std::max(p_row[m], 1e-18 * cfg.P_max));
                    p_row[m] = a_start(n, m) * a_start(n, m);
                }
            }
            if (ok) {
                for (int n = 0; n < N; ++n)
                    for (int m = 0; m < M; ++m)
                        start[prob.slot(av, idx(n, m))] = a_start(n, m);
                const double t_at_start = min_snr_amp(hbar, a_start, cfg);
                start[prob.slot(tv)] = 0.99 * t_at_start / t_ref;
                ss.start = start;
            }
        }

        const auto res = conic::solve(prob, ss);
        if (res.status != conic::SolveStatus::Optimal) {
            best.degraded = true;
            break;
        }

        MatrixXd a_new(N, M);
        for (int n = 0; n < N; ++n)
            for (int m = 0; m < M; ++m)
                a_new(n, m) = std::max(0.0, res.x[prob.slot(av, idx(n, m))]);
        const double t_true = min_snr_amp(hbar, a_new, cfg);
        ++best.iterations;

        if (t_true < best.t)
            break;
        best.t = t_true;
        best.p = a_new.array().square().matrix();
        a = a_new;
        if (sink)
            sink({round, "power", it, t_true, 0.0, 0.0});
        if (std::abs(t_true - t_prev) <= settings.inner_tol * std::max(t_true, 1e-30))
            break;
        t_prev = t_true;
    }
    return best;
}

} // namespace pincast::optim
