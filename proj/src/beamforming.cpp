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

using Eigen::VectorXcd;
using Eigen::VectorXd;
using model::cplx;

namespace {

double min_snr_of(const model::ChannelBundle& bundle, const VectorXcd& w,
                  const model::SystemConfig& cfg) {
    double t = std::numeric_limits<double>::infinity();
    for (int k = 0; k < bundle.K(); ++k)
        t = std::min(t, std::norm(cplx(bundle.beta.row(k).dot(w))) / cfg.sigma2[k]);
    return t;
}

} // namespace

BeamformingResult solve_beamforming(const model::ChannelBundle& bundle,
                                    const model::SystemConfig& cfg, const MmSettings& settings,
                                    const VectorXcd& w_init, const TraceSink& sink, int round) {
    const int N = bundle.N();
    const int K = bundle.K();
    if (w_init.size() != N)
        throw OptimError("w_init length mismatch");
    if (w_init.squaredNorm() > cfg.P_max * (1.0 + 1e-9))
        throw OptimError("w_init violates the power budget");

    const double beta_scale = bundle.beta.cwiseAbs().maxCoeff();

    // A vanishing projection makes the first linearization infeasible; nudge
    // toward the affected user's channel and retry once.
    VectorXcd w = w_init;
    for (int attempt = 0;; ++attempt) {
        bool any_zero = false;
        for (int k = 0; k < K; ++k) {
            const cplx rx = bundle.beta.row(k).dot(w);
            if (std::abs(rx) <= 1e-9 * beta_scale * std::sqrt(cfg.P_max)) {
                any_zero = true;
                const VectorXcd beta_k = bundle.beta.row(k).transpose();
                const double norm_k = beta_k.norm();
                if (norm_k > 0.0)
                    w += 1e-3 * std::sqrt(cfg.P_max / N) * (beta_k / norm_k);
            }
        }
        if (!any_zero)
            break;
        if (attempt >= 1)
            throw OptimError("projection vanished for some user after perturbation");
        const double nw = w.norm();
        if (nw > 0.0)
            w *= std::sqrt(cfg.P_max) / nw;
    }

    BeamformingResult best;
    best.w = w;
    best.t = min_snr_of(bundle, w, cfg);

    double t_prev = best.t;
    const double w_budget = std::sqrt(cfg.P_max);

    for (int it = 0; it < settings.inner_max_iters; ++it) {
        VectorXd rhat(K), rbar(K);
        for (int k = 0; k < K; ++k) {
            const cplx rx = bundle.beta.row(k).dot(w);
            rhat[k] = rx.real();
            rbar[k] = rx.imag();
        }
        const double t_ref = std::max(best.t, 1e-30);

        conic::ConicProblem prob;
        auto wr = prob.add_vector(N);
        auto wi = prob.add_vector(N);
        auto tv = prob.add_scalar(); // worst SNR in units of t_ref

        // budget cone: sqrt(P_max) >= ||(wr, wi)||
        {
            std::vector<conic::LinExpr> rows;
            rows.push_back(conic::LinExpr(w_budget));
            for (int n = 0; n < N; ++n)
                rows.push_back(prob.var(wr, n));
            for (int n = 0; n < N; ++n)
                rows.push_back(prob.var(wi, n));
            prob.add_second_order(std::move(rows));
        }

        // linearized worst-SNR rows, one per user, normalized by their level
        for (int k = 0; k < K; ++k) {
            conic::LinExpr re, im;
            for (int n = 0; n < N; ++n) {
                const cplx b = bundle.beta(k, n);
                re += b.real() * prob.var(wr, n) + b.imag() * prob.var(wi, n);
                im += b.real() * prob.var(wi, n) - b.imag() * prob.var(wr, n);
            }
            const double level = rhat[k] * rhat[k] + rbar[k] * rbar[k];
            conic::LinExpr row = 2.0 * rhat[k] * re + 2.0 * rbar[k] * im -
                                 (cfg.sigma2[k] * t_ref) * prob.var(tv) - conic::LinExpr(level);
            prob.add_nonneg(row * (1.0 / std::max(level, 1e-300)));
        }
        prob.set_objective_maximize(prob.var(tv));

        conic::SolverSettings ss;
        ss.max_iters = 400;
        ss.tol_gap = 1e-6;
        ss.tol_feas = 1e-6;
        // strictly interior start: shrink the current point a touch
        {
            VectorXd start(prob.n_slots());
            const double shrink = 1.0 - 1e-6;
            for (int n = 0; n < N; ++n) {
                start[prob.slot(wr, n)] = shrink * w[n].real();
                start[prob.slot(wi, n)] = shrink * w[n].imag();
            }
            start[prob.slot(tv)] = (1.0 - 1e-4) * shrink * shrink;
            ss.start = start;
        }

        const auto res = conic::solve(prob, ss);
        if (res.status != conic::SolveStatus::Optimal) {
            best.degraded = true;
            break;
        }

        VectorXcd w_new(N);
        for (int n = 0; n < N; ++n)
            w_new[n] = cplx(res.x[prob.slot(wr, n)], res.x[prob.slot(wi, n)]);
        const double t_true = min_snr_of(bundle, w_new, cfg);
        ++best.iterations;

        if (t_true < best.t)
            break; // solver noise; keep the monotone iterate
        best.t = t_true;
        best.w = w_new;
        w = w_new;
        if (sink)
            sink({round, "beamforming", it, t_true, 0.0, 0.0});
        if (std::abs(t_true - t_prev) <= settings.inner_tol * std::max(t_true, 1e-30))
            break;
        t_prev = t_true;
    }
    return best;
}

} // namespace pincast::optim
