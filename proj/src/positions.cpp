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
//
// Element-position subproblem. Positions enter the worst-SNR constraint
// through path-loss matrices F_k = f_k f_k^T and phase matrices A_k = a_k
// a_k^H; the difference-of-convex pieces are linearized at the incumbent and
// the equality couplings between x, diag(F), theta and the first column of A
// are driven tight by one penalty weight on slacks and the trigonometric
// penalty. Literally intersecting both linearized sides of each equality
// coupling would pin the iterate at its expansion point (the tangent chain
// collapses the feasible set to one point), so the slack variables are what
// keep the iteration alive; they vanish as the penalty weight grows.

#include "pincast/conic.hpp"
#include "pincast/optim.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace pincast::optim {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using model::cplx;

namespace {

void clip_layout_row(Eigen::Ref<VectorXd> row, double L, double gamma);

// strict-lower-triangle index for the imaginary parts of A
int y_index(int i, int j) { return i * (i - 1) / 2 + j; }

double phi_penalty(double re, double im, double theta_hat) {
    const double a = re - std::cos(theta_hat);
    const double b = im + std::sin(theta_hat);
    return a * a + b * b;
}

struct Violations {
    double phi = 0.0;     // worst trigonometric penalty term
    double c7_rel = 0.0;  // worst relative distance-consistency residual
    double c9_rad = 0.0;  // worst phase-consistency residual (rad)
    double rank_rel = 0.0;
    double total_pen = 0.0; // sum of all penalty terms (merit bookkeeping)
    double max() const { return std::max(std::max(phi, c7_rel), std::max(c9_rad, rank_rel)); }
};

Violations measure(const PositionAuxiliaries& aux, const model::SystemConfig& cfg) {
    Violations v;
    const int MN = aux.MN();
    const int K = static_cast<int>(aux.F.size());
    const double lam = cfg.wavelength();
    const double lam_g = cfg.guide_wavelength();
    for (int k = 0; k < K; ++k) {
        for (int i = 1; i < MN; ++i) {
            const cplx a = aux.A[k](i, 0);
            const double p = phi_penalty(a.real(), a.imag(), aux.theta_hat(k, i));
            v.phi = std::max(v.phi, p);
            v.total_pen += p;
        }
        for (int l = 0; l < MN; ++l) {
            const int n = l / aux.M;
            const double z = std::max(aux.F[k](l, l), 1e-300);
            const double inv_z = 1.0 / z;
            const double dx = aux.x[l] - aux.users(k, 0);
            const double c7 = std::abs(dx * dx + aux.s_hat(k, n) - inv_z) /
                              std::max(inv_z, aux.s_hat(k, n));
            const double c9 = std::abs(aux.theta(k, l) - 2.0 * M_PI / lam / std::sqrt(z) -
                                       2.0 * M_PI / lam_g * aux.x[l]);
            v.c7_rel = std::max(v.c7_rel, c7);
            v.c9_rad = std::max(v.c9_rad, c9);
            v.total_pen += std::abs(dx * dx + aux.s_hat(k, n) - inv_z) + c9;
        }
        Eigen::SelfAdjointEigenSolver<MatrixXd> esF(aux.F[k], Eigen::EigenvaluesOnly);
        const double gapF = (aux.F[k].trace() - esF.eigenvalues().maxCoeff()) /
                            std::max(esF.eigenvalues().maxCoeff(), 1e-300);
        Eigen::SelfAdjointEigenSolver<MatrixXcd> esA(aux.A[k], Eigen::EigenvaluesOnly);
        const double gapA = (aux.A[k].trace().real() - esA.eigenvalues().maxCoeff()) /
                            std::max(esA.eigenvalues().maxCoeff(), 1e-300);
        v.rank_rel = std::max(v.rank_rel, std::max(gapF, gapA));
        v.total_pen += gapF + gapA;
    }
    return v;
}

// min_k <F_k, C^H A_k C> / sigma_k^2 — the subproblem's own worst-SNR value
// at the current auxiliaries (equals the physical SNR at consistent points).
double aux_min_snr(const PositionAuxiliaries& aux, const model::SystemConfig& cfg) {
    const int MN = aux.MN();
    double t = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < aux.F.size(); ++k) {
        double inner = 0.0;
        for (int i = 0; i < MN; ++i)
            for (int j = 0; j < MN; ++j)
                inner += (aux.F[k](i, j) *
                          (std::conj(aux.c_diag[i]) * aux.A[k](i, j) * aux.c_diag[j]))
                             .real();
        t = std::min(t, inner / cfg.sigma2[static_cast<int>(k)]);
    }
    return t;
}

// Deterministic coordinate pattern search on the exact channel model. The
// cone iterations are only worth their cost for phase-consistent alignment;
// plain travel of the elements is orders of magnitude cheaper against the
// real objective, one evaluation being a handful of trigonometric calls.
template <typename Eval>
bool pattern_polish(const model::SystemConfig& cfg, model::PinLayout& layout, double& value,
                    const Eval& physical_t, double first_step) {
    const int N = layout.N();
    const int M = layout.M();
    bool improved_any = false;
    model::PinLayout trial = layout;
    for (double step = first_step; step >= cfg.wavelength() / 8.0; step *= 0.5) {
        for (int sweep = 0; sweep < 8; ++sweep) {
            bool improved = false;
            for (int n = 0; n < N; ++n) {
                for (int m = 0; m < M; ++m) {
                    for (double dir : {+1.0, -1.0}) {
                        trial.x = layout.x;
                        trial.x(n, m) += dir * step;
                        VectorXd row = trial.x.row(n);
                        clip_layout_row(row, cfg.L, cfg.gamma);
                        trial.x.row(n) = row;
                        if ((trial.x.row(n) - layout.x.row(n)).cwiseAbs().maxCoeff() == 0.0)
                            continue;
                        const double v = physical_t(trial);
                        if (v > value * (1.0 + 1e-12)) {
                            value = v;
                            layout.x = trial.x;
                            improved = true;
                            improved_any = true;
                            break;
                        }
                    }
                }
            }
            if (!improved)
                break;
        }
    }
    return improved_any;
}

// order-preserving projection onto the position box and spacing chain
void clip_layout_row(Eigen::Ref<VectorXd> row, double L, double gamma) {
    const int M = static_cast<int>(row.size());
    row[M - 1] = std::min(row[M - 1], L);
    for (int m = M - 2; m >= 0; --m)
        row[m] = std::min(row[m], row[m + 1] - gamma);
    row[0] = std::max(row[0], 0.0);
    for (int m = 1; m < M; ++m)
        row[m] = std::max(row[m], row[m - 1] + gamma);
}

} // namespace

PositionAuxiliaries PositionAuxiliaries::consistent(const model::SystemConfig& cfg,
                                                    const VectorXcd& w, const MatrixXd& p,
                                                    const model::PinLayout& layout,
                                                    const model::UserSet& users) {
    PositionAuxiliaries aux;
    aux.N = layout.N();
    aux.M = layout.M();
    const int MN = aux.MN();
    const int K = users.K();
    const double lam = cfg.wavelength();
    const double lam_g = cfg.guide_wavelength();
    const double sqrt_eta = std::sqrt(cfg.eta());

    aux.users = users.phi;
    aux.x.resize(MN);
    aux.c_diag.resize(MN);
    for (int n = 0; n < aux.N; ++n)
        for (int m = 0; m < aux.M; ++m) {
            const int l = l_index(n, m, aux.M);
            aux.x[l] = layout.x(n, m);
            aux.c_diag[l] = w[n] * sqrt_eta * std::sqrt(std::max(0.0, p(n, m)));
        }

    aux.s_hat.resize(K, aux.N);
    aux.theta.resize(K, MN);
    aux.F.assign(K, MatrixXd(MN, MN));
    aux.A.assign(K, MatrixXcd(MN, MN));
    for (int k = 0; k < K; ++k) {
        VectorXd f(MN);
        for (int n = 0; n < aux.N; ++n) {
            const double dy = users.phi(k, 1) - cfg.D[n];
            aux.s_hat(k, n) = dy * dy + cfg.d * cfg.d;
            for (int m = 0; m < aux.M; ++m) {
                const int l = l_index(n, m, aux.M);
                const double dx = users.phi(k, 0) - layout.x(n, m);
                const double r = std::sqrt(dx * dx + aux.s_hat(k, n));
                f[l] = 1.0 / r;
                aux.theta(k, l) = 2.0 * M_PI / lam * r + 2.0 * M_PI / lam_g * layout.x(n, m);
            }
        }
        aux.F[k] = f * f.transpose();
        for (int i = 0; i < MN; ++i)
            for (int j = 0; j < MN; ++j) {
                const double d = aux.theta(k, i) - aux.theta(k, j);
                aux.A[k](i, j) = cplx(std::cos(d), -std::sin(d));
            }
    }
    return aux;
}

ExtractionReport extract_positions(const PositionAuxiliaries& aux,
                                   const model::SystemConfig& cfg) {
    const int MN = aux.MN();
    const int K = static_cast<int>(aux.F.size());
    const double lam = cfg.wavelength();
    const double lam_g = cfg.guide_wavelength();

    VectorXd chosen(MN);
    for (int l = 0; l < MN; ++l) {
        const int n = l / aux.M;
        // candidate positions from each user's distance equation
        std::vector<double> cands;
        std::vector<std::pair<double, double>> branch(K); // per user both branches
        bool any = false;
        for (int k = 0; k < K; ++k) {
            const double z = aux.F[k](l, l);
            const double inv_z = 1.0 / std::max(z, 1e-300);
            const double val = inv_z - aux.s_hat(k, n);
            // mildly negative values are solver noise around the equality and
            // clamp to the closest physical point (directly under the user)
            if (val < -0.05 * std::max(inv_z, aux.s_hat(k, n))) {
                branch[k] = {std::nan(""), std::nan("")};
                continue;
            }
            any = true;
            const double off = std::sqrt(std::max(0.0, val));
            branch[k] = {aux.users(k, 0) - off, aux.users(k, 0) + off};
            cands.push_back(branch[k].first);
            cands.push_back(branch[k].second);
        }
        if (!any)
            throw OptimError("geometric inconsistency: no user admits a real position");

        auto c9_res = [&](int k, double x) {
            const double z = std::max(aux.F[k](l, l), 1e-300);
            return std::abs(aux.theta(k, l) - 2.0 * M_PI / lam / std::sqrt(z) -
                            2.0 * M_PI / lam_g * x);
        };

        if (K == 1) {
            // branch pick by the phase residual; exact ties go right of the user
            const auto [lo, hi] = branch[0];
            const double rl = c9_res(0, lo), rh = c9_res(0, hi);
            if (std::abs(rl - rh) <= 1e-12 * std::max(1.0, std::max(rl, rh)))
                chosen[l] = hi;
            else
                chosen[l] = rl < rh ? lo : hi;
            continue;
        }

        // least-squares agreement: seed from every candidate, assign each user
        // its closer branch, take the mean, score by SSE then phase residual
        double best_sse = std::numeric_limits<double>::infinity();
        double best_phase = std::numeric_limits<double>::infinity();
        double best_x = cands.front();
        for (double seed : cands) {
            double sum = 0.0;
            int cnt = 0;
            for (int k = 0; k < K; ++k) {
                if (std::isnan(branch[k].first))
                    continue;
                const double pick = std::abs(branch[k].first - seed) <=
                                            std::abs(branch[k].second - seed)
                                        ? branch[k].first
                                        : branch[k].second;
                sum += pick;
                ++cnt;
            }
            const double mean = sum / cnt;
            double sse = 0.0, phase = 0.0;
            for (int k = 0; k < K; ++k) {
                if (std::isnan(branch[k].first))
                    continue;
                const double pick = std::abs(branch[k].first - mean) <=
                                            std::abs(branch[k].second - mean)
                                        ? branch[k].first
                                        : branch[k].second;
                sse += (mean - pick) * (mean - pick);
                phase += c9_res(k, mean);
            }
            if (sse < best_sse - 1e-15 ||
                (std::abs(sse - best_sse) <= 1e-15 && phase < best_phase)) {
                best_sse = sse;
                best_phase = phase;
                best_x = mean;
            }
        }
        chosen[l] = best_x;
    }

    // order-preserving projection: backward caps then forward floors
    ExtractionReport rep;
    rep.layout.x.resize(aux.N, aux.M);
    for (int n = 0; n < aux.N; ++n) {
        VectorXd row(aux.M);
        for (int m = 0; m < aux.M; ++m)
            row[m] = chosen[PositionAuxiliaries::l_index(n, m, aux.M)];
        row[aux.M - 1] = std::min(row[aux.M - 1], cfg.L);
        for (int m = aux.M - 2; m >= 0; --m)
            row[m] = std::min(row[m], row[m + 1] - cfg.gamma);
        row[0] = std::max(row[0], 0.0);
        for (int m = 1; m < aux.M; ++m)
            row[m] = std::max(row[m], row[m - 1] + cfg.gamma);
        rep.layout.x.row(n) = row;
    }

    // residuals of the coupling equations at the projected layout
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < MN; ++l) {
            const int n = l / aux.M;
            const int m = l % aux.M;
            const double x = rep.layout.x(n, m);
            const double z = std::max(aux.F[k](l, l), 1e-300);
            const double inv_z = 1.0 / z;
            const double dx = x - aux.users(k, 0);
            rep.max_c7 = std::max(rep.max_c7, std::abs(dx * dx + aux.s_hat(k, n) - inv_z) /
                                                  std::max(inv_z, aux.s_hat(k, n)));
            rep.max_c9 =
                std::max(rep.max_c9, std::abs(aux.theta(k, l) - 2.0 * M_PI / lam / std::sqrt(z) -
                                              2.0 * M_PI / lam_g * x));
        }
    return rep;
}

namespace {

// One inner MM iterate: builds and solves the convexified subproblem at the
// expansion `aux`, returns the solved auxiliaries through `aux_new`.
struct IterateOutcome {
    bool solved = false;
    double objective = 0.0; // conic objective (t/t_ref minus penalties)
};

IterateOutcome solve_iterate(const model::SystemConfig& cfg, const PositionAuxiliaries& aux,
                             double rho, double t_ref, PositionAuxiliaries& aux_new) {
    const int MN = aux.MN();
    const int K = static_cast<int>(aux.F.size());
    const int n_y = MN * (MN - 1) / 2;
    const double lam = cfg.wavelength();
    const double lam_g = cfg.guide_wavelength();
    const double two_pi_lam = 2.0 * M_PI / lam;
    const double two_pi_lg = 2.0 * M_PI / lam_g;

    conic::ConicProblem prob;
    auto xv = prob.add_vector(MN);
    auto tv = prob.add_scalar();

    struct UserBlock {
        conic::VariableHandle F, X, Y, th, sv, vv, sl7a, sl7b, sl9b, rkF, rkA, qp;
    };
    std::vector<UserBlock> ub(K);
    for (int k = 0; k < K; ++k) {
        ub[k].F = prob.add_symmetric(MN);
        ub[k].X = prob.add_symmetric(MN);
        if (n_y > 0)
            ub[k].Y = prob.add_vector(n_y);
        ub[k].th = prob.add_vector(MN);
        ub[k].sv = prob.add_vector(MN);
        ub[k].vv = prob.add_vector(MN);
        ub[k].sl7a = prob.add_vector(MN);
        ub[k].sl7b = prob.add_vector(MN);
        ub[k].sl9b = prob.add_vector(MN);
        ub[k].rkF = prob.add_scalar();
        ub[k].rkA = prob.add_scalar();
        ub[k].qp = prob.add_scalar();
    }

    // shared position box and spacing
    for (int l = 0; l < MN; ++l) {
        prob.add_nonneg(prob.var(xv, l));
        prob.add_nonneg(conic::LinExpr(cfg.L) - prob.var(xv, l));
    }
    for (int n = 0; n < aux.N; ++n)
        for (int m = 0; m + 1 < aux.M; ++m) {
            const int l = PositionAuxiliaries::l_index(n, m, aux.M);
            prob.add_nonneg(prob.var(xv, l + 1) - prob.var(xv, l) - conic::LinExpr(cfg.gamma));
        }

    conic::LinExpr objective = prob.var(tv);

    for (int k = 0; k < K; ++k) {
        const MatrixXd& F0 = aux.F[k];
        const MatrixXcd& A0 = aux.A[k];
        const double x_k = aux.users(k, 0);

        // Diag(A) = 1 is part of A's definition (unit-modulus phase products);
        // leaving it free adds a scale direction the rank surrogate cannot
        // see. The diagonal entries are substituted as constants.
        auto Xe = [&](int i, int j) {
            return i == j ? conic::LinExpr(1.0) : prob.var(ub[k].X, i, j);
        };

        // Hermitian inner product helper: sum_ij Q_ij dA_ji as an affine
        // expression over (X, Y); Q must be Hermitian.
        auto herm_inner = [&](const MatrixXcd& Q) {
            conic::LinExpr e;
            double c0 = 0.0;
            for (int i = 0; i < MN; ++i) {
                c0 += Q(i, i).real() * (1.0 - A0(i, i).real());
                for (int j = 0; j < i; ++j) {
                    e += 2.0 * Q(i, j).real() * prob.var(ub[k].X, i, j);
                    e += 2.0 * Q(i, j).imag() * prob.var(ub[k].Y, y_index(i, j));
                    c0 -= 2.0 * (Q(i, j).real() * A0(i, j).real() +
                                 Q(i, j).imag() * A0(i, j).imag());
                }
            }
            return e + conic::LinExpr(c0);
        };

        // (C10): F_k >= 0
        {
            std::vector<conic::LinExpr> lower;
            lower.reserve(MN * (MN + 1) / 2);
            for (int i = 0; i < MN; ++i)
                for (int j = 0; j <= i; ++j)
                    lower.push_back(prob.var(ub[k].F, i, j));
            prob.add_psd(std::move(lower), MN);
        }
        // (C10) for A via the real lifting [[X, -Y], [Y, X]]
        {
            const int D = 2 * MN;
            std::vector<conic::LinExpr> lower;
            lower.reserve(D * (D + 1) / 2);
            for (int a = 0; a < D; ++a) {
                for (int b = 0; b <= a; ++b) {
                    if (a < MN) {
                        lower.push_back(Xe(a, b));
                    } else if (b < MN) {
                        const int i = a - MN, j = b;
                        if (i > j)
                            lower.push_back(prob.var(ub[k].Y, y_index(i, j)));
                        else if (i < j)
                            lower.push_back(-1.0 * prob.var(ub[k].Y, y_index(j, i)));
                        else
                            lower.push_back(conic::LinExpr(0.0));
                    } else {
                        lower.push_back(Xe(a - MN, b - MN));
                    }
                }
            }
            prob.add_psd(std::move(lower), D);
        }

        // Linearized worst-SNR cone: || mu F ||^2 + || (C/sqrt(mu))^H A C/sqrt(mu) ||^2
        // <= minorant - 2 sigma^2 t. The cross term, and with it the SNR, is
        // invariant under the (F, C) -> (mu F, C/sqrt(mu)) rescaling; choosing
        // mu to balance the two norms keeps the SNR out of the cancellation
        // floor of the Frobenius expansion.
        {
            MatrixXcd CAC(MN, MN);
            for (int i = 0; i < MN; ++i)
                for (int j = 0; j < MN; ++j)
                    CAC(i, j) = std::conj(aux.c_diag[i]) * A0(i, j) * aux.c_diag[j];
            const double mu =
                std::clamp(std::sqrt(CAC.norm() / std::max(F0.norm(), 1e-300)), 1e-9, 1e9);

            const MatrixXcd S0 = mu * F0.cast<cplx>() + (1.0 / mu) * CAC;
            MatrixXcd PA(MN, MN); // (C/sqrt(mu)) S0 (C/sqrt(mu))^H
            for (int i = 0; i < MN; ++i)
                for (int j = 0; j < MN; ++j)
                    PA(i, j) = aux.c_diag[i] * S0(i, j) * std::conj(aux.c_diag[j]) / mu;

            conic::LinExpr minorant(S0.squaredNorm());
            for (int i = 0; i < MN; ++i) {
                minorant += 2.0 * mu * S0(i, i).real() *
                            (prob.var(ub[k].F, i, i) - conic::LinExpr(F0(i, i)));
                for (int j = 0; j < i; ++j)
                    minorant += 4.0 * mu * S0(i, j).real() *
                                (prob.var(ub[k].F, i, j) - conic::LinExpr(F0(i, j)));
            }
            minorant += 2.0 * herm_inner(PA);

            std::vector<conic::LinExpr> y5;
            y5.reserve(MN * (MN + 1) / 2 + MN * MN);
            for (int i = 0; i < MN; ++i) {
                y5.push_back(mu * prob.var(ub[k].F, i, i));
                for (int j = 0; j < i; ++j)
                    y5.push_back(M_SQRT2 * mu * prob.var(ub[k].F, i, j));
            }
            for (int i = 0; i < MN; ++i) {
                const double ci = std::abs(aux.c_diag[i]);
                y5.push_back(conic::LinExpr(ci * ci / mu));
                for (int j = 0; j < i; ++j) {
                    const double wij = M_SQRT2 * ci * std::abs(aux.c_diag[j]) / mu;
                    y5.push_back(wij * prob.var(ub[k].X, i, j));
                    y5.push_back(wij * prob.var(ub[k].Y, y_index(i, j)));
                }
            }
            const conic::LinExpr u5 =
                minorant - (2.0 * cfg.sigma2[k] * t_ref) * prob.var(tv);
            const double scale5 = std::max(S0.squaredNorm(), 1e-12);
            prob.add_sq_leq(y5, u5, scale5);
        }

        for (int l = 0; l < MN; ++l) {
            const int n = l / aux.M;
            const double s_hat = aux.s_hat(k, n);
            const double z0 = std::max(F0(l, l), 1e-12);
            const double x0 = aux.x[l];

            // (C7a): (x - x_k)^2 <= [2/z0 - z/z0^2] - s_hat + slack
            {
                const conic::LinExpr q = conic::LinExpr(2.0 / z0 - s_hat) -
                                         (1.0 / (z0 * z0)) * prob.var(ub[k].F, l, l) +
                                         prob.var(ub[k].sl7a, l);
                std::vector<conic::LinExpr> y{prob.var(xv, l) - conic::LinExpr(x_k)};
                const double q0 = std::max(1.0 / z0 - s_hat, 1e-2);
                prob.add_sq_leq(y, q, q0);
            }
            // (C7b): 1/z <= s_hat + x_aff + slack, as z * q >= 1
            {
                const conic::LinExpr x_aff =
                    conic::LinExpr((x0 - x_k) * (x0 - x_k)) +
                    (2.0 * (x0 - x_k)) * (prob.var(xv, l) - conic::LinExpr(x0));
                const conic::LinExpr q = conic::LinExpr(s_hat) + x_aff + prob.var(ub[k].sl7b, l);
                const conic::LinExpr zs = (1.0 / z0) * prob.var(ub[k].F, l, l); // z/z0
                const conic::LinExpr qs = q * z0;                               // q*z0
                prob.add_second_order({zs + qs, conic::LinExpr(2.0), zs - qs});
            }
            // (C9a): v^2 <= z, v*s >= 1, theta >= (2pi/lam) s + (2pi/lam_g) x
            {
                std::vector<conic::LinExpr> yv{prob.var(ub[k].vv, l)};
                prob.add_sq_leq(yv, prob.var(ub[k].F, l, l), z0);
                const double rz = std::sqrt(z0);
                const conic::LinExpr vs = (1.0 / rz) * prob.var(ub[k].vv, l);
                const conic::LinExpr ss = rz * prob.var(ub[k].sv, l);
                prob.add_second_order({vs + ss, conic::LinExpr(2.0), vs - ss});
                prob.add_nonneg(prob.var(ub[k].vv, l));
                prob.add_nonneg(prob.var(ub[k].sv, l));
                prob.add_nonneg(prob.var(ub[k].th, l) - two_pi_lam * prob.var(ub[k].sv, l) -
                                two_pi_lg * prob.var(xv, l));
            }
            // (C9b): theta <= (2pi/lam)[z0^{-1/2} - z0^{-3/2}(z - z0)/2] +
            //        (2pi/lam_g) x + slack
            {
                const double inv_sqrt = 1.0 / std::sqrt(z0);
                conic::LinExpr zbar =
                    conic::LinExpr(two_pi_lam * inv_sqrt) -
                    (0.5 * two_pi_lam * inv_sqrt / z0) *
                        (prob.var(ub[k].F, l, l) - conic::LinExpr(z0));
                prob.add_nonneg(zbar + two_pi_lg * prob.var(xv, l) + prob.var(ub[k].sl9b, l) -
                                prob.var(ub[k].th, l));
            }
            prob.add_nonneg(prob.var(ub[k].sl7a, l));
            prob.add_nonneg(prob.var(ub[k].sl7b, l));
            prob.add_nonneg(prob.var(ub[k].sl9b, l));
        }

        // rank-one surrogates: trace minus linearized spectral norm <= slack
        {
            Eigen::SelfAdjointEigenSolver<MatrixXd> esF(F0);
            const VectorXd phiF = esF.eigenvectors().col(MN - 1);
            const double topF = esF.eigenvalues()[MN - 1];
            conic::LinExpr linF(topF);
            conic::LinExpr trF;
            for (int i = 0; i < MN; ++i) {
                trF += prob.var(ub[k].F, i, i);
                linF += phiF[i] * phiF[i] *
                        (prob.var(ub[k].F, i, i) - conic::LinExpr(F0(i, i)));
                for (int j = 0; j < i; ++j)
                    linF += 2.0 * phiF[i] * phiF[j] *
                            (prob.var(ub[k].F, i, j) - conic::LinExpr(F0(i, j)));
            }
            const double wF = 1.0 / std::max(F0.trace(), 1e-12);
            prob.add_nonneg((linF - trF + prob.var(ub[k].rkF)) * wF);
            prob.add_nonneg(prob.var(ub[k].rkF));

            Eigen::SelfAdjointEigenSolver<MatrixXcd> esA(A0);
            const VectorXcd phiA = esA.eigenvectors().col(MN - 1);
            const double topA = esA.eigenvalues()[MN - 1];
            const conic::LinExpr trA(static_cast<double>(MN)); // diag pinned at one
            const conic::LinExpr linA = conic::LinExpr(topA) + herm_inner(phiA * phiA.adjoint());
            const double wA = 1.0 / std::max(A0.trace().real(), 1e-12);
            prob.add_nonneg((linA - trA + prob.var(ub[k].rkA)) * wA);
            prob.add_nonneg(prob.var(ub[k].rkA));
        }

        // penalty majorizer (quadratic trust terms via one epigraph cone)
        {
            std::vector<conic::LinExpr> ypen;
            conic::LinExpr affine;
            for (int i = 1; i < MN; ++i) {
                const double re0 = A0(i, 0).real();
                const double im0 = A0(i, 0).imag();
                const double th0 = aux.theta_hat(k, i);
                const double rhat = re0 - std::cos(th0);
                const double ihat = im0 + std::sin(th0);
                const conic::LinExpr dre = prob.var(ub[k].X, i, 0) - conic::LinExpr(re0);
                const conic::LinExpr dim =
                    prob.var(ub[k].Y, y_index(i, 0)) - conic::LinExpr(im0);
                const conic::LinExpr dth = (prob.var(ub[k].th, i) - prob.var(ub[k].th, 0)) -
                                           conic::LinExpr(th0);
                affine += conic::LinExpr(phi_penalty(re0, im0, th0)) + 2.0 * rhat * dre +
                          2.0 * ihat * dim +
                          2.0 * (rhat * std::sin(th0) + ihat * std::cos(th0)) * dth;
                ypen.push_back(dre);
                ypen.push_back(dim);
                ypen.push_back(M_SQRT2 * dth);
            }
            if (!ypen.empty()) {
                prob.add_sq_leq(ypen, prob.var(ub[k].qp), 1.0);
                prob.add_nonneg(prob.var(ub[k].qp));
                objective -= rho * (affine + prob.var(ub[k].qp));
            }
            conic::LinExpr slacks = prob.var(ub[k].rkF) + prob.var(ub[k].rkA);
            for (int l = 0; l < MN; ++l)
                slacks += prob.var(ub[k].sl7a, l) + prob.var(ub[k].sl7b, l) +
                          prob.var(ub[k].sl9b, l);
            objective -= rho * slacks;
        }
    }
    prob.set_objective_maximize(objective);

    // group tags: shared (x, t) then one block per user
    {
        std::vector<int> groups(prob.n_slots(), -1);
        for (int k = 0; k < K; ++k) {
            auto tag = [&](const conic::VariableHandle& h) {
                for (int i = 0; i < h.size; ++i)
                    groups[h.offset + i] = k;
            };
            tag(ub[k].F);
            tag(ub[k].X);
            if (n_y > 0)
                tag(ub[k].Y);
            tag(ub[k].th);
            tag(ub[k].sv);
            tag(ub[k].vv);
            tag(ub[k].sl7a);
            tag(ub[k].sl7b);
            tag(ub[k].sl9b);
            tag(ub[k].rkF);
            tag(ub[k].rkA);
            tag(ub[k].qp);
        }
        prob.set_elimination_groups(std::move(groups));
    }

    // strictly interior start built from the expansion point; gap tolerance
    // two orders below the MM loop tolerance, per the solver-noise rationale
    conic::SolverSettings ss;
    ss.max_iters = 600;
    ss.tol_gap = 1e-6;
    ss.tol_feas = 1e-6;
    {
        VectorXd start = VectorXd::Zero(prob.n_slots());
        // positions: nudge strictly inside box and spacing
        VectorXd xs = aux.x;
        for (int n = 0; n < aux.N; ++n) {
            const double eps = std::min(1e-7 * cfg.L, 0.45 * cfg.gamma);
            for (int m = 0; m < aux.M; ++m) {
                const int l = PositionAuxiliaries::l_index(n, m, aux.M);
                xs[l] = std::clamp(xs[l], eps + m * (cfg.gamma + eps),
                                   cfg.L - eps - (aux.M - 1 - m) * (cfg.gamma + eps));
                if (m > 0)
                    xs[l] = std::max(xs[l],
                                     xs[PositionAuxiliaries::l_index(n, m - 1, aux.M)] +
                                         cfg.gamma + eps);
            }
        }
        for (int l = 0; l < MN; ++l)
            start[prob.slot(xv, l)] = xs[l];

        double t_cap = std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) {
            const double bumpF = 1e-7 * std::max(aux.F[k].trace() / MN, 1e-12);
            MatrixXd Fs = aux.F[k];
            Fs.diagonal().array() += bumpF;
            // identity mix keeps the pinned unit diagonal and makes A strictly PD
            MatrixXcd As = (1.0 - 1e-7) * aux.A[k] +
                           1e-7 * MatrixXcd::Identity(MN, MN);
            for (int i = 0; i < MN; ++i)
                for (int j = 0; j <= i; ++j) {
                    start[prob.slot(ub[k].F, i, j)] = Fs(i, j);
                    if (i != j)
                        start[prob.slot(ub[k].X, i, j)] = As(i, j).real();
                }
            for (int i = 0; i < MN; ++i)
                for (int j = 0; j < i; ++j)
                    start[prob.slot(ub[k].Y, y_index(i, j))] = As(i, j).imag();

            const double margin = 1e-5;
            for (int l = 0; l < MN; ++l) {
                const int n = l / aux.M;
                const double z = Fs(l, l);
                const double sq = std::sqrt(z);
                start[prob.slot(ub[k].vv, l)] = (1.0 - 1e-6) * sq;
                start[prob.slot(ub[k].sv, l)] = (1.0 + 1e-5) / ((1.0 - 1e-6) * sq);
                const double th_min = two_pi_lam * start[prob.slot(ub[k].sv, l)] +
                                      two_pi_lg * xs[l];
                start[prob.slot(ub[k].th, l)] =
                    std::max(aux.theta(k, l), th_min + margin);
                // slacks cover the violations the start itself produces
                const double z0 = std::max(aux.F[k](l, l), 1e-12);
                const double zaff = 2.0 / z0 - z / (z0 * z0);
                const double dx = xs[l] - aux.users(k, 0);
                start[prob.slot(ub[k].sl7a, l)] =
                    std::max(0.0, dx * dx + aux.s_hat(k, n) - zaff) + margin * aux.s_hat(k, n);
                const double xaff =
                    (aux.x[l] - aux.users(k, 0)) * (aux.x[l] - aux.users(k, 0)) +
                    2.0 * (aux.x[l] - aux.users(k, 0)) * (xs[l] - aux.x[l]);
                start[prob.slot(ub[k].sl7b, l)] =
                    std::max(0.0, 1.0 / z - aux.s_hat(k, n) - xaff) + margin * aux.s_hat(k, n);
                const double inv_sqrt0 = 1.0 / std::sqrt(z0);
                const double zbar =
                    two_pi_lam * (inv_sqrt0 - 0.5 * inv_sqrt0 / z0 * (z - z0));
                start[prob.slot(ub[k].sl9b, l)] =
                    std::max(0.0, start[prob.slot(ub[k].th, l)] - zbar - two_pi_lg * xs[l]) +
                    margin;
            }
            // rank slacks from the actual gaps of the started matrices
            {
                Eigen::SelfAdjointEigenSolver<MatrixXd> esF(Fs, Eigen::EigenvaluesOnly);
                const double gapF = Fs.trace() - esF.eigenvalues().maxCoeff();
                start[prob.slot(ub[k].rkF)] = gapF + margin * std::max(Fs.trace(), 1e-12);
                Eigen::SelfAdjointEigenSolver<MatrixXcd> esA(As, Eigen::EigenvaluesOnly);
                const double gapA = As.trace().real() - esA.eigenvalues().maxCoeff();
                start[prob.slot(ub[k].rkA)] =
                    gapA + margin * std::max(As.trace().real(), 1e-12);
            }
            // penalty epigraph above the started quadratic
            if (MN > 1) {
                double quad = 0.0;
                for (int i = 1; i < MN; ++i) {
                    const double dre = As(i, 0).real() - aux.A[k](i, 0).real();
                    const double dim = As(i, 0).imag() - aux.A[k](i, 0).imag();
                    const double dth = start[prob.slot(ub[k].th, i)] -
                                       start[prob.slot(ub[k].th, 0)] - aux.theta_hat(k, i);
                    quad += dre * dre + dim * dim + 2.0 * dth * dth;
                }
                start[prob.slot(ub[k].qp)] = quad + margin;
            }
            // worst-SNR cap from the started cone (same mu rescaling)
            {
                MatrixXcd CAC(MN, MN);
                for (int i = 0; i < MN; ++i)
                    for (int j = 0; j < MN; ++j)
                        CAC(i, j) =
                            std::conj(aux.c_diag[i]) * aux.A[k](i, j) * aux.c_diag[j];
                const double mu = std::clamp(
                    std::sqrt(CAC.norm() / std::max(aux.F[k].norm(), 1e-300)), 1e-9, 1e9);
                const MatrixXcd S0 = mu * aux.F[k].cast<cplx>() + (1.0 / mu) * CAC;
                double minor = S0.squaredNorm();
                for (int i = 0; i < MN; ++i) {
                    minor += 2.0 * mu * S0(i, i).real() * (Fs(i, i) - aux.F[k](i, i));
                    for (int j = 0; j < i; ++j)
                        minor += 4.0 * mu * S0(i, j).real() * (Fs(i, j) - aux.F[k](i, j));
                }
                MatrixXcd dA = As - aux.A[k];
                MatrixXcd PA(MN, MN);
                for (int i = 0; i < MN; ++i)
                    for (int j = 0; j < MN; ++j)
                        PA(i, j) = aux.c_diag[i] * S0(i, j) * std::conj(aux.c_diag[j]) / mu;
                minor += 2.0 * (PA * dA).trace().real();
                double norms = mu * mu * Fs.squaredNorm();
                for (int i = 0; i < MN; ++i)
                    for (int j = 0; j < MN; ++j)
                        norms += std::norm(std::conj(aux.c_diag[i]) * As(i, j) *
                                           aux.c_diag[j] / mu);
                t_cap = std::min(t_cap, (minor - norms) / (2.0 * cfg.sigma2[k] * t_ref));
            }
        }
        start[prob.slot(tv)] = t_cap - std::max(1e-6, 1e-4 * std::abs(t_cap));
        ss.start = start;
    }

    const auto res = conic::solve(prob, ss);
    IterateOutcome out;
    if (res.status != conic::SolveStatus::Optimal) {
        if (std::getenv("PINCAST_TRACE_SOLVER"))
            std::fprintf(stderr, "positions iterate: %s (%s), %d newton iters\n",
                         conic::to_string(res.status), res.message.c_str(), res.iterations);
        return out;
    }
    out.solved = true;
    out.objective = res.objective;

    aux_new = aux;
    for (int l = 0; l < MN; ++l)
        aux_new.x[l] = res.x[prob.slot(xv, l)];
    for (int k = 0; k < K; ++k) {
        for (int i = 0; i < MN; ++i)
            for (int j = 0; j <= i; ++j) {
                aux_new.F[k](i, j) = aux_new.F[k](j, i) = res.x[prob.slot(ub[k].F, i, j)];
                const double re = i == j ? 1.0 : res.x[prob.slot(ub[k].X, i, j)];
                const double im = i == j ? 0.0 : res.x[prob.slot(ub[k].Y, y_index(i, j))];
                aux_new.A[k](i, j) = cplx(re, im);
                aux_new.A[k](j, i) = cplx(re, -im);
            }
        for (int l = 0; l < MN; ++l)
            aux_new.theta(k, l) = res.x[prob.slot(ub[k].th, l)];
    }
    return out;
}

} // namespace

PositionsResult solve_positions(const model::SystemConfig& cfg, const VectorXcd& w,
                                const MatrixXd& p, const model::UserSet& users,
                                const MmSettings& settings, const PenaltySettings& penalty,
                                const model::PinLayout& layout_init, const TraceSink& sink,
                                int round) {
    {
        model::ResourceState probe{w, MatrixXd::Zero(layout_init.N(), layout_init.M()),
                                   layout_init};
        const auto rep = model::feasibility_check(probe, cfg);
        if (rep.c1 < -1e-9 || rep.c2 < -1e-9)
            throw OptimError("layout_init violates the position constraints");
    }

    PositionAuxiliaries aux = PositionAuxiliaries::consistent(cfg, w, p, layout_init, users);
    const double t_ref = std::max(aux_min_snr(aux, cfg), 1e-30);

    // attenuation-aware value of a layout, the measure the caller holds us to
    auto physical_t = [&](const model::PinLayout& layout) {
        const MatrixXd p_ok = clamp_powers(cfg, w, layout, p);
        const auto bnd = model::effective_channels(cfg, layout, p_ok, w, users);
        return model::min_snr(bnd, w, cfg);
    };

    PositionsResult result;
    result.layout = layout_init;
    result.aux = aux;

    PositionAuxiliaries best_aux = aux;
    model::PinLayout best_layout = layout_init;
    double best_phys = physical_t(layout_init);

    // Carry the bulk of the travel on the exact objective before any cone
    // iterations; the penalty stages then refine alignment locally.
    {
        model::PinLayout polished = best_layout;
        double value = best_phys;
        if (pattern_polish(cfg, polished, value, physical_t, cfg.L / 8.0)) {
            best_layout = polished;
            best_phys = value;
            aux = PositionAuxiliaries::consistent(cfg, w, p, polished, users);
            best_aux = aux;
        }
    }

    double rho = penalty.rho0;
    bool stop = false;

    while (!stop) {
        // merit of the incumbent under the current penalty weight
        auto merit_of = [&](const PositionAuxiliaries& a) {
            const auto v = measure(a, cfg);
            return aux_min_snr(a, cfg) / t_ref - rho * v.total_pen;
        };

        // under the new weight the best consistent point may dominate the
        // carried-over relaxed iterate; start the stage from the better one
        {
            auto aux_cons = PositionAuxiliaries::consistent(cfg, w, p, best_layout, users);
            if (merit_of(aux_cons) > merit_of(aux))
                aux = std::move(aux_cons);
        }
        double merit = merit_of(aux);

        const double viol_start = measure(aux, cfg).max();
        std::vector<double> merit_history;
        int last_phys_gain_it = -1;
        bool solver_failed = false;
        for (int it = 0; it < settings.inner_max_iters; ++it) {
            PositionAuxiliaries aux_new;
            const auto outcome = solve_iterate(cfg, aux, rho, t_ref, aux_new);
            if (!outcome.solved) {
                // an unbounded or failed relaxation means the weight is too
                // small for this geometry; escalate instead of giving up
                solver_failed = true;
                break;
            }
            // keep the diagonal usable as the next expansion point
            for (auto& Fk : aux_new.F)
                for (int l = 0; l < aux.MN(); ++l)
                    Fk(l, l) = std::max(Fk(l, l), 1e-12);

            const double merit_new = merit_of(aux_new);
            ++result.iterations;
            if (merit_new < merit - 1e-9 * std::max(1.0, std::abs(merit)))
                break; // solver noise: reject and move on
            // A relaxation drifting away from consistency at this weight is
            // not worth chasing; escalate the weight instead.
            if (measure(aux_new, cfg).max() >
                std::max(0.02, 1.5 * viol_start + penalty.violation_tol)) {
                aux = aux_new;
                best_aux = aux_new;
                break;
            }

            // The tangent couplings only admit wavelength-scale motion per
            // iterate, so amplify the proposed displacement along the exact
            // physics: double the step while the consistent re-evaluation
            // keeps improving, and re-expand there when it beats the
            // penalized iterate. Re-expansion at a no-penalty point can only
            // raise the merit, so monotonicity survives.
            {
                const VectorXd direction = aux_new.x - aux.x;
                if (direction.cwiseAbs().maxCoeff() > 1e-14 * cfg.L) {
                    double best_f = best_phys;
                    model::PinLayout best_cand;
                    bool found = false;
                    model::PinLayout cand;
                    cand.x.resize(aux.N, aux.M);
                    double prev_f = -std::numeric_limits<double>::infinity();
                    for (double alpha = 1.0; alpha <= 4096.0; alpha *= 2.0) {
                        const VectorXd x_try = aux.x + alpha * direction;
                        for (int n = 0; n < aux.N; ++n) {
                            for (int m = 0; m < aux.M; ++m)
                                cand.x(n, m) =
                                    x_try[PositionAuxiliaries::l_index(n, m, aux.M)];
                            VectorXd row = cand.x.row(n);
                            clip_layout_row(row, cfg.L, cfg.gamma);
                            cand.x.row(n) = row;
                        }
                        const double f = physical_t(cand);
                        if (f > best_f) {
                            best_f = f;
                            best_cand = cand;
                            found = true;
                        }
                        if (f < prev_f)
                            break; // past the ridge
                        prev_f = f;
                    }
                    if (found) {
                        // re-expansion at the consistent point; the merit may
                        // only move up from a penalty-free point
                        auto aux_amp =
                            PositionAuxiliaries::consistent(cfg, w, p, best_cand, users);
                        const double merit_amp = merit_of(aux_amp);
                        if (merit_amp >= merit - 1e-9 * std::max(1.0, std::abs(merit))) {
                            last_phys_gain_it = it;
                            best_phys = best_f;
                            best_layout = best_cand;
                            aux = std::move(aux_amp);
                            best_aux = aux;
                            ++result.iterations;
                            if (sink)
                                sink({round, "positions", it, merit_amp, rho,
                                      measure(aux, cfg).max()});
                            merit = merit_amp;
                            continue;
                        }
                    }
                }
            }
            aux = aux_new;
            best_aux = aux_new;
            if (sink) {
                // positions trace carries the penalized objective, which is
                // the quantity the inner loop keeps monotone at fixed rho
                const auto v = measure(aux, cfg);
                sink({round, "positions", it, merit_new, rho, v.max()});
            }
            const bool converged =
                std::abs(merit_new - merit) <= settings.inner_tol * std::max(1.0, std::abs(merit_new));
            merit = merit_new;
            if (converged)
                break;
            // windowed stall detection: six iterates of sub-threshold creep
            // are not worth further cone solves at this penalty weight
            merit_history.push_back(merit);
            const size_t w_len = 6;
            if (merit_history.size() > w_len &&
                merit - merit_history[merit_history.size() - 1 - w_len] <=
                    10.0 * settings.inner_tol * std::max(1.0, std::abs(merit)))
                break;
            // merit creep that neither helps the physics nor reduces the
            // couplings is the relaxation drifting; stop the stage
            if (it - last_phys_gain_it >= 6 &&
                measure(aux, cfg).max() > viol_start + penalty.violation_tol)
                break;
        }
        if (stop)
            break;
        if (solver_failed) {
            if (rho >= penalty.rho_cap) {
                result.degraded = true;
                break;
            }
            rho = std::min(rho * penalty.rho_mult, penalty.rho_cap);
            continue;
        }

        // cheap exact-objective polish between stages
        {
            model::PinLayout polished = best_layout;
            double value = best_phys;
            if (pattern_polish(cfg, polished, value, physical_t, 1.0)) {
                best_layout = polished;
                best_phys = value;
                auto aux_pol = PositionAuxiliaries::consistent(cfg, w, p, polished, users);
                if (merit_of(aux_pol) >= merit_of(aux)) {
                    aux = std::move(aux_pol);
                    best_aux = aux;
                }
            }
        }

        const auto viol = measure(aux, cfg);
        if (viol.max() <= penalty.violation_tol)
            break;
        if (rho >= penalty.rho_cap)
            break;
        rho = std::min(rho * penalty.rho_mult, penalty.rho_cap);
    }
    result.final_rho = rho;

    // extraction, projection and honest re-evaluation through the model
    result.aux = best_aux;
    const auto extraction = extract_positions(best_aux, cfg);
    result.layout = extraction.layout;
    result.extraction_residual = extraction.residual();
    if (physical_t(extraction.layout) < best_phys) {
        // a consistent point visited along the way beats the extraction
        result.layout = best_layout;
        result.aux = PositionAuxiliaries::consistent(cfg, w, p, best_layout, users);
        const auto rep2 = extract_positions(result.aux, cfg);
        result.extraction_residual = rep2.residual();
    }
    result.converged = result.extraction_residual <= 1e-2;

    for (size_t k = 0; k < result.aux.F.size(); ++k) {
        Eigen::SelfAdjointEigenSolver<MatrixXcd> esA(result.aux.A[k], Eigen::EigenvaluesOnly);
        const double gapA = result.aux.A[k].trace().real() - esA.eigenvalues().maxCoeff();
        result.max_rank_gap_rel = std::max(
            result.max_rank_gap_rel, gapA / std::max(esA.eigenvalues().maxCoeff(), 1e-300));
        Eigen::SelfAdjointEigenSolver<MatrixXd> esF(result.aux.F[k], Eigen::EigenvaluesOnly);
        const double gapF = result.aux.F[k].trace() - esF.eigenvalues().maxCoeff();
        result.max_rank_gap_rel = std::max(
            result.max_rank_gap_rel, gapF / std::max(esF.eigenvalues().maxCoeff(), 1e-300));
    }

    result.t = physical_t(result.layout);
    return result;
}

} // namespace pincast::optim
