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
// Path-following barrier solver behind conic::solve(). Two phases: a
// relaxation phase that finds a strictly interior point (skipped when the
// caller supplies one) and the main barrier path. Newton systems exploit the
// optional elimination-group tags: per-group dense blocks are factored
// independently and folded into a small border system over the shared slots,
// equality multipliers included.

#include "pincast/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace pincast::conic {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kUnboundedObjective = 1e15;
constexpr double kInteriorMargin = 1e-10;
// Radius of the artificial bounding balls that keep every barrier subproblem
// bounded. Iterates riding this bound at convergence mark the problem
// unbounded. One ball per elimination group keeps the arrow structure intact.
constexpr double kBallRadius = 1e9;

struct Row {
    std::vector<std::pair<int, double>> a;
    double b = 0.0;
    double relax = 0.0; // coefficient of the phase-1 slack on this row

    double eval(const VectorXd& y, double s) const {
        double v = b + relax * s;
        for (const auto& [i, c] : a)
            v += c * y[i];
        return v;
    }
};

struct SocBlock {
    std::vector<Row> rows; // rows[0] = u
};

struct PsdBlock {
    int p = 0;
    MatrixXd S0;
    std::vector<int> slots; // involved variable slots
    // full (i, j, coeff) entry lists per involved slot, both triangles
    std::vector<std::vector<std::tuple<int, int, double>>> entries;

    MatrixXd materialize(const VectorXd& y, double s) const {
        MatrixXd S = S0;
        if (s != 0.0)
            S.diagonal().array() += s;
        for (size_t a = 0; a < slots.size(); ++a) {
            const double v = y[slots[a]];
            for (const auto& [i, j, c] : entries[a])
                S(i, j) += c * v;
        }
        return S;
    }
};

// Destination-dispatching Hessian accumulator for the group-Schur layout.
class HessianStore {
  public:
    void init(const std::vector<int>& group_of, int n_groups,
              const std::vector<int>& local_index, const std::vector<int>& group_size,
              int n_shared) {
        group_of_ = &group_of;
        local_ = &local_index;
        Hgg.assign(n_groups, MatrixXd());
        Hgs.assign(n_groups, MatrixXd());
        for (int g = 0; g < n_groups; ++g) {
            Hgg[g].setZero(group_size[g], group_size[g]);
            Hgs[g].setZero(group_size[g], n_shared);
        }
        Hss.setZero(n_shared, n_shared);
    }

    void clear() {
        for (auto& m : Hgg)
            m.setZero();
        for (auto& m : Hgs)
            m.setZero();
        Hss.setZero();
    }

    // Adds v to H[a, b] and H[b, a] when a != b, else to the diagonal.
    void add(int a, int b, double v) {
        const int ga = (*group_of_)[a], gb = (*group_of_)[b];
        const int la = (*local_)[a], lb = (*local_)[b];
        if (ga == gb) {
            if (ga < 0) {
                Hss(la, lb) += v;
                if (a != b)
                    Hss(lb, la) += v;
            } else {
                Hgg[ga](la, lb) += v;
                if (a != b)
                    Hgg[ga](lb, la) += v;
            }
        } else if (ga < 0) {
            Hgs[gb](lb, la) += v;
        } else if (gb < 0) {
            Hgs[ga](la, lb) += v;
        } else {
            cross_group = true; // builder promised this never happens
        }
    }

    std::vector<MatrixXd> Hgg;
    std::vector<MatrixXd> Hgs;
    MatrixXd Hss;
    bool cross_group = false;

  private:
    const std::vector<int>* group_of_ = nullptr;
    const std::vector<int>* local_ = nullptr;
};

class BarrierSolver {
  public:
    BarrierSolver(const ConicProblem& prob, const SolverSettings& settings)
        : prob_(prob), settings_(settings) {}

    SolveResult run();

  private:
    void compile();
    void setup_groups();
    bool strictly_interior(const VectorXd& y, double s, double margin) const;
    double needed_relax(const VectorXd& y) const;
    double barrier_value(const VectorXd& y, double s, bool relaxed, bool& interior) const;
    // Builds gradient and Hessian of t_b * obj + barrier at (y, s). In relaxed
    // mode the slack s is appended as the last shared coordinate.
    void grad_hess(const VectorXd& y, double s, double t_b, bool relaxed, bool phase1,
                   VectorXd& grad, HessianStore& H) const;
    bool newton_solve(HessianStore& H, const VectorXd& grad, const VectorXd& eq_res,
                      VectorXd& step, VectorXd& lambda) const;
    // Centers at barrier parameter t_b; returns false on a hard failure.
    bool center(VectorXd& y, double& s, double t_b, bool relaxed, bool phase1, int& iters,
                int stage_cap);

    const ConicProblem& prob_;
    SolverSettings settings_;

    int n_ = 0;          // variable slots (without the phase-1 slack)
    VectorXd scale_;     // column scaling, x = scale .* y
    VectorXd c_;         // scaled minimization objective
    double c_norm_ = 1.0;
    std::vector<Row> nonneg_;
    std::vector<SocBlock> socs_;
    std::vector<PsdBlock> psds_;
    MatrixXd Aeq_; // scaled equality rows, Aeq y = beq
    VectorXd beq_;
    double nu_ = 0.0; // total barrier parameter

    // group layout over (slots + optional slack as last shared coordinate)
    std::vector<int> group_of_, local_index_, group_size_;
    int n_groups_ = 0, n_shared_ = 0;
    std::vector<int> shared_slots_;

    int total_newton_ = 0;
};

void BarrierSolver::compile() {
    n_ = prob_.n_slots();

    // Column equilibration from the largest absolute coefficient per slot.
    VectorXd colmax = VectorXd::Zero(n_);
    auto absorb = [&](const LinExpr& e) {
        for (const auto& [i, c] : e.terms)
            colmax[i] = std::max(colmax[i], std::abs(c));
    };
    for (const auto& con : prob_.constraints())
        for (const auto& r : con.rows)
            absorb(r);
    scale_.resize(n_);
    for (int i = 0; i < n_; ++i)
        scale_[i] = colmax[i] > 0.0 ? std::clamp(1.0 / colmax[i], 1e-8, 1e8) : 1.0;

    auto compile_row = [&](const LinExpr& e, double relax) {
        Row r;
        r.b = e.constant;
        r.relax = relax;
        // merge duplicate slots
        std::vector<std::pair<int, double>> terms(e.terms.begin(), e.terms.end());
        std::sort(terms.begin(), terms.end(),
                  [](const auto& l, const auto& rgt) { return l.first < rgt.first; });
        for (const auto& [i, c] : terms) {
            if (!r.a.empty() && r.a.back().first == i)
                r.a.back().second += c * scale_[i];
            else
                r.a.emplace_back(i, c * scale_[i]);
        }
        return r;
    };

    int n_eq = 0;
    for (const auto& con : prob_.constraints())
        if (con.cone == ConeType::Zero)
            n_eq += static_cast<int>(con.rows.size());
    Aeq_.setZero(n_eq, n_);
    beq_.setZero(n_eq);

    int eq_idx = 0;
    nu_ = 0.0;
    for (const auto& con : prob_.constraints()) {
        switch (con.cone) {
        case ConeType::Zero:
            for (const auto& e : con.rows) {
                for (const auto& [i, c] : e.terms)
                    Aeq_(eq_idx, i) += c * scale_[i];
                beq_[eq_idx] = -e.constant;
                ++eq_idx;
            }
            break;
        case ConeType::Nonneg:
            for (const auto& e : con.rows) {
                nonneg_.push_back(compile_row(e, 1.0));
                nu_ += 1.0;
            }
            break;
        case ConeType::SecondOrder: {
            SocBlock blk;
            blk.rows.reserve(con.rows.size());
            for (size_t i = 0; i < con.rows.size(); ++i)
                blk.rows.push_back(compile_row(con.rows[i], i == 0 ? 1.0 : 0.0));
            socs_.push_back(std::move(blk));
            nu_ += 2.0;
            break;
        }
        case ConeType::Psd: {
            PsdBlock blk;
            blk.p = con.psd_dim;
            blk.S0.setZero(blk.p, blk.p);
            std::vector<std::vector<std::tuple<int, int, double>>> per_slot_entries;
            std::vector<int> slot_of; // parallel to per_slot_entries
            auto slot_pos = [&](int s) {
                for (size_t idx = 0; idx < slot_of.size(); ++idx)
                    if (slot_of[idx] == s)
                        return idx;
                slot_of.push_back(s);
                per_slot_entries.emplace_back();
                return slot_of.size() - 1;
            };
            int row_idx = 0;
            for (int i = 0; i < blk.p; ++i) {
                for (int j = 0; j <= i; ++j, ++row_idx) {
                    const LinExpr& e = con.rows[row_idx];
                    blk.S0(i, j) += e.constant;
                    if (i != j)
                        blk.S0(j, i) += e.constant;
                    for (const auto& [s, c] : e.terms) {
                        const double cs = c * scale_[s];
                        auto& entry = per_slot_entries[slot_pos(s)];
                        entry.emplace_back(i, j, cs);
                        if (i != j)
                            entry.emplace_back(j, i, cs);
                    }
                }
            }
            // merge duplicates inside each slot's entry list
            for (auto& list : per_slot_entries) {
                std::sort(list.begin(), list.end());
                std::vector<std::tuple<int, int, double>> merged;
                for (const auto& [i, j, c] : list) {
                    if (!merged.empty() && std::get<0>(merged.back()) == i &&
                        std::get<1>(merged.back()) == j)
                        std::get<2>(merged.back()) += c;
                    else
                        merged.emplace_back(i, j, c);
                }
                list = std::move(merged);
            }
            blk.slots = std::move(slot_of);
            blk.entries = std::move(per_slot_entries);
            psds_.push_back(std::move(blk));
            nu_ += blk.p;
            break;
        }
        }
    }

    // Scaled minimization objective (problem states maximize).
    c_ = VectorXd::Zero(n_);
    for (const auto& [i, co] : prob_.objective().terms)
        c_[i] -= co * scale_[i];
    c_norm_ = std::max(c_.cwiseAbs().maxCoeff(), 1e-300);
    c_ /= c_norm_;
}

void BarrierSolver::setup_groups() {
    const auto& tags = prob_.elimination_groups();
    const int n_ext = n_ + 1; // slack appended as a shared coordinate
    group_of_.assign(n_ext, -1);
    if (!tags.empty())
        for (int i = 0; i < n_; ++i)
            group_of_[i] = tags[i];

    // Verify that no barrier block couples two distinct groups; degrade to a
    // single shared block otherwise.
    auto block_ok = [&](const std::vector<int>& slots) {
        int g = -1;
        for (int s : slots) {
            if (group_of_[s] < 0)
                continue;
            if (g < 0)
                g = group_of_[s];
            else if (g != group_of_[s])
                return false;
        }
        return true;
    };
    bool ok = true;
    for (const auto& r : nonneg_) {
        std::vector<int> s;
        for (const auto& [i, c] : r.a)
            s.push_back(i);
        ok = ok && block_ok(s);
    }
    for (const auto& blk : socs_) {
        std::vector<int> s;
        for (const auto& r : blk.rows)
            for (const auto& [i, c] : r.a)
                s.push_back(i);
        ok = ok && block_ok(s);
    }
    for (const auto& blk : psds_)
        ok = ok && block_ok(blk.slots);
    if (!ok)
        std::fill(group_of_.begin(), group_of_.end(), -1);

    n_groups_ = 0;
    for (int i = 0; i < n_ext; ++i)
        n_groups_ = std::max(n_groups_, group_of_[i] + 1);

    local_index_.assign(n_ext, -1);
    group_size_.assign(n_groups_, 0);
    shared_slots_.clear();
    n_shared_ = 0;
    for (int i = 0; i < n_ext; ++i) {
        if (group_of_[i] < 0) {
            local_index_[i] = n_shared_++;
            shared_slots_.push_back(i);
        } else {
            local_index_[i] = group_size_[group_of_[i]]++;
        }
    }

    // Bounding balls, one per group plus one over the shared slots (slack
    // included through its relax coefficient).
    for (int g = -1; g < n_groups_; ++g) {
        SocBlock ball;
        Row head;
        head.b = kBallRadius;
        ball.rows.push_back(std::move(head));
        for (int i = 0; i < n_ext; ++i) {
            if (group_of_[i] != g)
                continue;
            Row r;
            if (i == n_)
                r.relax = 1.0; // the phase-1 slack has no slot of its own
            else
                r.a.emplace_back(i, 1.0);
            ball.rows.push_back(std::move(r));
        }
        if (ball.rows.size() > 1) {
            socs_.push_back(std::move(ball));
            nu_ += 2.0;
        }
    }
}

bool BarrierSolver::strictly_interior(const VectorXd& y, double s, double margin) const {
    for (const auto& r : nonneg_)
        if (r.eval(y, s) <= margin)
            return false;
    for (const auto& blk : socs_) {
        const double u = blk.rows[0].eval(y, s);
        double v2 = 0.0;
        for (size_t i = 1; i < blk.rows.size(); ++i) {
            const double v = blk.rows[i].eval(y, s);
            v2 += v * v;
        }
        if (u <= 0.0 || u * u - v2 <= margin * margin)
            return false;
    }
    for (const auto& blk : psds_) {
        MatrixXd S = blk.materialize(y, s);
        S.diagonal().array() -= margin;
        Eigen::LLT<MatrixXd> llt(S);
        if (llt.info() != Eigen::Success)
            return false;
    }
    return true;
}

double BarrierSolver::needed_relax(const VectorXd& y) const {
    double need = 0.0;
    for (const auto& r : nonneg_)
        need = std::max(need, -r.eval(y, 0.0));
    for (const auto& blk : socs_) {
        const double u = blk.rows[0].eval(y, 0.0);
        double v2 = 0.0;
        for (size_t i = 1; i < blk.rows.size(); ++i) {
            const double v = blk.rows[i].eval(y, 0.0);
            v2 += v * v;
        }
        need = std::max(need, std::sqrt(v2) - u);
    }
    for (const auto& blk : psds_) {
        const MatrixXd S = blk.materialize(y, 0.0);
        const Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
        need = std::max(need, -es.eigenvalues().minCoeff());
    }
    return need;
}

double BarrierSolver::barrier_value(const VectorXd& y, double s, bool relaxed,
                                    bool& interior) const {
    interior = true;
    double phi = 0.0;
    const double sv = relaxed ? s : 0.0;
    for (const auto& r : nonneg_) {
        const double v = r.eval(y, sv);
        if (v <= 0.0) {
            interior = false;
            return 0.0;
        }
        phi -= std::log(v);
    }
    for (const auto& blk : socs_) {
        const double u = blk.rows[0].eval(y, sv);
        double v2 = 0.0;
        for (size_t i = 1; i < blk.rows.size(); ++i) {
            const double v = blk.rows[i].eval(y, sv);
            v2 += v * v;
        }
        const double q = u * u - v2;
        if (u <= 0.0 || q <= 0.0) {
            interior = false;
            return 0.0;
        }
        phi -= std::log(q);
    }
    for (const auto& blk : psds_) {
        const MatrixXd S = blk.materialize(y, sv);
        Eigen::LLT<MatrixXd> llt(S);
        if (llt.info() != Eigen::Success) {
            interior = false;
            return 0.0;
        }
        const auto& L = llt.matrixLLT();
        for (int i = 0; i < blk.p; ++i) {
            if (L(i, i) <= 0.0) {
                interior = false;
                return 0.0;
            }
            phi -= 2.0 * std::log(L(i, i));
        }
    }
    return phi;
}

void BarrierSolver::grad_hess(const VectorXd& y, double s, double t_b, bool relaxed, bool phase1,
                              VectorXd& grad, HessianStore& H) const {
    const int n_ext = n_ + 1;
    const int slack = n_;
    grad.setZero(n_ext);
    H.clear();
    const double sv = relaxed ? s : 0.0;

    // objective part
    if (phase1) {
        grad[slack] += t_b;
    } else {
        for (int i = 0; i < n_; ++i)
            grad[i] += t_b * c_[i];
    }

    // scratch for sparse accumulation
    auto add_outer = [&](const std::vector<std::pair<int, double>>& v, double w) {
        for (size_t a = 0; a < v.size(); ++a)
            for (size_t b = a; b < v.size(); ++b)
                H.add(v[a].first, v[b].first, w * v[a].second * v[b].second);
    };

    auto row_terms = [&](const Row& r) {
        std::vector<std::pair<int, double>> t = r.a;
        if (relaxed && r.relax != 0.0)
            t.emplace_back(slack, r.relax);
        return t;
    };

    for (const auto& r : nonneg_) {
        const double v = r.eval(y, sv);
        const auto t = row_terms(r);
        for (const auto& [i, c] : t)
            grad[i] -= c / v;
        add_outer(t, 1.0 / (v * v));
    }

    for (const auto& blk : socs_) {
        const double u = blk.rows[0].eval(y, sv);
        std::vector<double> vals(blk.rows.size());
        vals[0] = u;
        double v2 = 0.0;
        for (size_t i = 1; i < blk.rows.size(); ++i) {
            vals[i] = blk.rows[i].eval(y, sv);
            v2 += vals[i] * vals[i];
        }
        const double q = u * u - v2;
        // z = grad of q over slots; per-row pullbacks
        std::vector<std::pair<int, double>> z;
        for (size_t i = 0; i < blk.rows.size(); ++i) {
            const auto t = row_terms(blk.rows[i]);
            const double w = (i == 0 ? 2.0 * u : -2.0 * vals[i]);
            for (const auto& [slot_i, c] : t)
                z.emplace_back(slot_i, w * c);
            // -(1/q) * second-derivative part: +/- 2 a a^T
            add_outer(t, (i == 0 ? -2.0 : 2.0) / q);
        }
        // merge duplicate slots in z
        std::sort(z.begin(), z.end());
        std::vector<std::pair<int, double>> zm;
        for (const auto& [i, c] : z) {
            if (!zm.empty() && zm.back().first == i)
                zm.back().second += c;
            else
                zm.emplace_back(i, c);
        }
        for (const auto& [i, c] : zm)
            grad[i] -= c / q;
        add_outer(zm, 1.0 / (q * q));
    }

    for (const auto& blk : psds_) {
        const MatrixXd S = blk.materialize(y, sv);
        Eigen::LLT<MatrixXd> llt(S);
        const MatrixXd W = llt.solve(MatrixXd::Identity(blk.p, blk.p)); // S^{-1}

        const size_t ns = blk.slots.size();
        const bool with_slack = relaxed;
        // gradient: -Tr(W S_a); slack coefficient matrix is the identity
        for (size_t a = 0; a < ns; ++a) {
            double g = 0.0;
            for (const auto& [i, j, c] : blk.entries[a])
                g += c * W(j, i);
            grad[blk.slots[a]] -= g;
        }
        if (with_slack)
            grad[slack] -= W.trace();

        // Hessian: Tr(W S_a W S_b) from W entries
        for (size_t a = 0; a < ns; ++a) {
            for (size_t b = a; b < ns; ++b) {
                double h = 0.0;
                for (const auto& [i, j, ca] : blk.entries[a])
                    for (const auto& [k, l, cb] : blk.entries[b])
                        h += ca * cb * W(j, k) * W(l, i);
                H.add(blk.slots[a], blk.slots[b], h);
            }
            if (with_slack) {
                // Tr(W S_a W I) = Tr(W S_a W)
                double h = 0.0;
                for (const auto& [i, j, ca] : blk.entries[a])
                    h += ca * W.row(j).dot(W.col(i));
                H.add(blk.slots[a], slack, h);
            }
        }
        if (with_slack)
            H.add(slack, slack, (W * W).trace());
    }
}

bool BarrierSolver::newton_solve(HessianStore& H, const VectorXd& grad, const VectorXd& eq_res,
                                 VectorXd& step, VectorXd& lambda) const {
    const int n_ext = n_ + 1;
    const int ne = static_cast<int>(Aeq_.rows());
    const int nb = n_shared_ + ne;

    for (double ridge = 1e-12; ridge <= 1e-3; ridge *= 1e3) {
        // Per-group factorizations and border assembly.
        MatrixXd border = MatrixXd::Zero(nb, nb);
        VectorXd rhs_border = VectorXd::Zero(nb);

        // shared part of H and grad
        for (int i = 0; i < n_shared_; ++i) {
            for (int j = 0; j < n_shared_; ++j)
                border(i, j) = H.Hss(i, j);
            border(i, i) += ridge * (1.0 + std::abs(H.Hss(i, i)));
            rhs_border[i] = -grad[shared_slots_[i]];
        }
        // equality rows (scaled columns; slack never appears in equalities)
        for (int e = 0; e < ne; ++e) {
            for (int i = 0; i < n_; ++i) {
                const double a = Aeq_(e, i);
                if (a == 0.0)
                    continue;
                if (group_of_[i] < 0) {
                    border(n_shared_ + e, local_index_[i]) += a;
                    border(local_index_[i], n_shared_ + e) += a;
                }
            }
            rhs_border[n_shared_ + e] = eq_res[e];
        }

        bool fail = false;
        std::vector<Eigen::LLT<MatrixXd>> facts(n_groups_);
        std::vector<MatrixXd> T(n_groups_);     // Hgg^{-1} [Hgs  Ag^T]
        std::vector<VectorXd> u(n_groups_);     // Hgg^{-1} (-g_g)
        for (int g = 0; g < n_groups_ && !fail; ++g) {
            MatrixXd Hgg = H.Hgg[g];
            for (int i = 0; i < Hgg.rows(); ++i)
                Hgg(i, i) += ridge * (1.0 + std::abs(Hgg(i, i)));
            facts[g].compute(Hgg);
            if (facts[g].info() != Eigen::Success) {
                fail = true;
                break;
            }
            MatrixXd C(Hgg.rows(), nb); // coupling block [Hgs  Ag^T]
            C.leftCols(n_shared_) = H.Hgs[g];
            C.rightCols(ne).setZero();
            VectorXd gg(Hgg.rows());
            for (int i = 0; i < n_; ++i)
                if (group_of_[i] == g)
                    gg[local_index_[i]] = -grad[i];
            for (int e = 0; e < ne; ++e)
                for (int i = 0; i < n_; ++i)
                    if (group_of_[i] == g && Aeq_(e, i) != 0.0)
                        C(local_index_[i], n_shared_ + e) = Aeq_(e, i);

            T[g] = facts[g].solve(C);
            u[g] = facts[g].solve(gg);
            border.noalias() -= C.transpose() * T[g];
            rhs_border.noalias() -= C.transpose() * u[g];
        }
        if (fail)
            continue;

        Eigen::PartialPivLU<MatrixXd> lu(border);
        const VectorXd xb = lu.solve(rhs_border);
        if (!xb.allFinite())
            continue;

        step.setZero(n_ext);
        lambda = xb.tail(ne);
        for (int i = 0; i < n_shared_; ++i)
            step[shared_slots_[i]] = xb[i];
        for (int g = 0; g < n_groups_; ++g) {
            const VectorXd dg = u[g] - T[g] * xb;
            for (int i = 0; i < n_ext; ++i)
                if (group_of_[i] == g)
                    step[i] = dg[local_index_[i]];
        }
        if (step.allFinite())
            return true;
    }
    return false;
}

bool BarrierSolver::center(VectorXd& y, double& s, double t_b, bool relaxed, bool phase1,
                           int& iters, int stage_cap) {
    HessianStore H;
    H.init(group_of_, n_groups_, local_index_, group_size_, n_shared_);
    VectorXd grad, step, lambda;
    const int ne = static_cast<int>(Aeq_.rows());

    for (int it = 0; it < stage_cap; ++it) {
        if (total_newton_ >= settings_.max_iters)
            return false;
        grad_hess(y, s, t_b, relaxed, phase1, grad, H);
        if (H.cross_group)
            return false; // should have been caught at setup
        VectorXd eq_res = beq_ - Aeq_ * y;
        if (ne == 0)
            eq_res.resize(0);
        if (!newton_solve(H, grad, eq_res, step, lambda))
            return false;
        ++total_newton_;
        ++iters;

        const double descent = -grad.dot(step);
        const double lambda2 = std::max(0.0, descent);
        if (lambda2 * 0.5 < 1e-10)
            return true;

        // backtracking line search on the barrier merit
        bool interior = false;
        double merit0 = barrier_value(y, s, relaxed, interior);
        if (!interior)
            return false;
        if (phase1)
            merit0 += t_b * s;
        else
            merit0 += t_b * c_.dot(y);

        double alpha = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 80; ++ls) {
            VectorXd y_try = y + alpha * step.head(n_);
            double s_try = s + (relaxed ? alpha * step[n_] : 0.0);
            bool ok = false;
            double merit = barrier_value(y_try, s_try, relaxed, ok);
            if (ok) {
                merit += phase1 ? t_b * s_try : t_b * c_.dot(y_try);
                if (merit <= merit0 - 0.01 * alpha * descent + 1e-14 * std::abs(merit0)) {
                    y = std::move(y_try);
                    s = s_try;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!accepted)
            return true; // stalled: accept current center, caller checks gap

        // Early exits that do not need full centering.
        if (phase1 && s < -1e-6)
            return true;
        if (!phase1 && c_.dot(y) < -kUnboundedObjective)
            return true;
    }
    return true;
}

SolveResult BarrierSolver::run() {
    SolveResult res;
    compile();
    setup_groups();

    // Objective-only slots never appear in a constraint: maximizing such a
    // slot is unbounded by inspection.
    {
        VectorXd colmax = VectorXd::Zero(n_);
        for (const auto& r : nonneg_)
            for (const auto& [i, c] : r.a)
                colmax[i] = 1.0;
        for (const auto& blk : socs_)
            for (const auto& r : blk.rows)
                for (const auto& [i, c] : r.a)
                    colmax[i] = 1.0;
        for (const auto& blk : psds_)
            for (int s : blk.slots)
                colmax[s] = 1.0;
        for (int e = 0; e < Aeq_.rows(); ++e)
            for (int i = 0; i < n_; ++i)
                if (Aeq_(e, i) != 0.0)
                    colmax[i] = 1.0;
        for (int i = 0; i < n_; ++i) {
            if (colmax[i] == 0.0 && c_[i] != 0.0) {
                res.status = SolveStatus::Unbounded;
                res.message = "objective slot unconstrained";
                return res;
            }
        }
    }

    // Starting point: caller hint or equality least squares.
    VectorXd y = VectorXd::Zero(n_);
    if (Aeq_.rows() > 0) {
        y = Aeq_.colPivHouseholderQr().solve(beq_);
        if ((Aeq_ * y - beq_).cwiseAbs().maxCoeff() > 1e-7 * std::max(1.0, beq_.cwiseAbs().maxCoeff())) {
            res.status = SolveStatus::Infeasible;
            res.message = "inconsistent equality constraints";
            return res;
        }
    }
    bool have_interior = false;
    if (settings_.start && settings_.start->size() == n_) {
        VectorXd y_hint = settings_.start->cwiseQuotient(scale_);
        const bool eq_ok = Aeq_.rows() == 0 ||
                           (Aeq_ * y_hint - beq_).cwiseAbs().maxCoeff() <
                               1e-9 * std::max(1.0, beq_.cwiseAbs().maxCoeff());
        if (eq_ok && strictly_interior(y_hint, 0.0, kInteriorMargin)) {
            y = std::move(y_hint);
            have_interior = true;
        }
    }

    double s = 0.0;
    if (!have_interior) {
        // Phase 1: minimize the relaxation slack until strictly negative. The
        // initial barrier weight makes shrinking the slack profitable from the
        // first step, which stops the center from drifting toward the ball.
        s = needed_relax(y) * 1.1 + 0.1;
        double t_b = std::max(1.0, 2.0 * nu_);
        const double mu = 20.0;
        bool found = false;
        for (int stage = 0; stage < 40; ++stage) {
            int iters = 0;
            if (!center(y, s, t_b, /*relaxed=*/true, /*phase1=*/true, iters, 60)) {
                res.status = SolveStatus::NumericalFailure;
                res.message = "phase-1 centering failed";
                res.iterations = total_newton_;
                return res;
            }
            if (s < -1e-6) {
                found = true;
                break;
            }
            // On the central path s exceeds the phase-1 optimum by at most
            // nu/t_b, so a lower bound near zero certifies infeasibility.
            if (s - nu_ / t_b > -1e-9) {
                res.status = SolveStatus::Infeasible;
                res.message = "no strictly interior point";
                res.iterations = total_newton_;
                return res;
            }
            t_b *= mu;
            if (total_newton_ >= settings_.max_iters) {
                res.status = SolveStatus::NumericalFailure;
                res.message = "newton budget exhausted in phase 1";
                res.iterations = total_newton_;
                return res;
            }
        }
        if (!found) {
            res.status = SolveStatus::NumericalFailure;
            res.message = "phase-1 made no progress";
            res.iterations = total_newton_;
            return res;
        }
        if (!strictly_interior(y, 0.0, 0.0)) {
            res.status = SolveStatus::Infeasible;
            res.message = "phase-1 point not interior after slack removal";
            res.iterations = total_newton_;
            return res;
        }
    }

    // Phase 2: follow the central path.
    double t_b = 1.0;
    const double mu = 40.0;
    while (true) {
        int iters = 0;
        if (!center(y, s, t_b, /*relaxed=*/false, /*phase1=*/false, iters, 60)) {
            res.status = SolveStatus::NumericalFailure;
            res.message = "phase-2 centering failed";
            res.iterations = total_newton_;
            return res;
        }
        if (c_.dot(y) < -kUnboundedObjective ||
            y.cwiseAbs().maxCoeff() >= 0.01 * kBallRadius) {
            res.status = SolveStatus::Unbounded;
            res.message = "iterates ride the artificial bound; objective diverges";
            res.iterations = total_newton_;
            return res;
        }
        if (nu_ / t_b <= settings_.tol_gap * std::max(1.0, std::abs(c_.dot(y))))
            break;
        if (total_newton_ >= settings_.max_iters) {
            res.status = SolveStatus::NumericalFailure;
            res.message = "newton budget exhausted";
            res.iterations = total_newton_;
            return res;
        }
        t_b *= mu;
    }

    res.status = SolveStatus::Optimal;
    res.x = y.cwiseProduct(scale_);
    res.objective = prob_.value_of(prob_.objective(), res.x);
    res.iterations = total_newton_;
    res.gap_bound = nu_ / t_b * c_norm_;
    // stationarity residual of the final center, in scaled units
    {
        HessianStore H;
        H.init(group_of_, n_groups_, local_index_, group_size_, n_shared_);
        VectorXd grad;
        grad_hess(y, s, t_b, false, false, grad, H);
        res.dual_residual = grad.head(n_).cwiseAbs().maxCoeff() / t_b * c_norm_;
    }
    return res;
}

} // namespace

SolveResult solve(const ConicProblem& problem, const SolverSettings& settings) {
    BarrierSolver solver(problem, settings);
    return solver.run();
}

} // namespace pincast::conic
