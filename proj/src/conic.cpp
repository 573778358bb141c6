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

#include <cmath>
#include <ostream>

namespace pincast::conic {

VariableHandle ConicProblem::add_scalar() {
    VariableHandle h{static_cast<int>(handles_.size()), VarShape::Scalar, 1, n_slots_, 1};
    n_slots_ += 1;
    handles_.push_back(h);
    return h;
}

VariableHandle ConicProblem::add_vector(int n) {
    if (n < 1)
        throw ShapeError("vector variable needs positive length");
    VariableHandle h{static_cast<int>(handles_.size()), VarShape::Vector, n, n_slots_, n};
    n_slots_ += n;
    handles_.push_back(h);
    return h;
}

VariableHandle ConicProblem::add_symmetric(int n) {
    if (n < 1)
        throw ShapeError("symmetric variable needs positive order");
    const int size = n * (n + 1) / 2;
    VariableHandle h{static_cast<int>(handles_.size()), VarShape::SymmetricMatrix, n, n_slots_,
                     size};
    n_slots_ += size;
    handles_.push_back(h);
    return h;
}

int ConicProblem::slot(const VariableHandle& h, int i, int j) const {
    if (h.id < 0 || h.id >= static_cast<int>(handles_.size()) ||
        handles_[h.id].offset != h.offset)
        throw ShapeError("unknown variable handle");
    switch (h.shape) {
    case VarShape::Scalar:
        if (i != 0 || j > 0)
            throw ShapeError("scalar variable indexed out of range");
        return h.offset;
    case VarShape::Vector:
        if (i < 0 || i >= h.dim || j > 0)
            throw ShapeError("vector variable indexed out of range");
        return h.offset + i;
    case VarShape::SymmetricMatrix: {
        if (j < 0)
            throw ShapeError("matrix variable needs two indices");
        if (i < 0 || i >= h.dim || j >= h.dim)
            throw ShapeError("matrix variable indexed out of range");
        const int r = std::max(i, j);
        const int c = std::min(i, j);
        // lower triangle, row-major: (r, c) with r >= c
        return h.offset + r * (r + 1) / 2 + c;
    }
    }
    throw ShapeError("unreachable");
}

LinExpr ConicProblem::var(const VariableHandle& h) const { return LinExpr::term(slot(h, 0)); }
LinExpr ConicProblem::var(const VariableHandle& h, int i) const {
    return LinExpr::term(slot(h, i));
}
LinExpr ConicProblem::var(const VariableHandle& h, int i, int j) const {
    return LinExpr::term(slot(h, i, j));
}

void ConicProblem::check_expr(const LinExpr& e) const {
    for (const auto& [s, c] : e.terms) {
        if (s < 0 || s >= n_slots_)
            throw ShapeError("expression references an unregistered slot");
        (void)c;
    }
}

void ConicProblem::add_constraint(Constraint c) {
    if (c.cone == ConeType::Psd) {
        if (c.psd_dim < 1 ||
            static_cast<int>(c.rows.size()) != c.psd_dim * (c.psd_dim + 1) / 2)
            throw ShapeError("psd block needs dim*(dim+1)/2 lower-triangle entries");
    } else if (c.rows.empty()) {
        throw ShapeError("constraint needs at least one row");
    }
    if (c.cone == ConeType::SecondOrder && c.rows.size() < 2)
        throw ShapeError("second-order cone needs a head and at least one tail row");
    for (const auto& r : c.rows)
        check_expr(r);
    constraints_.push_back(std::move(c));
}

void ConicProblem::add_zero(LinExpr e) { add_constraint({ConeType::Zero, {std::move(e)}, 0}); }
void ConicProblem::add_nonneg(LinExpr e) {
    add_constraint({ConeType::Nonneg, {std::move(e)}, 0});
}
void ConicProblem::add_second_order(std::vector<LinExpr> rows) {
    add_constraint({ConeType::SecondOrder, std::move(rows), 0});
}
void ConicProblem::add_psd(std::vector<LinExpr> lower_triangle, int dim) {
    add_constraint({ConeType::Psd, std::move(lower_triangle), dim});
}

void ConicProblem::add_sq_leq(const std::vector<LinExpr>& y, const LinExpr& u, double scale) {
    // ||y||^2 <= u  <=>  ||(2y/sqrt(s), u/s - 1)|| <= u/s + 1  for any s > 0.
    // The caller passes `scale` near the expected magnitude of u so the block
    // stays balanced.
    const double s = scale > 0.0 ? scale : 1.0;
    const double rs = std::sqrt(s);
    std::vector<LinExpr> rows;
    rows.reserve(y.size() + 2);
    rows.push_back(u * (1.0 / s) + LinExpr(1.0));
    for (const auto& e : y)
        rows.push_back(e * (2.0 / rs));
    rows.push_back(u * (1.0 / s) - LinExpr(1.0));
    add_second_order(std::move(rows));
}

void ConicProblem::set_elimination_groups(std::vector<int> groups) {
    if (!groups.empty() && static_cast<int>(groups.size()) != n_slots_)
        throw ShapeError("group tags must cover every slot");
    groups_ = std::move(groups);
}

double ConicProblem::value_of(const LinExpr& e, const Eigen::VectorXd& x) const {
    double v = e.constant;
    for (const auto& [s, c] : e.terms)
        v += c * x[s];
    return v;
}

Eigen::VectorXd ConicProblem::vec_value(const VariableHandle& h, const Eigen::VectorXd& x) const {
    Eigen::VectorXd v(h.dim);
    for (int i = 0; i < h.dim; ++i)
        v[i] = x[slot(h, i)];
    return v;
}

Eigen::MatrixXd ConicProblem::sym_value(const VariableHandle& h, const Eigen::VectorXd& x) const {
    if (h.shape != VarShape::SymmetricMatrix)
        throw ShapeError("sym_value needs a symmetric-matrix handle");
    Eigen::MatrixXd m(h.dim, h.dim);
    for (int i = 0; i < h.dim; ++i)
        for (int j = 0; j <= i; ++j)
            m(i, j) = m(j, i) = x[slot(h, i, j)];
    return m;
}

namespace {
void print_expr(std::ostream& os, const LinExpr& e) {
    bool first = true;
    for (const auto& [s, c] : e.terms) {
        os << (first ? "" : " + ") << c << "*x" << s;
        first = false;
    }
    if (e.constant != 0.0 || first)
        os << (first ? "" : " + ") << e.constant;
}
} // namespace

void ConicProblem::dump(std::ostream& os) const {
    os << "conic problem: " << n_slots_ << " slots, " << constraints_.size() << " cones\n";
    os << "maximize ";
    print_expr(os, objective_);
    os << "\n";
    int idx = 0;
    for (const auto& c : constraints_) {
        switch (c.cone) {
        case ConeType::Zero:
            os << "[" << idx << "] zero:";
            break;
        case ConeType::Nonneg:
            os << "[" << idx << "] nonneg:";
            break;
        case ConeType::SecondOrder:
            os << "[" << idx << "] soc(dim " << c.rows.size() << "):";
            break;
        case ConeType::Psd:
            os << "[" << idx << "] psd(order " << c.psd_dim << "):";
            break;
        }
        os << "\n";
        for (const auto& r : c.rows) {
            os << "    ";
            print_expr(os, r);
            os << "\n";
        }
        ++idx;
    }
}

const char* to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::Optimal:
        return "optimal";
    case SolveStatus::Infeasible:
        return "infeasible";
    case SolveStatus::Unbounded:
        return "unbounded";
    case SolveStatus::NumericalFailure:
        return "numerical-failure";
    }
    return "unknown";
}

Eigen::MatrixXd hermitian_lift(const Eigen::MatrixXcd& H, double herm_tol) {
    const int n = static_cast<int>(H.rows());
    if (H.cols() != n)
        throw ShapeError("hermitian_lift needs a square matrix");
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    if (((H - H.adjoint()).cwiseAbs().maxCoeff()) > herm_tol * scale)
        throw ShapeError("hermitian_lift input is not Hermitian");
    Eigen::MatrixXd L(2 * n, 2 * n);
    const Eigen::MatrixXd re = H.real();
    const Eigen::MatrixXd im = H.imag();
    L.topLeftCorner(n, n) = re;
    L.topRightCorner(n, n) = -im;
    L.bottomLeftCorner(n, n) = im;
    L.bottomRightCorner(n, n) = re;
    return L;
}

Eigen::MatrixXcd hermitian_unlift(const Eigen::MatrixXd& L) {
    const int n2 = static_cast<int>(L.rows());
    if (L.cols() != n2 || n2 % 2 != 0)
        throw ShapeError("hermitian_unlift needs an even-order square matrix");
    const int n = n2 / 2;
    Eigen::MatrixXcd H(n, n);
    H.real() = L.topLeftCorner(n, n);
    H.imag() = L.bottomLeftCorner(n, n);
    return H;
}

} // namespace pincast::conic
