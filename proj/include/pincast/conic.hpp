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
// Minimal cone-program builder plus an interior-point solve() for problems
// over nonnegative, second-order and real symmetric PSD cones, with linear
// equalities handled by elimination. Each majorize-minimize iterate of the
// optimizer is expressed declaratively against this interface.

#ifndef PINCAST_CONIC_HPP
#define PINCAST_CONIC_HPP

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pincast::conic {

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class VarShape { Scalar, Vector, SymmetricMatrix };

// Opaque reference to a registered variable. `id` is only meaningful within
// the problem that issued it.
struct VariableHandle {
    int id = -1;
    VarShape shape = VarShape::Scalar;
    int dim = 0;    // 1, n, or matrix order
    int offset = 0; // first scalar slot
    int size = 0;   // number of scalar slots
};

// Scalar affine expression over a problem's scalar slots.
struct LinExpr {
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;

    LinExpr() = default;
    /* implicit */ LinExpr(double c) : constant(c) {}
    static LinExpr term(int slot, double coeff = 1.0) {
        LinExpr e;
        e.terms.emplace_back(slot, coeff);
        return e;
    }

    LinExpr& operator+=(const LinExpr& o) {
        terms.insert(terms.end(), o.terms.begin(), o.terms.end());
        constant += o.constant;
        return *this;
    }
    LinExpr& operator-=(const LinExpr& o) {
        for (const auto& [s, c] : o.terms)
            terms.emplace_back(s, -c);
        constant -= o.constant;
        return *this;
    }
    LinExpr& operator*=(double a) {
        for (auto& [s, c] : terms)
            c *= a;
        constant *= a;
        return *this;
    }
};

inline LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
inline LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
inline LinExpr operator*(double a, LinExpr e) { return e *= a; }
inline LinExpr operator*(LinExpr e, double a) { return e *= a; }
inline LinExpr operator-(LinExpr e) { return e *= -1.0; }

enum class ConeType { Zero, Nonneg, SecondOrder, Psd };

// One cone membership constraint on an affine map of the variables.
//   Zero / Nonneg    — every row independently == 0 / >= 0
//   SecondOrder      — rows[0] >= || rows[1..] ||
//   Psd              — rows hold the lower triangle (i >= j, row-major) of a
//                      symmetric psd_dim x psd_dim expression matrix
struct Constraint {
    ConeType cone = ConeType::Nonneg;
    std::vector<LinExpr> rows;
    int psd_dim = 0;
};

class ConicProblem {
  public:
    VariableHandle add_scalar();
    VariableHandle add_vector(int n);
    VariableHandle add_symmetric(int n);

    // Entry accessors; validate the handle and indices.
    LinExpr var(const VariableHandle& h) const;
    LinExpr var(const VariableHandle& h, int i) const;
    LinExpr var(const VariableHandle& h, int i, int j) const;
    int slot(const VariableHandle& h, int i = 0, int j = -1) const;

    void add_constraint(Constraint c);
    void add_zero(LinExpr e);
    void add_nonneg(LinExpr e);
    void add_second_order(std::vector<LinExpr> rows);
    void add_psd(std::vector<LinExpr> lower_triangle, int dim);
    // Convenience for the quadratic epigraph ||y||^2 <= u as one second-order
    // cone block.
    void add_sq_leq(const std::vector<LinExpr>& y, const LinExpr& u, double scale = 1.0);

    void set_objective_maximize(LinExpr e) { objective_ = std::move(e); }

    int n_slots() const { return n_slots_; }
    const std::vector<Constraint>& constraints() const { return constraints_; }
    const LinExpr& objective() const { return objective_; }

    // Optional performance hint: slots tagged with the same nonnegative group
    // interact only with each other and with slots tagged -1 (shared). The
    // solver then eliminates groups independently. Ignored when empty.
    void set_elimination_groups(std::vector<int> groups);
    const std::vector<int>& elimination_groups() const { return groups_; }

    // Structured text dump (cones and dense coefficient blocks) for offline
    // inspection.
    void dump(std::ostream& os) const;

    double value_of(const LinExpr& e, const Eigen::VectorXd& x) const;
    Eigen::VectorXd vec_value(const VariableHandle& h, const Eigen::VectorXd& x) const;
    Eigen::MatrixXd sym_value(const VariableHandle& h, const Eigen::VectorXd& x) const;

  private:
    void check_expr(const LinExpr& e) const;
    std::vector<VariableHandle> handles_;
    std::vector<Constraint> constraints_;
    std::vector<int> groups_;
    LinExpr objective_;
    int n_slots_ = 0;
};

struct SolverSettings {
    double tol_feas = 1e-8;
    double tol_gap = 1e-8;
    int max_iters = 200; // Newton iteration budget across both phases
    // Optional strictly feasible start; falls back to a phase-1 solve when
    // absent or not strictly interior.
    std::optional<Eigen::VectorXd> start;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

const char* to_string(SolveStatus s);

struct SolveResult {
    SolveStatus status = SolveStatus::NumericalFailure;
    Eigen::VectorXd x; // per-slot primal values, present iff status == Optimal
    double objective = 0.0;
    int iterations = 0;
    double gap_bound = 0.0;      // duality gap upper bound at exit
    double dual_residual = 0.0;  // scaled stationarity residual at exit
    std::string message;
};

SolveResult solve(const ConicProblem& problem, const SolverSettings& settings = {});

// Real lifting of a complex Hermitian matrix: H >= 0 iff the lift >= 0; the
// lift's spectrum is that of H with doubled multiplicities.
Eigen::MatrixXd hermitian_lift(const Eigen::MatrixXcd& H, double herm_tol = 1e-12);
Eigen::MatrixXcd hermitian_unlift(const Eigen::MatrixXd& L);

} // namespace pincast::conic

#endif
