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
// Deliberately naive reference oracles. Everything here evaluates through the
// physical model only and shares no code with the optimizer or the conic
// solver, so agreement between the two paths is meaningful evidence.

#ifndef PINCAST_ORACLE_HPP
#define PINCAST_ORACLE_HPP

#include "pincast/model.hpp"
#include "pincast/rng.hpp"

#include <functional>

namespace pincast::oracle {

struct OracleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridResult {
    model::PinLayout layout;
    Eigen::MatrixXd p;
    Eigen::VectorXcd w;
    double t = 0.0; // best min-SNR found
};

// Exhaustive search over element positions (aligned grid at `resolution`),
// sequential power fractions (20 steps) and beamformer splits/phases (20/32
// steps), scoring by direct model evaluation. Guarded to N*M <= 2 and K <= 2;
// larger instances are refused.
GridResult grid_search_tiny(const model::SystemConfig& cfg, const model::UserSet& users,
                            double resolution);

// Closed-form optimum of the single-guide single-element instance: maximizes
// exp(-2 alpha x) / ((x - x_u)^2 + s_hat) over [0, L] with the full budget
// extracted at the element. Returns the position and the resulting SNR.
std::pair<double, double> tiny_analytic_optimum(const model::SystemConfig& cfg,
                                                const Eigen::Vector2d& user);

struct CheckReport {
    int samples = 0;
    int violations = 0;
    double max_violation = 0.0;     // largest trespass beyond the tolerance side
    double max_expansion_gap = 0.0; // |surrogate - f| at the expansion point
    bool ok(double tol = 1e-9) const { return violations == 0 && max_expansion_gap <= tol; }
};

using Fn = std::function<double(const Eigen::VectorXd&)>;
// Maps an expansion point to the surrogate function built around it.
using SurrogateBuilder = std::function<Fn(const Eigen::VectorXd&)>;
// Draws one (expansion point, probe point) pair from the declared domain.
using PairSampler = std::function<std::pair<Eigen::VectorXd, Eigen::VectorXd>(rng::Stream&)>;

// Checks surrogate(probe) <= f(probe) + tol over n draws and equality at the
// expansion point within tol.
CheckReport check_minorizer(const Fn& f, const SurrogateBuilder& surrogate,
                            const PairSampler& sampler, int n = 1000,
                            std::uint64_t seed = 1, double tol = 1e-9);

// Same with the inequality reversed: surrogate(probe) >= f(probe) - tol.
CheckReport check_majorizer(const Fn& f, const SurrogateBuilder& surrogate,
                            const PairSampler& sampler, int n = 1000,
                            std::uint64_t seed = 1, double tol = 1e-9);

// Nuclear norm minus spectral norm of a PSD matrix; zero exactly on rank one.
double rank_one_gap(const Eigen::MatrixXcd& X, double psd_tol = 1e-10);
double rank_one_gap(const Eigen::MatrixXd& X, double psd_tol = 1e-10);

} // namespace pincast::oracle

#endif
