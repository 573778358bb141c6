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
// Alternating optimizer for the max-min broadcast rate: three inner solvers
// (beamformer, element powers, element positions) glued by a block descent
// loop. Every inner solver is a majorize-minimize iteration over cone
// programs; the position solver adds a penalty schedule that drives its
// rank-one and phase-consistency couplings tight.

#ifndef PINCAST_OPTIM_HPP
#define PINCAST_OPTIM_HPP

#include "pincast/model.hpp"

#include <functional>

namespace pincast::optim {

struct OptimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MmSettings {
    double inner_tol = 1e-4;  // relative objective change that ends an MM loop
    int inner_max_iters = 50;
    double bcd_tol = 1e-3;    // relative min-SNR change that ends the outer loop
    int bcd_max_iters = 30;
};

struct PenaltySettings {
    double rho0 = 0.1;
    double rho_mult = 5.0;
    double rho_cap = 1e6;
    double violation_tol = 1e-4;
};

// One record per accepted inner iterate, emitted to the caller's sink.
struct TraceRecord {
    int round = -1; // outer round, -1 outside the block loop
    const char* block = "";
    int inner_iter = 0;
    double t = 0.0;   // min-SNR after the iterate (positions: penalized objective)
    double rho = 0.0; // penalty weight (positions only)
    double residual = 0.0;
};
using TraceSink = std::function<void(const TraceRecord&)>;

struct BeamformingResult {
    Eigen::VectorXcd w;
    double t = 0.0;
    int iterations = 0;
    bool degraded = false;
};

struct PowerResult {
    Eigen::MatrixXd p;
    double t = 0.0;
    int iterations = 0;
    bool degraded = false;
};

// Auxiliary variables of the position subproblem: path-loss matrices F_k,
// phase-alignment matrices A_k, per-user phases theta, the fixed diagonal
// amplitude matrix C and the squared cross-guide offsets s_hat.
struct PositionAuxiliaries {
    int N = 0, M = 0;
    std::vector<Eigen::MatrixXd> F;   // K entries, MN x MN
    std::vector<Eigen::MatrixXcd> A;  // K entries, MN x MN Hermitian
    Eigen::MatrixXd theta;            // K x MN
    Eigen::VectorXcd c_diag;          // MN
    Eigen::MatrixXd s_hat;            // K x N
    Eigen::MatrixXd users;            // K x 2 ground positions
    Eigen::VectorXd x;                // MN stacked element positions

    int MN() const { return N * M; }
    static int l_index(int n, int m, int M) { return n * M + m; }
    double theta_hat(int k, int i) const { return theta(k, i) - theta(k, 0); }

    // Consistent point built from a physical state: F = f f^T, A = a a^H with
    // unit-modulus phases, theta from the actual geometry.
    static PositionAuxiliaries consistent(const model::SystemConfig& cfg,
                                          const Eigen::VectorXcd& w, const Eigen::MatrixXd& p,
                                          const model::PinLayout& layout,
                                          const model::UserSet& users);
};

struct ExtractionReport {
    model::PinLayout layout;
    double max_c7 = 0.0;   // worst relative distance-consistency violation
    double max_c9 = 0.0;   // worst phase-consistency violation (rad)
    double residual() const { return std::max(max_c7, max_c9); }
};

struct PositionsResult {
    model::PinLayout layout;
    double t = 0.0; // model-evaluated min-SNR at the extracted layout
    PositionAuxiliaries aux;
    double extraction_residual = 0.0;
    double max_rank_gap_rel = 0.0; // max_k (||A_k||_* - ||A_k||_2) / ||A_k||_2, F included
    double final_rho = 0.0;
    int iterations = 0;
    bool degraded = false;
    bool converged = true; // extraction residual within tolerance
};

struct BcdState {
    model::ResourceState state;
    double t = 0.0; // min-SNR of `state`
    std::vector<std::pair<double, double>> trajectory; // per round: (t, min rate)
    int rounds = 0;
    bool any_degraded = false;
    PositionsResult last_positions; // auxiliaries of the final position solve
};

// Sub-problem 1. Maximizes the worst-user SNR over the beamformer under the
// power budget, holding channels fixed. Zero projections in w_init are
// perturbed toward the affected user's channel and retried once.
BeamformingResult solve_beamforming(const model::ChannelBundle& bundle,
                                    const model::SystemConfig& cfg, const MmSettings& settings,
                                    const Eigen::VectorXcd& w_init, const TraceSink& sink = {},
                                    int round = -1);

// Sub-problem 2. Maximizes the worst-user SNR over element powers under the
// sequential available-power bounds, holding beamformer and layout fixed.
PowerResult solve_power_allocation(const model::SystemConfig& cfg,
                                   const model::PinLayout& layout, const Eigen::VectorXcd& w,
                                   const model::UserSet& users, const MmSettings& settings,
                                   const Eigen::MatrixXd& p_init, const TraceSink& sink = {},
                                   int round = -1);

// Sub-problem 3. Penalty-augmented MM over element positions with the
// F_k/A_k/theta auxiliaries; returns the layout recovered by
// extract_positions and the model-evaluated min-SNR at that layout (with
// powers re-clamped to the available-power bounds).
PositionsResult solve_positions(const model::SystemConfig& cfg, const Eigen::VectorXcd& w,
                                const Eigen::MatrixXd& p, const model::UserSet& users,
                                const MmSettings& settings, const PenaltySettings& penalty,
                                const model::PinLayout& layout_init, const TraceSink& sink = {},
                                int round = -1);

// Recovers element positions from solved auxiliaries: per-user candidates
// x_k +- sqrt(1/diag(F_k) - s_hat), sign fixed by cross-user least squares and
// the phase residual, then an order-preserving projection onto the position
// box and spacing constraints.
ExtractionReport extract_positions(const PositionAuxiliaries& aux,
                                   const model::SystemConfig& cfg);

// Clamps powers to the sequential available-power bound at a given layout
// (in guide order, so each clamp sees the already-clamped upstream elements).
Eigen::MatrixXd clamp_powers(const model::SystemConfig& cfg, const Eigen::VectorXcd& w,
                             const model::PinLayout& layout, const Eigen::MatrixXd& p);

// Strictly feasible default start: equal feed weights, uniform layout, half
// of the sequentially-split available power per element.
model::ResourceState default_init(const model::SystemConfig& cfg);

// Outer block loop (beamformer, powers, positions per round). Each block's
// proposal is accepted only if the model-evaluated min-SNR does not drop, so
// the per-round trajectory is non-decreasing by construction.
BcdState bcd(const model::SystemConfig& cfg, const model::UserSet& users,
             const MmSettings& settings, const PenaltySettings& penalty,
             const model::ResourceState& init, const TraceSink& sink = {},
             bool skip_beamforming = false, bool skip_positions = false);

} // namespace pincast::optim

#endif
