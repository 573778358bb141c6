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

#ifndef PINCAST_MODEL_HPP
#define PINCAST_MODEL_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace pincast::model {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0; // m/s

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Radiator position strictly decreasing/overlapping along a guide.
struct LayoutError : ModelError {
    using ModelError::ModelError;
};
// User collocated with a radiating element (zero propagation distance).
struct SingularGeometryError : ModelError {
    using ModelError::ModelError;
};

// Rectangular ground region users are placed in.
struct Area {
    double x_min = 0.0, x_max = 40.0;
    double y_min = 0.0, y_max = 40.0;
};

// Physical and budget parameters of one system instance. All values SI;
// powers in watts. `validate()` throws on out-of-range fields.
struct SystemConfig {
    double f_c = 28e9;        // carrier frequency (Hz)
    double eta_eff = 1.42;    // effective refractive index of the guide
    double eps_r = 2.1;       // dielectric constant
    double tan_delta = 2e-4;  // effective electric loss tangent (0 = lossless)
    double L = 40.0;          // waveguide length (m)
    double d = 3.0;           // mount height (m)
    VectorXd D;               // per-waveguide y coordinates (m), length N
    double gamma = 0.0;       // minimum spacing between adjacent elements (m)
    double P_max = 1.0;       // total transmit power budget (W)
    VectorXd sigma2;          // per-user noise powers (W), length K
    int M = 1;                // radiating elements per waveguide
    Area area;

    int N() const { return static_cast<int>(D.size()); }
    int K() const { return static_cast<int>(sigma2.size()); }

    double wavelength() const { return kSpeedOfLight / f_c; }
    double guide_wavelength() const { return wavelength() / eta_eff; }
    // Free-space reference gain at 1 m.
    double eta() const {
        const double lam = wavelength();
        return lam * lam / (16.0 * M_PI * M_PI);
    }

    void validate() const;

    // PTFE guide at 28 GHz with the default geometry: height 3 m, length 40 m,
    // guides evenly spread over the area's y extent, spacing lambda/2 and
    // -90 dBm noise unless overridden later.
    static SystemConfig defaults(int n_waveguides, int pas_per_waveguide, int n_users,
                                 double p_max_watt = 1.0);
};

// Per-waveguide ordered element x coordinates, rows strictly increasing.
struct PinLayout {
    MatrixXd x; // N x M

    int N() const { return static_cast<int>(x.rows()); }
    int M() const { return static_cast<int>(x.cols()); }
};

// One optimizer iterate: beamformer, element powers and element positions.
struct ResourceState {
    VectorXcd w; // length N, entries in sqrt(W)
    MatrixXd p;  // N x M element powers (W)
    PinLayout layout;
};

struct UserSet {
    MatrixXd phi; // K x 2 ground coordinates (x_k, y_k); z fixed at 0

    int K() const { return static_cast<int>(phi.rows()); }
};

// Equivalent channels consumed by the optimizer blocks.
//   beta(k, n)   — per-waveguide aggregate channel of user k
//   hbar[k](n,m) — effective per-element channel, conj(w_n) folded in, so that
//                  sum_n hbar[k].row(n) * sqrt(p.row(n))^T == beta_k^H w exactly
struct ChannelBundle {
    MatrixXcd beta;              // K x N
    std::vector<MatrixXcd> hbar; // K entries of N x M

    int K() const { return static_cast<int>(beta.rows()); }
    int N() const { return static_cast<int>(beta.cols()); }
};

// Signed slack per constraint family of problem state; feasible means every
// slack >= -tol. C3 slacks are evaluated in waveguide order so each element's
// bound uses the actual upstream allocations.
struct FeasibilityReport {
    double c1 = 0.0; // position range
    double c2 = 0.0; // adjacent spacing
    double c3 = 0.0; // element power vs available power (also covers p >= 0)
    double c4 = 0.0; // beamformer budget
    bool feasible(double tol = 1e-9) const {
        return c1 >= -tol && c2 >= -tol && c3 >= -tol && c4 >= -tol;
    }
    double worst() const { return std::min(std::min(c1, c2), std::min(c3, c4)); }
};

// Attenuation constant in Np/m: lambda_g * eps_r * pi * f_c^2 * c^-2 * tan_delta.
double attenuation_constant(const SystemConfig& cfg);

// Power still available to element m given the feed level |w_n|^2, the element
// positions of the guide and the powers of elements 1..m-1. May be negative
// when the prefix is infeasible; callers treat that as an infeasibility signal.
double max_available_power(const SystemConfig& cfg, cplx w_n,
                           const Eigen::Ref<const VectorXd>& layout_row,
                           const Eigen::Ref<const VectorXd>& p_row_prefix, int m);

// Spherical-wave near-field channel from the M elements of one guide to a user.
VectorXcd channel_vector(const SystemConfig& cfg, const Eigen::Ref<const VectorXd>& layout_row,
                         double D_n, const Eigen::Ref<const Eigen::Vector2d>& user);

// In-guide phase accumulation from the feed point, unit modulus per element.
VectorXcd phase_vector(const SystemConfig& cfg, const Eigen::Ref<const VectorXd>& layout_row);

ChannelBundle effective_channels(const SystemConfig& cfg, const PinLayout& layout,
                                 const MatrixXd& p, const VectorXcd& w, const UserSet& users);

// Achievable rate of one user in bit/s/Hz.
double user_rate(const Eigen::Ref<const VectorXcd>& beta_k, const VectorXcd& w, double sigma2_k);

// Worst user and its rate; ties break toward the smallest index.
std::pair<int, double> min_rate(const ChannelBundle& bundle, const VectorXcd& w,
                                const SystemConfig& cfg);

// Minimum SNR across users (the optimizer's objective scale).
double min_snr(const ChannelBundle& bundle, const VectorXcd& w, const SystemConfig& cfg);

FeasibilityReport feasibility_check(const ResourceState& state, const SystemConfig& cfg);

} // namespace pincast::model

#endif
