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

#include "pincast/model.hpp"

#include <cmath>
#include <limits>

namespace pincast::model {

namespace {

void require(bool ok, const char* what) {
    if (!ok)
        throw ModelError(what);
}

void check_row_increasing(const Eigen::Ref<const VectorXd>& row) {
    for (int m = 1; m < row.size(); ++m)
        if (!(row[m] > row[m - 1]))
            throw LayoutError("element positions must be strictly increasing along the guide");
}

} // namespace

void SystemConfig::validate() const {
    require(f_c > 0.0, "f_c must be positive");
    require(eta_eff > 1.0, "eta_eff must exceed 1");
    require(eps_r > 0.0, "eps_r must be positive");
    // tan_delta == 0 is allowed: it models the lossless guide used as an upper
    // bound; negative loss is not physical.
    require(tan_delta >= 0.0, "tan_delta must be nonnegative");
    require(L > 0.0, "L must be positive");
    require(d > 0.0, "d must be positive");
    require(gamma > 0.0, "gamma must be positive");
    require(P_max > 0.0, "P_max must be positive");
    require(M >= 1, "M must be at least 1");
    require(D.size() >= 1, "at least one waveguide required");
    require(sigma2.size() >= 1, "at least one user required");
    for (int k = 0; k < sigma2.size(); ++k)
        require(sigma2[k] > 0.0, "sigma2 must be positive");
    require(area.x_max > area.x_min && area.y_max > area.y_min, "degenerate user area");
    require(std::isfinite(wavelength()) && std::isfinite(guide_wavelength()) &&
                std::isfinite(eta()) && std::isfinite(attenuation_constant(*this)),
            "derived constants must be finite");
}

SystemConfig SystemConfig::defaults(int n_waveguides, int pas_per_waveguide, int n_users,
                                    double p_max_watt) {
    SystemConfig cfg;
    cfg.M = pas_per_waveguide;
    cfg.P_max = p_max_watt;
    cfg.gamma = cfg.wavelength() / 2.0;
    const double y_extent = cfg.area.y_max - cfg.area.y_min;
    cfg.D.resize(n_waveguides);
    for (int n = 0; n < n_waveguides; ++n)
        cfg.D[n] = cfg.area.y_min + (n + 0.5) * y_extent / n_waveguides;
    cfg.sigma2 = VectorXd::Constant(n_users, 1e-12); // -90 dBm
    return cfg;
}

double attenuation_constant(const SystemConfig& cfg) {
    const double c2 = kSpeedOfLight * kSpeedOfLight;
    return cfg.guide_wavelength() * cfg.eps_r * M_PI * cfg.f_c * cfg.f_c / c2 * cfg.tan_delta;
}

double max_available_power(const SystemConfig& cfg, cplx w_n,
                           const Eigen::Ref<const VectorXd>& layout_row,
                           const Eigen::Ref<const VectorXd>& p_row_prefix, int m) {
    require(m >= 0 && m < layout_row.size(), "element index out of range");
    require(p_row_prefix.size() >= m, "prefix must cover elements before m");
    check_row_increasing(layout_row.head(m + 1));

    const double alpha = attenuation_constant(cfg);
    const double x_m = layout_row[m];
    double avail = std::norm(w_n) * std::exp(-2.0 * alpha * x_m);
    for (int t = 0; t < m; ++t)
        avail -= p_row_prefix[t] * std::exp(-2.0 * alpha * (x_m - layout_row[t]));
    return avail;
}

VectorXcd channel_vector(const SystemConfig& cfg, const Eigen::Ref<const VectorXd>& layout_row,
                         double D_n, const Eigen::Ref<const Eigen::Vector2d>& user) {
    check_row_increasing(layout_row);
    const double lam = cfg.wavelength();
    const double amp = std::sqrt(cfg.eta());
    const double dy2 = (user[1] - D_n) * (user[1] - D_n);
    const double dz2 = cfg.d * cfg.d;

    VectorXcd h(layout_row.size());
    for (int m = 0; m < layout_row.size(); ++m) {
        const double dx = user[0] - layout_row[m];
        const double r = std::sqrt(dx * dx + dy2 + dz2);
        if (r < 1e-12)
            throw SingularGeometryError("user collocated with a radiating element");
        const double phase = -2.0 * M_PI * r / lam;
        h[m] = amp / r * cplx(std::cos(phase), std::sin(phase));
    }
    return h;
}

VectorXcd phase_vector(const SystemConfig& cfg, const Eigen::Ref<const VectorXd>& layout_row) {
    check_row_increasing(layout_row);
    const double lam_g = cfg.guide_wavelength();
    VectorXcd g(layout_row.size());
    for (int m = 0; m < layout_row.size(); ++m) {
        const double phase = -2.0 * M_PI * layout_row[m] / lam_g;
        g[m] = cplx(std::cos(phase), std::sin(phase));
    }
    return g;
}

ChannelBundle effective_channels(const SystemConfig& cfg, const PinLayout& layout,
                                 const MatrixXd& p, const VectorXcd& w, const UserSet& users) {
    const int N = layout.N();
    const int M = layout.M();
    const int K = users.K();
    require(p.rows() == N && p.cols() == M, "power matrix shape mismatch");
    require(w.size() == N, "beamformer length mismatch");

    ChannelBundle bundle;
    bundle.beta.resize(K, N);
    bundle.hbar.assign(K, MatrixXcd(N, M));

    for (int k = 0; k < K; ++k) {
        const Eigen::Vector2d user = users.phi.row(k);
        for (int n = 0; n < N; ++n) {
            const VectorXcd h = channel_vector(cfg, layout.x.row(n), cfg.D[n], user);
            const VectorXcd g = phase_vector(cfg, layout.x.row(n));
            cplx beta_kn = 0.0;
            for (int m = 0; m < M; ++m) {
                beta_kn += h[m] * std::sqrt(std::max(0.0, p(n, m))) * g[m];
                // conj(w_n) folded in so sum_n hbar_k(n,:)^H sqrt(p(n,:)) equals
                // beta_k^H w without a stray conjugation.
                bundle.hbar[k](n, m) = std::conj(w[n]) * h[m] * g[m];
            }
            bundle.beta(k, n) = beta_kn;
        }
    }
    return bundle;
}

double user_rate(const Eigen::Ref<const VectorXcd>& beta_k, const VectorXcd& w, double sigma2_k) {
    require(sigma2_k > 0.0, "sigma2 must be positive");
    const cplx rx = beta_k.dot(w); // conjugates beta_k
    return std::log2(1.0 + std::norm(rx) / sigma2_k);
}

std::pair<int, double> min_rate(const ChannelBundle& bundle, const VectorXcd& w,
                                const SystemConfig& cfg) {
    int k_star = 0;
    double r_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < bundle.K(); ++k) {
        const double r = user_rate(bundle.beta.row(k), w, cfg.sigma2[k]);
        if (r < r_min) {
            r_min = r;
            k_star = k;
        }
    }
    return {k_star, r_min};
}

double min_snr(const ChannelBundle& bundle, const VectorXcd& w, const SystemConfig& cfg) {
    double t = std::numeric_limits<double>::infinity();
    for (int k = 0; k < bundle.K(); ++k) {
        const cplx rx = bundle.beta.row(k).dot(w);
        t = std::min(t, std::norm(rx) / cfg.sigma2[k]);
    }
    return t;
}

FeasibilityReport feasibility_check(const ResourceState& state, const SystemConfig& cfg) {
    FeasibilityReport rep;
    const int N = state.layout.N();
    const int M = state.layout.M();
    const double inf = std::numeric_limits<double>::infinity();

    rep.c1 = inf;
    rep.c2 = inf;
    rep.c3 = inf;
    for (int n = 0; n < N; ++n) {
        for (int m = 0; m < M; ++m) {
            const double x = state.layout.x(n, m);
            rep.c1 = std::min(rep.c1, std::min(x, cfg.L - x));
            if (m > 0)
                rep.c2 = std::min(rep.c2, x - state.layout.x(n, m - 1) - cfg.gamma);
            try {
                const double p_max = max_available_power(cfg, state.w[n], state.layout.x.row(n),
                                                         state.p.row(n), m);
                rep.c3 = std::min(rep.c3, std::min(state.p(n, m), p_max - state.p(n, m)));
            } catch (const LayoutError&) {
                rep.c3 = -inf; // available power undefined on a disordered row
            }
        }
    }
    rep.c4 = cfg.P_max - state.w.squaredNorm();
    return rep;
}

} // namespace pincast::model
