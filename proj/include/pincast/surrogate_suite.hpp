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
// Property suite for every surrogate the optimizer linearizes: quadratic
// difference-of-convex bounds, reciprocal and inverse-sqrt tangents, the
// Frobenius expansion, the spectral-norm subgradient bound and the penalty
// majorizer. Formulas are restated here from first principles, independent of
// the optimizer's own implementation, and exercised by the unit tests, the
// acceptance suite and the self-check command line.

#ifndef PINCAST_SURROGATE_SUITE_HPP
#define PINCAST_SURROGATE_SUITE_HPP

#include "pincast/oracle.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <complex>
#include <string>
#include <utility>
#include <vector>

namespace pincast::surrogates {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using oracle::CheckReport;
using cplx = std::complex<double>;

struct NamedReport {
    std::string name;
    CheckReport report;
};

namespace detail {

// pack/unpack of (F sym, A hermitian) pairs used by the Frobenius bound
struct HermPack {
    int n;
    int size() const { return n * (n + 1) / 2 * 2 + n * (n - 1) / 2; }
    MatrixXd F(const VectorXd& v) const {
        MatrixXd m(n, n);
        int idx = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j, ++idx)
                m(i, j) = m(j, i) = v[idx];
        return m;
    }
    MatrixXcd A(const VectorXd& v) const {
        MatrixXcd m(n, n);
        int idx = n * (n + 1) / 2;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j, ++idx)
                m(i, j) = m(j, i) = v[idx];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < i; ++j, ++idx) {
                m(i, j) += cplx(0.0, v[idx]);
                m(j, i) -= cplx(0.0, v[idx]);
            }
        return m;
    }
};

inline double sq(double x) { return x * x; }

} // namespace detail

// (10): r_hat^2 + r_bar^2 is minorized by its tangent plane.
inline NamedReport eq10_quadratic(int n, std::uint64_t seed) {
    oracle::Fn f = [](const VectorXd& x) { return x[0] * x[0] + x[1] * x[1]; };
    oracle::SurrogateBuilder sb = [](const VectorXd& x0) {
        return [x0](const VectorXd& x) {
            return 2.0 * x0[0] * x[0] + 2.0 * x0[1] * x[1] - x0[0] * x0[0] - x0[1] * x0[1];
        };
    };
    oracle::PairSampler sampler = [](rng::Stream& rs) {
        VectorXd a(2), b(2);
        for (int i = 0; i < 2; ++i) {
            a[i] = rs.uniform(-10, 10);
            b[i] = rs.uniform(-10, 10);
        }
        return std::make_pair(a, b);
    };
    return {"eq10 quadratic tangent", oracle::check_minorizer(f, sb, sampler, n, seed)};
}

// (14)/(15): |c|^2 >= 2 Re(conj(c0) c) - |c0|^2 for complex c. The affine map
// from powers to c composes freely with this bound.
inline NamedReport eq14_modulus_square(int n, std::uint64_t seed) {
    oracle::Fn f = [](const VectorXd& x) { return x[0] * x[0] + x[1] * x[1]; };
    oracle::SurrogateBuilder sb = [](const VectorXd& x0) {
        return [x0](const VectorXd& x) {
            return 2.0 * (x0[0] * x[0] + x0[1] * x[1]) - (x0[0] * x0[0] + x0[1] * x0[1]);
        };
    };
    oracle::PairSampler sampler = [](rng::Stream& rs) {
        VectorXd a(2), b(2);
        for (int i = 0; i < 2; ++i) {
            a[i] = rs.uniform(-5, 5);
            b[i] = rs.uniform(-5, 5);
        }
        return std::make_pair(a, b);
    };
    return {"eq14 modulus-square bound", oracle::check_minorizer(f, sb, sampler, n, seed)};
}

// (23): || F + C^H A C ||_F^2 minorized by its tangent at (F0, A0).
inline NamedReport eq23_frobenius(int n, std::uint64_t seed) {
    const int dim = 3;
    detail::HermPack pack{dim};

    auto rs_c = rng::substream(seed, {23, 1});
    Eigen::VectorXcd cdiag(dim);
    for (int i = 0; i < dim; ++i)
        cdiag[i] = cplx(rs_c.uniform(-1, 1), rs_c.uniform(-1, 1));
    const MatrixXcd C = cdiag.asDiagonal();

    auto S_of = [pack, C](const VectorXd& v) -> MatrixXcd {
        return pack.F(v).cast<cplx>() + C.adjoint() * pack.A(v) * C;
    };
    oracle::Fn f = [S_of](const VectorXd& v) { return S_of(v).squaredNorm(); };
    oracle::SurrogateBuilder sb = [pack, C, S_of](const VectorXd& v0) {
        const MatrixXcd S0 = S_of(v0);
        const MatrixXd F0 = pack.F(v0);
        const MatrixXcd A0 = pack.A(v0);
        const double base = S0.squaredNorm();
        return [=](const VectorXd& v) {
            const MatrixXd dF = pack.F(v) - F0;
            const MatrixXcd dA = pack.A(v) - A0;
            const double tF = (S0.adjoint() * dF.cast<cplx>()).trace().real();
            const double tA = (S0.adjoint() * C.adjoint() * dA * C).trace().real();
            return base + 2.0 * tF + 2.0 * tA;
        };
    };
    oracle::PairSampler sampler = [pack](rng::Stream& rs) {
        VectorXd a(pack.size()), b(pack.size());
        for (int i = 0; i < pack.size(); ++i) {
            a[i] = rs.uniform(-2, 2);
            b[i] = rs.uniform(-2, 2);
        }
        return std::make_pair(a, b);
    };
    return {"eq23 frobenius tangent", oracle::check_minorizer(f, sb, sampler, n, seed)};
}

// (24): (x - x_k)^2 minorized by its tangent.
inline NamedReport eq24_square(int n, std::uint64_t seed) {
    const double x_k = 17.3;
    oracle::Fn f = [x_k](const VectorXd& x) { return detail::sq(x[0] - x_k); };
    oracle::SurrogateBuilder sb = [x_k](const VectorXd& x0) {
        return [=](const VectorXd& x) {
            return detail::sq(x0[0] - x_k) + 2.0 * (x0[0] - x_k) * (x[0] - x0[0]);
        };
    };
    oracle::PairSampler sampler = [](rng::Stream& rs) {
        VectorXd a(1), b(1);
        a[0] = rs.uniform(0, 40);
        b[0] = rs.uniform(0, 40);
        return std::make_pair(a, b);
    };
    return {"eq24 squared-distance tangent", oracle::check_minorizer(f, sb, sampler, n, seed)};
}

// (25): 1/z minorized by its tangent on z > 0.
inline NamedReport eq25_reciprocal(int n, std::uint64_t seed) {
    oracle::Fn f = [](const VectorXd& z) { return 1.0 / z[0]; };
    oracle::SurrogateBuilder sb = [](const VectorXd& z0) {
        return [=](const VectorXd& z) {
            return 1.0 / z0[0] - (z[0] - z0[0]) / (z0[0] * z0[0]);
        };
    };
    oracle::PairSampler sampler = [](rng::Stream& rs) {
        VectorXd a(1), b(1);
        a[0] = std::exp(rs.uniform(std::log(1e-3), std::log(1e3)));
        b[0] = std::exp(rs.uniform(std::log(1e-3), std::log(1e3)));
        return std::make_pair(a, b);
    };
    return {"eq25 reciprocal tangent", oracle::check_minorizer(f, sb, sampler, n, seed)};
}

// (26): (2 pi / lambda) z^{-1/2} minorized by its tangent on z > 0.
inline NamedReport eq26_inverse_sqrt(int n, std::uint64_t seed) {
    const double w = 2.0 * M_PI / 0.0107;
    oracle::Fn f = [w](const VectorXd& z) { return w / std::sqrt(z[0]); };
    oracle::SurrogateBuilder sb = [w](const VectorXd& z0) {
        return [=](const VectorXd& z) {
            return w / std::sqrt(z0[0]) -
                   0.5 * w * std::pow(z0[0], -1.5) * (z[0] - z0[0]);
        };
    };
    oracle::PairSampler sampler = [](rng::Stream& rs) {
        VectorXd a(1), b(1);
        a[0] = std::exp(rs.uniform(std::log(1e-3), std::log(1e3)));
        b[0] = std::exp(rs.uniform(std::log(1e-3), std::log(1e3)));
        return std::make_pair(a, b);
    };
    return {"eq26 inverse-sqrt tangent", oracle::check_minorizer(f, sb, sampler, n, seed)};
}

// (27): spectral norm of a Hermitian PSD matrix minorized by the top
// eigenvector subgradient plane. Checked for real symmetric and complex
// Hermitian draws.
inline NamedReport eq27_spectral_real(int n, std::uint64_t seed) {
    const int dim = 3;
    const int sz = dim * (dim + 1) / 2;
    auto unpack = [dim](const VectorXd& v) {
        MatrixXd m(dim, dim);
        int idx = 0;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j <= i; ++j, ++idx)
                m(i, j) = m(j, i) = v[idx];
        return m;
    };
    oracle::Fn f = [unpack](const VectorXd& v) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(unpack(v), Eigen::EigenvaluesOnly);
        return es.eigenvalues().maxCoeff();
    };
    oracle::SurrogateBuilder sb = [unpack](const VectorXd& v0) {
        const MatrixXd X0 = unpack(v0);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(X0);
        const int top = static_cast<int>(es.eigenvalues().size()) - 1;
        const VectorXd phi = es.eigenvectors().col(top);
        const double norm0 = es.eigenvalues()[top];
        return [=](const VectorXd& v) {
            return norm0 + (phi.transpose() * (unpack(v) - X0) * phi).value();
        };
    };
    oracle::PairSampler sampler = [dim, sz](rng::Stream& rs) {
        auto draw = [&] {
            MatrixXd B(dim, dim);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j)
                    B(i, j) = rs.uniform(-1, 1);
            const MatrixXd X = B * B.transpose();
            VectorXd v(sz);
            int idx = 0;
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j <= i; ++j, ++idx)
                    v[idx] = X(i, j);
            return v;
        };
        auto a = draw();
        auto b = draw();
        return std::make_pair(a, b);
    };
    return {"eq27 spectral subgradient (sym)", oracle::check_minorizer(f, sb, sampler, n, seed)};
}

inline NamedReport eq27_spectral_hermitian(int n, std::uint64_t seed) {
    const int dim = 3;
    detail::HermPack pack{dim};
    auto unpackA = [pack](const VectorXd& v) { return pack.A(v); };
    oracle::Fn f = [unpackA](const VectorXd& v) {
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(unpackA(v), Eigen::EigenvaluesOnly);
        return es.eigenvalues().maxCoeff();
    };
    oracle::SurrogateBuilder sb = [unpackA](const VectorXd& v0) {
        const MatrixXcd X0 = unpackA(v0);
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(X0);
        const int top = static_cast<int>(es.eigenvalues().size()) - 1;
        const Eigen::VectorXcd phi = es.eigenvectors().col(top);
        const double norm0 = es.eigenvalues()[top];
        return [=](const VectorXd& v) {
            return norm0 + (phi.adjoint() * (unpackA(v) - X0) * phi).value().real();
        };
    };
    oracle::PairSampler sampler = [pack](rng::Stream& rs) {
        const int dim = pack.n;
        auto draw = [&] {
            MatrixXcd B(dim, dim);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j)
                    B(i, j) = cplx(rs.uniform(-1, 1), rs.uniform(-1, 1));
            const MatrixXcd X = B * B.adjoint();
            VectorXd v(pack.size());
            v.setZero();
            int idx = 0;
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j <= i; ++j, ++idx)
                    v[idx] = X(i, j).real();
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < i; ++j, ++idx)
                    v[idx] = X(i, j).imag();
            return v;
        };
        auto a = draw();
        auto b = draw();
        return std::make_pair(a, b);
    };
    return {"eq27 spectral subgradient (herm)",
            oracle::check_minorizer(f, sb, sampler, n, seed)};
}

// (28): Lipschitz-gradient majorizer of the phase-consistency penalty
//   Phi(Re, Im, th) = (Re - cos th)^2 + (Im + sin th)^2
// with quadratic trust terms (L_AR = L_AI = 2, L_TH = 4). The quadratic part
// of Phi in (Re, Im) makes the bound exact along that block; along the phase
// the curvature is at most 2(|Re| + |Im|) <= 4 on the unit box. The bound is
// per-block: the checks fix one block at the expansion and vary the other.
namespace detail {
inline double phi_pen(double re, double im, double th) {
    return sq(re - std::cos(th)) + sq(im + std::sin(th));
}
inline oracle::Fn phi_fn() {
    return [](const VectorXd& x) { return phi_pen(x[0], x[1], x[2]); };
}
inline oracle::SurrogateBuilder phi_majorizer() {
    constexpr double L_AR = 2.0, L_AI = 2.0, L_TH = 4.0;
    return [](const VectorXd& x0) {
        const double re0 = x0[0], im0 = x0[1], th0 = x0[2];
        const double rhat = re0 - std::cos(th0);
        const double ihat = im0 + std::sin(th0);
        const double base = phi_pen(re0, im0, th0);
        return [=](const VectorXd& x) {
            const double dre = x[0] - re0, dim = x[1] - im0, dth = x[2] - th0;
            return base + 2.0 * rhat * dre + 2.0 * ihat * dim +
                   2.0 * (rhat * std::sin(th0) + ihat * std::cos(th0)) * dth +
                   0.5 * L_AR * dre * dre + 0.5 * L_AI * dim * dim + 0.5 * L_TH * dth * dth;
        };
    };
}
} // namespace detail

inline NamedReport eq28_phi_amplitude_block(int n, std::uint64_t seed) {
    oracle::PairSampler sampler = [](rng::Stream& rs) {
        VectorXd a(3), b(3);
        a[0] = rs.uniform(-1, 1);
        a[1] = rs.uniform(-1, 1);
        a[2] = rs.uniform(-M_PI, M_PI);
        b[0] = rs.uniform(-1, 1);
        b[1] = rs.uniform(-1, 1);
        b[2] = a[2]; // phase held at the expansion
        return std::make_pair(a, b);
    };
    return {"eq28 penalty majorizer (amplitude block)",
            oracle::check_majorizer(detail::phi_fn(), detail::phi_majorizer(), sampler, n, seed)};
}

inline NamedReport eq28_phi_phase_block(int n, std::uint64_t seed) {
    oracle::PairSampler sampler = [](rng::Stream& rs) {
        VectorXd a(3), b(3);
        a[0] = rs.uniform(-1, 1);
        a[1] = rs.uniform(-1, 1);
        a[2] = rs.uniform(-M_PI, M_PI);
        b[0] = a[0]; // amplitudes held at the expansion
        b[1] = a[1];
        b[2] = a[2] + rs.uniform(-2.0 * M_PI, 2.0 * M_PI);
        return std::make_pair(a, b);
    };
    return {"eq28 penalty majorizer (phase block)",
            oracle::check_majorizer(detail::phi_fn(), detail::phi_majorizer(), sampler, n, seed)};
}

inline std::vector<NamedReport> run_all(int n, std::uint64_t seed) {
    return {
        eq10_quadratic(n, seed),          eq14_modulus_square(n, seed),
        eq23_frobenius(n, seed),          eq24_square(n, seed),
        eq25_reciprocal(n, seed),         eq26_inverse_sqrt(n, seed),
        eq27_spectral_real(n, seed),      eq27_spectral_hermitian(n, seed),
        eq28_phi_amplitude_block(n, seed), eq28_phi_phase_block(n, seed),
    };
}

} // namespace pincast::surrogates

#endif
