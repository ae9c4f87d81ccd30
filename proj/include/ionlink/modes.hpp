// Copyright 2026 The ionlink Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Normal modes of a linear mixed-species chain.
//
// Lengths are in units of l = (k_e e^2 / (m_ref w_z^2))^(1/3) and the Hessian in
// units of m_ref w_z^2, with w_z the axial frequency of one reference ion. At
// fixed trap settings every ion feels the same axial spring constant
// (w_z,i^2 ~ 1/m_i) and a radial pseudopotential with w_r,i ~ 1/m_i.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ionlink/params.hpp"

namespace ionlink {

inline constexpr double kCoulombE2 = 2.307077552e-28;  // e^2 / (4 pi eps0), J m
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg

enum class ModeDirection { axial, radial };

inline const char* to_string(ModeDirection d) { return d == ModeDirection::axial ? "axial" : "radial"; }

/// Raised when the Newton solve or the stability check fails.
class ModeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ModeTable {
    ModeDirection direction = ModeDirection::axial;
    std::vector<double> masses_amu;
    std::vector<double> frequencies;  // Hz, axial ascending, radial descending
    // Orthonormal mass-weighted eigenvectors, ion x mode; both
    // sum_i b_im b_in = delta_mn and sum_m b_im b_jm = delta_ij hold.
    Eigen::MatrixXd participation;
    // Physical displacement pattern of each mode normalized to unit length,
    // ion x mode. The printed Yb-Ba-Ba table corresponds to this matrix.
    Eigen::MatrixXd displacement;
    Eigen::MatrixXd hessian;  // units of m_ref w_z^2
    std::vector<double> residuals;  // |H u - w^2 M u| / |H u| per mode

    std::size_t size() const { return frequencies.size(); }
};

namespace detail {

inline double length_scale(const ChainSpec& spec) {
    const double m = spec.reference_mass_amu * kAtomicMassUnit;
    const double w = 2.0 * std::numbers::pi * spec.axial_freq_ref;
    return std::cbrt(kCoulombE2 / (m * w * w));
}

inline double chain_energy(const Eigen::VectorXd& u) {
    double e = 0.5 * u.squaredNorm();
    for (Eigen::Index i = 0; i < u.size(); ++i)
        for (Eigen::Index j = i + 1; j < u.size(); ++j) e += 1.0 / std::abs(u(i) - u(j));
    return e;
}

inline Eigen::VectorXd chain_gradient(const Eigen::VectorXd& u) {
    Eigen::VectorXd g = u;
    for (Eigen::Index i = 0; i < u.size(); ++i)
        for (Eigen::Index j = 0; j < u.size(); ++j) {
            if (i == j) continue;
            const double d = u(i) - u(j);
            g(i) -= (d > 0 ? 1.0 : -1.0) / (d * d);
        }
    return g;
}

// Coulomb curvature 1/|u_i - u_j|^3 for i != j.
inline Eigen::MatrixXd coulomb_curvature(const Eigen::VectorXd& u) {
    const auto n = u.size();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j) c(i, j) = 1.0 / std::pow(std::abs(u(i) - u(j)), 3);
    return c;
}

inline Eigen::MatrixXd axial_hessian(const Eigen::VectorXd& u) {
    const Eigen::MatrixXd c = coulomb_curvature(u);
    Eigen::MatrixXd h = -2.0 * c;
    for (Eigen::Index i = 0; i < u.size(); ++i) h(i, i) = 1.0 + 2.0 * c.row(i).sum();
    return h;
}

}  // namespace detail

/// Scaled equilibrium positions (units of the length scale), ascending.
inline Eigen::VectorXd equilibrium_positions_scaled(std::size_t n) {
    if (n == 0) throw std::invalid_argument("need at least one ion");
    Eigen::VectorXd u(static_cast<Eigen::Index>(n));
    // Roughly the right spacing for short chains.
    for (std::size_t i = 0; i < n; ++i) u(static_cast<Eigen::Index>(i)) = 1.1 * (static_cast<double>(i) - 0.5 * (n - 1.0));
    if (n == 1) {
        u(0) = 0.0;
        return u;
    }
    for (int it = 0; it < 500; ++it) {
        const Eigen::VectorXd g = detail::chain_gradient(u);
        if (g.norm() < 1e-14) return u;
        const Eigen::VectorXd step = detail::axial_hessian(u).ldlt().solve(g);
        // Backtrack until the ordering survives and the energy drops.
        double t = 1.0;
        const double e0 = detail::chain_energy(u);
        for (int k = 0; k < 60; ++k, t *= 0.5) {
            const Eigen::VectorXd trial = u - t * step;
            bool ordered = true;
            for (Eigen::Index i = 1; i < trial.size(); ++i) ordered = ordered && trial(i) > trial(i - 1);
            if (ordered && detail::chain_energy(trial) <= e0 + 1e-15 * std::abs(e0)) {
                u = trial;
                break;
            }
        }
    }
    if (detail::chain_gradient(u).norm() < 1e-12) return u;
    throw ModeError("equilibrium solve did not converge in 500 iterations");
}

/// Equilibrium positions along the axis in meters.
inline std::vector<double> equilibrium_positions(const ChainSpec& spec) {
    spec.validate();
    const Eigen::VectorXd u = equilibrium_positions_scaled(spec.masses_amu.size());
    const double l = detail::length_scale(spec);
    std::vector<double> z(static_cast<std::size_t>(u.size()));
    for (Eigen::Index i = 0; i < u.size(); ++i) z[static_cast<std::size_t>(i)] = l * u(i);
    return z;
}

inline ModeTable normal_modes(const ChainSpec& spec, ModeDirection direction) {
    spec.validate();
    const auto n = static_cast<Eigen::Index>(spec.masses_amu.size());
    const Eigen::VectorXd u = equilibrium_positions_scaled(spec.masses_amu.size());
    Eigen::VectorXd mass(n);
    for (Eigen::Index i = 0; i < n; ++i) mass(i) = spec.masses_amu[static_cast<std::size_t>(i)] / spec.reference_mass_amu;

    Eigen::MatrixXd h;
    if (direction == ModeDirection::axial) {
        h = detail::axial_hessian(u);
    } else {
        const double beta = spec.radial_freq_ref / spec.axial_freq_ref;
        const Eigen::MatrixXd c = detail::coulomb_curvature(u);
        h = c;
        for (Eigen::Index i = 0; i < n; ++i) h(i, i) = beta * beta / mass(i) - c.row(i).sum();
    }

    const Eigen::VectorXd inv_sqrt_m = mass.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd k = inv_sqrt_m.asDiagonal() * h * inv_sqrt_m.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    if (es.info() != Eigen::Success) throw ModeError("eigen solve failed");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    if (direction == ModeDirection::radial) std::reverse(order.begin(), order.end());

    ModeTable t;
    t.direction = direction;
    t.masses_amu = spec.masses_amu;
    t.hessian = h;
    t.participation.resize(n, n);
    t.displacement.resize(n, n);
    for (Eigen::Index col = 0; col < n; ++col) {
        const Eigen::Index src = order[static_cast<std::size_t>(col)];
        const double lambda = es.eigenvalues()(src);
        if (!(lambda > 0.0))
            throw ModeError(std::string(to_string(direction)) + " mode " + std::to_string(col + 1) +
                            " is unstable (omega^2 <= 0)");
        Eigen::VectorXd v = es.eigenvectors().col(src);
        Eigen::VectorXd d = inv_sqrt_m.cwiseProduct(v);
        d.normalize();
        Eigen::Index big = 0;
        d.cwiseAbs().maxCoeff(&big);
        if (d(big) < 0.0) {
            d = -d;
            v = -v;
        }
        t.participation.col(col) = v;
        t.displacement.col(col) = d;
        t.frequencies.push_back(spec.axial_freq_ref * std::sqrt(lambda));
        const Eigen::VectorXd hu = h * d;
        t.residuals.push_back((hu - lambda * mass.cwiseProduct(d)).norm() / hu.norm());
    }
    return t;
}

/// Largest deviation from double orthonormality of the participation matrix.
inline double orthonormality_residual(const ModeTable& t) {
    const auto n = t.participation.rows();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    const double cols = (t.participation.transpose() * t.participation - eye).cwiseAbs().maxCoeff();
    const double rows = (t.participation * t.participation.transpose() - eye).cwiseAbs().maxCoeff();
    return std::max(cols, rows);
}

struct CouplingEntry {
    std::size_t mode = 0;  // 0-based
    double frequency = 0.0;
    double participation = 0.0;  // |b_coolant,m|
    bool below_floor = false;
};

struct CouplingReport {
    ModeDirection direction = ModeDirection::axial;
    std::size_t coolant_index = 0;
    double floor = 0.1;
    std::vector<CouplingEntry> entries;

    std::size_t flagged() const {
        return static_cast<std::size_t>(
            std::count_if(entries.begin(), entries.end(), [](const CouplingEntry& e) { return e.below_floor; }));
    }
    double minimum() const {
        double m = 1.0;
        for (const auto& e : entries) m = std::min(m, e.participation);
        return m;
    }
};

/// Coolant-ion amplitude in every mode given a ion x mode amplitude matrix.
inline CouplingReport coolant_coupling_report(const Eigen::MatrixXd& amplitudes, std::span<const double> frequencies,
                                              ModeDirection direction, std::size_t coolant_index,
                                              double floor = 0.1) {
    if (coolant_index >= static_cast<std::size_t>(amplitudes.rows()))
        throw std::out_of_range("coolant index outside the chain");
    CouplingReport r;
    r.direction = direction;
    r.coolant_index = coolant_index;
    r.floor = floor;
    for (Eigen::Index m = 0; m < amplitudes.cols(); ++m) {
        CouplingEntry e;
        e.mode = static_cast<std::size_t>(m);
        e.frequency = static_cast<std::size_t>(m) < frequencies.size() ? frequencies[static_cast<std::size_t>(m)] : 0.0;
        e.participation = std::abs(amplitudes(static_cast<Eigen::Index>(coolant_index), m));
        e.below_floor = e.participation < floor;
        r.entries.push_back(e);
    }
    return r;
}

inline CouplingReport coolant_coupling_report(const ModeTable& t, std::size_t coolant_index, double floor = 0.1) {
    return coolant_coupling_report(t.displacement, t.frequencies, t.direction, coolant_index, floor);
}

struct CalibrationResult {
    ChainSpec spec;
    double rms_residual = 0.0;  // Hz
    double max_residual = 0.0;  // Hz
    int iterations = 0;
};

/// Least-squares fit of (axial_freq_ref, radial_freq_ref) so the chain's axial
/// and radial mode frequencies match the targets (same ordering as ModeTable).
inline CalibrationResult calibrate_reference_frequencies(ChainSpec spec, std::span<const double> axial_targets,
                                                         std::span<const double> radial_targets) {
    spec.validate();
    const std::size_t n = spec.masses_amu.size();
    if (axial_targets.size() != n || radial_targets.size() != n)
        throw std::invalid_argument("need one target frequency per mode and direction");
    auto residual = [&](const Eigen::Vector2d& x) {
        ChainSpec s = spec;
        s.axial_freq_ref = x(0);
        s.radial_freq_ref = x(1);
        const auto ax = normal_modes(s, ModeDirection::axial);
        const auto ra = normal_modes(s, ModeDirection::radial);
        Eigen::VectorXd r(static_cast<Eigen::Index>(2 * n));
        for (std::size_t i = 0; i < n; ++i) {
            r(static_cast<Eigen::Index>(i)) = ax.frequencies[i] - axial_targets[i];
            r(static_cast<Eigen::Index>(n + i)) = ra.frequencies[i] - radial_targets[i];
        }
        return r;
    };
    Eigen::Vector2d x(spec.axial_freq_ref, spec.radial_freq_ref);
    CalibrationResult out;
    for (out.iterations = 0; out.iterations < 100; ++out.iterations) {
        const Eigen::VectorXd r0 = residual(x);
        Eigen::MatrixXd j(r0.size(), 2);
        for (int k = 0; k < 2; ++k) {
            Eigen::Vector2d xh = x;
            const double h = 1e-6 * x(k);
            xh(k) += h;
            j.col(k) = (residual(xh) - r0) / h;
        }
        const Eigen::Vector2d step = (j.transpose() * j).ldlt().solve(-j.transpose() * r0);
        x += step;
        if (step.cwiseAbs().maxCoeff() < 1e-9 * x.cwiseAbs().maxCoeff()) break;
    }
    spec.axial_freq_ref = x(0);
    spec.radial_freq_ref = x(1);
    const Eigen::VectorXd r = residual(x);
    out.spec = spec;
    out.rms_residual = std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
    out.max_residual = r.cwiseAbs().maxCoeff();
    return out;
}

/// Yb-Ba-Ba table as printed: entry [r][c] is the displacement of ion r in
/// mode c (per-mode sign arbitrary), frequencies in Hz.
struct ReferenceModeTable {
    std::array<std::array<double, 3>, 3> axial;
    std::array<std::array<double, 3>, 3> radial;
    std::array<double, 3> axial_freq;
    std::array<double, 3> radial_freq;
};

inline ReferenceModeTable yb_ba_ba_reference_table() {
    return {
        .axial = {{{0.614, 0.640, 0.300}, {0.567, -0.126, -0.840}, {0.549, -0.758, 0.453}}},
        .radial = {{{0.178, 0.412, 0.847}, {0.587, 0.672, -0.512}, {0.790, -0.615, 0.144}}},
        .axial_freq = {353e3, 604e3, 872e3},
        .radial_freq = {868e3, 737e3, 606e3},
    };
}

}  // namespace ionlink
