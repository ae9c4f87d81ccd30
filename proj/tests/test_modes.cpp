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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ionlink/modes.hpp"

namespace {

using namespace ionlink;

ChainSpec same_species(std::size_t n) {
    ChainSpec s;
    s.masses_amu.assign(n, kMassBa138Ion);
    s.reference_mass_amu = kMassBa138Ion;
    s.axial_freq_ref = 1e6;
    s.radial_freq_ref = 4e6;
    return s;
}

TEST(Equilibrium, SingleIonSitsAtCentre) {
    const auto u = equilibrium_positions_scaled(1);
    ASSERT_EQ(u.size(), 1);
    EXPECT_EQ(u(0), 0.0);
    EXPECT_THROW(equilibrium_positions_scaled(0), std::invalid_argument);
}

TEST(Equilibrium, TwoIonClosedForm) {
    // Balance z = 1 / (2 z)^2 gives z = 4^{-1/3}, spacing 2^{1/3} length units.
    const auto u = equilibrium_positions_scaled(2);
    EXPECT_NEAR(u(1) - u(0), std::cbrt(2.0), 1e-10);
    EXPECT_NEAR(u(0) + u(1), 0.0, 1e-14);

    const auto spec = same_species(2);
    const double m = spec.reference_mass_amu * kAtomicMassUnit;
    const double w = 2.0 * std::numbers::pi * spec.axial_freq_ref;
    const double d = std::cbrt(kCoulombE2 / (m * w * w)) * std::cbrt(2.0);
    const auto z = equilibrium_positions(spec);
    EXPECT_NEAR((z[1] - z[0]) / d, 1.0, 1e-10);
}

TEST(Equilibrium, ThreeIonsMatchFiveQuartersLaw) {
    const auto u = equilibrium_positions_scaled(3);
    EXPECT_NEAR(u(1), 0.0, 1e-14);
    EXPECT_NEAR(u(2), std::cbrt(1.25), 1e-10);
    EXPECT_NEAR(u(0), -std::cbrt(1.25), 1e-10);
}

TEST(Equilibrium, MatchesBruteForceMinimization) {
    // Golden-section on the symmetric three-ion energy a^2 + 5 / (2a).
    auto energy = [](double a) { return a * a + 2.5 / a; };
    double lo = 0.5, hi = 2.0;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    while (hi - lo > 1e-13) {
        const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
        if (energy(x1) < energy(x2))
            hi = x2;
        else
            lo = x1;
    }
    EXPECT_NEAR(equilibrium_positions_scaled(3)(2), 0.5 * (lo + hi), 1e-7);
}

TEST(NormalModes, SingleIonAtReferenceFrequencies) {
    const auto spec = same_species(1);
    const auto ax = normal_modes(spec, ModeDirection::axial);
    const auto ra = normal_modes(spec, ModeDirection::radial);
    ASSERT_EQ(ax.size(), 1u);
    EXPECT_NEAR(ax.frequencies[0], spec.axial_freq_ref, 1e-6);
    EXPECT_NEAR(ra.frequencies[0], spec.radial_freq_ref, 1e-6);
    EXPECT_NEAR(ax.displacement(0, 0), 1.0, 1e-15);
}

TEST(NormalModes, SingleIonMassScaling) {
    ChainSpec spec = same_species(1);
    spec.masses_amu = {2.0 * spec.reference_mass_amu};
    EXPECT_NEAR(normal_modes(spec, ModeDirection::axial).frequencies[0], spec.axial_freq_ref / std::sqrt(2.0), 1e-6);
    EXPECT_NEAR(normal_modes(spec, ModeDirection::radial).frequencies[0], spec.radial_freq_ref / 2.0, 1e-6);
}

TEST(NormalModes, EqualMassAxialRatios) {
    const auto t = normal_modes(same_species(3), ModeDirection::axial);
    ASSERT_EQ(t.size(), 3u);
    EXPECT_NEAR(t.frequencies[0] / 1e6, 1.0, 1e-9);
    EXPECT_NEAR(t.frequencies[1] / t.frequencies[0], std::sqrt(3.0), 1e-9);
    EXPECT_NEAR(t.frequencies[2] / t.frequencies[0], std::sqrt(29.0 / 5.0), 1e-9);
}

TEST(NormalModes, EqualMassRadialFromDirectHessian) {
    // Transverse Hessian of the symmetric chain written out by hand:
    // K_ii = beta^2 - sum_j 1/|u_i-u_j|^3, K_ij = 1/|u_i-u_j|^3.
    const auto spec = same_species(3);
    const double beta = spec.radial_freq_ref / spec.axial_freq_ref;
    const double s = std::cbrt(1.25);
    const double c1 = 1.0 / (s * s * s), c2 = 1.0 / (8.0 * s * s * s);
    Eigen::Matrix3d k;
    k << beta * beta - c1 - c2, c1, c2, c1, beta * beta - 2.0 * c1, c1, c2, c1, beta * beta - c1 - c2;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(k);
    const auto t = normal_modes(spec, ModeDirection::radial);
    for (int m = 0; m < 3; ++m)
        EXPECT_NEAR(t.frequencies[static_cast<std::size_t>(m)], spec.axial_freq_ref * std::sqrt(es.eigenvalues()(2 - m)),
                    1e-6);
    // Radial modes descend, with COM at the top.
    EXPECT_GT(t.frequencies[0], t.frequencies[1]);
    EXPECT_GT(t.frequencies[1], t.frequencies[2]);
    EXPECT_NEAR(t.frequencies[0], spec.radial_freq_ref, 1e-6);
}

TEST(NormalModes, CentreOfMassParticipation) {
    for (auto dir : {ModeDirection::axial, ModeDirection::radial}) {
        const auto t = normal_modes(same_species(3), dir);
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(t.participation(i, 0), 1.0 / std::sqrt(3.0), 1e-12);
    }
}

TEST(NormalModes, OrthonormalAndSolved) {
    std::vector<ChainSpec> specs{same_species(2), same_species(5), HardwareConfig::defaults().chain};
    ChainSpec mixed = same_species(4);
    mixed.masses_amu = {40.0, 137.9, 88.0, 170.9};
    mixed.radial_freq_ref = 6e6;
    specs.push_back(mixed);
    for (const auto& spec : specs)
        for (auto dir : {ModeDirection::axial, ModeDirection::radial}) {
            const auto t = normal_modes(spec, dir);
            EXPECT_LT(orthonormality_residual(t), 1e-10);
            for (double r : t.residuals) EXPECT_LT(r, 1e-10);
            for (double f : t.frequencies) EXPECT_GT(f, 0.0);
            for (Eigen::Index m = 0; m < t.displacement.cols(); ++m) {
                EXPECT_NEAR(t.displacement.col(m).norm(), 1.0, 1e-12);
                Eigen::Index big = 0;
                t.displacement.col(m).cwiseAbs().maxCoeff(&big);
                EXPECT_GT(t.displacement(big, m), 0.0);
            }
        }
}

TEST(NormalModes, AxialIndependentOfRadialConfinement) {
    ChainSpec a = HardwareConfig::defaults().chain;
    ChainSpec b = a;
    b.radial_freq_ref *= 1.7;
    const auto ta = normal_modes(a, ModeDirection::axial);
    const auto tb = normal_modes(b, ModeDirection::axial);
    for (std::size_t m = 0; m < 3; ++m) EXPECT_EQ(ta.frequencies[m], tb.frequencies[m]);
    EXPECT_LT((ta.displacement - tb.displacement).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(NormalModes, UnstableRadialConfinementThrows) {
    ChainSpec spec = same_species(3);
    spec.radial_freq_ref = 0.5 * spec.axial_freq_ref;
    EXPECT_THROW(normal_modes(spec, ModeDirection::radial), ModeError);
    EXPECT_NO_THROW(normal_modes(spec, ModeDirection::axial));
    ChainSpec bad = same_species(2);
    bad.masses_amu[1] = -1.0;
    EXPECT_THROW(normal_modes(bad, ModeDirection::axial), ParameterError);
}

TEST(NormalModes, CalibratedYbBaBaReproducesTable) {
    const auto ref = yb_ba_ba_reference_table();
    const auto cal = calibrate_reference_frequencies(HardwareConfig::defaults().chain, ref.axial_freq, ref.radial_freq);
    EXPECT_LT(cal.max_residual, 500.0);
    const auto ax = normal_modes(cal.spec, ModeDirection::axial);
    const auto ra = normal_modes(cal.spec, ModeDirection::radial);
    for (std::size_t m = 0; m < 3; ++m) {
        EXPECT_NEAR(ax.frequencies[m], ref.axial_freq[m], 500.0) << "axial " << m;
        EXPECT_NEAR(ra.frequencies[m], ref.radial_freq[m], 500.0) << "radial " << m;
        const auto mi = static_cast<Eigen::Index>(m);
        // Per-mode sign chosen to match the printed column.
        const double sa = ax.displacement(0, mi) * ref.axial[0][m] >= 0 ? 1.0 : -1.0;
        const double sr = ra.displacement(0, mi) * ref.radial[0][m] >= 0 ? 1.0 : -1.0;
        for (std::size_t i = 0; i < 3; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            EXPECT_NEAR(sa * ax.displacement(ii, mi), ref.axial[i][m], 1e-3) << "axial ion " << i << " mode " << m;
            EXPECT_NEAR(sr * ra.displacement(ii, mi), ref.radial[i][m], 1e-3) << "radial ion " << i << " mode " << m;
        }
    }
}

TEST(NormalModes, CalibrationRejectsWrongTargetCount) {
    const std::vector<double> two{1e5, 2e5};
    const std::vector<double> three{1e5, 2e5, 3e5};
    EXPECT_THROW(calibrate_reference_frequencies(HardwareConfig::defaults().chain, two, three),
                 std::invalid_argument);
}

TEST(Coupling, PrintedTableMinimumAndFloor) {
    const auto ref = yb_ba_ba_reference_table();
    Eigen::Matrix3d radial;
    for (int i = 0; i < 3; ++i)
        for (int m = 0; m < 3; ++m) radial(i, m) = ref.radial[i][m];
    const auto r = coolant_coupling_report(radial, ref.radial_freq, ModeDirection::radial, 0, 0.2);
    EXPECT_DOUBLE_EQ(r.minimum(), 0.178);
    EXPECT_EQ(r.flagged(), 1u);
    EXPECT_TRUE(r.entries[0].below_floor);
    EXPECT_EQ(r.entries[0].frequency, 868e3);

    Eigen::Matrix3d axial;
    for (int i = 0; i < 3; ++i)
        for (int m = 0; m < 3; ++m) axial(i, m) = ref.axial[i][m];
    EXPECT_EQ(coolant_coupling_report(axial, ref.axial_freq, ModeDirection::axial, 0, 0.2).flagged(), 0u);
    EXPECT_THROW(coolant_coupling_report(axial, ref.axial_freq, ModeDirection::axial, 3), std::out_of_range);
}

TEST(Coupling, ComputedTableFlagsOneRadialMode) {
    const auto ref = yb_ba_ba_reference_table();
    const auto cal = calibrate_reference_frequencies(HardwareConfig::defaults().chain, ref.axial_freq, ref.radial_freq);
    const auto r = coolant_coupling_report(normal_modes(cal.spec, ModeDirection::radial), 0, 0.2);
    EXPECT_EQ(r.flagged(), 1u);
    EXPECT_NEAR(r.minimum(), 0.178, 1e-3);
    EXPECT_EQ(coolant_coupling_report(normal_modes(cal.spec, ModeDirection::axial), 0, 0.2).flagged(), 0u);
}

}  // namespace
