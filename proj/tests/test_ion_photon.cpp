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
#include <random>

#include "ionlink/ion_photon.hpp"
#include "ionlink/params.hpp"

namespace ionlink {
namespace {

using std::numbers::pi;

// Global-phase-insensitive distance between two 2x2 unitaries.
double unitary_distance(const Matrix& a, const Matrix& b) {
    const Complex overlap = (a.adjoint() * b).trace() / 2.0;
    return 1.0 - std::abs(overlap);
}

std::vector<double> hwp_grid() { return linear_grid(0.0, 0.5 * pi, 24); }

TEST(EmitState, IdealParametersGiveTheIdealState) {
    SourceParams p;
    const auto rho = emit_ion_photon_state(p);
    EXPECT_NEAR(fidelity_pure(rho, ideal_ion_photon_state(0.0)), 1.0, 1e-15);
    p.phase = 2.3;
    EXPECT_NEAR(fidelity_pure(emit_ion_photon_state(p), ideal_ion_photon_state(2.3)), 1.0, 1e-15);
}

TEST(EmitState, PumpAndExcitationOnlyScaleSuccess) {
    SourceParams p;
    p.pump_fidelity = 0.96;
    p.excite_prob = 0.96;
    EXPECT_NEAR(fidelity_pure(emit_ion_photon_state(p), ideal_ion_photon_state(0.0)), 1.0, 1e-15);
    EXPECT_NEAR(emission_probability(p), 0.9216, 1e-15);
}

TEST(EmitState, RejectsInvalidParameters) {
    SourceParams p;
    p.pol_mixing = 1.5;
    EXPECT_THROW(emit_ion_photon_state(p), ParameterError);
    p = {};
    p.phase = 7.0;
    EXPECT_THROW(emit_ion_photon_state(p), ParameterError);
}

TEST(Waveplate, HalfWaveAtZeroIsDiagonal) {
    Matrix z = Matrix::Zero(2, 2);
    z(0, 0) = 1.0;
    z(1, 1) = -1.0;
    EXPECT_NEAR(unitary_distance(waveplate_unitary(Waveplate::half, 0.0), z), 0.0, 1e-15);
}

TEST(Waveplate, HalfWaveAt45SwapsHandV) {
    const Matrix u = waveplate_unitary(Waveplate::half, 0.25 * pi);
    EXPECT_NEAR(std::abs(u(0, 0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(u(1, 0)), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(u(0, 1)), 1.0, 1e-15);
}

TEST(Waveplate, HalfWaveMatchesJonesReflection) {
    // Textbook half-wave Jones matrix [[cos 2t, sin 2t], [sin 2t, -cos 2t]].
    for (double t : linear_grid(0.0, pi, 13)) {
        Matrix m(2, 2);
        m << std::cos(2 * t), std::sin(2 * t), std::sin(2 * t), -std::cos(2 * t);
        EXPECT_NEAR(unitary_distance(waveplate_unitary(Waveplate::half, t), m), 0.0, 1e-14) << t;
    }
}

TEST(Waveplate, QuarterWaveSquaredIsHalfWave) {
    for (double t : linear_grid(0.0, pi, 7)) {
        const Matrix q = waveplate_unitary(Waveplate::quarter, t);
        EXPECT_NEAR(unitary_distance(q * q, waveplate_unitary(Waveplate::half, t)), 0.0, 1e-14);
        EXPECT_LE((q.adjoint() * q - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(Waveplate, At22p5GivesBalancedOutcomes) {
    const auto rho = DensityMatrix::from_pure(ideal_ion_photon_state(0.0));
    const Matrix u = embed(waveplate_unitary(Waveplate::half, pi / 8), ip::photon, 2);
    const auto rotated = apply_unitary(rho, u);
    const std::vector<Matrix> proj{level_projector(ip::photon, reg::h, 2), level_projector(ip::photon, reg::v, 2)};
    const auto probs = born_probabilities(rotated, proj);
    EXPECT_NEAR(probs[0], 0.5, 1e-15);
    EXPECT_NEAR(probs[1], 0.5, 1e-15);
}

TEST(CorrelationScan, IdealStateSpansZeroToOne) {
    const auto scan = correlation_scan(DensityMatrix::from_pure(ideal_ion_photon_state(0.0)), hwp_grid());
    EXPECT_NEAR(correlation_contrast(scan), 1.0, 1e-12);
    const auto& v = scan.at("p_up_given_V").values;
    EXPECT_NEAR(*std::min_element(v.begin(), v.end()), 0.0, 1e-12);
    EXPECT_NEAR(*std::max_element(v.begin(), v.end()), 1.0, 1e-12);
    EXPECT_TRUE(scan.fit_ok());
}

// Born-rule oracle for P(up | V) behind a half-wave plate at angle t: the V
// output picks photon amplitudes (sin 2t, -cos 2t) on (H, V).
double oracle_up_given_v(const DensityMatrix& rho, double t) {
    const double w[2] = {std::sin(2 * t), -std::cos(2 * t)};
    double joint[2] = {0.0, 0.0};
    for (int ion = 0; ion < 2; ++ion)
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) joint[ion] += w[a] * w[b] * rho(2 * ion + a, 2 * ion + b).real();
    return joint[reg::up] / (joint[0] + joint[1]);
}

TEST(CorrelationScan, MatchesBornRuleOracle) {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.0, 0.3);
    for (int trial = 0; trial < 10; ++trial) {
        SourceParams p;
        p.pol_mixing = u(gen);
        p.pump_leak = u(gen);
        p.phase = 2.0 * pi * u(gen);
        const auto rho = emit_ion_photon_state(p);
        const auto grid = hwp_grid();
        const auto scan = correlation_scan(rho, grid);
        for (std::size_t i = 0; i < grid.size(); ++i)
            EXPECT_NEAR(scan.at("p_up_given_V").values[i], oracle_up_given_v(rho, grid[i]), 1e-12);
    }
}

TEST(CorrelationScan, DepolarizingGivesOneMinusP) {
    for (double mix : {0.0, 0.018, 0.021, 0.1, 0.5}) {
        SourceParams p;
        p.pol_mixing = mix;
        const auto scan = correlation_scan(emit_ion_photon_state(p), hwp_grid());
        EXPECT_NEAR(correlation_contrast(scan), 1.0 - mix, 1e-6) << mix;
    }
}

TEST(CorrelationScan, DefaultSourceUpperBound) {
    const auto cfg = HardwareConfig::defaults();
    const auto scan = correlation_scan(emit_ion_photon_state(cfg.source_a), hwp_grid());
    const double c = correlation_contrast(scan);
    EXPECT_NEAR(c, 0.982, 1e-6);
    EXPECT_NEAR(ion_photon_fidelity_upper_bound(c), 0.991, 1e-6);
}

TEST(CorrelationScan, ProbabilitiesStayInUnitInterval) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        SourceParams p;
        p.pol_mixing = u(gen);
        p.pump_leak = u(gen);
        const auto scan = correlation_scan(emit_ion_photon_state(p), hwp_grid());
        for (const auto& s : scan.series) {
            for (double v : s.values) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
            EXPECT_LE(s.contrast, 1.0);
        }
    }
}

TEST(Raman, PiPulseFlipsDown) {
    const Matrix r = raman_rotation(0.0, pi);
    Vector down(2);
    down << 1.0, 0.0;
    const Vector out = r * down;
    EXPECT_NEAR(std::abs(out(1)), 1.0, 1e-15);
}

TEST(Raman, TwoHalfPulsesComposeToPi) {
    for (double phi : {0.0, 0.4, 2.0, 5.0}) {
        const Matrix half = raman_rotation(phi);
        EXPECT_NEAR(unitary_distance(half * half, raman_rotation(phi, pi)), 0.0, 1e-15);
    }
}

TEST(CoherenceScan, FittedPhaseEqualsSourcePhase) {
    for (double phase : {5.00, 0.48, 0.0, 3.0}) {
        SourceParams p;
        p.phase = phase;
        const auto ion = herald_ion(emit_ion_photon_state(p), reg::h).ion;
        const auto scan = coherence_scan(ion, linear_grid(0.0, 2 * pi, 20));
        EXPECT_NEAR(scan.at("p_up").contrast, 1.0, 1e-12);
        EXPECT_NEAR(wrap_phase(scan.at("p_up").fit.phase - phase + pi) - pi, 0.0, 1e-6) << phase;
    }
}

TEST(CoherenceScan, DefaultLowerBoundsAreConsistent) {
    const auto cfg = HardwareConfig::defaults();
    // Measured bounds: F_A > 98.1(1.4)%, F_B > 96.8(6)%.
    const std::pair<const SourceParams*, std::pair<double, double>> sides[] = {
        {&cfg.source_a, {0.981, 0.014}}, {&cfg.source_b, {0.968, 0.006}}};
    for (const auto& [src, band] : sides) {
        const auto ion = analysis_ready_ion(*src, cfg.coherence, cfg.schedule.reduced_window_s);
        const auto scan = coherence_scan(ion, linear_grid(0.0, 2 * pi, 20));
        const double lb =
            ion_photon_fidelity_lower_bound(correlated_population(emit_ion_photon_state(*src)), scan.at("p_up").contrast);
        EXPECT_GT(scan.at("p_up").contrast, 0.96);
        // The modeled bound must not undercut the measured one and must stay
        // below the correlation-contrast upper bound.
        EXPECT_GE(lb, band.first - 2.0 * band.second);
        const auto corr = correlation_scan(emit_ion_photon_state(*src), hwp_grid());
        EXPECT_LE(lb, ion_photon_fidelity_upper_bound(correlation_contrast(corr)));
    }
}

TEST(CoherenceScan, DephasedContrastFollowsEnvelope) {
    SourceParams p;
    CoherenceParams coh;
    coh.phase_averaging = false;
    coh.ion_analysis_delay = 40e-6;
    coh.t2_star_ion = 550e-6;
    const auto ion = analysis_ready_ion(p, coh, 0.0);
    const auto scan = coherence_scan(ion, linear_grid(0.0, 2 * pi, 16));
    const double x = 40.0 / 550.0;
    EXPECT_NEAR(scan.at("p_up").contrast, std::exp(-x * x), 1e-12);
    EXPECT_NEAR(0.5 * (1.0 - scan.at("p_up").contrast), 0.0026, 1e-4);
}

TEST(Dephasing, Values) {
    EXPECT_EQ(dephasing_infidelity(0.0, 550e-6), 0.0);
    EXPECT_NEAR(dephasing_infidelity(40e-6, 550e-6), 0.0026, 1e-4);
    EXPECT_NEAR(dephasing_infidelity(38e-3, 38e-3), 0.5 * (1.0 - std::exp(-1.0)), 1e-15);
    EXPECT_NEAR(dephasing_infidelity(38e-3, 38e-3), 0.316, 5e-4);
}

TEST(Dephasing, MonotoneAndSaturating) {
    double prev = -1.0;
    for (double t : linear_grid(0.0, 5e-3, 200)) {
        const double f = dephasing_infidelity(t, 550e-6);
        EXPECT_GE(f, prev);
        prev = f;
    }
    EXPECT_NEAR(dephasing_infidelity(1.0, 550e-6), 0.5, 1e-15);
    EXPECT_THROW(dephasing_infidelity(-1.0, 1.0), std::invalid_argument);
    EXPECT_THROW(dephasing_infidelity(1.0, 0.0), std::invalid_argument);
}

TEST(PhaseAveraging, Values) {
    EXPECT_EQ(phase_averaging_infidelity(0.0, 1e8), 0.0);
    const double window = 1e-6;
    EXPECT_NEAR(phase_averaging_infidelity(window, pi / window), 0.5 * (1.0 - 2.0 / pi), 1e-15);
    EXPECT_NEAR(phase_averaging_infidelity(window, pi / window), 0.182, 5e-4);
    const CoherenceParams coh;
    EXPECT_NEAR(phase_averaging_infidelity(3e-9, coh.larmor), 0.0010, 1e-9);
}

TEST(PhaseAveraging, InverseRecoversFrequency) {
    for (double target : {1e-4, 1e-3, 0.05, 0.18}) {
        const double w = larmor_for_phase_averaging(target, 3e-9);
        EXPECT_NEAR(phase_averaging_infidelity(3e-9, w), target, 1e-12);
    }
    EXPECT_THROW(larmor_for_phase_averaging(0.6, 3e-9), std::invalid_argument);
}

TEST(HeraldIon, ProbabilityAndOrthogonalOutcomes) {
    const auto rho = DensityMatrix::from_pure(ideal_ion_photon_state(1.0));
    const auto h = herald_ion(rho, reg::h);
    const auto v = herald_ion(rho, reg::v);
    EXPECT_NEAR(h.probability + v.probability, 1.0, 1e-15);
    // The two outcomes herald superpositions of opposite sign.
    EXPECT_NEAR(std::abs(h.ion(0, 1) + v.ion(0, 1)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(h.ion(0, 1)), 0.5, 1e-15);
}

}  // namespace
}  // namespace ionlink
