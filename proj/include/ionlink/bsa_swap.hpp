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

// Bell-state analyzer: beamsplitter followed by a polarizer on each output, four
// threshold detectors. Detector index = 2 * side + polarization, with side 0/1
// the two beamsplitter outputs and polarization reg::h / reg::v.

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "ionlink/ion_photon.hpp"
#include "ionlink/params.hpp"
#include "ionlink/quantum_core.hpp"
#include "ionlink/random.hpp"

namespace ionlink {

inline constexpr int kNumDetectors = 4;

inline constexpr int detector_index(int side, int polarization) { return 2 * side + polarization; }

/// Set of detectors that clicked in one attempt window (bit i = detector i).
struct CoincidencePattern {
    std::uint8_t mask = 0;

    static CoincidencePattern of(std::initializer_list<std::pair<int, int>> clicks) {
        CoincidencePattern p;
        for (auto [side, pol] : clicks) p.add(side, pol);
        return p;
    }

    void add(int side, int polarization) { mask |= static_cast<std::uint8_t>(1u << detector_index(side, polarization)); }
    bool fired(int side, int polarization) const { return (mask >> detector_index(side, polarization)) & 1u; }
    int clicks() const { return std::popcount(static_cast<unsigned>(mask)); }

    /// True when the pattern is one H and one V click on the same output.
    bool same_side() const {
        return (fired(0, reg::h) && fired(0, reg::v)) || (fired(1, reg::h) && fired(1, reg::v));
    }
};

/// +1 for an H/V coincidence on the same side, -1 for opposite sides, nothing
/// for every other pattern (HH, VV, single clicks, three or more clicks).
inline std::optional<int> herald_sign(const CoincidencePattern& p) {
    if (p.clicks() != 2) return std::nullopt;
    const bool has_h = p.fired(0, reg::h) || p.fired(1, reg::h);
    const bool has_v = p.fired(0, reg::v) || p.fired(1, reg::v);
    if (!has_h || !has_v) return std::nullopt;
    return p.same_side() ? 1 : -1;
}

/// Probability that an attempt heralds, from the two single-photon
/// efficiencies. Only two of the four photonic Bell states are resolved.
inline double success_probability(double eta_a, double eta_b) {
    detail::require_unit(eta_a, "eta_a");
    detail::require_unit(eta_b, "eta_b");
    return 0.5 * eta_a * eta_b;
}

/// Herald probabilities per attempt, split by whether the detected pattern came
/// from two photons alone or needed a dark count.
struct HeraldStatistics {
    double true_plus = 0.0;
    double true_minus = 0.0;
    double dark_plus = 0.0;
    double dark_minus = 0.0;

    double true_total() const { return true_plus + true_minus; }
    double dark_total() const { return dark_plus + dark_minus; }
    double total() const { return true_total() + dark_total(); }
    /// Fraction of heralds that carry no ion correlation.
    double dark_fraction() const { return total() > 0.0 ? dark_total() / total() : 0.0; }
};

namespace detail {

// Photon-only click patterns of one attempt with their probabilities. The
// two-photon polarization state entering the analyzer is I/4 for any source
// errors considered here, so each photonic Bell state arrives with weight 1/4:
// psi+ leaves H and V on one side, psi- on opposite sides, and phi+- bunch into
// a single detector.
template <class Visit>
void enumerate_photon_patterns(double eta_a, double eta_b, Visit&& visit) {
    visit((1.0 - eta_a) * (1.0 - eta_b), CoincidencePattern{}, false);
    const double single = eta_a * (1.0 - eta_b) + eta_b * (1.0 - eta_a);
    const double both = eta_a * eta_b;
    for (int side = 0; side < 2; ++side) {
        for (int pol = 0; pol < 2; ++pol) {
            visit(0.25 * single, CoincidencePattern::of({{side, pol}}), false);
            visit(0.5 * both * 0.25, CoincidencePattern::of({{side, pol}}), false);  // phi+-, bunched
        }
        visit(0.25 * both * 0.5, CoincidencePattern::of({{side, reg::h}, {side, reg::v}}), true);
        visit(0.25 * both * 0.5, CoincidencePattern::of({{side, reg::h}, {1 - side, reg::v}}), true);
    }
}

}  // namespace detail

/// Exact herald statistics, enumerating photon patterns and every dark-count
/// pattern on the four detectors (each dark with probability `dark_prob`).
inline HeraldStatistics herald_statistics(double eta_a, double eta_b, double dark_prob) {
    detail::require_unit(eta_a, "eta_a");
    detail::require_unit(eta_b, "eta_b");
    detail::require_unit(dark_prob, "dark_count_prob");
    HeraldStatistics s;
    detail::enumerate_photon_patterns(eta_a, eta_b, [&](double prob, CoincidencePattern photons, bool two_photon) {
        if (prob == 0.0) return;
        for (unsigned dark = 0; dark < (1u << kNumDetectors); ++dark) {
            const int n = std::popcount(dark);
            const double pd = std::pow(dark_prob, n) * std::pow(1.0 - dark_prob, kNumDetectors - n);
            if (pd == 0.0) continue;
            const CoincidencePattern seen{static_cast<std::uint8_t>(photons.mask | dark)};
            const auto sign = herald_sign(seen);
            if (!sign) continue;
            const bool genuine = two_photon && (dark & ~static_cast<unsigned>(photons.mask)) == 0;
            const double w = prob * pd;
            if (genuine)
                (*sign > 0 ? s.true_plus : s.true_minus) += w;
            else
                (*sign > 0 ? s.dark_plus : s.dark_minus) += w;
        }
    });
    return s;
}

/// One simulated attempt: detector pattern and whether it came from two photons
/// without dark-count help.
struct AttemptOutcome {
    CoincidencePattern pattern;
    bool genuine = false;
};

inline AttemptOutcome sample_attempt(double eta_a, double eta_b, double dark_prob, RandomStream& rng) {
    AttemptOutcome out;
    const bool a = rng.bernoulli(eta_a);
    const bool b = rng.bernoulli(eta_b);
    if (a && b) {
        const double u = rng.uniform();
        const int side = rng.bernoulli(0.5) ? 1 : 0;
        if (u < 0.25) {
            out.pattern = CoincidencePattern::of({{side, reg::h}, {side, reg::v}});
            out.genuine = true;
        } else if (u < 0.5) {
            out.pattern = CoincidencePattern::of({{side, reg::h}, {1 - side, reg::v}});
            out.genuine = true;
        } else {
            out.pattern.add(side, rng.bernoulli(0.5) ? reg::v : reg::h);
        }
    } else if (a || b) {
        out.pattern.add(rng.bernoulli(0.5) ? 1 : 0, rng.bernoulli(0.5) ? reg::v : reg::h);
    }
    if (dark_prob > 0.0) {
        const std::uint8_t photons = out.pattern.mask;
        for (int d = 0; d < kNumDetectors; ++d) {
            if (rng.bernoulli(dark_prob)) {
                if (!((photons >> d) & 1u)) out.genuine = false;
                out.pattern.mask |= static_cast<std::uint8_t>(1u << d);
            }
        }
    }
    if (!herald_sign(out.pattern)) out.genuine = false;
    return out;
}

/// (delta * t + phi) mod 2pi.
inline double bell_phase(double delta, double t, double phi) { return wrap_phase(delta * t + phi); }

/// Smallest t >= 0 with (delta * t + phi) mod 2pi = 0.
inline double phase_alignment_delay(double delta, double phi) {
    const double target = wrap_phase(-phi);
    if (target == 0.0) return 0.0;
    if (delta == 0.0) throw std::domain_error("phase_alignment_delay: delta = 0 cannot cancel a nonzero phase");
    return delta > 0.0 ? target / delta : (target - 2.0 * std::numbers::pi) / delta;
}

/// (|down,up> + sign e^{i phase} |up,down>) / sqrt(2) on (ion A, ion B).
inline PureState ideal_bell_state(int sign, double phase = 0.0) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("herald sign must be +1 or -1");
    Vector v = Vector::Zero(4);
    v(0b01) = 1.0 / std::numbers::sqrt2;
    v(0b10) = static_cast<double>(sign) * std::polar(1.0 / std::numbers::sqrt2, phase);
    return PureState(std::move(v));
}

/// Phase of the heralded state at time t after the coincidence.
inline double heralded_phase(const SourceParams& src_a, const SourceParams& src_b, double t,
                             const CoherenceParams& coh) {
    if (coh.convention == PhaseConvention::aligned)
        return wrap_phase(coh.qubit_freq_difference * (t - coh.bell_analysis_delay));
    return bell_phase(coh.qubit_freq_difference, t, src_b.phase - src_a.phase);
}

/// Weight of the maximally mixed admixture: dark-count heralds combined with
/// double-excitation heralds.
inline double herald_admixture_weight(const SourceParams& src_a, const SourceParams& src_b,
                                      const SwapErrorParams& err) {
    const double dark = herald_statistics(src_a.efficiency, src_b.efficiency, err.dark_count_prob).dark_fraction();
    return 1.0 - (1.0 - dark) * (1.0 - err.double_excitation_prob);
}

/// Relative-phase dephasing of a two-ion state: multiplies the
/// <down,up|rho|up,down> coherence by `coherence` and leaves the rest alone.
inline KrausChannel relative_dephasing(double coherence) {
    if (!(coherence >= 0.0 && coherence <= 1.0)) throw std::invalid_argument("coherence must lie in [0, 1]");
    const double theta = 0.5 * std::acos(coherence);
    // G = (Z_A - Z_B) / 2 is diagonal: (0, 1, -1, 0) on (dd, du, ud, uu).
    auto rot = [&](double s) {
        Matrix k = Matrix::Zero(4, 4);
        k(0, 0) = 1.0;
        k(1, 1) = std::polar(1.0, -s * theta);
        k(2, 2) = std::polar(1.0, s * theta);
        k(3, 3) = 1.0;
        return Matrix(k / std::numbers::sqrt2);
    };
    return KrausChannel({rot(1.0), rot(-1.0)});
}

namespace detail {

// Projects the photon pair of a 16-dim (ionA, photonA, ionB, photonB) state on
// (|H V> + sign |V H>) / sqrt(2) and returns the unnormalized two-ion block.
inline Matrix project_photons(const Matrix& rho16, int sign) {
    Matrix m = Matrix::Zero(4, 16);
    const double amp = 1.0 / std::numbers::sqrt2;
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            const int row = 2 * a + b;
            m(row, 8 * a + 4 * reg::h + 2 * b + reg::v) = amp;
            m(row, 8 * a + 4 * reg::v + 2 * b + reg::h) = static_cast<double>(sign) * amp;
        }
    }
    return m * rho16 * m.adjoint();
}

}  // namespace detail

/// Two-ion state heralded with `sign`, evaluated t seconds after the
/// coincidence. Errors: photon polarization mixing of both sources, Bell-state
/// dephasing, wavepacket overlap (scales the relative coherence), and the
/// dark-count / double-excitation admixture of I/4.
inline DensityMatrix swapped_state(const SourceParams& src_a, const SourceParams& src_b, int sign, double t,
                                   const SwapErrorParams& err, const HardwareConfig& cfg) {
    src_a.validate();
    src_b.validate();
    err.validate();
    if (sign != 1 && sign != -1) throw std::invalid_argument("herald sign must be +1 or -1");
    if (t < 0.0) throw std::invalid_argument("time after herald must be non-negative");

    // Each source goes in phase free; the accumulated Bell phase is applied below.
    SourceParams a = src_a;
    SourceParams b = src_b;
    a.phase = 0.0;
    b.phase = 0.0;
    const DensityMatrix joint = tensor(emit_ion_photon_state(a), emit_ion_photon_state(b));
    const Matrix block = detail::project_photons(joint.matrix(), sign);
    DensityMatrix ions = DensityMatrix::from_computation(block / block.trace().real());

    const double theta = heralded_phase(src_a, src_b, t, cfg.coherence);
    Matrix phase = Matrix::Identity(2, 2);
    phase(1, 1) = std::polar(1.0, theta);
    ions = apply_unitary(ions, embed(phase, 0, 2));

    ions = apply_channel(ions, relative_dephasing(dephasing_coherence(t, cfg.coherence.t2_star_bell,
                                                                      cfg.coherence.bell_envelope)));
    ions = apply_channel(ions, relative_dephasing(err.temporal_overlap));
    const double w = herald_admixture_weight(src_a, src_b, err);
    if (w > 0.0) ions = apply_channel(ions, depolarizing(w, 2));
    return ions;
}

/// swapped_state with the sources, errors and analysis delay from `cfg`.
inline DensityMatrix swapped_state(const HardwareConfig& cfg, int sign) {
    return swapped_state(cfg.source_a, cfg.source_b, sign, cfg.coherence.bell_analysis_delay, cfg.swap, cfg);
}

/// The ideal target at the same time and phase convention as swapped_state(cfg, sign).
inline PureState swapped_target(const HardwareConfig& cfg, int sign) {
    return ideal_bell_state(sign, heralded_phase(cfg.source_a, cfg.source_b, cfg.coherence.bell_analysis_delay,
                                                 cfg.coherence));
}

}  // namespace ionlink
