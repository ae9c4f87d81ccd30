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

// Ion-photon entanglement from a single source: the emitted (ion, photon)
// state, waveplate and Raman rotations, and the correlation/coherence scans
// used to bound the ion-photon fidelity.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "ionlink/params.hpp"
#include "ionlink/quantum_core.hpp"
#include "ionlink/scan.hpp"

namespace ionlink {

namespace ip {
// Qubit positions inside a single-source (ion, photon) register.
inline constexpr int ion = 0;
inline constexpr int photon = 1;
}  // namespace ip

/// Ideal (|down,H> + e^{i phase} |up,V>) / sqrt(2) on (ion, photon).
inline PureState ideal_ion_photon_state(double phase) {
    Vector v = Vector::Zero(4);
    v(0b00) = 1.0 / std::numbers::sqrt2;
    v(0b11) = std::polar(1.0 / std::numbers::sqrt2, phase);
    return PureState(std::move(v));
}

/// Detected (ion, photon) state of one source.
///
/// The ideal state is mixed with a classically correlated wrong branch
/// (|up,H> and |down,V> with equal weight, no coherence) of weight `pump_leak`,
/// then the photon is depolarized with strength `pol_mixing`. Pumping and
/// excitation failures produce no photon, so they only scale the attempt
/// success (see emission_probability) and leave this conditional state alone.
inline DensityMatrix emit_ion_photon_state(const SourceParams& p) {
    p.validate();
    const DensityMatrix ideal = DensityMatrix::from_pure(ideal_ion_photon_state(p.phase));
    Matrix wrong = Matrix::Zero(4, 4);
    wrong(0b10, 0b10) = 0.5;
    wrong(0b01, 0b01) = 0.5;
    const auto mixed = DensityMatrix::from_computation((1.0 - p.pump_leak) * ideal.matrix() + p.pump_leak * wrong);
    // Depolarizing the photon: rho -> (1 - p) rho + p rho_ion (x) I/2.
    const DensityMatrix ion = partial_trace(mixed, {ip::ion});
    const Matrix depolarized =
        (1.0 - p.pol_mixing) * mixed.matrix() + p.pol_mixing * kron(ion.matrix(), Matrix::Identity(2, 2) / 2.0);
    return DensityMatrix::from_computation(depolarized);
}

/// Fraction of attempts in which the source emits into the analyzed branch.
inline double emission_probability(const SourceParams& p) { return p.pump_fidelity * p.excite_prob; }

enum class Waveplate { quarter, half };

/// Jones matrix of a retarder (retardance pi/2 or pi) with its fast axis at
/// `angle` from H: R(-angle) diag(e^{-i g/2}, e^{i g/2}) R(angle).
inline Matrix waveplate_unitary(Waveplate kind, double angle) {
    const double retardance = kind == Waveplate::half ? std::numbers::pi : 0.5 * std::numbers::pi;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Matrix rot(2, 2);
    rot << c, s, -s, c;
    Matrix ret = Matrix::Zero(2, 2);
    ret(0, 0) = std::polar(1.0, -0.5 * retardance);
    ret(1, 1) = std::polar(1.0, 0.5 * retardance);
    return rot.transpose() * ret * rot;
}

/// R(theta, phi) = exp(-i theta/2 (cos(phi) X + sin(phi) Y)).
inline Matrix raman_rotation(double phase, double angle = 0.5 * std::numbers::pi) {
    const Matrix gen = std::cos(phase) * pauli_x() + std::sin(phase) * pauli_y();
    return std::cos(0.5 * angle) * Matrix::Identity(2, 2) - Complex(0.0, std::sin(0.5 * angle)) * gen;
}

/// P(down,H) + P(up,V) with no waveplate in the path.
inline double correlated_population(const DensityMatrix& ion_photon) {
    return (ion_photon(0b00, 0b00) + ion_photon(0b11, 0b11)).real();
}

/// Conditional bright-state probabilities P(up | V) and P(up | H) behind a
/// half-wave plate at each angle. Fit period is 90 degrees of plate rotation.
inline ScanResult correlation_scan(const DensityMatrix& ion_photon, std::span<const double> hwp_angles) {
    if (ion_photon.dim() != 4) throw std::invalid_argument("correlation_scan expects an (ion, photon) state");
    ScanResult scan;
    scan.control_name = "hwp_angle_rad";
    scan.control.assign(hwp_angles.begin(), hwp_angles.end());
    scan.frequency = 4.0;
    scan.kind = ContrastKind::probability;
    const Matrix up_v = kron(level_projector(0, reg::up, 1), level_projector(0, reg::v, 1));
    const Matrix up_h = kron(level_projector(0, reg::up, 1), level_projector(0, reg::h, 1));
    const Matrix v = embed(level_projector(0, reg::v, 1), ip::photon, 2);
    const Matrix h = embed(level_projector(0, reg::h, 1), ip::photon, 2);
    std::vector<double> given_v, given_h;
    for (double angle : hwp_angles) {
        const Matrix u = embed(waveplate_unitary(Waveplate::half, angle), ip::photon, 2);
        const Matrix rotated = u * ion_photon.matrix() * u.adjoint();
        auto prob = [&](const Matrix& p) { return std::max(0.0, (p * rotated).trace().real()); };
        const double pv = prob(v);
        const double ph = prob(h);
        given_v.push_back(pv > 0.0 ? std::clamp(prob(up_v) / pv, 0.0, 1.0) : std::nan(""));
        given_h.push_back(ph > 0.0 ? std::clamp(prob(up_h) / ph, 0.0, 1.0) : std::nan(""));
    }
    scan.add_series("p_up_given_V", std::move(given_v));
    scan.add_series("p_up_given_H", std::move(given_h));
    return scan;
}

/// Mean correlation contrast over both detector outputs.
inline double correlation_contrast(const ScanResult& scan) {
    return 0.5 * (scan.at("p_up_given_V").contrast + scan.at("p_up_given_H").contrast);
}

struct HeraldedIon {
    double probability = 0.0;  // probability of the photon outcome
    DensityMatrix ion = DensityMatrix::maximally_mixed(2);
};

/// Ion state conditioned on detecting the photon in `detector` (reg::h or
/// reg::v) behind a half-wave plate at `hwp_angle`. At 22.5 degrees this
/// heralds (|down> +- e^{i phi} |up>) / sqrt(2).
inline HeraldedIon herald_ion(const DensityMatrix& ion_photon, int detector,
                              double hwp_angle = 0.125 * std::numbers::pi) {
    const Matrix u = embed(waveplate_unitary(Waveplate::half, hwp_angle), ip::photon, 2);
    const Matrix p = level_projector(ip::photon, detector, 2);
    const Matrix projected = p * u * ion_photon.matrix() * u.adjoint() * p;
    const double prob = projected.trace().real();
    if (!(prob > 0.0)) throw std::domain_error("photon outcome has zero probability");
    return {prob, partial_trace(DensityMatrix::from_computation(projected), {ip::ion})};
}

/// Coherence factor of a dephasing envelope after time t.
inline double dephasing_coherence(double t, double t2_star, Envelope envelope = Envelope::gaussian) {
    if (t < 0.0) throw std::invalid_argument("dephasing time must be non-negative");
    if (!(t2_star > 0.0)) throw std::invalid_argument("T2* must be positive");
    const double x = t / t2_star;
    return envelope == Envelope::gaussian ? std::exp(-x * x) : std::exp(-x);
}

/// 1/2 (1 - exp(-(t/T2*)^2)): infidelity of an equal superposition after a
/// Gaussian dephasing envelope.
inline double dephasing_infidelity(double t, double t2_star, Envelope envelope = Envelope::gaussian) {
    return 0.5 * (1.0 - dephasing_coherence(t, t2_star, envelope));
}

inline double sinc(double x) {
    if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0 + x * x * x * x / 120.0;
    return std::sin(x) / x;
}

/// Coherence left after averaging a phase that advances uniformly at
/// `qubit_freq` over a detection window.
inline double phase_averaging_coherence(double window, double qubit_freq) {
    if (window < 0.0) throw std::invalid_argument("detection window must be non-negative");
    return sinc(0.5 * qubit_freq * window);
}

inline double phase_averaging_infidelity(double window, double qubit_freq) {
    return 0.5 * (1.0 - phase_averaging_coherence(window, qubit_freq));
}

/// Qubit frequency (rad/s) at which phase averaging over `window` costs
/// `infidelity`. Bisection on the first lobe of sinc.
inline double larmor_for_phase_averaging(double infidelity, double window) {
    if (!(window > 0.0) || !(infidelity > 0.0 && infidelity < 0.5))
        throw std::invalid_argument("need window > 0 and infidelity in (0, 1/2)");
    double lo = 0.0;
    double hi = std::numbers::pi;  // sinc falls monotonically from 1 to 0 on [0, pi]
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (0.5 * (1.0 - sinc(mid)) < infidelity ? lo : hi) = mid;
    }
    return 2.0 * 0.5 * (lo + hi) / window;
}

/// P(up) after R(pi/2, phi) for each analysis phase. The fit is
/// P = offset + C/2 sin(phi - phase), so the fitted phase is the superposition
/// phase of the heralded ion.
inline ScanResult coherence_scan(const DensityMatrix& ion, std::span<const double> phases) {
    if (ion.dim() != 2) throw std::invalid_argument("coherence_scan expects a single-qubit state");
    ScanResult scan;
    scan.control_name = "analysis_phase_rad";
    scan.control.assign(phases.begin(), phases.end());
    scan.frequency = 1.0;
    scan.kind = ContrastKind::probability;
    std::vector<double> p_up;
    for (double phi : phases) {
        const Matrix u = raman_rotation(phi);
        const Matrix out = u * ion.matrix() * u.adjoint();
        p_up.push_back(std::clamp(out(1, 1).real(), 0.0, 1.0));
    }
    scan.add_series("p_up", std::move(p_up));
    return scan;
}

/// Ion heralded behind the 22.5-degree plate, then dephased for the analysis
/// delay (Gaussian T2* envelope) and averaged over the reduced detection window.
inline DensityMatrix analysis_ready_ion(const SourceParams& src, const CoherenceParams& coh, double window,
                                        int detector = reg::h) {
    const auto heralded = herald_ion(emit_ion_photon_state(src), detector);
    double coherence = dephasing_coherence(coh.ion_analysis_delay, coh.t2_star_ion, Envelope::gaussian);
    if (coh.phase_averaging) coherence *= phase_averaging_coherence(window, coh.larmor);
    return apply_channel(heralded.ion, dephasing(std::clamp(coherence, 0.0, 1.0)));
}

/// Upper bound on the overlap with the ideal state from the correlation contrast.
inline double ion_photon_fidelity_upper_bound(double correlation_contrast) {
    return std::clamp(0.5 * (1.0 + correlation_contrast), 0.0, 1.0);
}

/// Two-scan lower bound: F >= (correlated population + coherence contrast) / 2.
inline double ion_photon_fidelity_lower_bound(double correlated_pop, double coherence_contrast) {
    return std::clamp(0.5 * (correlated_pop + coherence_contrast), 0.0, 1.0);
}

}  // namespace ionlink
