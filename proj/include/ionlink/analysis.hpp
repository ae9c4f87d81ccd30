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

// Parity analysis of the heralded two-ion state, the fidelity lower bound, and
// the error and efficiency budgets.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ionlink/bsa_swap.hpp"
#include "ionlink/detection.hpp"
#include "ionlink/ion_photon.hpp"
#include "ionlink/params.hpp"
#include "ionlink/quantum_core.hpp"
#include "ionlink/random.hpp"
#include "ionlink/scan.hpp"

namespace ionlink {

/// P(dd) + P(uu) - P(du) - P(ud).
inline double parity(std::span<const double> populations) {
    if (populations.size() != 4) throw std::invalid_argument("parity expects four populations");
    return populations[0] + populations[3] - populations[1] - populations[2];
}

/// The same parity from the (0, 1, 2)-bright distribution.
inline double parity_from_bright(const Eigen::Vector3d& p) { return p(0) - p(1) + p(2); }

enum class PulseSequence {
    one,  // a single global pi/2 pulse with phase phi
    two,  // global pi/2 at phase 0, then a second global pi/2 at phase phi
};

/// State just before readout for one point of a parity scan.
inline DensityMatrix parity_scan_state(const DensityMatrix& rho, double phi, PulseSequence seq) {
    if (rho.dim() != 4) throw std::invalid_argument("parity_scan expects a two-ion state");
    auto global = [](double phase) {
        const Matrix r = raman_rotation(phase);
        return kron(r, r);
    };
    DensityMatrix out = rho;
    if (seq == PulseSequence::two) out = apply_unitary(out, global(0.0));
    return apply_unitary(out, global(phi));
}

/// Parity vs analysis phase; the fit runs at angular frequency 2 (period pi).
inline ScanResult parity_scan(const DensityMatrix& rho, std::span<const double> phases, PulseSequence seq) {
    ScanResult scan;
    scan.control_name = "analysis_phase_rad";
    scan.control.assign(phases.begin(), phases.end());
    scan.frequency = 2.0;
    scan.kind = ContrastKind::parity;
    std::vector<double> values;
    values.reserve(phases.size());
    for (double phi : phases) {
        const auto pops = parity_scan_state(rho, phi, seq).populations();
        values.push_back(std::clamp(parity(pops), -1.0, 1.0));
    }
    scan.add_series("parity", std::move(values));
    return scan;
}

/// Peak parity of the fitted two-pulse scan, clamped to [0, 1]. At phase pi/2
/// the parity reads <XX> = 2 Re(rho(dd,uu) + rho(du,ud)), the peak whenever
/// <ZZ> is below it; the fitted amplitude, (<XX> - <ZZ>) / 2, would mix in the
/// population imbalance.
inline double two_pulse_contrast(const ScanResult& scan) {
    const auto& f = scan.series.at(0).fit;
    return std::clamp(f.offset + f.amplitude, 0.0, 1.0);
}

/// Fitted parity amplitude of the one-pulse scan, 2 |rho(dd,uu)|.
inline double one_pulse_contrast(const ScanResult& scan) { return scan.series.at(0).contrast; }

/// Uniform average over the relative phase between |down,up> and |up,down>,
/// as if the delta * t phase were not aligned before analysis. Removes every
/// coherence except the one between |down,down> and |up,up>.
inline DensityMatrix phase_randomized(const DensityMatrix& rho) {
    if (rho.dim() != 4) throw std::invalid_argument("phase_randomized expects a two-ion state");
    Matrix acc = Matrix::Zero(4, 4);
    for (int k = 0; k < 4; ++k) {
        const double theta = 0.5 * std::numbers::pi * k;
        Matrix u = Matrix::Identity(4, 4);
        u(1, 1) = std::polar(1.0, -theta);
        u(2, 2) = std::polar(1.0, theta);
        acc += u * rho.matrix() * u.adjoint();
    }
    return DensityMatrix::from_computation(acc / 4.0);
}

/// Z on ion A: maps the minus-sign heralded state onto the plus-sign one.
inline DensityMatrix sign_corrected(const DensityMatrix& rho, int sign) {
    if (sign == 1) return rho;
    return apply_unitary(rho, embed(pauli_z(), 0, 2));
}

struct FidelityBoundInputs {
    double odd_populations = 0.0;     // P(du) + P(ud)
    double two_pulse_contrast = 0.0;  // peak parity of the two-pulse scan
    double one_pulse_contrast = 0.0;  // parity amplitude of the one-pulse scan

    void validate() const {
        detail::require_unit(odd_populations, "odd_populations");
        detail::require_unit(two_pulse_contrast, "two_pulse_contrast");
        detail::require_unit(one_pulse_contrast, "one_pulse_contrast");
    }
};

/// F >= (odd + two_pulse - one_pulse) / 2, clamped to [0, 1].
inline double fidelity_lower_bound(const FidelityBoundInputs& x) {
    x.validate();
    return std::clamp(0.5 * (x.odd_populations + x.two_pulse_contrast - x.one_pulse_contrast), 0.0, 1.0);
}

/// Named contributions with their sum.
struct BudgetLedger {
    std::vector<std::pair<std::string, double>> entries;
    double total = 0.0;

    void add(std::string label, double value) {
        entries.emplace_back(std::move(label), value);
        total = 0.0;
        for (const auto& e : entries) total += e.second;
    }

    double at(const std::string& label) const {
        for (const auto& e : entries)
            if (e.first == label) return e.second;
        throw std::out_of_range("no budget entry " + label);
    }
};

/// Correlation contrast of one source's emitted state on a 32-point grid.
inline double source_correlation_contrast(const SourceParams& src) {
    const auto grid = linear_grid(0.0, 0.5 * std::numbers::pi, 32);
    return correlation_contrast(correlation_scan(emit_ion_photon_state(src), grid));
}

/// First-order itemized infidelity of the heralded two-ion state.
///
/// polarization: 3/4 (1 - C_A C_B) from the two ion-photon correlation
///   contrasts, the loss of a Werner-like mixture;
/// coherence: 1/2 (1 - c(t)) for the Bell-state envelope at the analysis delay;
/// other: 1/2 (1 - overlap) + 3/4 w for wavepacket mismatch and the
///   dark-count / double-excitation admixture w.
inline BudgetLedger error_budget(const HardwareConfig& cfg) {
    cfg.validate();
    BudgetLedger b;
    const double ca = source_correlation_contrast(cfg.source_a);
    const double cb = source_correlation_contrast(cfg.source_b);
    b.add("polarization", 0.75 * (1.0 - ca * cb));
    b.add("coherence", dephasing_infidelity(cfg.coherence.bell_analysis_delay, cfg.coherence.t2_star_bell,
                                            cfg.coherence.bell_envelope));
    const double w = herald_admixture_weight(cfg.source_a, cfg.source_b, cfg.swap);
    b.add("other", 0.5 * (1.0 - cfg.swap.temporal_overlap) + 0.75 * w);
    return b;
}

struct EfficiencyStage {
    std::string label;
    double factor = 1.0;
    double cumulative = 1.0;
};

struct EfficiencyLedger {
    std::vector<EfficiencyStage> stages;
    double product = 1.0;
};

inline EfficiencyLedger efficiency_budget(std::span<const std::pair<std::string, double>> factors) {
    EfficiencyLedger out;
    for (const auto& [label, f] : factors) {
        if (!(f > 0.0 && f <= 1.0)) throw ParameterError(label, "efficiency factor must lie in (0, 1]");
        out.product *= f;
        out.stages.push_back({label, f, out.product});
    }
    return out;
}

/// Single-photon detection chain of one imaging system.
inline std::vector<std::pair<std::string, double>> default_efficiency_chain() {
    return {
        {"optical_pumping", 0.96},    {"excitation", 0.96},        {"branching_493", 0.732},
        {"solid_angle", 0.20},        {"trap_rod_clearance", 0.97}, {"lens_transmission", 0.91},
        {"fiber_coupling", 0.30},     {"detector_qe", 0.71},
    };
}

struct SwapOptions {
    std::uint64_t heralds = 100000;              // split evenly over populations and both scans
    std::size_t phase_points = 16;               // per parity scan, over [0, pi)
    std::uint64_t calibration_shots = 200000;    // per bright class, for thresholds and confusion
    bool phase_randomization = false;            // analyze the phase-randomized state instead
};

struct SwapReport {
    std::uint64_t heralds_plus = 0;
    std::uint64_t heralds_minus = 0;
    std::array<CountHistogram, kBrightClasses> calibration;  // labelled reference histograms
    Thresholds thresholds;
    ConfusionMatrix confusion;
    Eigen::Vector3d exact_bright = Eigen::Vector3d::Zero();     // true (0, 1, 2)-bright distribution
    Eigen::Vector3d observed_bright = Eigen::Vector3d::Zero();  // raw readout frequencies
    SpamCorrection corrected;
    ScanResult two_pulse;  // sampled and SPAM corrected
    ScanResult one_pulse;
    ScanResult two_pulse_exact;
    ScanResult one_pulse_exact;
    double one_pulse_randomized = 0.0;  // exact contrasts of the phase-randomized state
    double two_pulse_randomized = 0.0;
    double fidelity = 0.0;               // <target|rho|target> of the analyzed state
    double bound_sampled = 0.0;
    double bound_expected = 0.0;         // same bound on exact, shot-noise-free inputs
    FidelityBoundInputs inputs_sampled;
    FidelityBoundInputs inputs_expected;
};

namespace detail {

// Readout of `shots` copies of a two-ion state: observed bright-class frequencies.
inline Eigen::Vector3d read_out(const Eigen::Vector3d& truth, std::uint64_t shots, const ReadoutModel& model,
                                const Thresholds& thr, RandomStream& rng) {
    Eigen::Vector3d seen = Eigen::Vector3d::Zero();
    for (std::uint64_t s = 0; s < shots; ++s) {
        const double u = rng.uniform();
        const int k = u < truth(0) ? 0 : (u < truth(0) + truth(1) ? 1 : 2);
        seen(classify(sample_counts(k, model, rng), thr)) += 1.0;
    }
    return seen / static_cast<double>(shots);
}

inline Eigen::Vector3d bright_of(const DensityMatrix& rho) {
    const auto p = rho.populations();
    return bright_distribution(p).cwiseMax(0.0) / bright_distribution(p).cwiseMax(0.0).sum();
}

}  // namespace detail

/// Monte Carlo of the full two-ion analysis: herald signs, readout calibration,
/// population measurement and both parity scans with SPAM correction.
inline SwapReport run_swap_experiment(const HardwareConfig& cfg, const SwapOptions& opt, std::uint64_t seed) {
    cfg.validate();
    if (opt.heralds < 3) throw std::invalid_argument("need at least three heralds");
    if (opt.phase_points < 3) throw std::invalid_argument("need at least three scan points");
    SwapReport rep;

    // Herald signs; genuine heralds are split evenly between the two signs.
    {
        RandomStream rng = RandomStream::substream(seed, 0);
        rep.heralds_plus = rng.binomial(opt.heralds, 0.5);
        rep.heralds_minus = opt.heralds - rep.heralds_plus;
    }
    const double frac_plus = static_cast<double>(rep.heralds_plus) / static_cast<double>(opt.heralds);
    const DensityMatrix plus = swapped_state(cfg, 1);
    const DensityMatrix minus = sign_corrected(swapped_state(cfg, -1), -1);
    DensityMatrix rho = DensityMatrix::from_computation(frac_plus * plus.matrix() + (1.0 - frac_plus) * minus.matrix());
    if (opt.phase_randomization) rho = phase_randomized(rho);
    rep.fidelity = fidelity_pure(rho, swapped_target(cfg, 1));

    // Readout calibration from labelled reference histograms.
    {
        RandomStream rng = RandomStream::substream(seed, 1);
        auto& h = rep.calibration;
        for (int k = 0; k < kBrightClasses; ++k) h[k] = simulate_histogram(k, cfg.readout, opt.calibration_shots, rng);
        rep.thresholds = choose_thresholds(h);
        rep.confusion = confusion_from_histograms(h, rep.thresholds);
    }

    const std::uint64_t per_block = opt.heralds / 3;
    const std::uint64_t per_point = std::max<std::uint64_t>(1, per_block / opt.phase_points);

    rep.exact_bright = detail::bright_of(rho);
    {
        RandomStream rng = RandomStream::substream(seed, 2);
        rep.observed_bright = detail::read_out(rep.exact_bright, per_block, cfg.readout, rep.thresholds, rng);
        rep.corrected = spam_correct(rep.observed_bright, rep.confusion);
    }

    const auto phases = linear_grid(0.0, std::numbers::pi, opt.phase_points);
    auto sampled_scan = [&](PulseSequence seq, std::uint64_t stream_base) {
        ScanResult scan;
        scan.control_name = "analysis_phase_rad";
        scan.control = phases;
        scan.frequency = 2.0;
        scan.kind = ContrastKind::parity;
        std::vector<double> values;
        for (std::size_t i = 0; i < phases.size(); ++i) {
            RandomStream rng = RandomStream::substream(seed, stream_base + i);
            const auto truth = detail::bright_of(parity_scan_state(rho, phases[i], seq));
            const auto seen = detail::read_out(truth, per_point, cfg.readout, rep.thresholds, rng);
            values.push_back(std::clamp(parity_from_bright(spam_correct(seen, rep.confusion).corrected), -1.0, 1.0));
        }
        scan.add_series("parity", std::move(values));
        return scan;
    };
    rep.two_pulse = sampled_scan(PulseSequence::two, 1000);
    rep.one_pulse = sampled_scan(PulseSequence::one, 1000 + opt.phase_points);
    rep.two_pulse_exact = parity_scan(rho, phases, PulseSequence::two);
    rep.one_pulse_exact = parity_scan(rho, phases, PulseSequence::one);
    {
        const DensityMatrix r = phase_randomized(rho);
        rep.two_pulse_randomized = two_pulse_contrast(parity_scan(r, phases, PulseSequence::two));
        rep.one_pulse_randomized = one_pulse_contrast(parity_scan(r, phases, PulseSequence::one));
    }

    rep.inputs_sampled = {.odd_populations = std::clamp(rep.corrected.corrected(1), 0.0, 1.0),
                          .two_pulse_contrast = two_pulse_contrast(rep.two_pulse),
                          .one_pulse_contrast = one_pulse_contrast(rep.one_pulse)};
    rep.inputs_expected = {.odd_populations = std::clamp(rep.exact_bright(1), 0.0, 1.0),
                           .two_pulse_contrast = two_pulse_contrast(rep.two_pulse_exact),
                           .one_pulse_contrast = one_pulse_contrast(rep.one_pulse_exact)};
    rep.bound_sampled = fidelity_lower_bound(rep.inputs_sampled);
    rep.bound_expected = fidelity_lower_bound(rep.inputs_expected);
    return rep;
}

}  // namespace ionlink
