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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ionlink/random.hpp"

namespace ionlink {

/// y = offset + amplitude * sin(frequency * x - phase), amplitude >= 0.
struct SinusoidFit {
    double amplitude = 0.0;
    double phase = 0.0;  // in [0, 2*pi)
    double offset = 0.0;
    double rms_residual = 0.0;
    bool ok = false;

    double operator()(double x, double frequency) const {
        return offset + amplitude * std::sin(frequency * x - phase);
    }
};

inline double wrap_phase(double x) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(x, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r = 0.0;
    return r;
}

/// Linear least squares on the regressors (sin(kx), cos(kx), 1) for a known
/// angular frequency k. `ok` is false when the design is rank deficient or the
/// data are not finite.
inline SinusoidFit fit_sinusoid(std::span<const double> x, std::span<const double> y, double frequency) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_sinusoid: x and y differ in length");
    SinusoidFit fit;
    const auto n = static_cast<Eigen::Index>(x.size());
    if (n < 3) return fit;
    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(y[i])) return fit;
        design(i, 0) = std::sin(frequency * x[i]);
        design(i, 1) = std::cos(frequency * x[i]);
        design(i, 2) = 1.0;
        rhs(i) = y[i];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < 3) return fit;
    const Eigen::Vector3d c = qr.solve(rhs);
    fit.amplitude = std::hypot(c(0), c(1));
    fit.phase = fit.amplitude > 0.0 ? wrap_phase(std::atan2(-c(1), c(0))) : 0.0;
    fit.offset = c(2);
    fit.rms_residual = std::sqrt((design * c - rhs).squaredNorm() / static_cast<double>(n));
    fit.ok = std::isfinite(fit.amplitude);
    return fit;
}

/// How a series' oscillation amplitude maps to its reported contrast.
enum class ContrastKind {
    probability,  // contrast = 2 * amplitude (a probability spans 0..1)
    parity,       // contrast = amplitude (parity spans -1..1)
};

struct ScanSeries {
    std::string name;
    std::vector<double> values;
    SinusoidFit fit;
    double contrast = 0.0;  // clamped to [0, 1]
};

/// Control grid, one or more measured series, and their sinusoid fits.
struct ScanResult {
    std::string control_name;
    std::vector<double> control;
    double frequency = 1.0;  // angular frequency of the fit in the control variable
    ContrastKind kind = ContrastKind::probability;
    std::vector<ScanSeries> series;

    bool fit_ok() const {
        return std::all_of(series.begin(), series.end(), [](const ScanSeries& s) { return s.fit.ok; });
    }

    const ScanSeries& at(const std::string& name) const {
        for (const auto& s : series)
            if (s.name == name) return s;
        throw std::out_of_range("no scan series named " + name);
    }

    void add_series(std::string name, std::vector<double> values) {
        ScanSeries s;
        s.name = std::move(name);
        s.values = std::move(values);
        s.fit = fit_sinusoid(control, s.values, frequency);
        const double raw = kind == ContrastKind::probability ? 2.0 * s.fit.amplitude : s.fit.amplitude;
        s.contrast = std::clamp(raw, 0.0, 1.0);
        series.push_back(std::move(s));
    }
};

/// Replaces each probability in a scan by a binomial estimate from `shots`
/// trials and refits. Parity series are resampled as 2 * Binomial(p_even) - 1.
inline ScanResult resample_scan(const ScanResult& exact, std::uint64_t shots, RandomStream& rng) {
    if (shots == 0) return exact;
    ScanResult out;
    out.control_name = exact.control_name;
    out.control = exact.control;
    out.frequency = exact.frequency;
    out.kind = exact.kind;
    for (const auto& s : exact.series) {
        std::vector<double> v(s.values.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double p = exact.kind == ContrastKind::probability ? s.values[i] : 0.5 * (1.0 + s.values[i]);
            const double est =
                static_cast<double>(rng.binomial(shots, std::clamp(p, 0.0, 1.0))) / static_cast<double>(shots);
            v[i] = exact.kind == ContrastKind::probability ? est : 2.0 * est - 1.0;
        }
        out.add_series(s.name, std::move(v));
    }
    return out;
}

/// Evenly spaced grid with `count` points over [start, stop) or [start, stop].
inline std::vector<double> linear_grid(double start, double stop, std::size_t count, bool endpoint = false) {
    std::vector<double> g(count);
    if (count == 0) return g;
    const double denom = endpoint ? static_cast<double>(std::max<std::size_t>(count - 1, 1))
                                  : static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) g[i] = start + (stop - start) * static_cast<double>(i) / denom;
    return g;
}

}  // namespace ionlink
