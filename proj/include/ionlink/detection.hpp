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

// Threshold readout of a one- or two-ion register by fluorescence counting,
// and state-preparation-and-measurement (SPAM) correction.
//
// |up> is bright, |down> is shelved and dark. Classes are the number of
// bright ions, 0..2; one-bright events are not attributed to a specific ion.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "ionlink/params.hpp"
#include "ionlink/random.hpp"

namespace ionlink {

inline constexpr int kBrightClasses = 3;

/// Photon-count histogram: counts[c] = number of shots that recorded c photons.
struct CountHistogram {
    std::vector<std::uint64_t> counts;

    std::uint64_t shots() const {
        std::uint64_t s = 0;
        for (auto c : counts) s += c;
        return s;
    }
    double mean() const {
        double s = 0.0;
        for (std::size_t i = 0; i < counts.size(); ++i) s += static_cast<double>(i) * static_cast<double>(counts[i]);
        return shots() ? s / static_cast<double>(shots()) : 0.0;
    }
    void add(std::uint64_t c) {
        if (counts.size() <= c) counts.resize(c + 1, 0);
        ++counts[c];
    }
};

/// Number of ions that actually fluoresce, after shelving errors (a dark ion
/// shows up bright) and bright losses (a bright ion goes dark).
inline int sample_effective_bright(int true_bright, const ReadoutModel& model, RandomStream& rng) {
    int k = 0;
    for (int i = 0; i < model.ions; ++i) {
        const bool bright = i < true_bright;
        k += bright ? !rng.bernoulli(model.bright_loss()) : rng.bernoulli(model.shelving_error());
    }
    return k;
}

inline double mean_counts(int fluorescing, const ReadoutModel& model) {
    return (model.dark_rate + fluorescing * model.bright_rate) * model.duration;
}

inline std::uint64_t sample_counts(int true_bright, const ReadoutModel& model, RandomStream& rng) {
    return rng.poisson(mean_counts(sample_effective_bright(true_bright, model, rng), model));
}

inline CountHistogram simulate_histogram(int true_bright, const ReadoutModel& model, std::uint64_t shots,
                                         RandomStream& rng) {
    model.validate();
    if (true_bright < 0 || true_bright > model.ions) throw std::invalid_argument("true_bright outside 0..ions");
    if (shots < 1) throw std::invalid_argument("simulate_histogram needs at least one shot");
    CountHistogram h;
    for (std::uint64_t s = 0; s < shots; ++s) h.add(sample_counts(true_bright, model, rng));
    return h;
}

/// Class 0 below t1, class 1 in [t1, t2), class 2 from t2 up.
struct Thresholds {
    std::uint64_t t1 = 0;
    std::uint64_t t2 = 0;
    std::array<double, kBrightClasses> error{};  // per-class misclassification
    bool degenerate = false;                     // mean error above 20 %

    double mean_error() const { return (error[0] + error[1] + error[2]) / kBrightClasses; }
    double fidelity(int k) const { return 1.0 - error[static_cast<std::size_t>(k)]; }
};

inline int classify(std::uint64_t counts, const Thresholds& t) {
    if (counts < t.t1) return 0;
    if (counts < t.t2) return 1;
    return 2;
}

/// Thresholds minimizing the summed per-class error over the empirical
/// histograms, by exhaustive scan of t1 <= t2. Ties go to the lower pair.
inline Thresholds choose_thresholds(const std::array<CountHistogram, kBrightClasses>& h) {
    std::size_t top = 0;
    for (const auto& x : h) {
        if (x.shots() == 0) throw std::invalid_argument("choose_thresholds needs nonempty histograms");
        top = std::max(top, x.counts.size());
    }
    // prefix[k][c] = fraction of class k shots with fewer than c counts.
    std::array<std::vector<double>, kBrightClasses> prefix;
    for (int k = 0; k < kBrightClasses; ++k) {
        const double n = static_cast<double>(h[k].shots());
        prefix[k].assign(top + 2, 0.0);
        double run = 0.0;
        for (std::size_t c = 0; c <= top; ++c) {
            prefix[k][c] = run / n;
            if (c < h[k].counts.size()) run += static_cast<double>(h[k].counts[c]);
        }
        prefix[k][top + 1] = 1.0;
    }
    Thresholds best;
    double best_total = 4.0;
    for (std::size_t t1 = 0; t1 <= top + 1; ++t1) {
        for (std::size_t t2 = t1; t2 <= top + 1; ++t2) {
            const double e0 = 1.0 - prefix[0][t1];
            const double e1 = prefix[1][t1] + (1.0 - prefix[1][t2]);
            const double e2 = prefix[2][t2];
            const double total = e0 + e1 + e2;
            if (total < best_total - 1e-15) {
                best_total = total;
                best.t1 = t1;
                best.t2 = t2;
                best.error = {e0, e1, e2};
            }
        }
    }
    best.degenerate = best.mean_error() > 0.2;
    return best;
}

/// M[true][observed] = P(observe k bright | j bright).
class ConfusionMatrix {
public:
    ConfusionMatrix() : m_(Eigen::Matrix3d::Identity()) {}

    explicit ConfusionMatrix(const Eigen::Matrix3d& m) : m_(m) {
        for (int r = 0; r < 3; ++r) {
            if (std::abs(m_.row(r).sum() - 1.0) > 1e-12) throw std::invalid_argument("confusion rows must sum to 1");
            for (int c = 0; c < 3; ++c)
                if (m_(r, c) < 0.0 || m_(r, c) > 1.0) throw std::invalid_argument("confusion entries must lie in [0, 1]");
        }
    }

    const Eigen::Matrix3d& matrix() const { return m_; }
    double operator()(int truth, int observed) const { return m_(truth, observed); }

    double condition_number() const {
        // Singular values from the eigenvalues of M^T M, ascending.
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m_.transpose() * m_, Eigen::EigenvaluesOnly);
        const Eigen::Vector3d s2 = es.eigenvalues();
        return s2(0) > 0.0 ? std::sqrt(s2(2) / s2(0)) : std::numeric_limits<double>::infinity();
    }

    /// Observed class distribution for true distribution p (row vector p M).
    Eigen::Vector3d forward(const Eigen::Vector3d& p) const { return m_.transpose() * p; }

private:
    Eigen::Matrix3d m_;
};

namespace detail {

inline double poisson_cdf_below(std::uint64_t t, double mean) {
    // P(X < t) for X ~ Poisson(mean).
    if (t == 0) return 0.0;
    if (mean <= 0.0) return 1.0;
    double term = std::exp(-mean);
    double sum = term;
    for (std::uint64_t k = 1; k < t; ++k) {
        term *= mean / static_cast<double>(k);
        sum += term;
    }
    return std::min(sum, 1.0);
}

inline double binomial_pmf(int n, int k, double p) {
    if (k < 0 || k > n) return 0.0;
    double c = 1.0;
    for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
    return c * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

}  // namespace detail

/// Confusion matrix implied by the readout model with given thresholds.
inline ConfusionMatrix confusion_from_model(const ReadoutModel& model, const Thresholds& t) {
    model.validate();
    if (model.ions != 2) throw std::invalid_argument("confusion matrix is defined for two ions");
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    for (int truth = 0; truth <= 2; ++truth) {
        for (int kept = 0; kept <= truth; ++kept) {
            const double pk = detail::binomial_pmf(truth, kept, 1.0 - model.bright_loss());
            for (int flipped = 0; flipped <= 2 - truth; ++flipped) {
                const double pf = detail::binomial_pmf(2 - truth, flipped, model.shelving_error());
                const double mu = mean_counts(kept + flipped, model);
                const double below1 = detail::poisson_cdf_below(t.t1, mu);
                const double below2 = detail::poisson_cdf_below(t.t2, mu);
                m(truth, 0) += pk * pf * below1;
                m(truth, 1) += pk * pf * (below2 - below1);
                m(truth, 2) += pk * pf * (1.0 - below2);
            }
        }
        m.row(truth) /= m.row(truth).sum();
    }
    return ConfusionMatrix(m);
}

/// Empirical confusion matrix from labelled histograms.
inline ConfusionMatrix confusion_from_histograms(const std::array<CountHistogram, kBrightClasses>& h,
                                                 const Thresholds& t) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    for (int truth = 0; truth < kBrightClasses; ++truth) {
        const auto& x = h[static_cast<std::size_t>(truth)];
        for (std::size_t c = 0; c < x.counts.size(); ++c) m(truth, classify(c, t)) += static_cast<double>(x.counts[c]);
        m.row(truth) /= m.row(truth).sum();
    }
    return ConfusionMatrix(m);
}

struct SpamCorrection {
    Eigen::Vector3d raw;        // M^-T applied, before clipping
    Eigen::Vector3d corrected;  // clipped to the simplex and renormalized
    double clipped = 0.0;       // total negative mass removed
};

/// Inverts the observation map: solves p M = observed for p.
inline SpamCorrection spam_correct(const Eigen::Vector3d& observed, const ConfusionMatrix& m) {
    if (std::abs(observed.sum() - 1.0) > 1e-9) throw std::invalid_argument("observed frequencies must sum to 1");
    if (!(m.condition_number() < 1e12)) throw std::domain_error("confusion matrix is singular");
    SpamCorrection out;
    out.raw = m.matrix().transpose().fullPivLu().solve(observed);
    out.corrected = out.raw;
    for (int i = 0; i < 3; ++i) {
        if (out.corrected(i) < 0.0) {
            out.clipped += -out.corrected(i);
            out.corrected(i) = 0.0;
        }
    }
    out.corrected /= out.corrected.sum();
    return out;
}

/// (P0, P1, P2) bright-count distribution from (dd, du, ud, uu) populations.
inline Eigen::Vector3d bright_distribution(std::span<const double> populations) {
    if (populations.size() != 4) throw std::invalid_argument("expected four two-ion populations");
    return {populations[0], populations[1] + populations[2], populations[3]};
}

/// Splits the one-bright class equally between |down,up> and |up,down>.
inline std::array<double, 4> split_one_bright(const Eigen::Vector3d& p) {
    return {p(0), 0.5 * p(1), 0.5 * p(1), p(2)};
}

}  // namespace ionlink
