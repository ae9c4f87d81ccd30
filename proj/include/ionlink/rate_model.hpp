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

// Continuous-n statistics of an attempt loop whose per-attempt success
// probability decays as p(n) = A exp(-B n) + C.
//
// The simulator's attempts are discrete; these formulas treat n as continuous.
// A discrete loop consumes about half an attempt less than 1 + int_0^N S, and
// the per-attempt law differs at O(p) relative. Both are small next to the
// Monte Carlo error at p ~ 1e-4 and N >> 1.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "ionlink/params.hpp"
#include "ionlink/quadrature.hpp"

namespace ionlink {

/// The decay law actually seen by the attempt loop. Under continuous
/// sympathetic cooling the recoil heating never builds up, so p stays at A + C.
inline DecayParams effective_decay(const DecayParams& p, bool coolant) {
    if (!coolant) return p;
    return {.a = 0.0, .b = 0.0, .c = p.a + p.c};
}

namespace detail {

// Exponent of the survival function: (A/B)(exp(-B n) - 1) - C n, with the
// B -> 0 limit -A n - C n.
inline double log_survival(double n, const DecayParams& p) {
    const double decay_part = p.b == 0.0 ? -p.a * n : p.a * std::expm1(-p.b * n) / p.b;
    return decay_part - p.c * n;
}

}  // namespace detail

/// Probability of no success in the first n attempts.
inline double survival(double n, const DecayParams& p) {
    if (n < 0.0) throw std::invalid_argument("attempt index must be non-negative");
    return std::exp(detail::log_survival(n, p));
}

/// PDF(n) = exp[(A/B)(e^{-Bn} - 1) - C n] (A e^{-Bn} + C).
inline double pdf(double n, const DecayParams& p) { return survival(n, p) * p.at(n); }

/// CDF(N) = 1 - exp[(A/B)(e^{-BN} - 1) - C N].
inline double cdf(double n, const DecayParams& p) {
    if (n < 0.0) throw std::invalid_argument("attempt index must be non-negative");
    return -std::expm1(detail::log_survival(n, p));
}

/// Expected attempts consumed by one loop capped at N, N + 1 - int_0^N CDF.
/// Integrates the survival function directly, which is the same quantity
/// without the cancellation between N and the CDF integral.
inline QuadratureResult expected_loop_attempts(double n_cap, const DecayParams& p,
                                               const QuadratureOptions& opt = {}) {
    if (n_cap < 0.0) throw std::invalid_argument("loop cap must be non-negative");
    // Beyond log S = -60 the integrand no longer moves the result.
    const double rate = p.at(0.0);
    double end = n_cap;
    if (rate > 0.0) {
        double hi = 1.0 / rate;
        while (detail::log_survival(hi, p) > -60.0 && hi < n_cap) hi *= 2.0;
        end = std::min(n_cap, hi);
    }
    // Geometric breakpoints from the shortest decay scale, so no piece is
    // wide enough for the initial rule to miss the structure near n = 0.
    double scale = rate > 0.0 ? 1.0 / rate : end;
    if (p.b > 0.0) scale = std::min(scale, 1.0 / p.b);
    QuadratureResult q;
    q.converged = true;
    double lo = 0.0;
    double hi = std::min(end, scale / 8.0);
    while (lo < end) {
        const auto piece = integrate([&](double n) { return survival(n, p); }, lo, hi, opt);
        q.value += piece.value;
        q.error += piece.error;
        q.intervals += piece.intervals;
        q.converged = q.converged && piece.converged;
        lo = hi;
        hi = std::min(end, 2.0 * hi);
    }
    q.value += 1.0;
    return q;
}

struct MeanSuccess {
    double value = 0.0;
    double rel_error = 0.0;  // achieved by the quadrature
    bool converged = false;
};

/// Average success probability per attempt, CDF(N) / (N + 1 - int_0^N CDF).
inline MeanSuccess mean_success_prob(double n_cap, const DecayParams& p, const QuadratureOptions& opt = {}) {
    if (!(n_cap > 0.0)) throw std::invalid_argument("mean_success_prob needs N > 0");
    const auto attempts = expected_loop_attempts(n_cap, p, opt);
    MeanSuccess m;
    m.value = cdf(n_cap, p) / attempts.value;
    m.rel_error = attempts.error / attempts.value;
    m.converged = attempts.converged;
    return m;
}

struct RateOptions {
    bool coolant = false;
    bool ignore_recooling = false;  // drop cooling time from the wall-clock denominator
    QuadratureOptions quadrature{};
};

/// Heralds per second with a loop cap of N attempts.
///
/// Coolant: one request is an initial cooling followed by a single loop, and
/// fails at the cap. No coolant: loops repeat until success with a cooling
/// break after every failed loop.
inline double rate_at_cap(double n_cap, const DecayParams& decay, const ScheduleParams& sched,
                          const RateOptions& opt = {}) {
    const DecayParams p = effective_decay(decay, opt.coolant);
    if (!(n_cap > 0.0)) return 0.0;
    const double d = static_cast<double>(sched.attempt_duration_ns) * 1e-9;
    const double cool = opt.ignore_recooling ? 0.0 : static_cast<double>(sched.cooling_duration_ns) * 1e-9;
    const double q = cdf(n_cap, p);
    const double attempts = expected_loop_attempts(n_cap, p, opt.quadrature).value;
    const double time = opt.coolant ? cool + d * attempts : d * attempts + cool * (1.0 - q);
    return q / time;
}

struct CapOptimum {
    std::uint64_t cap = 1;
    double rate = 0.0;
};

/// Integer N in [1, n_max] maximizing rate_at_cap: golden-section search over
/// log N, then an exhaustive scan of +-50 around the relaxed optimum.
inline CapOptimum optimal_cap(const DecayParams& decay, const ScheduleParams& sched, const RateOptions& opt,
                              std::uint64_t n_max) {
    if (n_max < 1) throw std::invalid_argument("optimal_cap needs n_max >= 1");
    auto rate_log = [&](double x) { return rate_at_cap(std::exp(x), decay, sched, opt); };
    constexpr double inv_phi = 0.6180339887498949;
    double lo = 0.0;
    double hi = std::log(static_cast<double>(n_max));
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = rate_log(x1);
    double f2 = rate_log(x2);
    while (hi - lo > 1e-6) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = rate_log(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = rate_log(x1);
        }
    }
    const auto centre = static_cast<std::int64_t>(std::llround(std::exp(0.5 * (lo + hi))));
    const std::int64_t first = std::max<std::int64_t>(1, centre - 50);
    const std::int64_t last = std::min<std::int64_t>(static_cast<std::int64_t>(n_max), centre + 50);
    CapOptimum best{static_cast<std::uint64_t>(first), -1.0};
    for (std::int64_t n = first; n <= last; ++n) {
        const double r = rate_at_cap(static_cast<double>(n), decay, sched, opt);
        if (r > best.rate) best = {static_cast<std::uint64_t>(n), r};
    }
    return best;
}

struct RateCurvePoint {
    double cap = 0.0;
    double cdf = 0.0;
    double mean_success = 0.0;
    double rate = 0.0;
};

inline std::vector<RateCurvePoint> rate_curve(std::span<const double> caps, const DecayParams& decay,
                                              const ScheduleParams& sched, const RateOptions& opt = {}) {
    const DecayParams p = effective_decay(decay, opt.coolant);
    std::vector<RateCurvePoint> out;
    out.reserve(caps.size());
    for (double n : caps) {
        RateCurvePoint pt;
        pt.cap = n;
        pt.cdf = cdf(n, p);
        pt.mean_success = n > 0.0 ? mean_success_prob(n, p, opt.quadrature).value : 0.0;
        pt.rate = rate_at_cap(n, decay, sched, opt);
        out.push_back(pt);
    }
    return out;
}

/// Per-attempt-index success counts, e.g. P(success at attempt n | reached n).
struct DecaySample {
    double n = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t successes = 0;

    double rate() const { return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0; }
};

struct DecayFit {
    DecayParams params;
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // order (A, B, C)
    double chi2 = 0.0;
    int dof = 0;
    int iterations = 0;
    bool converged = false;
    bool b_identifiable = true;  // false when A = 0 leaves B undetermined

    double sigma_a() const { return std::sqrt(covariance(0, 0)); }
    double sigma_b() const { return std::sqrt(covariance(1, 1)); }
    double sigma_c() const { return std::sqrt(covariance(2, 2)); }
};

/// Weighted least squares of A exp(-B n) + C with binomial weights, solved by
/// Levenberg-Marquardt from a tail/head/log-linear starting point.
inline DecayFit fit_decay(std::span<const DecaySample> samples) {
    std::vector<DecaySample> s(samples.begin(), samples.end());
    s.erase(std::remove_if(s.begin(), s.end(), [](const DecaySample& x) { return x.trials == 0; }), s.end());
    std::sort(s.begin(), s.end(), [](const DecaySample& a, const DecaySample& b) { return a.n < b.n; });
    std::vector<double> distinct;
    for (const auto& x : s)
        if (distinct.empty() || x.n != distinct.back()) distinct.push_back(x.n);
    if (distinct.size() < 3) throw std::invalid_argument("fit_decay needs at least 3 distinct attempt indices");

    const auto m = static_cast<Eigen::Index>(s.size());
    Eigen::VectorXd n(m), y(m), w(m);
    std::uint64_t total_trials = 0, total_succ = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        n(i) = s[i].n;
        y(i) = s[i].rate();
        total_trials += s[i].trials;
        total_succ += s[i].successes;
    }
    const double pooled = static_cast<double>(total_succ) / static_cast<double>(total_trials);
    for (Eigen::Index i = 0; i < m; ++i) {
        // Variance from the pooled rate when a bin is all-fail or all-success.
        double pv = y(i);
        if (pv <= 0.0 || pv >= 1.0) pv = std::clamp(pooled, 1e-12, 1.0 - 1e-12);
        w(i) = static_cast<double>(s[i].trials) / (pv * (1.0 - pv));
    }

    DecayFit fit;
    fit.dof = static_cast<int>(m) - 3;
    auto weighted_mean = [&](Eigen::Index lo, Eigen::Index hi) {
        double sw = 0.0, swy = 0.0;
        for (Eigen::Index i = lo; i < hi; ++i) {
            sw += w(i);
            swy += w(i) * y(i);
        }
        return swy / sw;
    };

    if ((y.array() - y(0)).abs().maxCoeff() <= 1e-15 * std::max(1.0, std::abs(y(0)))) {
        fit.params = {.a = 0.0, .b = 0.0, .c = weighted_mean(0, m)};
        fit.b_identifiable = false;
        fit.converged = true;
        fit.covariance(2, 2) = 1.0 / w.sum();
        return fit;
    }

    const Eigen::Index third = std::max<Eigen::Index>(1, m / 3);
    double c0 = std::max(weighted_mean(m - third, m), 1e-15);
    double a0 = std::max(weighted_mean(0, third) - c0, 0.0);
    double b0 = 0.0;
    {
        // Log-linear regression on (y - C) over points clearly above the tail.
        double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double excess = y(i) - c0;
            if (excess <= 0.05 * a0 || excess <= 0.0) continue;
            const double ly = std::log(excess);
            sx += n(i);
            sy += ly;
            sxx += n(i) * n(i);
            sxy += n(i) * ly;
            cnt += 1;
        }
        const double den = cnt * sxx - sx * sx;
        if (cnt >= 2 && den > 0.0) b0 = std::max(0.0, -(cnt * sxy - sx * sy) / den);
        if (b0 == 0.0) b0 = 1.0 / std::max(1.0, distinct.back() - distinct.front());
    }

    Eigen::Vector3d theta(a0, b0, c0);
    auto residuals = [&](const Eigen::Vector3d& t) {
        Eigen::VectorXd r(m);
        for (Eigen::Index i = 0; i < m; ++i) r(i) = y(i) - (t(0) * std::exp(-t(1) * n(i)) + t(2));
        return r;
    };
    auto jacobian = [&](const Eigen::Vector3d& t) {
        Eigen::MatrixXd j(m, 3);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double e = std::exp(-t(1) * n(i));
            j(i, 0) = e;
            j(i, 1) = -t(0) * n(i) * e;
            j(i, 2) = 1.0;
        }
        return j;
    };
    auto cost = [&](const Eigen::Vector3d& t) { return (residuals(t).array().square() * w.array()).sum(); };
    auto project = [](Eigen::Vector3d t) {
        t(0) = std::max(t(0), 0.0);
        t(1) = std::max(t(1), 0.0);
        t(2) = std::max(t(2), 1e-300);
        return t;
    };

    double lambda = 1e-3;
    double current = cost(theta);
    for (fit.iterations = 0; fit.iterations < 500; ++fit.iterations) {
        const Eigen::MatrixXd j = jacobian(theta);
        const Eigen::VectorXd r = residuals(theta);
        const Eigen::MatrixXd jw = j.transpose() * w.asDiagonal();
        const Eigen::Matrix3d jtj = jw * j;
        const Eigen::Vector3d g = jw * r;
        bool stepped = false;
        for (int inner = 0; inner < 60 && !stepped; ++inner) {
            Eigen::Matrix3d lhs = jtj;
            for (int k = 0; k < 3; ++k) lhs(k, k) += lambda * std::max(jtj(k, k), 1e-300);
            const Eigen::Vector3d step = lhs.ldlt().solve(g);
            const Eigen::Vector3d trial = project(theta + step);
            const double c = cost(trial);
            if (c <= current) {
                const double rel_step = ((trial - theta).array().abs() /
                                         (theta.array().abs() + 1e-300)).maxCoeff();
                theta = trial;
                const double old = current;
                current = c;
                lambda = std::max(lambda / 10.0, 1e-15);
                stepped = true;
                if (rel_step < 1e-13 || old - c <= 1e-15 * std::max(old, 1e-300)) fit.converged = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!stepped || fit.converged) {
            fit.converged = true;
            break;
        }
    }

    fit.params = {.a = theta(0), .b = theta(1), .c = theta(2)};
    fit.chi2 = current;
    const Eigen::MatrixXd j = jacobian(theta);
    const Eigen::Matrix3d info = j.transpose() * w.asDiagonal() * j;
    if (theta(0) <= 1e-12 * theta(2)) {
        fit.b_identifiable = false;
        fit.params.a = 0.0;
        Eigen::Matrix2d sub;
        sub << info(0, 0), info(0, 2), info(2, 0), info(2, 2);
        const Eigen::Matrix2d inv = sub.inverse();
        fit.covariance.setZero();
        fit.covariance(0, 0) = inv(0, 0);
        fit.covariance(0, 2) = fit.covariance(2, 0) = inv(0, 1);
        fit.covariance(2, 2) = inv(1, 1);
        fit.covariance(1, 1) = std::numeric_limits<double>::infinity();
    } else {
        fit.covariance = info.inverse();
    }
    return fit;
}

}  // namespace ionlink
