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

// Attempt-loop state machine for entanglement requests.
//
// Without the coolant ion, a request runs loops of up to loop_cap_no_coolant
// attempts, Doppler cooling after every failed loop, until it succeeds; the
// decay index n restarts at 0 after each cooling break. With the coolant, a
// request is one initial cooling followed by a single loop of up to N attempts
// at the constant rate A + C.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include "ionlink/params.hpp"
#include "ionlink/random.hpp"
#include "ionlink/rate_model.hpp"

namespace ionlink {

struct HeraldRecord {
    std::uint64_t request_index = 0;
    std::uint64_t attempts_used = 0;  // over all loops of the request
    std::int64_t wall_time_ns = 0;
    bool success = false;
    int sign = 0;                     // +1 / -1 on success, 0 otherwise
    std::uint64_t loop_index = 0;     // loop in which the request ended (0-based)
    std::uint64_t cooling_breaks = 0;

    double wall_time() const { return static_cast<double>(wall_time_ns) * 1e-9; }
};

/// p(n) as seen by the loop: A exp(-B n) + C, or A + C under sympathetic cooling.
inline double attempt_success_prob(double n, const HardwareConfig& cfg) {
    if (n < 0.0) throw std::invalid_argument("attempt index must be non-negative");
    return effective_decay(cfg.decay, cfg.schedule.coolant_present).at(n);
}

/// Attempts per second averaged over attempt loops and cooling breaks.
inline double effective_attempt_rate(const HardwareConfig& cfg) {
    const auto& s = cfg.schedule;
    const double d = static_cast<double>(s.attempt_duration_ns) * 1e-9;
    if (s.coolant_present) return 1.0 / d;
    const double cap = static_cast<double>(s.loop_cap_no_coolant);
    return cap / (cap * d + static_cast<double>(s.cooling_duration_ns) * 1e-9);
}

namespace detail {

inline constexpr std::uint64_t kNoSuccess = std::numeric_limits<std::uint64_t>::max();

// 0-based index of the first success in a loop of `cap` attempts starting at
// decay index 0, or kNoSuccess. p(n) is non-increasing, so candidate
// successes are drawn at p_max = A + C and thinned with probability p(n)/p_max.
inline std::uint64_t first_success_in_loop(const DecayParams& p, std::uint64_t cap, RandomStream& rng) {
    const double p_max = p.a + p.c;
    const bool constant = p.a == 0.0 || p.b == 0.0;
    std::uint64_t n = 0;
    while (n < cap) {
        const std::uint64_t gap = rng.geometric_failures(p_max);
        if (gap >= cap - n) return kNoSuccess;
        n += gap;
        if (constant || rng.uniform() * p_max < p.at(static_cast<double>(n))) return n;
        ++n;
    }
    return kNoSuccess;
}

}  // namespace detail

/// One entanglement request.
inline HeraldRecord run_request(const HardwareConfig& cfg, RandomStream& rng) {
    const auto& s = cfg.schedule;
    const DecayParams p = effective_decay(cfg.decay, s.coolant_present);
    HeraldRecord rec;
    if (s.coolant_present) {
        const std::uint64_t cap = s.coolant_cap();
        rec.wall_time_ns = s.cooling_duration_ns;
        const std::uint64_t k = detail::first_success_in_loop(p, cap, rng);
        rec.success = k != detail::kNoSuccess;
        rec.attempts_used = rec.success ? k + 1 : cap;
        rec.wall_time_ns += static_cast<std::int64_t>(rec.attempts_used) * s.attempt_duration_ns;
    } else {
        const std::uint64_t cap = s.loop_cap_no_coolant;
        for (;;) {
            const std::uint64_t k = detail::first_success_in_loop(p, cap, rng);
            if (k != detail::kNoSuccess) {
                rec.success = true;
                rec.attempts_used += k + 1;
                rec.wall_time_ns += static_cast<std::int64_t>(k + 1) * s.attempt_duration_ns;
                break;
            }
            rec.attempts_used += cap;
            rec.wall_time_ns += static_cast<std::int64_t>(cap) * s.attempt_duration_ns + s.cooling_duration_ns;
            ++rec.cooling_breaks;
            ++rec.loop_index;
        }
    }
    // Genuine heralds split evenly between the two detected Bell states.
    if (rec.success) rec.sign = rng.bernoulli(0.5) ? 1 : -1;
    return rec;
}

struct RateReport {
    std::uint64_t requests = 0;
    std::uint64_t successes = 0;
    std::uint64_t total_attempts = 0;
    std::uint64_t cooling_breaks = 0;
    unsigned __int128 wall_time_ns = 0;
    unsigned __int128 attempt_time_ns = 0;
    unsigned __int128 cooling_time_ns = 0;
    std::vector<std::uint64_t> attempts_histogram;  // successful requests by attempts_used
    std::vector<HeraldRecord> records;              // filled only when requested

    double wall_time() const { return static_cast<double>(wall_time_ns) * 1e-9; }
    /// Successes per second of total wall time, cooling included.
    double rate() const { return wall_time_ns ? static_cast<double>(successes) / wall_time() : 0.0; }
    /// Successes per second of attempt time only: the uninterrupted 1 MHz accounting.
    double attempt_time_rate() const {
        return attempt_time_ns ? static_cast<double>(successes) / (static_cast<double>(attempt_time_ns) * 1e-9) : 0.0;
    }
    double success_fraction() const {
        return requests ? static_cast<double>(successes) / static_cast<double>(requests) : 0.0;
    }
    double mean_attempts() const {
        return requests ? static_cast<double>(total_attempts) / static_cast<double>(requests) : 0.0;
    }
    /// Successes per attempt consumed, the Monte Carlo counterpart of p-bar(N).
    double mean_success_prob() const {
        return total_attempts ? static_cast<double>(successes) / static_cast<double>(total_attempts) : 0.0;
    }
    /// Binomial standard error of the rate.
    double rate_sigma() const {
        if (!successes) return 0.0;
        return rate() / std::sqrt(static_cast<double>(successes));
    }
    /// Fraction of all requests that succeeded within n attempts.
    double empirical_cdf(std::uint64_t n) const {
        if (!requests) return 0.0;
        std::uint64_t c = 0;
        const std::uint64_t top = std::min<std::uint64_t>(n, attempts_histogram.empty() ? 0 : attempts_histogram.size() - 1);
        for (std::uint64_t k = 0; k <= top && k < attempts_histogram.size(); ++k) c += attempts_histogram[k];
        return static_cast<double>(c) / static_cast<double>(requests);
    }

    void add(const HeraldRecord& r, const ScheduleParams& s) {
        ++requests;
        total_attempts += r.attempts_used;
        cooling_breaks += r.cooling_breaks;
        wall_time_ns += static_cast<unsigned __int128>(r.wall_time_ns);
        attempt_time_ns += static_cast<unsigned __int128>(r.attempts_used) *
                           static_cast<unsigned __int128>(s.attempt_duration_ns);
        cooling_time_ns = wall_time_ns - attempt_time_ns;
        if (r.success) {
            ++successes;
            if (attempts_histogram.size() <= r.attempts_used) attempts_histogram.resize(r.attempts_used + 1, 0);
            ++attempts_histogram[r.attempts_used];
        }
    }

    void merge(const RateReport& o) {
        requests += o.requests;
        successes += o.successes;
        total_attempts += o.total_attempts;
        cooling_breaks += o.cooling_breaks;
        wall_time_ns += o.wall_time_ns;
        attempt_time_ns += o.attempt_time_ns;
        cooling_time_ns += o.cooling_time_ns;
        if (attempts_histogram.size() < o.attempts_histogram.size())
            attempts_histogram.resize(o.attempts_histogram.size(), 0);
        for (std::size_t i = 0; i < o.attempts_histogram.size(); ++i) attempts_histogram[i] += o.attempts_histogram[i];
    }
};

struct CampaignOptions {
    unsigned threads = 0;        // 0: hardware concurrency
    bool keep_records = false;
    std::uint64_t first_index = 0;
};

/// Runs `requests` independent requests. Request i draws from substream
/// (seed, first_index + i), so the result does not depend on the thread count.
inline RateReport simulate_campaign(const HardwareConfig& cfg, std::uint64_t requests, std::uint64_t seed,
                                    const CampaignOptions& opt = {}) {
    if (requests < 1) throw std::invalid_argument("simulate_campaign needs at least one request");
    cfg.schedule.validate();
    cfg.decay.validate();
    unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, requests));

    std::vector<RateReport> parts(threads);
    std::vector<HeraldRecord> records(opt.keep_records ? requests : 0);
    auto work = [&](unsigned t) {
        const std::uint64_t lo = requests * t / threads;
        const std::uint64_t hi = requests * (t + 1) / threads;
        for (std::uint64_t i = lo; i < hi; ++i) {
            RandomStream rng = RandomStream::substream(seed, opt.first_index + i);
            HeraldRecord r = run_request(cfg, rng);
            r.request_index = opt.first_index + i;
            parts[t].add(r, cfg.schedule);
            if (opt.keep_records) records[i] = r;
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    }
    RateReport total;
    for (const auto& p : parts) total.merge(p);
    total.records = std::move(records);
    return total;
}

/// sup_n |empirical CDF(n) - analytic CDF(n)| over n = 0 .. n_max.
inline double cdf_sup_distance(const RateReport& report, const DecayParams& p, std::uint64_t n_max) {
    double worst = 0.0;
    std::uint64_t cum = 0;
    for (std::uint64_t n = 0; n <= n_max; ++n) {
        if (n < report.attempts_histogram.size()) cum += report.attempts_histogram[n];
        const double emp = static_cast<double>(cum) / static_cast<double>(report.requests);
        worst = std::max(worst, std::abs(emp - cdf(static_cast<double>(n), p)));
    }
    return worst;
}

}  // namespace ionlink
