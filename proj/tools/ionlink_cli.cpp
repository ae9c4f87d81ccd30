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

// ionlink: command-line front end.
//
//   ionlink [global options] <ion-photon | swap | rate | modes | budget> [options]
//
// Exit codes: 0 ok, 2 usage, 3 config, 4 parameter, 5 io, 6 numerical, 1 other.
// Errors go to stderr as "error[<category>]: <message>".

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "ionlink/io/config_json.hpp"
#include "ionlink/io/csv.hpp"
#include "ionlink/ionlink.hpp"

namespace fs = std::filesystem;
using namespace ionlink;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kUsage = 2, kConfig = 3, kParameter = 4, kIo = 5, kNumerical = 6 };

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunContext {
    std::string config_path;
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::string out_dir = ".";
    std::uint64_t trials = 0;  // 0: subcommand default
    bool ideal = false;
    std::string grid;
    unsigned threads = 0;

    HardwareConfig cfg;
    std::uint64_t hash = 0;
};

// "a:b:n" linear with endpoint, "log:a:b:n" geometric, or "x,y,z".
std::vector<double> parse_grid(const std::string& spec) {
    auto fail = [&] { throw CLI::ValidationError("--grid", "cannot parse grid '" + spec + "'"); };
    std::vector<std::string> parts;
    std::string cur;
    const char sep = spec.find(',') != std::string::npos ? ',' : ':';
    for (char ch : spec) {
        if (ch == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    parts.push_back(cur);
    auto num = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) fail();
            return v;
        } catch (const std::logic_error&) {
            fail();
        }
        return 0.0;
    };
    if (sep == ',') {
        std::vector<double> v;
        for (const auto& p : parts) v.push_back(num(p));
        return v;
    }
    const bool log = !parts.empty() && parts[0] == "log";
    if (log) parts.erase(parts.begin());
    if (parts.size() != 3) fail();
    const double a = num(parts[0]);
    const double b = num(parts[1]);
    const double n = num(parts[2]);
    if (!(n >= 2) || n != std::floor(n)) fail();
    if (log && !(a > 0 && b > 0)) fail();
    const auto count = static_cast<std::size_t>(n);
    if (!log) return linear_grid(a, b, count, true);
    auto g = linear_grid(std::log(a), std::log(b), count, true);
    for (auto& x : g) x = std::exp(x);
    return g;
}

fs::path out_path(const RunContext& ctx, const std::string& name) { return fs::path(ctx.out_dir) / name; }

io::CsvWriter csv(const RunContext& ctx, const std::string& what) { return io::CsvWriter(what, ctx.hash, ctx.seed); }

void write_json(const RunContext& ctx, const std::string& name, json j) {
    j["config_hash"] = io::hex64(ctx.hash);
    j["seed"] = ctx.seed;
    io::CsvWriter::write_text(out_path(ctx, name), j.dump(2) + "\n");
}

json fit_json(const SinusoidFit& f) {
    return {{"amplitude", f.amplitude}, {"phase", f.phase}, {"offset", f.offset},
            {"rms_residual", f.rms_residual}, {"ok", f.ok}};
}

json scan_json(const ScanResult& s) {
    json j = json::object();
    j["control"] = s.control_name;
    j["frequency"] = s.frequency;
    j["fit_ok"] = s.fit_ok();
    for (const auto& series : s.series) j["series"][series.name] = {{"fit", fit_json(series.fit)}, {"contrast", series.contrast}};
    return j;
}

void write_scan_csv(const RunContext& ctx, const std::string& name, const std::string& what, const ScanResult& s,
                    const ScanResult* exact = nullptr) {
    auto w = csv(ctx, what);
    w.comment("control: " + s.control_name);
    for (const auto& series : s.series) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "fit %s: amplitude=%.9f phase=%.9f offset=%.9f contrast=%.9f", series.name.c_str(),
                      series.fit.amplitude, series.fit.phase, series.fit.offset, series.contrast);
        w.comment(buf);
    }
    std::vector<std::string> head{"control_value"};
    for (const auto& series : s.series) head.push_back(series.name);
    if (exact)
        for (const auto& series : exact->series) head.push_back(series.name + "_exact");
    w.header(head);
    for (std::size_t i = 0; i < s.control.size(); ++i) {
        std::vector<std::string> cells{io::format_number(s.control[i])};
        for (const auto& series : s.series) cells.push_back(io::format_number(series.values[i]));
        if (exact)
            for (const auto& series : exact->series) cells.push_back(io::format_number(series.values[i]));
        w.row_strings(cells);
    }
    w.write(out_path(ctx, name));
}

// ---------------------------------------------------------------- ion-photon

int cmd_ion_photon(const RunContext& ctx) {
    const auto& cfg = ctx.cfg;
    const auto hwp = ctx.grid.empty() ? linear_grid(0.0, std::numbers::pi, 37, true) : parse_grid(ctx.grid);
    const auto phases = linear_grid(0.0, 2.0 * std::numbers::pi, 25, true);
    const double window = cfg.schedule.reduced_window_s;
    json side = json::object();
    std::printf("%-8s %-12s %-12s %-12s %-12s %-12s\n", "system", "C_corr", "C_coh", "phase_fit", "F_upper",
                "F_lower");
    std::uint64_t stream = 0;
    for (auto [label, src] : {std::pair{"A", &cfg.source_a}, std::pair{"B", &cfg.source_b}}) {
        const DensityMatrix state = emit_ion_photon_state(*src);
        ScanResult corr = correlation_scan(state, hwp);
        ScanResult coh = coherence_scan(analysis_ready_ion(*src, cfg.coherence, window), phases);
        if (ctx.trials > 0) {
            RandomStream rng = RandomStream::substream(ctx.seed, stream++);
            corr = resample_scan(corr, ctx.trials, rng);
            coh = resample_scan(coh, ctx.trials, rng);
        }
        const double c_corr = correlation_contrast(corr);
        const double c_coh = coh.at("p_up").contrast;
        const double upper = ion_photon_fidelity_upper_bound(c_corr);
        const double lower = ion_photon_fidelity_lower_bound(correlated_population(state), c_coh);
        std::printf("%-8s %-12.6f %-12.6f %-12.6f %-12.6f %-12.6f\n", label, c_corr, c_coh,
                    coh.at("p_up").fit.phase, upper, lower);
        const std::string tag = std::string("ion_photon_") + label;
        write_scan_csv(ctx, tag + "_correlation.csv", "ion-photon correlation scan, system " + std::string(label), corr);
        write_scan_csv(ctx, tag + "_coherence.csv", "ion-photon coherence scan, system " + std::string(label), coh);
        side[label] = {{"correlation", scan_json(corr)},
                       {"coherence", scan_json(coh)},
                       {"correlation_contrast", c_corr},
                       {"coherence_contrast", c_coh},
                       {"correlated_population", correlated_population(state)},
                       {"fidelity_upper_bound", upper},
                       {"fidelity_lower_bound", lower},
                       {"fidelity_exact", fidelity_pure(state, ideal_ion_photon_state(src->phase))},
                       {"emission_probability", emission_probability(*src)}};
    }
    side["shots_per_point"] = ctx.trials;
    side["dephasing_infidelity"] = dephasing_infidelity(cfg.coherence.ion_analysis_delay, cfg.coherence.t2_star_ion);
    side["phase_averaging_infidelity"] =
        cfg.coherence.phase_averaging ? phase_averaging_infidelity(window, cfg.coherence.larmor) : 0.0;
    write_json(ctx, "ion_photon.json", side);
    return kOk;
}

// ---------------------------------------------------------------- swap

int cmd_swap(const RunContext& ctx, bool randomize) {
    SwapOptions opt;
    if (ctx.trials) opt.heralds = ctx.trials;
    opt.phase_randomization = randomize;
    const SwapReport r = run_swap_experiment(ctx.cfg, opt, ctx.seed);

    auto pop = csv(ctx, "two-ion bright populations");
    pop.comment("thresholds: t1=" + io::format_number(r.thresholds.t1) + " t2=" + io::format_number(r.thresholds.t2));
    pop.header({"bright_ions", "exact", "observed", "corrected"});
    for (int k = 0; k < 3; ++k)
        pop.row({static_cast<double>(k), r.exact_bright(k), r.observed_bright(k), r.corrected.corrected(k)});
    pop.write(out_path(ctx, "swap_populations.csv"));
    auto hist = csv(ctx, "readout calibration histograms");
    hist.header({"count", "freq_0bright", "freq_1bright", "freq_2bright"});
    std::size_t top = 0;
    for (const auto& h : r.calibration) top = std::max(top, h.counts.size());
    for (std::size_t c = 0; c < top; ++c) {
        std::vector<std::string> cells{io::format_number(static_cast<std::uint64_t>(c))};
        for (const auto& h : r.calibration)
            cells.push_back(io::format_number(c < h.counts.size() ? static_cast<double>(h.counts[c]) /
                                                                        static_cast<double>(h.shots())
                                                                  : 0.0));
        hist.row_strings(cells);
    }
    hist.write(out_path(ctx, "swap_histograms.csv"));
    write_scan_csv(ctx, "swap_parity_two_pulse.csv", "two-pulse parity scan", r.two_pulse, &r.two_pulse_exact);
    write_scan_csv(ctx, "swap_parity_one_pulse.csv", "one-pulse parity scan", r.one_pulse, &r.one_pulse_exact);

    auto inputs = [](const FidelityBoundInputs& x) {
        return json{{"odd_populations", x.odd_populations},
                    {"two_pulse_contrast", x.two_pulse_contrast},
                    {"one_pulse_contrast", x.one_pulse_contrast}};
    };
    json conf = json::array();
    for (int i = 0; i < 3; ++i) conf.push_back({r.confusion(i, 0), r.confusion(i, 1), r.confusion(i, 2)});
    write_json(ctx, "swap.json",
               {{"heralds", opt.heralds},
                {"heralds_plus", r.heralds_plus},
                {"heralds_minus", r.heralds_minus},
                {"phase_randomization", randomize},
                {"thresholds", {r.thresholds.t1, r.thresholds.t2}},
                {"threshold_fidelity", {r.thresholds.fidelity(0), r.thresholds.fidelity(1), r.thresholds.fidelity(2)}},
                {"confusion", conf},
                {"spam_clipped", r.corrected.clipped},
                {"bound_inputs_sampled", inputs(r.inputs_sampled)},
                {"bound_inputs_expected", inputs(r.inputs_expected)},
                {"fidelity_lower_bound_sampled", r.bound_sampled},
                {"fidelity_lower_bound_expected", r.bound_expected},
                {"fidelity_exact", r.fidelity},
                {"one_pulse_contrast_phase_randomized", r.one_pulse_randomized},
                {"two_pulse_contrast_phase_randomized", r.two_pulse_randomized}});

    std::printf("%-34s %-12s %-12s\n", "quantity", "sampled", "expected");
    std::printf("%-34s %-12.6f %-12.6f\n", "odd populations", r.inputs_sampled.odd_populations,
                r.inputs_expected.odd_populations);
    std::printf("%-34s %-12.6f %-12.6f\n", "two-pulse contrast", r.inputs_sampled.two_pulse_contrast,
                r.inputs_expected.two_pulse_contrast);
    std::printf("%-34s %-12.6f %-12.6f\n", "one-pulse contrast", r.inputs_sampled.one_pulse_contrast,
                r.inputs_expected.one_pulse_contrast);
    std::printf("%-34s %-12.6f %-12.6f\n", "fidelity lower bound", r.bound_sampled, r.bound_expected);
    std::printf("%-34s %-12s %-12.6f\n", "fidelity (density matrix)", "-", r.fidelity);
    std::printf("%-34s %-12s %-12.6f\n", "one-pulse contrast, phase random", "-", r.one_pulse_randomized);
    std::printf("%-34s %-12s %-12.6f\n", "two-pulse contrast, phase random", "-", r.two_pulse_randomized);
    return kOk;
}

// ---------------------------------------------------------------- rate

json report_json(const RateReport& r) {
    return {{"requests", r.requests},
            {"successes", r.successes},
            {"total_attempts", r.total_attempts},
            {"cooling_breaks", r.cooling_breaks},
            {"wall_time_s", r.wall_time()},
            {"rate", r.rate()},
            {"rate_sigma", r.rate_sigma()},
            {"attempt_time_rate", r.attempt_time_rate()},
            {"success_fraction", r.success_fraction()},
            {"mean_attempts", r.mean_attempts()},
            {"mean_success_prob", r.mean_success_prob()}};
}

void write_records(const RunContext& ctx, const std::string& name, const RateReport& r) {
    auto w = csv(ctx, "herald records");
    w.header({"request_index", "attempts_used", "wall_time_ns", "success", "sign"});
    for (const auto& h : r.records)
        w.row_strings({io::format_number(h.request_index), io::format_number(h.attempts_used),
                       io::format_number(static_cast<std::int64_t>(h.wall_time_ns)), h.success ? "1" : "0",
                       io::format_number(static_cast<std::int64_t>(h.sign))});
    w.write(out_path(ctx, name));
}

int cmd_rate(const RunContext& ctx, std::uint64_t curve_requests) {
    const auto& cfg = ctx.cfg;
    std::vector<double> caps;
    for (double n : ctx.grid.empty() ? parse_grid("log:1:20000:41") : parse_grid(ctx.grid)) {
        if (!(n >= 1.0)) throw ParameterError("grid", "loop caps must be at least 1");
        if (caps.empty() || std::round(n) != caps.back()) caps.push_back(std::round(n));
    }
    const std::uint64_t requests = ctx.trials ? ctx.trials : 100000;
    CampaignOptions copt{.threads = ctx.threads, .keep_records = true};

    HardwareConfig cool = cfg;
    cool.schedule.coolant_present = true;
    HardwareConfig warm = cfg;
    warm.schedule.coolant_present = false;
    const RateReport rc = simulate_campaign(cool, requests, ctx.seed, copt);
    copt.first_index = requests;
    const RateReport rw = simulate_campaign(warm, requests, ctx.seed, copt);
    write_records(ctx, "rate_records_coolant.csv", rc);
    write_records(ctx, "rate_records_no_coolant.csv", rw);

    const DecayParams p_cool = effective_decay(cfg.decay, true);
    const double n_cool = static_cast<double>(cfg.schedule.coolant_cap());
    const double n_warm = static_cast<double>(cfg.schedule.loop_cap_no_coolant);
    const RateOptions opt_cool{.coolant = true};
    const RateOptions opt_cool_attempt{.coolant = true, .ignore_recooling = true};
    const RateOptions opt_warm{.coolant = false};
    const RateOptions opt_warm_ignore{.coolant = false, .ignore_recooling = true};

    auto w = csv(ctx, "attempt-loop rate vs loop cap");
    w.comment("mc columns: " + io::format_number(curve_requests) + " requests per point");
    w.header({"cap", "cdf_coolant", "mean_success_coolant", "rate_coolant", "rate_coolant_attempt_time", "cdf_loop",
              "mean_success_loop", "rate_no_coolant", "rate_no_coolant_ignore_recooling", "mc_rate_coolant",
              "mc_rate_no_coolant"});
    std::uint64_t next_index = 2 * requests;
    for (double n : caps) {
        const auto c = rate_curve(std::span<const double>(&n, 1), cfg.decay, cfg.schedule, opt_cool)[0];
        const auto l = rate_curve(std::span<const double>(&n, 1), cfg.decay, cfg.schedule, opt_warm)[0];
        double mc_cool = 0.0, mc_warm = 0.0;
        if (curve_requests) {
            HardwareConfig a = cool, b = warm;
            a.schedule.loop_cap_with_coolant = static_cast<std::uint64_t>(n);
            a.schedule.hardware_counter_cap = false;
            b.schedule.loop_cap_no_coolant = static_cast<std::uint64_t>(n);
            CampaignOptions o{.threads = ctx.threads, .first_index = next_index};
            mc_cool = simulate_campaign(a, curve_requests, ctx.seed, o).rate();
            o.first_index += curve_requests;
            mc_warm = simulate_campaign(b, curve_requests, ctx.seed, o).rate();
            next_index += 2 * curve_requests;
        }
        w.row({n, c.cdf, c.mean_success, c.rate, rate_at_cap(n, cfg.decay, cfg.schedule, opt_cool_attempt), l.cdf,
               l.mean_success, l.rate, rate_at_cap(n, cfg.decay, cfg.schedule, opt_warm_ignore), mc_cool, mc_warm});
    }
    w.write(out_path(ctx, "rate_curve.csv"));

    const auto best_cool = optimal_cap(cfg.decay, cfg.schedule, opt_cool, cfg.schedule.coolant_cap());
    const auto best_warm = optimal_cap(cfg.decay, cfg.schedule, opt_warm, 20000);
    const auto pbar_cool = mean_success_prob(n_cool, p_cool);
    const auto pbar_warm = mean_success_prob(n_warm, cfg.decay);
    json j = {{"coolant",
               {{"cap", n_cool},
                {"cdf", cdf(n_cool, p_cool)},
                {"mean_success_prob", pbar_cool.value},
                {"mean_success_rel_error", pbar_cool.rel_error},
                {"rate_analytic", rate_at_cap(n_cool, cfg.decay, cfg.schedule, opt_cool)},
                {"rate_analytic_attempt_time", rate_at_cap(n_cool, cfg.decay, cfg.schedule, opt_cool_attempt)},
                {"effective_attempt_rate", effective_attempt_rate(cool)},
                {"optimal_cap", best_cool.cap},
                {"optimal_rate", best_cool.rate},
                {"monte_carlo", report_json(rc)}}},
              {"no_coolant",
               {{"cap", n_warm},
                {"loop_cdf", cdf(n_warm, cfg.decay)},
                {"mean_success_prob", pbar_warm.value},
                {"rate_analytic", rate_at_cap(n_warm, cfg.decay, cfg.schedule, opt_warm)},
                {"rate_analytic_ignore_recooling", rate_at_cap(n_warm, cfg.decay, cfg.schedule, opt_warm_ignore)},
                {"effective_attempt_rate", effective_attempt_rate(warm)},
                {"optimal_cap", best_warm.cap},
                {"optimal_rate", best_warm.rate},
                {"monte_carlo", report_json(rw)}}}};
    write_json(ctx, "rate.json", j);

    std::printf("%-12s %-8s %-12s %-12s %-14s %-14s %-12s\n", "mode", "cap", "cdf", "p_mean", "rate_analytic",
                "rate_mc", "sigma_mc");
    std::printf("%-12s %-8.0f %-12.6f %-12.4e %-14.3f %-14.3f %-12.3f\n", "coolant", n_cool, cdf(n_cool, p_cool),
                pbar_cool.value, rate_at_cap(n_cool, cfg.decay, cfg.schedule, opt_cool), rc.rate(), rc.rate_sigma());
    std::printf("%-12s %-8s %-12s %-12s %-14.3f %-14.3f %-12s\n", "  attempt", "", "", "",
                rate_at_cap(n_cool, cfg.decay, cfg.schedule, opt_cool_attempt), rc.attempt_time_rate(), "");
    std::printf("%-12s %-8.0f %-12.6f %-12.4e %-14.3f %-14.3f %-12.3f\n", "no-coolant", n_warm, cdf(n_warm, cfg.decay),
                pbar_warm.value, rate_at_cap(n_warm, cfg.decay, cfg.schedule, opt_warm), rw.rate(), rw.rate_sigma());
    return kOk;
}

// ---------------------------------------------------------------- modes

std::string species_label(double amu) {
    if (std::abs(amu - kMassYb171Ion) < 0.5) return "171Yb+";
    if (std::abs(amu - kMassBa138Ion) < 0.5) return "138Ba+";
    char buf[32];
    std::snprintf(buf, sizeof buf, "m%.3f", amu);
    return buf;
}

int cmd_modes(const RunContext& ctx, bool calibrate, std::size_t coolant_index, double floor) {
    ChainSpec spec = ctx.cfg.chain;
    json j = json::object();
    if (calibrate) {
        const auto ref = yb_ba_ba_reference_table();
        const auto cal = calibrate_reference_frequencies(spec, ref.axial_freq, ref.radial_freq);
        spec = cal.spec;
        j["calibration"] = {{"axial_freq_ref", spec.axial_freq_ref},
                            {"radial_freq_ref", spec.radial_freq_ref},
                            {"rms_residual_hz", cal.rms_residual},
                            {"max_residual_hz", cal.max_residual}};
    }
    const ModeTable ax = normal_modes(spec, ModeDirection::axial);
    const ModeTable ra = normal_modes(spec, ModeDirection::radial);

    auto w = csv(ctx, "normal modes");
    w.comment("entries: unit-normalized displacement of each ion in the mode");
    w.comment("axial_freq_ref_hz: " + io::format_number(spec.axial_freq_ref) +
              " radial_freq_ref_hz: " + io::format_number(spec.radial_freq_ref));
    std::vector<std::string> head{"mode"};
    for (std::size_t i = 0; i < spec.masses_amu.size(); ++i)
        head.push_back(species_label(spec.masses_amu[i]) + "_" + std::to_string(i + 1));
    head.push_back("freq_khz");
    w.header(head);
    std::printf("%-16s", "mode");
    for (std::size_t i = 1; i < head.size() - 1; ++i) std::printf(" %10s", head[i].c_str());
    std::printf(" %10s\n", "kHz");
    for (const ModeTable* t : {&ax, &ra}) {
        for (std::size_t m = 0; m < t->size(); ++m) {
            const std::string name = std::string(to_string(t->direction)) + "_" + std::to_string(m + 1);
            std::vector<std::string> cells{name};
            std::printf("%-16s", name.c_str());
            for (Eigen::Index i = 0; i < t->displacement.rows(); ++i) {
                cells.push_back(io::format_number(t->displacement(i, static_cast<Eigen::Index>(m))));
                std::printf(" %10.3f", t->displacement(i, static_cast<Eigen::Index>(m)));
            }
            cells.push_back(io::format_number(t->frequencies[m] * 1e-3));
            std::printf(" %10.2f\n", t->frequencies[m] * 1e-3);
            w.row_strings(cells);
        }
    }
    {
        // Same-species reference: axial ratios 1 : sqrt(3) : sqrt(29/5) for three ions.
        ChainSpec eq = spec;
        for (auto& m : eq.masses_amu) m = eq.reference_mass_amu;
        const auto e = normal_modes(eq, ModeDirection::axial);
        std::string line = "equal-mass axial ratios:";
        for (double f : e.frequencies) line += " " + io::format_number(f / e.frequencies[0]);
        w.comment(line);
        j["equal_mass_axial_ratios"] = json::array();
        for (double f : e.frequencies) j["equal_mass_axial_ratios"].push_back(f / e.frequencies[0]);
    }
    w.write(out_path(ctx, "modes.csv"));

    auto part = csv(ctx, "mass-weighted orthonormal participation");
    part.header(head);
    for (const ModeTable* t : {&ax, &ra}) {
        for (std::size_t m = 0; m < t->size(); ++m) {
            std::vector<std::string> cells{std::string(to_string(t->direction)) + "_" + std::to_string(m + 1)};
            for (Eigen::Index i = 0; i < t->participation.rows(); ++i)
                cells.push_back(io::format_number(t->participation(i, static_cast<Eigen::Index>(m))));
            cells.push_back(io::format_number(t->frequencies[m] * 1e-3));
            part.row_strings(cells);
        }
    }
    part.write(out_path(ctx, "modes_participation.csv"));

    if (coolant_index < spec.masses_amu.size()) {
        for (const ModeTable* t : {&ax, &ra}) {
            const auto rep = coolant_coupling_report(*t, coolant_index, floor);
            json entries = json::array();
            for (const auto& e : rep.entries)
                entries.push_back({{"mode", e.mode + 1}, {"freq_hz", e.frequency}, {"participation", e.participation},
                                   {"below_floor", e.below_floor}});
            j["coolant_coupling"][to_string(t->direction)] = {{"entries", entries}, {"flagged", rep.flagged()}};
        }
        j["coolant_index"] = coolant_index;
        j["participation_floor"] = floor;
    }
    j["orthonormality_residual"] = {{"axial", orthonormality_residual(ax)}, {"radial", orthonormality_residual(ra)}};
    write_json(ctx, "modes.json", j);
    return kOk;
}

// ---------------------------------------------------------------- budget

int cmd_budget(const RunContext& ctx) {
    const auto ledger = error_budget(ctx.cfg);
    const double fid = fidelity_pure(swapped_state(ctx.cfg, 1), swapped_target(ctx.cfg, 1));
    const auto chain = default_efficiency_chain();
    const auto eff = efficiency_budget(chain);

    auto e = csv(ctx, "error budget");
    e.header({"entry", "infidelity"});
    std::printf("%-22s %12s\n", "error entry", "percent");
    for (const auto& [label, v] : ledger.entries) {
        e.row_strings({label, io::format_number(v)});
        std::printf("%-22s %12.4f\n", label.c_str(), 100.0 * v);
    }
    e.row_strings({"total", io::format_number(ledger.total)});
    e.comment("density-matrix infidelity: " + io::format_number(1.0 - fid));
    e.write(out_path(ctx, "budget_error.csv"));
    std::printf("%-22s %12.4f\n", "total", 100.0 * ledger.total);
    std::printf("%-22s %12.4f\n\n", "density matrix", 100.0 * (1.0 - fid));

    auto f = csv(ctx, "single-photon efficiency chain");
    f.header({"stage", "factor", "cumulative"});
    std::printf("%-22s %10s %12s\n", "efficiency stage", "factor", "cumulative");
    for (const auto& s : eff.stages) {
        f.row_strings({s.label, io::format_number(s.factor), io::format_number(s.cumulative)});
        std::printf("%-22s %10.4f %12.6f\n", s.label.c_str(), s.factor, s.cumulative);
    }
    f.write(out_path(ctx, "budget_efficiency.csv"));

    json j;
    for (const auto& [label, v] : ledger.entries) j["error"][label] = v;
    j["error"]["total"] = ledger.total;
    j["density_matrix_infidelity"] = 1.0 - fid;
    j["efficiency_product"] = eff.product;
    j["herald_probability"] = success_probability(ctx.cfg.source_a.efficiency, ctx.cfg.source_b.efficiency);
    write_json(ctx, "budget.json", j);
    return kOk;
}

int fail(ExitCode code, const char* category, const std::string& msg) {
    std::fprintf(stderr, "error[%s]: %s\n", category, msg.c_str());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heralded two-ion entanglement simulator"};
    app.require_subcommand(1);
    app.fallthrough();  // common options may follow the subcommand name
    RunContext ctx;
    app.add_option("--config", ctx.config_path, "JSON hardware config (keys override defaults)");
    auto* seed_opt = app.add_option("--seed", ctx.seed, "master RNG seed (env IONLINK_SEED when absent)");
    app.add_option("--out", ctx.out_dir, "output directory");
    app.add_option("--trials", ctx.trials, "shots, heralds or requests, depending on the subcommand");
    app.add_flag("--ideal", ctx.ideal, "switch every state error off");
    app.add_option("--grid", ctx.grid, "control grid: a:b:n, log:a:b:n or x,y,z");
    app.add_option("--threads", ctx.threads, "Monte Carlo worker threads (0: all cores)");

    auto* ion_photon = app.add_subcommand("ion-photon", "correlation and coherence scans of both sources");
    bool randomize = false;
    auto* swap = app.add_subcommand("swap", "heralded two-ion state, parity scans and fidelity bound");
    swap->add_flag("--phase-randomize", randomize, "analyze the relative-phase-randomized state");
    std::uint64_t curve_requests = 2000;
    auto* rate = app.add_subcommand("rate", "rate vs loop cap, analytic and Monte Carlo");
    rate->add_option("--curve-requests", curve_requests, "Monte Carlo requests per grid point (0: analytic only)");
    bool calibrate = false;
    std::size_t coolant_index = 0;
    double floor = 0.1;
    auto* modes = app.add_subcommand("modes", "normal modes of the configured chain");
    modes->add_flag("--calibrate", calibrate, "fit reference frequencies to the Yb-Ba-Ba table");
    modes->add_option("--coolant-index", coolant_index, "ion index of the coolant");
    modes->add_option("--floor", floor, "participation floor for the coupling report");
    auto* budget = app.add_subcommand("budget", "error and efficiency budgets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (!seed_opt->count()) {
            if (const char* env = std::getenv("IONLINK_SEED")) {
                try {
                    std::size_t used = 0;
                    ctx.seed = std::stoull(env, &used, 0);
                    if (env[used] != '\0') throw std::invalid_argument("trailing characters");
                } catch (const std::logic_error&) {
                    return fail(kUsage, "usage", std::string("IONLINK_SEED is not an unsigned integer: ") + env);
                }
            }
        }
        ctx.cfg = ctx.config_path.empty() ? HardwareConfig::defaults() : io::load_config(ctx.config_path);
        if (ctx.ideal) ctx.cfg = ctx.cfg.idealized();
        ctx.hash = io::config_hash(ctx.cfg);
        std::error_code ec;
        fs::create_directories(ctx.out_dir, ec);
        if (ec) throw IoError("cannot create output directory " + ctx.out_dir + ": " + ec.message());

        if (*ion_photon) return cmd_ion_photon(ctx);
        if (*swap) return cmd_swap(ctx, randomize);
        if (*rate) return cmd_rate(ctx, curve_requests);
        if (*modes) return cmd_modes(ctx, calibrate, coolant_index, floor);
        if (*budget) return cmd_budget(ctx);
        return fail(kUsage, "usage", "no subcommand");
    } catch (const io::ConfigError& e) {
        return fail(kConfig, "config", e.what());
    } catch (const CLI::ValidationError& e) {
        return fail(kUsage, "usage", e.what());
    } catch (const ParameterError& e) {
        return fail(kParameter, "parameter", e.what());
    } catch (const ModeError& e) {
        return fail(kNumerical, "numerical", e.what());
    } catch (const IoError& e) {
        return fail(kIo, "io", e.what());
    } catch (const std::invalid_argument& e) {
        return fail(kParameter, "parameter", e.what());
    } catch (const std::domain_error& e) {
        return fail(kNumerical, "numerical", e.what());
    } catch (const std::runtime_error& e) {
        const std::string what = e.what();
        if (what.find("cannot open") != std::string::npos || what.find("failed writing") != std::string::npos)
            return fail(kIo, "io", what);
        return fail(kOther, "error", what);
    } catch (const std::exception& e) {
        return fail(kOther, "error", e.what());
    }
}
