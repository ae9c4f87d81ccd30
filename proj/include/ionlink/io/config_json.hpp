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

// JSON form of HardwareConfig. Keys follow the physics symbols (eta, phi, A,
// B, C, delta, ...); a file only needs the keys it changes, everything else
// keeps HardwareConfig::defaults(). Unknown keys are rejected.

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "ionlink/params.hpp"

namespace ionlink::io {

/// Bad config file: `field` is the dotted JSON path of the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

namespace detail {

template <class T>
struct EnumField {
    T* value;
    std::vector<std::pair<const char*, T>> names;
};

// Calls f(path, member) for every serialized field. The same table drives both
// reading and writing, so the two cannot drift apart.
template <class Cfg, class F>
void visit_fields(Cfg& c, F&& f) {
    for (auto [name, src] : {std::pair{"source_a", &c.source_a}, std::pair{"source_b", &c.source_b}}) {
        const std::string p = std::string(name) + ".";
        f(p + "pump_fidelity", src->pump_fidelity);
        f(p + "excite_prob", src->excite_prob);
        f(p + "pol_mixing", src->pol_mixing);
        f(p + "pump_leak", src->pump_leak);
        f(p + "phi", src->phase);
        f(p + "eta", src->efficiency);
    }
    f("schedule.attempt_duration_ns", c.schedule.attempt_duration_ns);
    f("schedule.cooling_duration_ns", c.schedule.cooling_duration_ns);
    f("schedule.loop_cap_no_coolant", c.schedule.loop_cap_no_coolant);
    f("schedule.loop_cap_with_coolant", c.schedule.loop_cap_with_coolant);
    f("schedule.hardware_counter_cap", c.schedule.hardware_counter_cap);
    f("schedule.coolant_present", c.schedule.coolant_present);
    f("schedule.detection_window_ns", c.schedule.detection_window_ns);
    f("schedule.reduced_window_s", c.schedule.reduced_window_s);
    f("decay.A", c.decay.a);
    f("decay.B", c.decay.b);
    f("decay.C", c.decay.c);
    f("coherence.delta", c.coherence.qubit_freq_difference);
    f("coherence.t2_star_ion", c.coherence.t2_star_ion);
    f("coherence.t2_star_bell", c.coherence.t2_star_bell);
    f("coherence.ion_analysis_delay", c.coherence.ion_analysis_delay);
    f("coherence.bell_analysis_delay", c.coherence.bell_analysis_delay);
    f("coherence.bell_envelope",
      EnumField<Envelope>{&c.coherence.bell_envelope,
                          {{"gaussian", Envelope::gaussian}, {"exponential", Envelope::exponential}}});
    f("coherence.larmor", c.coherence.larmor);
    f("coherence.phase_averaging", c.coherence.phase_averaging);
    f("coherence.phase_convention",
      EnumField<PhaseConvention>{&c.coherence.convention,
                                 {{"aligned", PhaseConvention::aligned}, {"literal", PhaseConvention::literal}}});
    f("swap.temporal_overlap", c.swap.temporal_overlap);
    f("swap.dark_count_prob", c.swap.dark_count_prob);
    f("swap.double_excitation_prob", c.swap.double_excitation_prob);
    f("readout.bright_rate", c.readout.bright_rate);
    f("readout.dark_rate", c.readout.dark_rate);
    f("readout.duration", c.readout.duration);
    f("readout.shelving_fidelity", c.readout.shelving_fidelity);
    f("readout.bright_detect_fidelity", c.readout.bright_detect_fidelity);
    f("readout.ions", c.readout.ions);
    f("chain.masses_amu", c.chain.masses_amu);
    f("chain.axial_freq_ref", c.chain.axial_freq_ref);
    f("chain.radial_freq_ref", c.chain.radial_freq_ref);
    f("chain.reference_mass_amu", c.chain.reference_mass_amu);
}

inline nlohmann::json::json_pointer pointer_of(const std::string& dotted) {
    std::string p = "/" + dotted;
    for (auto& ch : p)
        if (ch == '.') ch = '/';
    return nlohmann::json::json_pointer(p);
}

template <class T>
struct is_enum_field : std::false_type {};
template <class T>
struct is_enum_field<EnumField<T>> : std::true_type {};

inline void collect_leaves(const nlohmann::json& j, const std::string& prefix, std::vector<std::string>& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            collect_leaves(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else {
        out.push_back(prefix);
    }
}

}  // namespace detail

inline nlohmann::json to_json(const HardwareConfig& cfg) {
    nlohmann::json j = nlohmann::json::object();
    HardwareConfig c = cfg;
    detail::visit_fields(c, [&](const std::string& path, auto&& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (detail::is_enum_field<V>::value) {
            for (const auto& [name, e] : v.names)
                if (*v.value == e) j[detail::pointer_of(path)] = name;
        } else {
            j[detail::pointer_of(path)] = v;
        }
    });
    return j;
}

/// Applies the keys of `j` on top of `base`, then validates the result.
inline HardwareConfig from_json(const nlohmann::json& j, HardwareConfig base = HardwareConfig::defaults()) {
    if (!j.is_object()) throw ConfigError("", "config root must be a JSON object");
    std::vector<std::string> leaves;
    detail::collect_leaves(j, "", leaves);
    std::vector<std::string> known;
    detail::visit_fields(base, [&](const std::string& path, auto&&) { known.push_back(path); });
    for (const auto& leaf : leaves)
        if (std::find(known.begin(), known.end(), leaf) == known.end()) throw ConfigError(leaf, "unknown key");

    detail::visit_fields(base, [&](const std::string& path, auto&& v) {
        const auto ptr = detail::pointer_of(path);
        if (!j.contains(ptr)) return;
        const auto& node = j.at(ptr);
        using V = std::decay_t<decltype(v)>;
        try {
            if constexpr (detail::is_enum_field<V>::value) {
                if (!node.is_string()) throw ConfigError(path, "expected a string");
                const auto s = node.get<std::string>();
                for (const auto& [name, e] : v.names)
                    if (s == name) {
                        *v.value = e;
                        return;
                    }
                throw ConfigError(path, "unrecognized value '" + s + "'");
            } else if constexpr (std::is_same_v<V, bool>) {
                if (!node.is_boolean()) throw ConfigError(path, "expected true or false");
                v = node.get<bool>();
            } else if constexpr (std::is_integral_v<V>) {
                if (!node.is_number_integer()) throw ConfigError(path, "expected an integer");
                if (std::is_unsigned_v<V> && node.is_number_integer() && !node.is_number_unsigned())
                    throw ConfigError(path, "must be non-negative");
                v = node.get<V>();
            } else if constexpr (std::is_floating_point_v<V>) {
                if (!node.is_number()) throw ConfigError(path, "expected a number");
                v = node.get<double>();
            } else {
                if (!node.is_array()) throw ConfigError(path, "expected an array of numbers");
                v.clear();
                for (const auto& x : node) {
                    if (!x.is_number()) throw ConfigError(path, "expected an array of numbers");
                    v.push_back(x.get<double>());
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path, e.what());
        }
    });
    try {
        base.validate();
    } catch (const ParameterError& e) {
        // ParameterError paths use C++ member names; map them onto JSON keys.
        std::string field = e.field();
        const std::pair<const char*, const char*> renames[] = {
            {".phase", ".phi"},      {".efficiency", ".eta"},  {"qubit_freq_difference", "delta"},
            {"convention", "phase_convention"},
        };
        for (auto [from, to] : renames) {
            const auto pos = field.find(from);
            if (pos != std::string::npos) field.replace(pos, std::string(from).size(), to);
        }
        throw ConfigError(field, e.message());
    }
    return base;
}

inline HardwareConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON in ") + path.string() + ": " + e.what());
    }
    return from_json(j);
}

/// Canonical text of a config: sorted keys, no whitespace.
inline std::string canonical_dump(const HardwareConfig& cfg) { return to_json(cfg).dump(); }

/// FNV-1a 64 over the canonical dump.
inline std::uint64_t config_hash(const HardwareConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canonical_dump(cfg)) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace ionlink::io
