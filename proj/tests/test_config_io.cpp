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

#include <filesystem>
#include <fstream>
#include <string>

#include "ionlink/io/config_json.hpp"
#include "ionlink/io/csv.hpp"

namespace {

using namespace ionlink;
using nlohmann::json;

std::string error_field(const json& j) {
    try {
        io::from_json(j);
    } catch (const io::ConfigError& e) {
        return e.field();
    }
    return "<no error>";
}

TEST(ConfigJson, RoundTripPreservesEveryField) {
    auto cfg = HardwareConfig::defaults();
    cfg.source_a.phase = 1.25;
    cfg.schedule.coolant_present = true;
    cfg.schedule.loop_cap_with_coolant = 777;
    cfg.coherence.bell_envelope = Envelope::gaussian;
    cfg.coherence.convention = PhaseConvention::literal;
    cfg.chain.masses_amu = {40.0, 40.0};
    const auto back = io::from_json(io::to_json(cfg));
    EXPECT_EQ(io::canonical_dump(back), io::canonical_dump(cfg));
    EXPECT_EQ(back.source_a.phase, 1.25);
    EXPECT_EQ(back.schedule.loop_cap_with_coolant, 777u);
    EXPECT_EQ(back.coherence.bell_envelope, Envelope::gaussian);
    EXPECT_EQ(back.coherence.convention, PhaseConvention::literal);
    EXPECT_EQ(back.chain.masses_amu, (std::vector<double>{40.0, 40.0}));
}

TEST(ConfigJson, PartialFileKeepsDefaults) {
    const auto cfg = io::from_json(json::parse(R"({"source_b": {"eta": 0.05}, "decay": {"C": 1e-4}})"));
    const auto def = HardwareConfig::defaults();
    EXPECT_EQ(cfg.source_b.efficiency, 0.05);
    EXPECT_EQ(cfg.decay.c, 1e-4);
    EXPECT_EQ(cfg.source_a.efficiency, def.source_a.efficiency);
    EXPECT_EQ(cfg.decay.a, def.decay.a);
}

TEST(ConfigJson, SymbolNamedKeys) {
    const auto j = io::to_json(HardwareConfig::defaults());
    for (const char* key : {"/source_a/eta", "/source_a/phi", "/decay/A", "/decay/B", "/decay/C", "/coherence/delta",
                            "/swap/temporal_overlap", "/readout/bright_rate"})
        EXPECT_TRUE(j.contains(json::json_pointer(key))) << key;
}

TEST(ConfigJson, UnknownKeyRejectedWithPath) {
    EXPECT_EQ(error_field(json::parse(R"({"source_a": {"etaa": 0.1}})")), "source_a.etaa");
    EXPECT_EQ(error_field(json::parse(R"({"bogus": 1})")), "bogus");
}

TEST(ConfigJson, TypeErrors) {
    EXPECT_EQ(error_field(json::parse(R"({"decay": {"A": "big"}})")), "decay.A");
    EXPECT_EQ(error_field(json::parse(R"({"schedule": {"loop_cap_no_coolant": 2.5}})")), "schedule.loop_cap_no_coolant");
    EXPECT_EQ(error_field(json::parse(R"({"schedule": {"loop_cap_no_coolant": -3}})")), "schedule.loop_cap_no_coolant");
    EXPECT_EQ(error_field(json::parse(R"({"schedule": {"coolant_present": 1}})")), "schedule.coolant_present");
    EXPECT_EQ(error_field(json::parse(R"({"coherence": {"bell_envelope": "square"}})")), "coherence.bell_envelope");
    EXPECT_EQ(error_field(json::parse(R"({"chain": {"masses_amu": [1, "x"]}})")), "chain.masses_amu");
    EXPECT_EQ(error_field(json::parse("[1, 2]")), "");
}

TEST(ConfigJson, ValidationErrorsUseJsonNames) {
    EXPECT_EQ(error_field(json::parse(R"({"source_a": {"eta": 1.5}})")), "source_a.eta");
    EXPECT_EQ(error_field(json::parse(R"({"decay": {"C": 0}})")), "decay.C");
    EXPECT_EQ(error_field(json::parse(R"({"schedule": {"loop_cap_no_coolant": 0}})")), "schedule.loop_cap_no_coolant");
}

TEST(ConfigJson, LoadFromDisk) {
    const auto dir = std::filesystem::temp_directory_path() / "ionlink_config_io_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "ok.json") << R"({"source_a": {"phi": 0.5}})";
        std::ofstream(dir / "broken.json") << R"({"source_a": )";
    }
    EXPECT_EQ(io::load_config(dir / "ok.json").source_a.phase, 0.5);
    EXPECT_THROW(io::load_config(dir / "broken.json"), io::ConfigError);
    EXPECT_THROW(io::load_config(dir / "missing.json"), io::ConfigError);
    std::filesystem::remove_all(dir);
}

TEST(ConfigJson, HashIsStableAndSensitive) {
    const auto def = HardwareConfig::defaults();
    EXPECT_EQ(io::config_hash(def), io::config_hash(HardwareConfig::defaults()));
    EXPECT_EQ(io::hex64(io::config_hash(def)), "e818f50077454a36");
    auto other = def;
    other.source_b.phase += 1e-9;
    EXPECT_NE(io::config_hash(other), io::config_hash(def));
    // Key order in the input file does not matter.
    const auto a = io::from_json(json::parse(R"({"decay": {"A": 1e-4, "C": 2e-4}})"));
    const auto b = io::from_json(json::parse(R"({"decay": {"C": 2e-4, "A": 1e-4}})"));
    EXPECT_EQ(io::config_hash(a), io::config_hash(b));
}

TEST(Csv, FormatsAndHeader) {
    EXPECT_EQ(io::format_number(0.1), "0.1");
    EXPECT_EQ(io::format_number(std::uint64_t{42}), "42");
    EXPECT_EQ(io::format_number(std::int64_t{-7}), "-7");
    io::CsvWriter w("unit test", 0xabcull, 9);
    w.header({"x", "y"});
    w.row({1.0, 2.5});
    const std::string s = w.str();
    EXPECT_NE(s.find("0000000000000abc"), std::string::npos);
    EXPECT_NE(s.find("x,y\n1,2.5\n"), std::string::npos);
    EXPECT_THROW(io::CsvWriter::write_text("/nonexistent_dir_for_ionlink/x.csv", "a"), std::runtime_error);
}

}  // namespace
