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

// Comma-separated output with '#'-prefixed header lines. Numbers use %.12g so
// a given (config, seed) always produces the same bytes.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace ionlink::io {

inline std::string format_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline std::string format_number(std::uint64_t x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%" PRIu64, x);
    return buf;
}

inline std::string format_number(std::int64_t x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%" PRId64, x);
    return buf;
}

inline std::string hex64(std::uint64_t x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, x);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::string& what, std::uint64_t config_hash, std::uint64_t seed) {
        comment("ionlink " + what);
        comment("config_hash: " + hex64(config_hash));
        comment("seed: " + format_number(seed));
    }

    void comment(const std::string& line) { text_ += "# " + line + "\n"; }

    void header(std::initializer_list<std::string> cols) { row_strings(std::vector<std::string>(cols)); }
    void header(const std::vector<std::string>& cols) { row_strings(cols); }

    void row(std::initializer_list<double> values) {
        std::vector<std::string> cells;
        for (double v : values) cells.push_back(format_number(v));
        row_strings(cells);
    }

    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += cells[i];
        }
        text_ += '\n';
    }

    const std::string& str() const { return text_; }

    void write(const std::filesystem::path& path) const { write_text(path, text_); }

    static void write_text(const std::filesystem::path& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
        out << text;
        if (!out) throw std::runtime_error("failed writing " + path.string());
    }

private:
    std::string text_;
};

}  // namespace ionlink::io
