// Copyright 2026 The cvepr Authors
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

#include <charconv>
#include <concepts>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "cvepr/error.hpp"

namespace cvepr::csv {

inline constexpr std::string_view kSchemaLine = "# schema=1";

/// Shortest decimal that round-trips to the same double.
inline std::string format(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format(std::optional<double> v) { return v ? format(*v) : std::string(); }

inline std::string format(bool v) { return v ? "true" : "false"; }

template <std::integral I>
    requires(!std::same_as<I, bool>)
std::string format(I v) {
    return std::to_string(v);
}

inline double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    if (text == "inf") return HUGE_VAL;
    if (text == "-inf") return -HUGE_VAL;
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw InvalidArgument("not a number: '" + std::string(text) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

template <class... Fields>
std::string row(const Fields&... fields) {
    std::string out;
    bool first = true;
    auto append = [&](const auto& f) {
        if (!first) out += ',';
        first = false;
        if constexpr (std::is_convertible_v<decltype(f), std::string_view>) {
            out += std::string_view(f);
        } else {
            out += format(f);
        }
    };
    (append(fields), ...);
    return out;
}

}  // namespace cvepr::csv
