// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Textual operator descriptors, applied left to right:
//
//   op     := stage ('|' stage)*
//   stage  := identity
//           | temporal:uniform:<k>
//           | temporal:gauss:<sigma>
//           | spatial:gauss:<sigma>:<width>
//           | sr:<factor>
//           | mask:<ratio>:<seed>[:shared|:per-frame]

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "operators.hpp"

namespace vidsolve {

namespace grammar {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

inline double to_double(const std::string& s, const std::string& stage) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::ConfigError, "bad number '" + s + "' in operator stage '" + stage + "'");
}

inline std::uint64_t to_uint(const std::string& s, const std::string& stage) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        fail(ErrorCode::ConfigError, "bad integer '" + s + "' in operator stage '" + stage + "'");
    return v;
}

inline PsfSpec parse_psf(const std::string& family, const std::string& param, const std::string& stage) {
    if (family == "uniform") return PsfSpec::uniform(to_uint(param, stage));
    if (family == "gauss" || family == "gaussian") return PsfSpec::gaussian(to_double(param, stage));
    fail(ErrorCode::ConfigError, "unknown PSF family '" + family + "' in '" + stage + "'");
}

}  // namespace grammar

/// Builds one stage for an input of shape `in`.
template <class T>
LinearOp<T> parse_stage(const std::string& stage, Shape in) {
    using namespace grammar;
    const auto f = split(stage, ':');
    const std::string& kind = f[0];
    auto arity = [&](std::size_t lo, std::size_t hi) {
        if (f.size() < lo || f.size() > hi) fail(ErrorCode::ConfigError, "wrong number of fields in stage '" + stage + "'");
    };
    if (kind == "identity") {
        arity(1, 1);
        return identity_op<T>(in);
    }
    if (kind == "temporal") {
        arity(3, 3);
        return temporal_psf<T>(parse_psf(f[1], f[2], stage), in);
    }
    if (kind == "spatial") {
        arity(4, 4);
        if (f[1] != "gauss" && f[1] != "gaussian") fail(ErrorCode::ConfigError, "unknown spatial kernel in '" + stage + "'");
        return spatial_gaussian_blur<T>(to_double(f[2], stage), to_uint(f[3], stage), in);
    }
    if (kind == "sr") {
        arity(2, 2);
        return avgpool_sr<T>(to_uint(f[1], stage), in);
    }
    if (kind == "mask") {
        arity(3, 4);
        MaskMode mode = MaskMode::PerFrame;
        if (f.size() == 4) {
            if (f[3] == "shared") mode = MaskMode::Shared;
            else if (f[3] != "per-frame") fail(ErrorCode::ConfigError, "unknown mask mode in '" + stage + "'");
        }
        return random_mask<T>(to_double(f[1], stage), to_uint(f[2], stage), in, mode);
    }
    fail(ErrorCode::ConfigError, "unknown operator stage '" + stage + "'");
}

/// Parses a full descriptor into the composed operator on input shape `in`.
template <class T>
LinearOp<T> parse_operator(const std::string& text, Shape in) {
    const auto stages = grammar::split(text, '|');
    LinearOp<T> op = identity_op<T>(in);
    bool first = true;
    for (const auto& st : stages) {
        if (st.empty()) fail(ErrorCode::ConfigError, "empty stage in operator '" + text + "'");
        auto next = parse_stage<T>(st, op.out_shape());
        op = first ? next : compose(next, op);
        first = false;
    }
    return op;
}

/// Recovers the operator's input shape from a measurement shape (only the
/// sr stage changes the geometry).
inline Shape infer_input_shape(const std::string& text, Shape out) {
    const auto stages = grammar::split(text, '|');
    for (auto it = stages.rbegin(); it != stages.rend(); ++it) {
        const auto f = grammar::split(*it, ':');
        if (f[0] == "sr" && f.size() == 2) {
            const auto k = grammar::to_uint(f[1], *it);
            out.h *= k;
            out.w *= k;
        }
    }
    return out;
}

}  // namespace vidsolve
