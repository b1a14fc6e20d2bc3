// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Run configuration: a flat INI-style file with [data], [op], [solver],
// [denoiser] and [output] sections holding `key = value` lines. Every key
// has a default; unknown sections or keys are rejected.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "op_grammar.hpp"

namespace vidsolve {

class RunConfig {
public:
    RunConfig() {
        values_ = {
            {"data.input", ""},
            {"data.ref", ""},
            {"data.measurement", ""},
            {"data.pre_restoration", ""},
            {"data.kind", "moving_square"},
            {"data.n", "16"},
            {"data.c", "1"},
            {"data.h", "32"},
            {"data.w", "32"},
            {"data.seed", "0"},

            {"op.op", ""},
            {"op.noise_std", "0"},
            {"op.seed", "0"},

            {"solver.nfe", "20"},
            {"solver.eta", "0.15"},
            {"solver.l", "5"},
            {"solver.update", "cg"},
            {"solver.gamma", "0.5"},
            {"solver.noise_sync", "true"},
            {"solver.seed", "0"},
            {"solver.tol", "0"},
            {"solver.t_base", "1000"},
            {"solver.beta_start", "0.0001"},
            {"solver.beta_end", "0.02"},
            {"solver.threads", "0"},
            {"solver.grid", "1,3,5,7,9,11,13,15"},
            {"solver.psf_family", "uniform"},
            {"solver.method", "cg"},
            {"solver.iters", "0"},
            {"solver.rho", "1"},
            {"solver.lambda", "0.001"},
            {"solver.outer", "30"},
            {"solver.inner", "20"},
            {"solver.tv_axes", "thw"},
            {"solver.eta_grid", "0,0.2,0.4,0.6,0.8,1.0"},
            {"solver.sync_grid", "on,off"},
            {"solver.update_grid", "cg,gd"},

            {"denoiser.kind", "smoother"},
            {"denoiser.scale", "1.0"},
            {"denoiser.mu", "0.5"},
            {"denoiser.sigma0", "0.25"},
            {"denoiser.bridge_cmd", ""},
            {"denoiser.timeout_ms", "5000"},

            {"output.out", ""},
            {"output.trace", ""},
            {"output.tweedie_dir", ""},
            {"output.metrics", ""},
            {"output.csv", ""},
            {"output.ppm_dir", ""},
        };
    }

    bool has_key(const std::string& key) const { return values_.count(key) != 0; }

    void set(const std::string& key, const std::string& value) {
        if (!has_key(key)) fail(ErrorCode::ConfigError, "unknown config key '" + key + "'");
        values_[key] = value;
    }

    const std::string& get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) fail(ErrorCode::ConfigError, "unknown config key '" + key + "'");
        return it->second;
    }

    double get_double(const std::string& key) const {
        const auto& v = get(key);
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used == v.size()) return d;
        } catch (const std::exception&) {
        }
        fail(ErrorCode::ConfigError, "key '" + key + "' expects a number, got '" + v + "'");
    }

    std::size_t get_size(const std::string& key) const {
        const auto& v = get(key);
        std::size_t out = 0;
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || ptr != v.data() + v.size())
            fail(ErrorCode::ConfigError, "key '" + key + "' expects a non-negative integer, got '" + v + "'");
        return out;
    }

    bool get_bool(const std::string& key) const {
        const auto& v = get(key);
        if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "off" || v == "0" || v == "no") return false;
        fail(ErrorCode::ConfigError, "key '" + key + "' expects a boolean, got '" + v + "'");
    }

    std::vector<std::string> get_list(const std::string& key) const {
        std::vector<std::string> out;
        for (auto& s : grammar::split(get(key), ','))
            if (!s.empty()) out.push_back(s);
        return out;
    }

    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        for (const auto& s : get_list(key)) out.push_back(grammar::to_double(s, key));
        return out;
    }

    /// Merges `key = value` lines from text; later values win.
    void merge_text(const std::string& text, const std::string& origin) {
        std::istringstream in(text);
        std::string line, section;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string s = grammar::trim(line);
            if (s.empty() || s[0] == '#' || s[0] == ';') continue;
            const std::string where = origin + ":" + std::to_string(lineno);
            if (s.front() == '[') {
                if (s.back() != ']') fail(ErrorCode::ConfigError, where + ": malformed section header");
                section = grammar::trim(s.substr(1, s.size() - 2));
                static const char* known[] = {"data", "op", "solver", "denoiser", "output"};
                bool ok = false;
                for (const char* k : known) ok = ok || section == k;
                if (!ok) fail(ErrorCode::ConfigError, where + ": unknown section '" + section + "'");
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos) fail(ErrorCode::ConfigError, where + ": expected key = value");
            if (section.empty()) fail(ErrorCode::ConfigError, where + ": key outside of a section");
            const std::string key = section + "." + grammar::trim(s.substr(0, eq));
            std::string value = grammar::trim(s.substr(eq + 1));
            if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
            if (!has_key(key)) fail(ErrorCode::ConfigError, where + ": unknown config key '" + key + "'");
            values_[key] = value;
        }
    }

    void merge_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) fail(ErrorCode::ConfigError, "cannot read config file " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        merge_text(ss.str(), path.string());
    }

    /// The fully resolved configuration in the same file format.
    std::string dump() const {
        std::ostringstream out;
        std::string current;
        for (const char* section : {"data", "op", "solver", "denoiser", "output"}) {
            out << "[" << section << "]\n";
            const std::string prefix = std::string(section) + ".";
            for (const auto& [k, v] : values_)
                if (k.rfind(prefix, 0) == 0) out << k.substr(prefix.size()) << " = \"" << v << "\"\n";
            out << "\n";
        }
        return out.str();
    }

    void write(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
        out << dump();
    }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace vidsolve
