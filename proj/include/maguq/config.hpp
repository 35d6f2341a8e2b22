#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "maguq/core.hpp"
#include "maguq/mesh.hpp"

namespace maguq::cli {

/// Full resolved configuration of a pipeline run. Defaults reproduce the
/// reference study settings (n_min 256, eta 1.0, epsilon 0.01, threshold
/// 0.95, p 2, nu_mean 795.774, 260 turns).
struct RunConfig {
    // mesh
    std::string mesh_source = "generate";  // generate | files
    std::string mesh_node;
    std::string mesh_ele;
    mesh::ReferenceParams geometry;

    // covariance kernel
    double sigma = 1.0;
    std::vector<double> d_sweep = {2.0};  // correlation lengths, m

    // hierarchical matrix
    int n_min = 256;
    double eta = 1.0;
    double epsilon = 0.01;
    int k_max = 128;
    std::uint64_t dense_budget = 2ull << 30;

    // kle
    double threshold = 0.95;
    int m_request = 30;
    double kle_tol = 1e-8;
    int kle_max_iter = 0;
    int fixed_modes = 0;  // 0 = truncate by threshold

    // materials
    double nu_mean = 795.774;
    double nu_air = 795774.7154594767;
    double nu_coil = 795774.7154594767;
    int n_turns = 260;
    double current = 1.0;

    // uq
    int degree = 2;
    std::int64_t node_budget = 100000;

    // sample
    std::vector<double> sample_xi;  // empty = draw from seed
    bool sample_solve = false;

    std::uint64_t seed = 0;
    int threads = 1;
};

namespace detail {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[40];
    for (int precision : {15, 16, 17}) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + ": expected a number, got '" + value + "'");
    }
}

inline long long to_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + ": expected an integer, got '" + value + "'");
    }
}

inline std::vector<double> to_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    if (value.empty()) return out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
    return out;
}

inline std::string format_double_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

struct KeyDef {
    std::string name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

inline const std::vector<KeyDef>& key_table() {
    static const std::vector<KeyDef> table = [] {
        std::vector<KeyDef> keys;
        auto dbl = [&](const std::string& name, double RunConfig::* field) {
            keys.push_back({name,
                            [name, field](RunConfig& c, const std::string& v) { c.*field = to_double(name, v); },
                            [field](const RunConfig& c) { return format_double(c.*field); }});
        };
        auto geo = [&](const std::string& name, double mesh::ReferenceParams::* field) {
            keys.push_back({name,
                            [name, field](RunConfig& c, const std::string& v) { c.geometry.*field = to_double(name, v); },
                            [field](const RunConfig& c) { return format_double(c.geometry.*field); }});
        };
        auto integer = [&](const std::string& name, int RunConfig::* field) {
            keys.push_back({name,
                            [name, field](RunConfig& c, const std::string& v) { c.*field = static_cast<int>(to_int(name, v)); },
                            [field](const RunConfig& c) { return std::to_string(c.*field); }});
        };
        auto str = [&](const std::string& name, std::string RunConfig::* field) {
            keys.push_back({name,
                            [field](RunConfig& c, const std::string& v) { c.*field = v; },
                            [field](const RunConfig& c) { return c.*field; }});
        };

        str("mesh.source", &RunConfig::mesh_source);
        str("mesh.node", &RunConfig::mesh_node);
        str("mesh.ele", &RunConfig::mesh_ele);
        geo("mesh.core_width", &mesh::ReferenceParams::core_width);
        geo("mesh.core_height", &mesh::ReferenceParams::core_height);
        geo("mesh.limb_width", &mesh::ReferenceParams::limb_width);
        geo("mesh.window_height", &mesh::ReferenceParams::window_height);
        geo("mesh.gap", &mesh::ReferenceParams::gap);
        geo("mesh.coil_width", &mesh::ReferenceParams::coil_width);
        geo("mesh.target_h", &mesh::ReferenceParams::target_h);
        dbl("kernel.sigma", &RunConfig::sigma);
        keys.push_back({"kernel.d",
                        [](RunConfig& c, const std::string& v) {
                            c.d_sweep = to_double_list("kernel.d", v);
                            if (c.d_sweep.empty())
                                throw ConfigError("config: kernel.d: need at least one value");
                        },
                        [](const RunConfig& c) { return format_double_list(c.d_sweep); }});
        integer("hmatrix.n_min", &RunConfig::n_min);
        dbl("hmatrix.eta", &RunConfig::eta);
        dbl("hmatrix.epsilon", &RunConfig::epsilon);
        integer("hmatrix.k_max", &RunConfig::k_max);
        keys.push_back({"hmatrix.dense_budget",
                        [](RunConfig& c, const std::string& v) {
                            c.dense_budget = static_cast<std::uint64_t>(to_int("hmatrix.dense_budget", v));
                        },
                        [](const RunConfig& c) { return std::to_string(c.dense_budget); }});
        dbl("kle.threshold", &RunConfig::threshold);
        integer("kle.m_request", &RunConfig::m_request);
        dbl("kle.tol", &RunConfig::kle_tol);
        integer("kle.max_iter", &RunConfig::kle_max_iter);
        integer("kle.modes", &RunConfig::fixed_modes);
        dbl("materials.nu_mean", &RunConfig::nu_mean);
        dbl("materials.nu_air", &RunConfig::nu_air);
        dbl("materials.nu_coil", &RunConfig::nu_coil);
        integer("materials.n_turns", &RunConfig::n_turns);
        dbl("materials.current", &RunConfig::current);
        integer("uq.degree", &RunConfig::degree);
        keys.push_back({"uq.node_budget",
                        [](RunConfig& c, const std::string& v) {
                            c.node_budget = to_int("uq.node_budget", v);
                        },
                        [](const RunConfig& c) { return std::to_string(c.node_budget); }});
        keys.push_back({"sample.xi",
                        [](RunConfig& c, const std::string& v) { c.sample_xi = to_double_list("sample.xi", v); },
                        [](const RunConfig& c) { return format_double_list(c.sample_xi); }});
        keys.push_back({"sample.solve",
                        [](RunConfig& c, const std::string& v) {
                            c.sample_solve = to_int("sample.solve", v) != 0;
                        },
                        [](const RunConfig& c) { return std::string(c.sample_solve ? "1" : "0"); }});
        keys.push_back({"seed",
                        [](RunConfig& c, const std::string& v) {
                            c.seed = static_cast<std::uint64_t>(to_int("seed", v));
                        },
                        [](const RunConfig& c) { return std::to_string(c.seed); }});
        integer("threads", &RunConfig::threads);
        return keys;
    }();
    return table;
}

inline const KeyDef& find_key(const std::string& name) {
    for (const auto& k : key_table())
        if (k.name == name) return k;
    throw ConfigError("config: unknown key '" + name + "'");
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Applies one "key=value" assignment.
inline void apply_setting(RunConfig& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("config: expected key=value, got '" + assignment + "'");
    const std::string key = detail::trim(assignment.substr(0, eq));
    const std::string value = detail::trim(assignment.substr(eq + 1));
    detail::find_key(key).set(config, value);
}

/// Parses key=value text ('#' comments, blank lines allowed) on top of the
/// defaults.
inline RunConfig parse_config_text(const std::string& text) {
    RunConfig config;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
        line = detail::trim(line);
        if (line.empty()) continue;
        try {
            apply_setting(config, line);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return config;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

/// Canonical serialization: every key, table order, one per line.
inline std::string serialize(const RunConfig& config) {
    std::string out;
    for (const auto& k : detail::key_table()) {
        out += k.name;
        out += " = ";
        out += k.get(config);
        out += '\n';
    }
    return out;
}

/// Single-line echo of the full resolved config, for CSV comment headers.
inline std::string config_echo(const RunConfig& config) {
    std::string out;
    for (const auto& k : detail::key_table()) {
        if (!out.empty()) out += ' ';
        out += k.name + "=" + k.get(config);
    }
    return out;
}

}  // namespace maguq::cli
