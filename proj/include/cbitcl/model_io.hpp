#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cbitcl/errors.hpp"
#include "cbitcl/mechanisms.hpp"
#include "cbitcl/numeric.hpp"

namespace cbitcl {

// Model files are INI-style text with five sections:
//
//   [initial_state]           x0
//   [immigration]             beta, nu (jump family) and nu.* parameters
//   [branching]               b_x, sigma_x, pi and pi.* parameters
//   [noise]                   b_z, sigma_z, gamma and gamma.* parameters
//   [correlation]             rho
//
// Jump families and their parameters:
//   none
//   stable            alpha in (1,2), eta >= 0, c_alpha > 0
//   tempered_stable   alpha in (1,2), theta > 0, c_alpha > 0
//   cgmy              c > 0, g > 0, m > 0, y in (1,2)
//
// '#' starts a comment. Values use round-trip decimal formatting, so a
// serialize/parse cycle reproduces the model bit for bit.

namespace detail_io {

struct RawConfig {
    // section -> key -> value, with positions for error reporting
    std::map<std::string, std::map<std::string, std::string>> sections;

    const std::string& require(const std::string& section, const std::string& key) const {
        auto sit = sections.find(section);
        if (sit == sections.end())
            throw ConfigError("missing section [" + section + "]");
        auto kit = sit->second.find(key);
        if (kit == sit->second.end())
            throw ConfigError("[" + section + "] missing key '" + key + "'");
        return kit->second;
    }

    bool has(const std::string& section, const std::string& key) const {
        auto sit = sections.find(section);
        return sit != sections.end() && sit->second.count(key) > 0;
    }
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& section, const std::string& key,
                           const std::string& value) {
    if (value == "inf") return kInf;
    if (value == "-inf") return -kInf;
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("[" + section + "] " + key + ": expected a number, got '" + value +
                          "'");
    }
}

inline RawConfig parse_raw(const std::string& text) {
    RawConfig raw;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            raw.sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
        if (!raw.sections[section].emplace(key, value).second)
            throw ConfigError("[" + section + "] duplicate key '" + key + "'");
    }
    return raw;
}

inline LevyMeasureSpec parse_family(const RawConfig& raw, const std::string& section,
                                    const std::string& name) {
    const std::string family = raw.require(section, name);
    auto num = [&](const std::string& param) {
        const std::string key = name + "." + param;
        return parse_number(section, key, raw.require(section, key));
    };
    auto num_or = [&](const std::string& param, double fallback) {
        const std::string key = name + "." + param;
        return raw.has(section, key) ? parse_number(section, key, raw.require(section, key))
                                     : fallback;
    };
    try {
        if (family == "none") return LevyMeasureSpec::none();
        if (family == "stable")
            return LevyMeasureSpec::stable_positive(num("alpha"), num("eta"),
                                                    num_or("c_alpha", 0.0));
        if (family == "tempered_stable")
            return LevyMeasureSpec::tempered_stable_positive(num("alpha"), num("theta"),
                                                             num_or("c_alpha", 0.0));
        if (family == "cgmy")
            return LevyMeasureSpec::cgmy(num("c"), num("g"), num("m"), num("y"));
    } catch (const DomainError& e) {
        throw ConfigError("[" + section + "] " + name + ": " + e.what());
    }
    throw ConfigError("[" + section + "] " + name + ": unknown family '" + family +
                      "' (expected none, stable, tempered_stable or cgmy)");
}

inline void emit_family(std::ostream& os, const std::string& name, const LevyMeasureSpec& s) {
    os << name << " = " << levy::family_name(s.family) << "\n";
    switch (s.family) {
    case LevyFamily::None:
        break;
    case LevyFamily::StablePositive:
        os << name << ".alpha = " << format_double(s.alpha) << "\n";
        os << name << ".eta = " << format_double(s.eta) << "\n";
        os << name << ".c_alpha = " << format_double(s.c_alpha) << "\n";
        break;
    case LevyFamily::TemperedStablePositive:
        os << name << ".alpha = " << format_double(s.alpha) << "\n";
        os << name << ".theta = " << format_double(s.theta) << "\n";
        os << name << ".c_alpha = " << format_double(s.c_alpha) << "\n";
        break;
    case LevyFamily::CGMY:
        os << name << ".c = " << format_double(s.c) << "\n";
        os << name << ".g = " << format_double(s.g) << "\n";
        os << name << ".m = " << format_double(s.m) << "\n";
        os << name << ".y = " << format_double(s.y) << "\n";
        break;
    }
}

} // namespace detail_io

inline CBITCLModel parse_model(const std::string& text) {
    using namespace detail_io;
    const RawConfig raw = parse_raw(text);
    CBITCLModel m;
    m.x0 = parse_number("initial_state", "x0", raw.require("initial_state", "x0"));
    m.psi.beta = parse_number("immigration", "beta", raw.require("immigration", "beta"));
    m.psi.nu = parse_family(raw, "immigration", "nu");
    m.phi.b_x = parse_number("branching", "b_x", raw.require("branching", "b_x"));
    m.phi.sigma_x = parse_number("branching", "sigma_x", raw.require("branching", "sigma_x"));
    m.phi.pi = parse_family(raw, "branching", "pi");
    m.xi.b_z = parse_number("noise", "b_z", raw.require("noise", "b_z"));
    m.xi.sigma_z = parse_number("noise", "sigma_z", raw.require("noise", "sigma_z"));
    m.xi.gamma = parse_family(raw, "noise", "gamma");
    m.rho = parse_number("correlation", "rho", raw.require("correlation", "rho"));
    m.validate();
    return m;
}

inline CBITCLModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

/// Canonical text form: fixed section and key order, round-trip decimals.
/// parse_model(serialize_model(m)) reproduces m exactly.
inline std::string serialize_model(const CBITCLModel& m) {
    using namespace detail_io;
    std::ostringstream os;
    os << "[initial_state]\n";
    os << "x0 = " << format_double(m.x0) << "\n\n";
    os << "[immigration]\n";
    os << "beta = " << format_double(m.psi.beta) << "\n";
    emit_family(os, "nu", m.psi.nu);
    os << "\n[branching]\n";
    os << "b_x = " << format_double(m.phi.b_x) << "\n";
    os << "sigma_x = " << format_double(m.phi.sigma_x) << "\n";
    emit_family(os, "pi", m.phi.pi);
    os << "\n[noise]\n";
    os << "b_z = " << format_double(m.xi.b_z) << "\n";
    os << "sigma_z = " << format_double(m.xi.sigma_z) << "\n";
    emit_family(os, "gamma", m.xi.gamma);
    os << "\n[correlation]\n";
    os << "rho = " << format_double(m.rho) << "\n";
    return os.str();
}

/// Content hash of the canonical serialization; echoed into every output for
/// reproducibility.
inline std::string model_hash(const CBITCLModel& m) {
    return hex64(fnv1a(serialize_model(m)));
}

} // namespace cbitcl
