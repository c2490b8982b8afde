#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "noise.hpp"

namespace ergodiff {

/// A fully resolved experiment plan. Defaults reproduce the benchmark
/// settings; every field can be overridden from the config file or CLI flags.
struct ExperimentPlan {
    std::string model = kAuctionPresetName; // "auction-v1" or "custom"
    NoiseLaw law = NoiseLaw::benchmark();
    Interval control_set{0.0, 1.0};

    std::vector<double> epsilons{0.5, 0.25, 0.125, 0.0625};

    // diffusive grid
    double h = 0.02;
    std::string schedule = "fixed"; // "fixed" (kappa = ceil(extent/h)) | "quarter" (kappa = ceil(h^-1/4))
    double extent = 20.0;
    std::optional<double> l_scheme; // default sqrt(2) * sigma

    // jump grid schedule: h_eps = eps^{3/2}, kappa = N = ceil(factor * eps^{-3/2})
    double jump_offset = -10.0;
    double jump_factor = 20.0;
    bool jump_stage = true;
    bool independent_sampling = false;

    int gamma = 100;
    int mollifier_n = 64;

    double sim_T = 1000.0;
    int sim_paths = 1000;
    double burn_in = 0.0;

    std::uint64_t seed = 20240817;
    double rvi_tol = 1e-9;
    long rvi_max_iter = 1000000;
    double pi_tol = 1e-9;
    int pi_max_iter = 100;
    double quad_rel_tol = 1e-8;

    std::string out_dir = "out";
    bool fail_fast = false;
    int threads = 1;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline double parse_double(const std::string& s, int line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw ConfigError("line " + std::to_string(line) + ": not a number: '" + s + "'");
    }
}

inline long parse_long(const std::string& s, int line) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw ConfigError("line " + std::to_string(line) + ": not an integer: '" + s + "'");
    }
}

inline std::vector<double> parse_list(std::string s, int line) {
    s = trim(s);
    if (!s.empty() && s.front() == '[') {
        if (s.back() != ']')
            throw ConfigError("line " + std::to_string(line) + ": unterminated list");
        s = s.substr(1, s.size() - 2);
    }
    std::vector<double> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ',')) {
        cur = trim(cur);
        if (cur.empty())
            throw ConfigError("line " + std::to_string(line) + ": empty list element");
        out.push_back(parse_double(cur, line));
    }
    if (out.empty()) throw ConfigError("line " + std::to_string(line) + ": empty list");
    return out;
}

/// Marginal literals: uniform(lo,hi), lognormal(m,s), normal(m,var),
/// point_mass(v), two_point(v1,p,v2).
inline Marginal parse_marginal(const std::string& literal, int line) {
    const std::string s = trim(literal);
    const auto open = s.find('(');
    if (open == std::string::npos || s.back() != ')')
        throw ConfigError("line " + std::to_string(line) + ": malformed marginal '" + s + "'");
    const std::string name = trim(s.substr(0, open));
    std::vector<double> args;
    {
        std::istringstream in(s.substr(open + 1, s.size() - open - 2));
        std::string cur;
        while (std::getline(in, cur, ',')) args.push_back(parse_double(trim(cur), line));
    }
    auto expect = [&](std::size_t n) {
        if (args.size() != n)
            throw ConfigError("line " + std::to_string(line) + ": " + name + " expects " +
                              std::to_string(n) + " arguments");
    };
    try {
        if (name == "uniform") {
            expect(2);
            return Marginal::uniform(args[0], args[1]);
        }
        if (name == "lognormal") {
            expect(2);
            return Marginal::lognormal(args[0], args[1]);
        }
        if (name == "normal") {
            expect(2);
            return Marginal::normal(args[0], args[1]);
        }
        if (name == "point_mass") {
            expect(1);
            return Marginal::point_mass(args[0]);
        }
        if (name == "two_point") {
            expect(3);
            return Marginal::two_point(args[0], args[1], args[2]);
        }
    } catch (const ConfigError& ex) {
        throw ConfigError("line " + std::to_string(line) + ": " + ex.what());
    }
    throw ConfigError("line " + std::to_string(line) + ": unknown marginal family '" + name + "'");
}

} // namespace detail

/// Parses the flat key = value experiment configuration. Unknown keys and
/// out-of-range values are hard errors carrying the offending line number;
/// omitted keys keep their documented defaults.
inline ExperimentPlan parse_config_text(const std::string& text) {
    ExperimentPlan plan;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    bool noise_overridden = false;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        const auto hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line) + ": expected key = value");
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string val = detail::trim(s.substr(eq + 1));
        if (val.empty()) throw ConfigError("line " + std::to_string(line) + ": empty value");

        if (key == "model") {
            if (val != kAuctionPresetName && val != "custom")
                throw ConfigError("line " + std::to_string(line) + ": unknown model '" + val +
                                  "' (expected auction-v1 or custom)");
            plan.model = val;
        } else if (key == "epsilon") {
            plan.epsilons = detail::parse_list(val, line);
            for (double e : plan.epsilons)
                if (!(e > 0.0 && e < 1.0))
                    throw ConfigError("line " + std::to_string(line) +
                                      ": epsilon values must lie in (0,1)");
        } else if (key == "h") {
            plan.h = detail::parse_double(val, line);
            if (!(plan.h > 0.0))
                throw ConfigError("line " + std::to_string(line) + ": h must be positive");
        } else if (key == "schedule") {
            if (val != "fixed" && val != "quarter")
                throw ConfigError("line " + std::to_string(line) +
                                  ": schedule must be 'fixed' or 'quarter'");
            plan.schedule = val;
        } else if (key == "extent") {
            plan.extent = detail::parse_double(val, line);
            if (!(plan.extent > 0.0))
                throw ConfigError("line " + std::to_string(line) + ": extent must be positive");
        } else if (key == "l_scheme") {
            plan.l_scheme = detail::parse_double(val, line);
            if (!(*plan.l_scheme > 0.0))
                throw ConfigError("line " + std::to_string(line) + ": l_scheme must be positive");
        } else if (key == "jump_offset") {
            plan.jump_offset = detail::parse_double(val, line);
        } else if (key == "jump_factor") {
            plan.jump_factor = detail::parse_double(val, line);
            if (!(plan.jump_factor > 0.0))
                throw ConfigError("line " + std::to_string(line) + ": jump_factor must be positive");
        } else if (key == "jump") {
            if (val == "on")
                plan.jump_stage = true;
            else if (val == "off")
                plan.jump_stage = false;
            else
                throw ConfigError("line " + std::to_string(line) + ": jump must be on or off");
        } else if (key == "independent_sampling") {
            if (val == "on")
                plan.independent_sampling = true;
            else if (val == "off")
                plan.independent_sampling = false;
            else
                throw ConfigError("line " + std::to_string(line) +
                                  ": independent_sampling must be on or off");
        } else if (key == "gamma") {
            plan.gamma = static_cast<int>(detail::parse_long(val, line));
            if (plan.gamma < 0)
                throw ConfigError("line " + std::to_string(line) + ": gamma must be nonnegative");
        } else if (key == "mollifier_n") {
            plan.mollifier_n = static_cast<int>(detail::parse_long(val, line));
            if (plan.mollifier_n < 1)
                throw ConfigError("line " + std::to_string(line) + ": mollifier_n must be >= 1");
        } else if (key == "sim_T") {
            plan.sim_T = detail::parse_double(val, line);
            if (!(plan.sim_T > 0.0))
                throw ConfigError("line " + std::to_string(line) + ": sim_T must be positive");
        } else if (key == "sim_paths") {
            plan.sim_paths = static_cast<int>(detail::parse_long(val, line));
            if (plan.sim_paths < 1)
                throw ConfigError("line " + std::to_string(line) + ": sim_paths must be >= 1");
        } else if (key == "burn_in") {
            plan.burn_in = detail::parse_double(val, line);
            if (!(plan.burn_in >= 0.0 && plan.burn_in < 1.0))
                throw ConfigError("line " + std::to_string(line) + ": burn_in must lie in [0,1)");
        } else if (key == "seed") {
            plan.seed = static_cast<std::uint64_t>(detail::parse_long(val, line));
        } else if (key == "rvi_tol") {
            plan.rvi_tol = detail::parse_double(val, line);
            if (!(plan.rvi_tol > 0.0))
                throw ConfigError("line " + std::to_string(line) + ": rvi_tol must be positive");
        } else if (key == "rvi_max_iter") {
            plan.rvi_max_iter = detail::parse_long(val, line);
            if (plan.rvi_max_iter < 1)
                throw ConfigError("line " + std::to_string(line) + ": rvi_max_iter must be >= 1");
        } else if (key == "pi_tol") {
            plan.pi_tol = detail::parse_double(val, line);
            if (!(plan.pi_tol > 0.0))
                throw ConfigError("line " + std::to_string(line) + ": pi_tol must be positive");
        } else if (key == "pi_max_iter") {
            plan.pi_max_iter = static_cast<int>(detail::parse_long(val, line));
            if (plan.pi_max_iter < 1)
                throw ConfigError("line " + std::to_string(line) + ": pi_max_iter must be >= 1");
        } else if (key == "quad_rel_tol") {
            plan.quad_rel_tol = detail::parse_double(val, line);
            if (!(plan.quad_rel_tol > 0.0))
                throw ConfigError("line " + std::to_string(line) +
                                  ": quad_rel_tol must be positive");
        } else if (key == "out_dir") {
            plan.out_dir = val;
        } else if (key == "fail_fast") {
            if (val == "on")
                plan.fail_fast = true;
            else if (val == "off")
                plan.fail_fast = false;
            else
                throw ConfigError("line " + std::to_string(line) + ": fail_fast must be on or off");
        } else if (key == "threads") {
            plan.threads = static_cast<int>(detail::parse_long(val, line));
            if (plan.threads < 1)
                throw ConfigError("line " + std::to_string(line) + ": threads must be >= 1");
        } else if (key == "noise_e1") {
            plan.law.e1 = detail::parse_marginal(val, line);
            noise_overridden = true;
        } else if (key == "noise_e2") {
            plan.law.e2 = detail::parse_marginal(val, line);
            noise_overridden = true;
        } else if (key == "noise_e3") {
            plan.law.e3 = detail::parse_marginal(val, line);
            noise_overridden = true;
        } else if (key == "noise_e4") {
            plan.law.e4 = detail::parse_marginal(val, line);
            noise_overridden = true;
        } else if (key == "control_lo") {
            plan.control_set.lo = detail::parse_double(val, line);
        } else if (key == "control_hi") {
            plan.control_set.hi = detail::parse_double(val, line);
        } else {
            throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");
        }
    }
    if (plan.control_set.hi < plan.control_set.lo)
        throw ConfigError("control interval is empty");
    if (noise_overridden && plan.model != "custom")
        throw ConfigError("noise_e* keys require model = custom; the " +
                          std::string(kAuctionPresetName) + " preset pins the benchmark law");
    try {
        plan.law.validate();
    } catch (const ConfigError& ex) {
        throw ConfigError(std::string("noise law invalid: ") + ex.what());
    }
    return plan;
}

inline ExperimentPlan parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

} // namespace ergodiff
