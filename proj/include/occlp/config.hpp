#pragma once

// Run configuration: key = value text with per-problem defaults.
//
//   problem = example1
//   alpha = 0.9
//   y0 = 0.5, 0.25
//   state_grid = 21          # one count broadcasts to every axis
//   candidate_grid = 81:9    # state:control

#include "occlp/errors.hpp"
#include "occlp/model.hpp"
#include "occlp/silp.hpp"

#include <cerrno>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace occlp {

struct RunConfig {
    std::string problem = "example1";
    std::optional<double> alpha;
    std::optional<Vector> y0;

    unsigned degree = 7;
    std::vector<std::size_t> state_grid{21};
    std::vector<std::size_t> control_grid{3};
    std::vector<std::size_t> candidate_state{81};
    std::vector<std::size_t> candidate_control{9};
    std::size_t local_samples = 8;
    std::size_t batch = 8;
    std::size_t max_rounds = 500;
    double tol = 1e-6;

    double epsilon = 1e-3;
    std::optional<std::size_t> steps = 50;
    std::string policy = "minimizer";
    std::vector<std::size_t> policy_grid{201};
    bool polish = false;
    double discard = 1e-2;

    std::vector<std::size_t> vi_state{41};
    std::vector<std::size_t> vi_control{21};
    double vi_tol = 1e-6;
    std::size_t vi_max_iter = 10000;

    double kappa_tol = 0.25;     // optimality-condition residuals
    double psi_slack = 0.2;      // psi bound
    double shifted_slack = 0.2;  // shifted inequality
    double gap_tol = 0.35;
    double oracle_tol = 0.3;
    bool kappa_increment = false; // re-solve at degree + 1 for the kappa estimate

    std::string out = "out";
    unsigned long seed = 0; // reserved

    ProblemParameters parameters() const { return {alpha, y0}; }
    DiscreteControlProblem make_problem() const { return builtin_problem(problem, parameters()); }
    GridSpec grid() const { return {state_grid, control_grid}; }
    CandidateSpec candidates() const { return {{candidate_state, candidate_control}, local_samples, {}}; }
    RefineOptions refine_options() const {
        RefineOptions o;
        o.tol = tol;
        o.max_rounds = max_rounds;
        o.batch = batch;
        return o;
    }

    void validate() const;
};

/// Defaults tuned per built-in problem.
inline RunConfig default_config(const std::string& problem) {
    RunConfig c;
    c.problem = problem;
    if (problem == "shift") {
        c.degree = 1;
        c.state_grid = {11};
        c.control_grid = {11};
        c.candidate_state = {101};
        c.candidate_control = {101};
        c.policy_grid = {101};
        c.discard = 0.0;
        c.vi_state = {11};
        c.vi_control = {11};
        c.vi_tol = 1e-12;
        c.kappa_tol = 1e-6;
        c.psi_slack = 1e-6;
        c.shifted_slack = 1e-6;
        c.gap_tol = 1e-6;
        c.oracle_tol = 1e-9;
        c.kappa_increment = true;
    }
    return c;
}

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || p != end) throw ConfigError("bad number for '" + key + "': '" + v + "'");
    return x;
}

inline std::size_t parse_count(const std::string& key, const std::string& v) {
    std::size_t x = 0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || p != end) throw ConfigError("bad integer for '" + key + "': '" + v + "'");
    return x;
}

inline std::vector<std::size_t> parse_counts(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    for (const auto& s : split(v, ',')) out.push_back(parse_count(key, s));
    if (out.empty()) throw ConfigError("empty list for '" + key + "'");
    return out;
}

inline Vector parse_vector(const std::string& key, const std::string& v) {
    Vector out;
    for (const auto& s : split(v, ',')) out.push_back(parse_double(key, s));
    if (out.empty()) throw ConfigError("empty list for '" + key + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("bad boolean for '" + key + "': '" + v + "'");
}

} // namespace detail

using ConfigEntries = std::map<std::string, std::string>;

/// Parses key = value lines; '#' starts a comment. Later keys win.
inline ConfigEntries parse_config_text(const std::string& text) {
    ConfigEntries out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        out[key] = detail::trim(line.substr(eq + 1));
    }
    return out;
}

inline ConfigEntries read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// Applies entries on top of c. Unknown keys are errors.
inline void apply_entries(RunConfig& c, const ConfigEntries& entries) {
    using namespace detail;
    for (const auto& [k, v] : entries) {
        if (k == "problem") {
            c.problem = v;
        } else if (k == "alpha") {
            c.alpha = parse_double(k, v);
        } else if (k == "y0") {
            c.y0 = parse_vector(k, v);
        } else if (k == "degree") {
            c.degree = static_cast<unsigned>(parse_count(k, v));
        } else if (k == "state_grid") {
            c.state_grid = parse_counts(k, v);
        } else if (k == "control_grid") {
            c.control_grid = parse_counts(k, v);
        } else if (k == "candidate_grid") {
            const auto parts = split(v, ':');
            if (parts.size() != 2) throw ConfigError("candidate_grid expects state:control");
            c.candidate_state = parse_counts(k, parts[0]);
            c.candidate_control = parse_counts(k, parts[1]);
        } else if (k == "local_samples") {
            c.local_samples = parse_count(k, v);
        } else if (k == "batch") {
            c.batch = parse_count(k, v);
        } else if (k == "max_rounds") {
            c.max_rounds = parse_count(k, v);
        } else if (k == "tol") {
            c.tol = parse_double(k, v);
        } else if (k == "epsilon") {
            c.epsilon = parse_double(k, v);
            c.steps.reset();
        } else if (k == "steps") {
            c.steps = parse_count(k, v);
        } else if (k == "policy") {
            c.policy = v;
        } else if (k == "policy_grid") {
            c.policy_grid = parse_counts(k, v);
        } else if (k == "polish") {
            c.polish = parse_bool(k, v);
        } else if (k == "discard") {
            c.discard = parse_double(k, v);
        } else if (k == "vi_state_grid") {
            c.vi_state = parse_counts(k, v);
        } else if (k == "vi_control_grid") {
            c.vi_control = parse_counts(k, v);
        } else if (k == "vi_tol") {
            c.vi_tol = parse_double(k, v);
        } else if (k == "vi_max_iter") {
            c.vi_max_iter = parse_count(k, v);
        } else if (k == "kappa_tol") {
            c.kappa_tol = parse_double(k, v);
        } else if (k == "psi_slack") {
            c.psi_slack = parse_double(k, v);
        } else if (k == "shifted_slack") {
            c.shifted_slack = parse_double(k, v);
        } else if (k == "gap_tol") {
            c.gap_tol = parse_double(k, v);
        } else if (k == "oracle_tol") {
            c.oracle_tol = parse_double(k, v);
        } else if (k == "kappa_increment") {
            c.kappa_increment = parse_bool(k, v);
        } else if (k == "out") {
            c.out = v;
        } else if (k == "seed") {
            c.seed = parse_count(k, v);
        } else {
            throw ConfigError("unknown config key '" + k + "'");
        }
    }
}

/// Problem defaults first, then the entries.
inline RunConfig make_config(const ConfigEntries& entries) {
    auto it = entries.find("problem");
    RunConfig c = default_config(it == entries.end() ? "example1" : it->second);
    apply_entries(c, entries);
    c.validate();
    return c;
}

inline void RunConfig::validate() const {
    if (!ProblemRegistry::instance().contains(problem)) throw UnknownProblem(problem);
    if (alpha && !(*alpha > 0.0 && *alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    auto positive = [](const char* name, double v) {
        if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be positive");
    };
    positive("tol", tol);
    positive("epsilon", epsilon);
    positive("vi_tol", vi_tol);
    positive("kappa_tol", kappa_tol);
    positive("psi_slack", psi_slack);
    positive("shifted_slack", shifted_slack);
    positive("gap_tol", gap_tol);
    positive("oracle_tol", oracle_tol);
    auto resolutions = [](const char* name, const std::vector<std::size_t>& v) {
        for (auto n : v) {
            if (n < 2) throw ConfigError(std::string(name) + " needs at least 2 points per axis");
        }
    };
    resolutions("state_grid", state_grid);
    resolutions("control_grid", control_grid);
    resolutions("candidate_grid", candidate_state);
    resolutions("candidate_grid", candidate_control);
    resolutions("policy_grid", policy_grid);
    resolutions("vi_state_grid", vi_state);
    resolutions("vi_control_grid", vi_control);
    if (steps && *steps == 0) throw ConfigError("steps must be at least 1");
    if (policy != "minimizer" && policy != "heuristic") throw ConfigError("policy must be minimizer or heuristic");
    if (!(discard >= 0.0 && discard < 1.0)) throw ConfigError("discard must lie in [0,1)");
    if (batch == 0) throw ConfigError("batch must be at least 1");
    if (max_rounds == 0) throw ConfigError("max_rounds must be at least 1");
}

} // namespace occlp
