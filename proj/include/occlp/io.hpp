#pragma once

// File formats: solution JSON, trajectory CSV, trajectory/atom SVG.

#include "occlp/errors.hpp"
#include "occlp/model.hpp"
#include "occlp/silp.hpp"
#include "occlp/synthesis.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace occlp {

/// What a solve leaves on disk: enough to rebuild the problem, the basis
/// and both policies.
struct StoredSolution {
    std::string problem;
    double alpha = 0.0;
    Vector y0;
    unsigned degree = 0;
    AtomicMeasure measure;
    DualCertificate certificate;
    double value = 0.0;
    std::size_t rounds = 0;
    double max_dual_violation = 0.0;
};

inline StoredSolution make_stored(const DiscreteControlProblem& problem, unsigned degree, const RefinedSolution& s) {
    return {problem.name, problem.discount,           problem.initial_state, degree, s.measure,
            s.certificate, s.value, s.rounds, s.max_dual_violation};
}

inline nlohmann::json to_json(const StoredSolution& s) {
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& a : s.measure.atoms) {
        atoms.push_back({{"y", a.point.state}, {"u", a.point.control}, {"weight", a.weight}});
    }
    return {
        {"problem", {{"name", s.problem}, {"alpha", s.alpha}, {"y0", s.y0}}},
        {"degree", s.degree},
        {"atoms", std::move(atoms)},
        {"lambda", s.certificate.lambda},
        {"mu", s.certificate.mu},
        {"value", s.value},
        {"value_over_one_minus_alpha", s.certificate.mu / (1.0 - s.alpha)},
        {"rounds", s.rounds},
        {"max_dual_violation", s.max_dual_violation},
    };
}

inline StoredSolution solution_from_json(const nlohmann::json& j) {
    try {
        StoredSolution s;
        const auto& p = j.at("problem");
        s.problem = p.at("name").get<std::string>();
        s.alpha = p.at("alpha").get<double>();
        s.y0 = p.at("y0").get<Vector>();
        s.degree = j.at("degree").get<unsigned>();
        for (const auto& a : j.at("atoms")) {
            s.measure.atoms.push_back(
                {{a.at("y").get<Vector>(), a.at("u").get<Vector>()}, a.at("weight").get<double>()});
        }
        s.certificate.lambda = j.at("lambda").get<Vector>();
        s.certificate.mu = j.at("mu").get<double>();
        s.value = j.at("value").get<double>();
        s.rounds = j.at("rounds").get<std::size_t>();
        s.max_dual_violation = j.at("max_dual_violation").get<double>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed solution: ") + e.what());
    }
}

inline void write_solution(const std::string& path, const StoredSolution& s) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << to_json(s).dump(2) << '\n';
}

inline StoredSolution read_solution(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open solution file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("cannot parse '" + path + "': " + e.what());
    }
    return solution_from_json(j);
}

inline std::string format_g6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

/// Header t,y1..ym,u1..ud then one row per step, %.6g.
inline std::string trajectory_csv(const Rollout& r, std::size_t state_dim, std::size_t control_dim) {
    std::string out = "t";
    for (std::size_t k = 1; k <= state_dim; ++k) out += ",y" + std::to_string(k);
    for (std::size_t k = 1; k <= control_dim; ++k) out += ",u" + std::to_string(k);
    out += '\n';
    for (const auto& s : r.steps) {
        out += std::to_string(s.t);
        for (double v : s.state) out += "," + format_g6(v);
        for (double v : s.control) out += "," + format_g6(v);
        out += '\n';
    }
    return out;
}

/// State trajectory as a polyline (first two state coordinates, or y1 against t
/// in one dimension) with atom states drawn as circles sized by weight.
inline std::string trajectory_svg(const Rollout& r, const AtomicMeasure& measure, const Box& box) {
    constexpr double kSize = 400.0, kMargin = 20.0, kMaxRadius = 12.0;
    const bool planar = box.lower.size() >= 2;
    const std::size_t T = std::max<std::size_t>(r.horizon(), 1);
    auto sx = [&](double v) {
        return kMargin + (v - box.lower[0]) / (box.upper[0] - box.lower[0]) * (kSize - 2 * kMargin);
    };
    auto sy = [&](double v, std::size_t dim) {
        return kSize - kMargin - (v - box.lower[dim]) / (box.upper[dim] - box.lower[dim]) * (kSize - 2 * kMargin);
    };
    auto st = [&](std::size_t t) { return kMargin + static_cast<double>(t) / static_cast<double>(T) * (kSize - 2 * kMargin); };
    char buf[160];
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\" viewBox=\"0 0 400 400\">\n";
    out += "<rect x=\"20\" y=\"20\" width=\"360\" height=\"360\" fill=\"none\" stroke=\"#999\"/>\n";
    double wmax = 0.0;
    for (const auto& a : measure.atoms) wmax = std::max(wmax, a.weight);
    for (const auto& a : measure.atoms) {
        const double rad = wmax > 0.0 ? kMaxRadius * a.weight / wmax : 0.0;
        if (planar) {
            std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"%.3f\" fill=\"#c33\" fill-opacity=\"0.5\"/>\n",
                          sx(a.point.state[0]), sy(a.point.state[1], 1), rad);
        } else {
            std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"%.3f\" fill=\"#c33\" fill-opacity=\"0.5\"/>\n",
                          kMargin, sy(a.point.state[0], 0), rad);
        }
        out += buf;
    }
    out += "<polyline fill=\"none\" stroke=\"#236\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
        const auto& y = r.steps[i].state;
        if (planar) {
            std::snprintf(buf, sizeof buf, "%s%.3f,%.3f", i ? " " : "", sx(y[0]), sy(y[1], 1));
        } else {
            std::snprintf(buf, sizeof buf, "%s%.3f,%.3f", i ? " " : "", st(i), sy(y[0], 0));
        }
        out += buf;
    }
    out += "\"/>\n</svg>\n";
    return out;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
}

} // namespace occlp
