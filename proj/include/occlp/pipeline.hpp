#pragma once

// solve -> synthesize -> rollout -> verify, as driven by a RunConfig.

#include "occlp/basis.hpp"
#include "occlp/config.hpp"
#include "occlp/io.hpp"
#include "occlp/model.hpp"
#include "occlp/silp.hpp"
#include "occlp/synthesis.hpp"
#include "occlp/verify.hpp"

#include <cstdio>
#include <string>

namespace occlp {

inline DiscreteControlProblem problem_of(const StoredSolution& s) {
    return builtin_problem(s.problem, {s.alpha, s.y0});
}

inline StoredSolution run_solve(const RunConfig& cfg) {
    const DiscreteControlProblem problem = cfg.make_problem();
    const MonomialBasis basis(problem.state_dim, cfg.degree);
    const RefinedSolution sol = solve_refined(problem, basis, cfg.grid(), cfg.candidates(), cfg.refine_options());
    return make_stored(problem, cfg.degree, sol);
}

inline std::string solve_summary(const StoredSolution& s, double discard) {
    char buf[512];
    const double scaled = s.certificate.mu / (1.0 - s.alpha);
    std::size_t kept = 0;
    for (const auto& a : s.measure.atoms) kept += a.weight >= discard ? 1 : 0;
    std::snprintf(buf, sizeof buf,
                  "problem            %s\n"
                  "alpha              %.6g\n"
                  "degree             %u\n"
                  "rounds             %zu\n"
                  "value              %.9f\n"
                  "mu                 %.9f\n"
                  "mu/(1-alpha)       %.6f\n"
                  "max dual violation %.3e\n"
                  "atoms              %zu\n"
                  "atoms >= %-9.3g %zu\n",
                  s.problem.c_str(), s.alpha, s.degree, s.rounds, s.value, s.certificate.mu, scaled,
                  s.max_dual_violation, s.measure.atoms.size(), discard, kept);
    return buf;
}

inline RolloutOptions rollout_options(const DiscreteControlProblem& problem, const RunConfig& cfg) {
    RolloutOptions o;
    o.epsilon = cfg.epsilon;
    o.steps = cfg.steps;
    const DiscreteGraph g = discretize(problem, cfg.grid());
    o.cost_bound = max_abs_cost(problem, g.states, g.controls);
    return o;
}

/// Measure behind the heuristic policy: LP atoms after the discard threshold.
inline AtomicMeasure policy_measure(const StoredSolution& s, const RunConfig& cfg) {
    return cfg.discard > 0.0 ? discard_small_atoms(s.measure, cfg.discard) : s.measure;
}

inline Policy make_policy(const DiscreteControlProblem& problem, const MonomialBasis& basis, const StoredSolution& s,
                          const RunConfig& cfg, const std::string& which) {
    if (which == "heuristic") return make_heuristic_policy(policy_measure(s, cfg));
    if (which != "minimizer") throw ConfigError("unknown policy '" + which + "'");
    MinimizerOptions mo;
    const PointSet grid = problem.control_region.grid(cfg.policy_grid);
    if (cfg.polish) {
        if (const auto& box = problem.control_region.bounds()) {
            const auto counts = expand_counts(cfg.policy_grid, problem.control_dim);
            for (std::size_t k = 0; k < problem.control_dim; ++k) {
                mo.cell.push_back(box->width(k) / static_cast<double>(counts[k] - 1));
            }
            mo.polish = true;
        }
    }
    return make_minimizer_policy(problem, basis, s.certificate, grid, mo);
}

inline Rollout run_rollout(const DiscreteControlProblem& problem, const StoredSolution& s, const RunConfig& cfg,
                           const std::string& which) {
    const MonomialBasis basis(problem.state_dim, s.degree);
    return rollout(problem, make_policy(problem, basis, s, cfg, which), rollout_options(problem, cfg));
}

inline std::string rollout_footer(const Rollout& r, const StoredSolution& s, const std::string& which) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "# policy=%s\n# value=%.6f\n# gap=%.6f\n# truncation_bound=%.3e\n", which.c_str(),
                  r.truncated_value, gap_certificate(r, s.certificate), r.truncation_bound);
    return buf;
}

/// Every check of the verify stage. Rollouts are re-simulated from the stored
/// solution so the checks see full-precision trajectories.
inline VerificationReport run_verify(const StoredSolution& s, const RunConfig& cfg) {
    const DiscreteControlProblem problem = problem_of(s);
    const MonomialBasis basis(problem.state_dim, s.degree);
    const Surrogate psi(basis, s.certificate);
    const double a = problem.discount;
    VerificationReport rep;

    if (s.certificate.lambda.size() != basis.size()) throw ConfigError("lambda length does not match the basis");

    rep.add("strong duality |value - mu|", std::abs(s.value - s.certificate.mu), 1e-6);
    rep.add("support size - (N + 1)", static_cast<double>(s.measure.atoms.size()) - static_cast<double>(basis.size() + 1),
            0.0);
    rep.add("LP measure residuals", max_abs(measure_residuals(s.measure, basis, problem)), 1e-9);
    rep.add("dual violation on candidates", s.max_dual_violation, cfg.tol);

    const Rollout minimizer = run_rollout(problem, s, cfg, "minimizer");
    const Rollout heuristic = run_rollout(problem, s, cfg, "heuristic");
    rep.add("gap certificate (minimizer)", gap_certificate(minimizer, s.certificate), cfg.gap_tol);
    rep.add("gap certificate (heuristic)", gap_certificate(heuristic, s.certificate), cfg.gap_tol);

    const OccupationalMeasureApprox occ = occupational_measure(minimizer, a);
    rep.add("trajectory measure residuals", max_abs(measure_residuals(occ, basis, problem)),
            trajectory_residual_bound(occ, basis, problem) + 1e-12);

    const PointSet vi_controls = problem.control_region.grid(cfg.vi_control);
    const ValueIterationResult vi = value_iteration(problem, cfg.vi_state, vi_controls, cfg.vi_tol, cfg.vi_max_iter);
    const double v0 = vi.value(problem.initial_state);
    const double scaled = s.certificate.mu / (1.0 - a);
    rep.add("oracle bracket |V(y0) - mu/(1-alpha)|", std::abs(v0 - scaled), cfg.oracle_tol);

    const PointSet states = tensor_grid(problem.state_region, cfg.state_grid);
    const OptimalityReport opt =
        check_optimality_conditions(problem, minimizer, psi, vi.value, states, vi_controls, cfg.kappa_tol);
    rep.add("optimality (a) stationarity", opt.max_stationarity(), cfg.kappa_tol);
    rep.add("optimality (b) value agreement", opt.value_agreement, cfg.kappa_tol);
    rep.add("optimality (c) Hamiltonian identity", opt.max_hamiltonian(), cfg.kappa_tol);
    rep.add("psi bound", check_psi_bound(psi, vi.value, problem), cfg.psi_slack);
    rep.add("shifted inequality", check_shifted_inequality(psi, scaled, problem, states, vi_controls),
            cfg.shifted_slack);

    KappaEstimate kappa;
    kappa.oracle_gap = (1.0 - a) * v0 - s.certificate.mu;
    char buf[256];
    if (cfg.kappa_increment) {
        RunConfig next = cfg;
        next.problem = s.problem;
        next.alpha = s.alpha;
        next.y0 = s.y0;
        next.degree = s.degree + 1;
        const StoredSolution up = run_solve(next);
        kappa.increment = up.certificate.mu - s.certificate.mu;
        std::snprintf(buf, sizeof buf, "kappa_N estimate %.6e (increment %.6e, oracle gap %.6e)", kappa.estimate(),
                      kappa.increment, kappa.oracle_gap);
    } else {
        std::snprintf(buf, sizeof buf, "kappa_N estimate %.6e (oracle gap only; increment not computed)",
                      kappa.estimate());
    }
    rep.notes.emplace_back(buf);
    std::snprintf(buf, sizeof buf, "V_oracle(y0) %.6f  mu/(1-alpha) %.6f  V_minimizer %.6f  V_heuristic %.6f", v0,
                  scaled, minimizer.truncated_value, heuristic.truncated_value);
    rep.notes.emplace_back(buf);
    std::snprintf(buf, sizeof buf, "value iteration sweeps %zu", vi.iterations);
    rep.notes.emplace_back(buf);
    return rep;
}

} // namespace occlp
