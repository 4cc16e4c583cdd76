#pragma once

// The finitely-constrained occupational-measure LP on a discretized graph G:
//
//     minimize   sum_k beta_k g(y_k, u_k)
//     subject to sum_k beta_k c_i(y_k, u_k) = 0   for every non-constant test function,
//                sum_k beta_k = 1,  beta >= 0,
//
// where c_i is the constraint coefficient of test function i. The solution is
// an atomic measure; the row multipliers give the value-function surrogate
// psi = sum_i lambda_i phi_i and the optimal value mu. Cutting-plane rounds
// add the candidate points with the most negative reduced cost until the
// certificate is dual feasible on the candidate set.

#include "occlp/basis.hpp"
#include "occlp/errors.hpp"
#include "occlp/model.hpp"
#include "occlp/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace occlp {

/// State and control resolution (points per axis; one entry broadcasts).
struct GridSpec {
    std::vector<std::size_t> state_points{21};
    std::vector<std::size_t> control_points{3};
};

/// Discretized G: the state grid paired with every admissible grid control.
struct DiscreteGraph {
    PointSet states;
    PointSet controls;
};

inline DiscreteGraph discretize(const DiscreteControlProblem& problem, const GridSpec& spec) {
    return {tensor_grid(problem.state_region, spec.state_points), problem.control_region.grid(spec.control_points)};
}

struct FiniteLP {
    std::size_t rows = 0; // N - 1 test-function rows + the normalization row
    std::vector<StateActionPoint> grid;
    std::vector<double> cost;
    std::vector<double> matrix; // column-major, rows x grid.size()
    std::vector<double> rhs;

    std::size_t columns() const noexcept { return grid.size(); }

    std::span<const double> column(std::size_t k) const { return {matrix.data() + k * rows, rows}; }

    DenseLpView view() const { return {rows, columns(), matrix, cost, rhs}; }

    /// Appends one admissible point; row r < rows-1 holds test function r+1.
    void append(const DiscreteControlProblem& problem, const MonomialBasis& basis, StateActionPoint p) {
        Vector coeff(basis.size());
        constraint_column(basis, problem, p.state, p.control, coeff);
        matrix.insert(matrix.end(), coeff.begin() + 1, coeff.end());
        matrix.push_back(1.0);
        cost.push_back(problem.cost(p.state, p.control));
        grid.push_back(std::move(p));
    }
};

inline FiniteLP empty_lp(const MonomialBasis& basis) {
    FiniteLP lp;
    lp.rows = basis.size();
    lp.rhs.assign(lp.rows, 0.0);
    lp.rhs.back() = 1.0;
    return lp;
}

/// Builds the LP over the given points, skipping inadmissible ones.
inline FiniteLP assemble_points(const DiscreteControlProblem& problem, const MonomialBasis& basis,
                                const std::vector<StateActionPoint>& points) {
    if (basis.dim() != problem.state_dim) throw std::invalid_argument("assemble: basis/problem dimension mismatch");
    FiniteLP lp = empty_lp(basis);
    lp.matrix.reserve(points.size() * lp.rows);
    for (const auto& p : points) {
        if (is_admissible(problem, p.state, p.control)) lp.append(problem, basis, p);
    }
    if (lp.columns() < lp.rows) {
        throw InsufficientGrid("grid yields " + std::to_string(lp.columns()) + " admissible points for " +
                               std::to_string(lp.rows) + " constraint rows");
    }
    return lp;
}

inline FiniteLP assemble(const DiscreteControlProblem& problem, const MonomialBasis& basis, const GridSpec& spec) {
    const auto g = discretize(problem, spec);
    std::vector<StateActionPoint> points;
    points.reserve(g.states.size() * g.controls.size());
    for (std::size_t i = 0; i < g.states.size(); ++i) {
        for (std::size_t j = 0; j < g.controls.size(); ++j) points.push_back({g.states.point(i), g.controls.point(j)});
    }
    return assemble_points(problem, basis, points);
}

struct Atom {
    StateActionPoint point;
    double weight = 0.0;
};

struct AtomicMeasure {
    std::vector<Atom> atoms;

    double total_weight() const {
        double s = 0.0;
        for (const auto& a : atoms) s += a.weight;
        return s;
    }
};

struct DualCertificate {
    Vector lambda; // coefficient of each test function; lambda[0] = 0 by convention
    double mu = 0.0;
};

/// psi(y) = sum_i lambda_i phi_i(y), a callable view over a certificate.
class Surrogate {
public:
    Surrogate(const MonomialBasis& basis, const DualCertificate& certificate)
        : basis_(&basis), lambda_(certificate.lambda) {}
    double operator()(std::span<const double> y) const { return basis_->combine(lambda_, y); }

private:
    const MonomialBasis* basis_;
    Vector lambda_;
};

/// g(y,u) + alpha (psi(f) - psi(y)) + (1 - alpha)(psi(y0) - psi(y)) - mu.
template <class Psi>
double reduced_cost(const DiscreteControlProblem& problem, const Psi& psi, double mu, std::span<const double> y,
                    std::span<const double> u, double psi_y0) {
    const Vector next = problem.apply_dynamics(y, u);
    const double a = problem.discount;
    const double py = psi(y);
    return problem.cost(y, u) + a * (psi(next) - py) + (1.0 - a) * (psi_y0 - py) - mu;
}

struct SolverOptions {
    SimplexOptions simplex;
    double weight_sum_tolerance = 1e-9;
};

struct LpSolution {
    AtomicMeasure measure;
    DualCertificate certificate;
    double value = 0.0; // primal objective
    std::size_t iterations = 0;
    LpBasis basis;
};

/// Optimal basic solution of the finite LP and its dual certificate.
inline LpSolution solve(const FiniteLP& lp, const SolverOptions& options = {}, const LpBasis* warm = nullptr) {
    const LpResult r = solve_simplex(lp.view(), options.simplex, warm);
    switch (r.status) {
    case LpStatus::infeasible: throw LpInfeasible("occupational-measure LP is infeasible on this grid");
    case LpStatus::unbounded: throw LpUnbounded("occupational-measure LP is unbounded (assembly error)");
    case LpStatus::stalled: throw SolverStalled("simplex iteration limit reached");
    case LpStatus::optimal: break;
    }
    LpSolution out;
    out.iterations = r.iterations;
    out.basis = r.basis;
    for (auto v : r.basis) {
        if (v < 0) continue;
        const double w = r.x[static_cast<std::size_t>(v)];
        if (w > 0.0) out.measure.atoms.push_back({lp.grid[static_cast<std::size_t>(v)], w});
    }
    std::sort(out.measure.atoms.begin(), out.measure.atoms.end(),
              [](const Atom& a, const Atom& b) { return a.point < b.point; });
    double value = 0.0;
    for (std::size_t k = 0; k < lp.columns(); ++k) value += lp.cost[k] * r.x[k];
    out.value = value;
    out.certificate.mu = r.duals.back();
    out.certificate.lambda.assign(lp.rows, 0.0);
    for (std::size_t i = 0; i + 1 < lp.rows; ++i) out.certificate.lambda[i + 1] = -r.duals[i];
    return out;
}

/// Drops atoms lighter than threshold and renormalizes; order preserved.
inline AtomicMeasure discard_small_atoms(const AtomicMeasure& measure, double threshold) {
    if (!(threshold >= 0.0 && threshold < 1.0)) throw std::invalid_argument("discard threshold must lie in [0, 1)");
    AtomicMeasure out;
    for (const auto& a : measure.atoms) {
        if (a.weight >= threshold) out.atoms.push_back(a);
    }
    if (out.atoms.empty()) throw EmptyMeasure();
    if (out.atoms.size() == measure.atoms.size()) return out;
    const double total = out.total_weight();
    for (auto& a : out.atoms) a.weight /= total;
    return out;
}

// ---------------------------------------------------------------------------
// Cutting-plane refinement

struct CandidateSpec {
    GridSpec grid{{81}, {9}};
    /// Samples drawn around each current atom (0 disables local sampling).
    std::size_t local_samples = 8;
    /// Per-coordinate radius of the local samples: state coordinates first,
    /// then control coordinates. Empty means one cell of `base`.
    Vector local_radius;
};

struct RefineOutcome {
    bool converged = false;
    double min_reduced_cost = 0.0;
    std::vector<StateActionPoint> added;
};

namespace detail {

// Radical inverse in base b; deterministic low-discrepancy offsets.
inline double radical_inverse(std::size_t i, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

inline constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

struct Violation {
    double value;
    StateActionPoint point;
    bool operator<(const Violation& o) const { return std::tie(value, point) < std::tie(o.value, o.point); }
};

} // namespace detail

/// Local candidates around the atoms: Halton offsets in [-r, r] over (y, u),
/// clamped to the state and control boxes.
inline std::vector<StateActionPoint> local_candidates(const DiscreteControlProblem& problem,
                                                      const AtomicMeasure& measure, std::size_t samples,
                                                      std::span<const double> radius) {
    std::vector<StateActionPoint> out;
    const std::size_t m = problem.state_dim, d = problem.control_dim;
    if (samples == 0 || radius.size() != m + d) return out;
    const auto& ubox = problem.control_region.bounds();
    for (const auto& atom : measure.atoms) {
        for (std::size_t s = 1; s <= samples; ++s) {
            StateActionPoint p = atom.point;
            for (std::size_t k = 0; k < m + d; ++k) {
                const unsigned base = detail::kPrimes[k % std::size(detail::kPrimes)];
                const double off = (2.0 * detail::radical_inverse(s, base) - 1.0) * radius[k];
                if (k < m) {
                    p.state[k] += off;
                } else if (ubox) {
                    p.control[k - m] += off;
                }
            }
            p.state = problem.state_region.clamp(p.state);
            if (ubox) p.control = ubox->clamp(p.control);
            if (is_admissible(problem, p.state, p.control)) out.push_back(std::move(p));
        }
    }
    return out;
}

/// Scans the candidate set for reduced-cost violations. When the minimum is
/// below -tol, appends up to `batch` most violating points to lp.
inline RefineOutcome refine(const DiscreteControlProblem& problem, const MonomialBasis& basis, FiniteLP& lp,
                            const DualCertificate& certificate, const DiscreteGraph& candidates,
                            const std::vector<StateActionPoint>& extra, double tol, std::size_t batch = 8) {
    RefineOutcome out;
    if (std::isinf(tol)) {
        out.converged = true;
        return out;
    }
    const Surrogate psi(basis, certificate);
    const double a = problem.discount;
    const double psi_y0 = psi(problem.initial_state);
    const double mu = certificate.mu;

    std::set<StateActionPoint> present(lp.grid.begin(), lp.grid.end());
    std::set<detail::Violation> worst; // at most `batch` entries, lexicographic tie-break
    double min_rc = std::numeric_limits<double>::infinity();

    auto consider = [&](double rc, std::span<const double> y, std::span<const double> u) {
        min_rc = std::min(min_rc, rc);
        if (!(rc < -tol) || batch == 0) return;
        if (worst.size() == batch && rc > std::prev(worst.end())->value) return;
        detail::Violation v{rc, {Vector(y.begin(), y.end()), Vector(u.begin(), u.end())}};
        if (present.contains(v.point)) return;
        worst.insert(std::move(v));
        if (worst.size() > batch) worst.erase(std::prev(worst.end()));
    };

    Vector next(problem.state_dim);
    for (std::size_t i = 0; i < candidates.states.size(); ++i) {
        const auto y = candidates.states[i];
        const double py = psi(y);
        const double base_term = (1.0 - a) * (psi_y0 - py) - a * py - mu;
        for (std::size_t j = 0; j < candidates.controls.size(); ++j) {
            const auto u = candidates.controls[j];
            if (!problem.control_region.contains(y, u)) continue;
            problem.dynamics(y, u, next);
            if (!problem.state_region.contains(next)) continue;
            consider(problem.cost(y, u) + a * psi(next) + base_term, y, u);
        }
    }
    for (const auto& p : extra) {
        consider(reduced_cost(problem, psi, mu, p.state, p.control, psi_y0), p.state, p.control);
    }

    out.min_reduced_cost = min_rc;
    if (worst.empty()) {
        out.converged = true;
        return out;
    }
    for (const auto& v : worst) {
        lp.append(problem, basis, v.point);
        out.added.push_back(v.point);
    }
    return out;
}

struct RefineOptions {
    double tol = 1e-6;
    std::size_t max_rounds = 500;
    std::size_t batch = 8;
    SolverOptions solver;
};

struct RefinedSolution {
    AtomicMeasure measure;
    DualCertificate certificate;
    double value = 0.0;
    std::size_t rounds = 0;
    double max_dual_violation = 0.0;
    std::vector<double> value_history; // primal value after each solve
    FiniteLP lp;
};

class NonConverged : public Error {
public:
    explicit NonConverged(RefinedSolution best)
        : Error("cutting-plane refinement hit the round limit before dual feasibility"), best_so_far(std::move(best)) {}
    RefinedSolution best_so_far;
};

/// Alternates solve and refine until the certificate is dual feasible on the
/// candidate set within tol, or max_rounds solves were made.
inline RefinedSolution solve_refined(const DiscreteControlProblem& problem, const MonomialBasis& basis,
                                     const GridSpec& grid, const CandidateSpec& candidates,
                                     const RefineOptions& options = {}) {
    if (options.max_rounds == 0) throw std::invalid_argument("solve_refined: max_rounds must be at least 1");
    RefinedSolution result;
    result.lp = assemble(problem, basis, grid);
    const DiscreteGraph cand = discretize(problem, candidates.grid);

    Vector radius = candidates.local_radius;
    if (radius.empty() && candidates.local_samples > 0) {
        const auto sp = expand_counts(grid.state_points, problem.state_dim);
        for (std::size_t k = 0; k < problem.state_dim; ++k) {
            radius.push_back(problem.state_region.width(k) / static_cast<double>(std::max<std::size_t>(sp[k], 2) - 1));
        }
        const auto& ubox = problem.control_region.bounds();
        const auto cp = expand_counts(grid.control_points, problem.control_dim);
        for (std::size_t k = 0; k < problem.control_dim; ++k) {
            radius.push_back(ubox ? ubox->width(k) / static_cast<double>(std::max<std::size_t>(cp[k], 2) - 1) : 0.0);
        }
    }

    LpBasis warm;
    while (true) {
        LpSolution sol = solve(result.lp, options.solver, warm.empty() ? nullptr : &warm);
        warm = sol.basis;
        ++result.rounds;
        result.value_history.push_back(sol.value);
        result.measure = std::move(sol.measure);
        result.certificate = std::move(sol.certificate);
        result.value = sol.value;

        const auto extra = local_candidates(problem, result.measure, candidates.local_samples, radius);
        const RefineOutcome r =
            refine(problem, basis, result.lp, result.certificate, cand, extra, options.tol, options.batch);
        result.max_dual_violation = std::isfinite(r.min_reduced_cost) ? std::max(0.0, -r.min_reduced_cost) : 0.0;
        if (r.converged) return result;
        if (result.rounds >= options.max_rounds) throw NonConverged(std::move(result));
    }
}

} // namespace occlp
