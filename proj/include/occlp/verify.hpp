#pragma once

// Independent checks for LP-derived controls and certificates: a value
// iteration oracle on a box grid, discounted occupational measures of
// rollouts, constraint residuals, and the optimality conditions that any
// maximizer of the max-min problem must satisfy.

#include "occlp/basis.hpp"
#include "occlp/errors.hpp"
#include "occlp/model.hpp"
#include "occlp/silp.hpp"
#include "occlp/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace occlp {

enum class Interpolation { nearest, multilinear };

/// Values on a tensor box grid with nearest or multilinear interpolation.
/// Queries outside the box are clamped onto it.
class ValueFunctionGrid {
public:
    ValueFunctionGrid() = default;
    ValueFunctionGrid(std::vector<Vector> axes, Vector values, Interpolation mode)
        : axes_(std::move(axes)), values_(std::move(values)), mode_(mode) {
        strides_.assign(axes_.size(), 1);
        for (std::size_t k = axes_.size(); k-- > 1;) strides_[k - 1] = strides_[k] * axes_[k].size();
    }

    const std::vector<Vector>& axes() const noexcept { return axes_; }
    const Vector& values() const noexcept { return values_; }
    Vector& values() noexcept { return values_; }
    Interpolation mode() const noexcept { return mode_; }
    std::size_t size() const noexcept { return values_.size(); }
    PointSet nodes() const { return tensor_product(axes_); }

    /// Grid nodes and weights whose weighted sum interpolates at y.
    void stencil(std::span<const double> y, std::vector<std::uint32_t>& index, std::vector<double>& weight) const {
        index.clear();
        weight.clear();
        const std::size_t m = axes_.size();
        std::size_t lo[16];
        double frac[16];
        for (std::size_t k = 0; k < m; ++k) {
            const Vector& a = axes_[k];
            if (a.size() == 1) {
                lo[k] = 0;
                frac[k] = 0.0;
                continue;
            }
            const double x = std::clamp(y[k], a.front(), a.back());
            std::size_t j = static_cast<std::size_t>(std::upper_bound(a.begin(), a.end(), x) - a.begin());
            j = std::clamp<std::size_t>(j, 1, a.size() - 1) - 1;
            lo[k] = j;
            frac[k] = (x - a[j]) / (a[j + 1] - a[j]);
        }
        if (mode_ == Interpolation::nearest) {
            std::size_t flat = 0;
            for (std::size_t k = 0; k < m; ++k) flat += (lo[k] + (frac[k] > 0.5 ? 1 : 0)) * strides_[k];
            index.push_back(static_cast<std::uint32_t>(flat));
            weight.push_back(1.0);
            return;
        }
        for (std::size_t corner = 0; corner < (std::size_t{1} << m); ++corner) {
            double w = 1.0;
            std::size_t flat = 0;
            for (std::size_t k = 0; k < m; ++k) {
                const bool up = (corner >> k) & 1u;
                if (up && axes_[k].size() == 1) {
                    w = 0.0;
                    break;
                }
                w *= up ? frac[k] : 1.0 - frac[k];
                flat += (lo[k] + (up ? 1 : 0)) * strides_[k];
            }
            if (w == 0.0) continue;
            index.push_back(static_cast<std::uint32_t>(flat));
            weight.push_back(w);
        }
    }

    double operator()(std::span<const double> y) const {
        std::vector<std::uint32_t> idx;
        std::vector<double> w;
        stencil(y, idx, w);
        double v = 0.0;
        for (std::size_t i = 0; i < idx.size(); ++i) v += w[i] * values_[idx[i]];
        return v;
    }

private:
    std::vector<Vector> axes_;
    Vector values_;
    Interpolation mode_ = Interpolation::multilinear;
    std::vector<std::size_t> strides_;
};

struct ValueIterationResult {
    ValueFunctionGrid value;
    std::size_t iterations = 0;
    std::vector<double> sup_differences; // ||V_{k+1} - V_k|| per sweep
};

class ValueIterationNotConverged : public Error {
public:
    explicit ValueIterationNotConverged(ValueIterationResult last)
        : Error("value iteration hit the sweep limit"), last_iterate(std::move(last)) {}
    ValueIterationResult last_iterate;
};

/// Synchronous (Jacobi) sweeps of V(y) = min_u g(y,u) + alpha V(f(y,u)) on a
/// tensor state grid. Stops once the sweep difference is at most
/// tol (1 - alpha) / alpha, so the fixed-point error is at most tol.
inline ValueIterationResult value_iteration(const DiscreteControlProblem& problem,
                                            const std::vector<std::size_t>& state_points,
                                            const PointSet& control_grid, double tol, std::size_t max_iter,
                                            Interpolation mode = Interpolation::multilinear) {
    if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
    const auto counts = expand_counts(state_points, problem.state_dim);
    std::vector<Vector> axes;
    for (std::size_t k = 0; k < problem.state_dim; ++k) {
        axes.push_back(linspace(problem.state_region.lower[k], problem.state_region.upper[k], counts[k]));
    }
    ValueFunctionGrid grid(axes, Vector(tensor_product(axes).size(), 0.0), mode);
    const PointSet nodes = grid.nodes();
    const double a = problem.discount;

    // Per node: [begin, end) into the pair arrays; per pair: cost and stencil range.
    std::vector<std::size_t> node_begin{0};
    std::vector<double> pair_cost;
    std::vector<std::size_t> pair_begin{0};
    std::vector<std::uint32_t> st_index;
    std::vector<double> st_weight;
    std::vector<std::uint32_t> idx;
    std::vector<double> w;
    Vector next(problem.state_dim);
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        const auto y = nodes[n];
        bool any = false;
        for (std::size_t j = 0; j < control_grid.size(); ++j) {
            const auto u = control_grid[j];
            if (!problem.control_region.contains(y, u)) continue;
            problem.dynamics(y, u, next);
            if (!problem.state_region.contains(next)) continue;
            any = true;
            pair_cost.push_back(problem.cost(y, u));
            grid.stencil(next, idx, w);
            st_index.insert(st_index.end(), idx.begin(), idx.end());
            st_weight.insert(st_weight.end(), w.begin(), w.end());
            pair_begin.push_back(st_index.size());
        }
        if (!any) throw AssumptionIViolation(nodes.point(n));
        node_begin.push_back(pair_cost.size());
    }

    ValueIterationResult result;
    Vector current(nodes.size(), 0.0), updated(nodes.size());
    const double stop = tol * (1.0 - a) / a;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        double diff = 0.0;
        for (std::size_t n = 0; n < nodes.size(); ++n) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t p = node_begin[n]; p < node_begin[n + 1]; ++p) {
                double ev = 0.0;
                for (std::size_t s = pair_begin[p]; s < pair_begin[p + 1]; ++s) ev += st_weight[s] * current[st_index[s]];
                best = std::min(best, pair_cost[p] + a * ev);
            }
            updated[n] = best;
            diff = std::max(diff, std::abs(best - current[n]));
        }
        current.swap(updated);
        result.iterations = it;
        result.sup_differences.push_back(diff);
        if (diff <= stop) {
            grid.values() = current;
            result.value = std::move(grid);
            return result;
        }
    }
    grid.values() = current;
    result.value = std::move(grid);
    throw ValueIterationNotConverged(std::move(result));
}

/// min over admissible grid controls of g(y,u) + alpha (psi(f(y,u)) - psi(y)).
template <class Psi>
double hamiltonian_min(const DiscreteControlProblem& problem, const Psi& psi, std::span<const double> y,
                       const PointSet& control_grid) {
    if (!problem.state_region.contains(y)) throw std::invalid_argument("hamiltonian_min: state outside Y");
    const double a = problem.discount;
    const double py = psi(y);
    Vector next(problem.state_dim);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < control_grid.size(); ++j) {
        const auto u = control_grid[j];
        if (!problem.control_region.contains(y, u)) continue;
        problem.dynamics(y, u, next);
        if (!problem.state_region.contains(next)) continue;
        best = std::min(best, problem.cost(y, u) + a * (psi(std::span<const double>(next)) - py));
    }
    if (!std::isfinite(best)) throw AssumptionIViolation(Vector(y.begin(), y.end()));
    return best;
}

// ---------------------------------------------------------------------------
// Occupational measures and residuals

struct OccupationalMeasureApprox {
    std::vector<Atom> atoms;
    std::size_t horizon = 0;

    double total_weight() const {
        double s = 0.0;
        for (const auto& a : atoms) s += a.weight;
        return s;
    }
};

/// Atom (y(t), u(t)) with weight (1 - alpha) alpha^t; bitwise-equal pairs merge
/// into their first visit.
inline OccupationalMeasureApprox occupational_measure(const Rollout& r, double alpha) {
    if (r.steps.empty()) throw std::invalid_argument("occupational_measure: empty rollout");
    OccupationalMeasureApprox out;
    out.horizon = r.horizon();
    std::map<StateActionPoint, std::size_t> where;
    double w = 1.0 - alpha;
    for (const auto& s : r.steps) {
        StateActionPoint p{s.state, s.control};
        auto [it, inserted] = where.try_emplace(p, out.atoms.size());
        if (inserted) {
            out.atoms.push_back({std::move(p), w});
        } else {
            out.atoms[it->second].weight += w;
        }
        w *= alpha;
    }
    return out;
}

/// sum over atoms of weight * constraint coefficient, per test function.
template <class Measure>
Vector measure_residuals(const Measure& measure, const MonomialBasis& basis, const DiscreteControlProblem& problem) {
    Vector res(basis.size(), 0.0), column(basis.size());
    for (const auto& a : measure.atoms) {
        constraint_column(basis, problem, a.point.state, a.point.control, column);
        for (std::size_t i = 0; i < res.size(); ++i) res[i] += a.weight * column[i];
    }
    return res;
}

/// 2 alpha^{T+1} max_i max_visited |c_i|: residual bound for a T-step trajectory measure.
inline double trajectory_residual_bound(const OccupationalMeasureApprox& measure, const MonomialBasis& basis,
                                        const DiscreteControlProblem& problem) {
    double cmax = 0.0;
    Vector column(basis.size());
    for (const auto& a : measure.atoms) {
        constraint_column(basis, problem, a.point.state, a.point.control, column);
        for (double c : column) cmax = std::max(cmax, std::abs(c));
    }
    return 2.0 * std::pow(problem.discount, static_cast<double>(measure.horizon + 1)) * cmax;
}

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// ---------------------------------------------------------------------------
// Optimality conditions

struct OptimalityReport {
    std::vector<double> stationarity;   // (a) per step, >= 0
    double value_agreement = 0.0;       // (b) stdev_t of psi(y(t)) - V(y(t))
    std::vector<double> hamiltonian;    // (c) per step
    double kappa_tol = 0.0;

    double max_stationarity() const { return max_abs(stationarity); }
    double max_hamiltonian() const { return max_abs(hamiltonian); }
    bool passed() const {
        return max_stationarity() <= kappa_tol && value_agreement <= kappa_tol && max_hamiltonian() <= kappa_tol;
    }
};

/// Residuals of the argmin, value-agreement and Hamiltonian conditions along a
/// rollout. The stationarity minimum runs over state_grid x control_grid plus
/// every rollout state paired with the grid controls and its own control.
template <class Psi>
OptimalityReport check_optimality_conditions(const DiscreteControlProblem& problem, const Rollout& r, const Psi& psi,
                                             const ValueFunctionGrid& value, const PointSet& state_grid,
                                             const PointSet& control_grid, double kappa_tol) {
    const double a = problem.discount;
    Vector next(problem.state_dim);
    auto expr = [&](std::span<const double> y, std::span<const double> u) {
        problem.dynamics(y, u, next);
        return problem.cost(y, u) + a * psi(std::span<const double>(next)) - psi(y);
    };
    // min_u expr(y, u) over the grid controls plus `extra`
    auto min_at = [&](std::span<const double> y, std::span<const double> extra) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < control_grid.size(); ++j) {
            if (!is_admissible(problem, y, control_grid[j])) continue;
            best = std::min(best, expr(y, control_grid[j]));
        }
        if (!extra.empty() && is_admissible(problem, y, extra)) best = std::min(best, expr(y, extra));
        return best;
    };

    double global_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < state_grid.size(); ++i) global_min = std::min(global_min, min_at(state_grid[i], {}));
    std::vector<double> step_min;
    for (const auto& s : r.steps) {
        step_min.push_back(min_at(s.state, s.control));
        global_min = std::min(global_min, step_min.back());
    }

    OptimalityReport rep;
    rep.kappa_tol = kappa_tol;
    const double v0 = value(problem.initial_state);
    const double psi0 = psi(std::span<const double>(problem.initial_state));
    Vector diffs;
    for (std::size_t t = 0; t < r.steps.size(); ++t) {
        const auto& s = r.steps[t];
        rep.stationarity.push_back(expr(s.state, s.control) - global_min);
        diffs.push_back(psi(std::span<const double>(s.state)) - value(s.state));
        // H_psi(y) - (1 - alpha) psi(y) == min_u expr(y, u)
        rep.hamiltonian.push_back(std::abs(step_min[t] - (1.0 - a) * (v0 - psi0)));
    }
    const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(diffs.size());
    double var = 0.0;
    for (double d : diffs) var += (d - mean) * (d - mean);
    rep.value_agreement = std::sqrt(var / static_cast<double>(diffs.size()));
    return rep;
}

/// max over value-grid nodes of psi(y) - V(y) - (psi(y0) - V(y0)); a true
/// maximizer keeps this at or below zero.
template <class Psi>
double check_psi_bound(const Psi& psi, const ValueFunctionGrid& value, const DiscreteControlProblem& problem) {
    const double shift = psi(std::span<const double>(problem.initial_state)) - value(problem.initial_state);
    const PointSet nodes = value.nodes();
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        worst = std::max(worst, psi(nodes[n]) - value.values()[n] - shift);
    }
    return worst;
}

/// With psi~ = psi - psi(y0) + value_at_y0, returns
/// max over state_grid of -(H_{psi~}(y) - (1 - alpha) psi~(y)).
template <class Psi>
double check_shifted_inequality(const Psi& psi, double value_at_y0, const DiscreteControlProblem& problem,
                                const PointSet& state_grid, const PointSet& control_grid) {
    const double shift = value_at_y0 - psi(std::span<const double>(problem.initial_state));
    auto shifted = [&](std::span<const double> y) { return psi(y) + shift; };
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < state_grid.size(); ++i) {
        const auto y = state_grid[i];
        const double lhs = hamiltonian_min(problem, shifted, y, control_grid) - (1.0 - problem.discount) * shifted(y);
        worst = std::max(worst, -lhs);
    }
    return worst;
}

/// Empirical estimate of the finite-basis deficit mu* - mu*_N.
struct KappaEstimate {
    double increment = 0.0;   // mu_N(degree + 1) - mu_N(degree)
    double oracle_gap = 0.0;  // (1 - alpha) V_oracle(y0) - mu_N(degree)
    double estimate() const { return std::max(0.0, increment) + std::max(0.0, oracle_gap); }
};

// ---------------------------------------------------------------------------
// Report

struct CheckResult {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct VerificationReport {
    std::vector<CheckResult> checks;
    std::vector<std::string> notes;

    void add(std::string name, double value, double threshold) {
        value += 0.0; // no "-0" in reports
        checks.push_back({std::move(name), value, threshold, value <= threshold});
    }
    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
    }

    std::string text() const {
        std::string out;
        char line[256];
        for (const auto& c : checks) {
            std::snprintf(line, sizeof line, "%-4s %-34s value=%.6e threshold=%.6e\n", c.pass ? "PASS" : "FAIL",
                          c.name.c_str(), c.value, c.threshold);
            out += line;
        }
        for (const auto& n : notes) out += "NOTE " + n + "\n";
        out += passed() ? "RESULT PASS\n" : "RESULT FAIL\n";
        return out;
    }
};

} // namespace occlp
