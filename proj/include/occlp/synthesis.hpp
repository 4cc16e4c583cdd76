#pragma once

// Feedback controls built from an LP solution and the closed-loop rollouts
// used to score them.
//
//  * minimizer_control: argmin_u g(y,u) + alpha psi(f(y,u)) over an admissible
//    control grid, psi being the dual surrogate.
//  * heuristic_control: the control of the atom whose state is nearest to y
//    (ties go to the heavier atom).

#include "occlp/basis.hpp"
#include "occlp/errors.hpp"
#include "occlp/model.hpp"
#include "occlp/silp.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace occlp {

struct MinimizerOptions {
    /// Coordinatewise golden-section search inside the winning grid cell.
    bool polish = false;
    /// Half-width of the polishing interval per control axis (typically one grid cell).
    Vector cell;
    int sweeps = 2;
    int golden_iterations = 40;
};

namespace detail {

template <class Psi>
double minimizer_objective(const DiscreteControlProblem& problem, const Psi& psi, std::span<const double> y,
                           std::span<const double> u, std::span<double> next) {
    problem.dynamics(y, u, next);
    return problem.cost(y, u) + problem.discount * psi(std::span<const double>(next.data(), next.size()));
}

template <class Psi>
void golden_polish(const DiscreteControlProblem& problem, const Psi& psi, std::span<const double> y, Vector& u,
                   double& best, const MinimizerOptions& opt) {
    const auto& ubox = problem.control_region.bounds();
    if (!ubox || opt.cell.size() != u.size()) return;
    constexpr double kInvPhi = 0.6180339887498949;
    Vector next(problem.state_dim);
    auto eval = [&](const Vector& c) {
        if (!is_admissible(problem, y, c)) return std::numeric_limits<double>::infinity();
        return minimizer_objective(problem, psi, y, c, next);
    };
    for (int sweep = 0; sweep < opt.sweeps; ++sweep) {
        for (std::size_t k = 0; k < u.size(); ++k) {
            double lo = std::max(ubox->lower[k], u[k] - opt.cell[k]);
            double hi = std::min(ubox->upper[k], u[k] + opt.cell[k]);
            Vector c = u;
            auto at = [&](double v) {
                c[k] = v;
                return eval(c);
            };
            double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
            double f1 = at(x1), f2 = at(x2);
            for (int it = 0; it < opt.golden_iterations; ++it) {
                if (f1 <= f2) {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - kInvPhi * (hi - lo);
                    f1 = at(x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + kInvPhi * (hi - lo);
                    f2 = at(x2);
                }
            }
            const double xm = f1 <= f2 ? x1 : x2;
            const double fm = std::min(f1, f2);
            if (fm < best) {
                best = fm;
                u[k] = xm;
            }
        }
    }
}

} // namespace detail

/// argmin over the admissible grid controls of g(y,u) + alpha psi(f(y,u));
/// exact ties resolve to the lexicographically smallest control.
template <class Psi>
Vector minimizer_control(const DiscreteControlProblem& problem, const Psi& psi, std::span<const double> y,
                         const PointSet& control_grid, const MinimizerOptions& options = {}) {
    if (!problem.state_region.contains(y)) throw std::invalid_argument("minimizer_control: state outside Y");
    Vector next(problem.state_dim);
    double best = std::numeric_limits<double>::infinity();
    std::optional<std::size_t> arg;
    for (std::size_t j = 0; j < control_grid.size(); ++j) {
        const auto u = control_grid[j];
        if (!problem.control_region.contains(y, u)) continue;
        problem.dynamics(y, u, next);
        if (!problem.state_region.contains(next)) continue;
        const double v = problem.cost(y, u) + problem.discount * psi(std::span<const double>(next));
        if (v < best || (v == best && arg && std::lexicographical_compare(u.begin(), u.end(), control_grid[*arg].begin(),
                                                                           control_grid[*arg].end()))) {
            best = v;
            arg = j;
        }
    }
    if (!arg) throw AssumptionIViolation(Vector(y.begin(), y.end()));
    Vector u = control_grid.point(*arg);
    if (options.polish) detail::golden_polish(problem, psi, y, u, best, options);
    return u;
}

inline Vector minimizer_control(const DiscreteControlProblem& problem, const MonomialBasis& basis,
                                const DualCertificate& certificate, std::span<const double> y,
                                const PointSet& control_grid, const MinimizerOptions& options = {}) {
    return minimizer_control(problem, Surrogate(basis, certificate), y, control_grid, options);
}

/// Control of the atom nearest to y in the state coordinates.
inline Vector heuristic_control(const AtomicMeasure& measure, std::span<const double> y) {
    constexpr double kTie = 1e-12;
    if (measure.atoms.empty()) throw EmptyMeasure();
    auto dist = [&](const Atom& a) {
        double s = 0.0;
        for (std::size_t k = 0; k < y.size(); ++k) {
            const double d = a.point.state[k] - y[k];
            s += d * d;
        }
        return std::sqrt(s);
    };
    const Atom* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& a : measure.atoms) {
        const double d = dist(a);
        bool take = false;
        if (!best || d < best_d - kTie) {
            take = true;
        } else if (d <= best_d + kTie) {
            if (a.weight != best->weight) {
                take = a.weight > best->weight;
            } else {
                take = a.point < best->point;
            }
        }
        if (take) {
            best = &a;
            best_d = std::min(best_d, d);
        }
    }
    // Assumption II, checked lazily for the selected state only.
    for (const auto& a : measure.atoms) {
        bool same_state = true;
        for (std::size_t k = 0; k < y.size() && same_state; ++k) {
            same_state = std::abs(a.point.state[k] - best->point.state[k]) <= kTie;
        }
        if (!same_state) continue;
        for (std::size_t k = 0; k < a.point.control.size(); ++k) {
            if (std::abs(a.point.control[k] - best->point.control[k]) > kTie) {
                throw AssumptionIIViolation(best->point.state);
            }
        }
    }
    return best->point.control;
}

/// Global Assumption II check over the whole measure.
inline bool satisfies_assumption_two(const AtomicMeasure& measure, double tol = 1e-12) {
    for (std::size_t i = 0; i < measure.atoms.size(); ++i) {
        for (std::size_t j = i + 1; j < measure.atoms.size(); ++j) {
            const auto& a = measure.atoms[i].point;
            const auto& b = measure.atoms[j].point;
            bool same_state = true;
            for (std::size_t k = 0; k < a.state.size() && same_state; ++k) {
                same_state = std::abs(a.state[k] - b.state[k]) <= tol;
            }
            if (!same_state) continue;
            for (std::size_t k = 0; k < a.control.size(); ++k) {
                if (std::abs(a.control[k] - b.control[k]) > tol) return false;
            }
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Rollouts

using Policy = std::function<Vector(std::span<const double> y)>;

struct RolloutStep {
    std::size_t t = 0;
    Vector state;
    Vector control;
};

struct Rollout {
    std::vector<RolloutStep> steps; // t = 0..T
    double discount = 0.0;
    double truncated_value = 0.0;   // sum_{t<=T} alpha^t g(y(t), u(t))
    double truncation_bound = 0.0;  // alpha^{T+1} / (1 - alpha) * max|g|
    std::vector<double> costs;      // g(y(t), u(t))

    std::size_t horizon() const { return steps.empty() ? 0 : steps.size() - 1; }
};

class RolloutAborted : public Error {
public:
    RolloutAborted(const std::string& what, Rollout partial) : Error("rollout aborted: " + what), partial(std::move(partial)) {}
    Rollout partial;
};

struct RolloutOptions {
    /// Truncation target for the discounted tail.
    double epsilon = 1e-3;
    /// Fixed horizon T; overrides epsilon when set.
    std::optional<std::size_t> steps;
    /// max|g| over a state-control sample; scales the tail bound.
    double cost_bound = 1.0;
    std::size_t max_horizon = 100000;
};

/// Smallest T with alpha^{T+1} / (1 - alpha) * cost_bound <= epsilon, capped.
inline std::size_t truncation_horizon(double alpha, double cost_bound, double epsilon, std::size_t cap = 100000) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("truncation epsilon must be positive");
    std::size_t T = 0;
    double tail = alpha * cost_bound / (1.0 - alpha);
    while (tail > epsilon && T < cap) {
        tail *= alpha;
        ++T;
    }
    return T;
}

/// Closed-loop simulation y(t+1) = f(y(t), policy(y(t))) from the initial state.
inline Rollout rollout(const DiscreteControlProblem& problem, const Policy& policy, const RolloutOptions& options) {
    const double a = problem.discount;
    const std::size_t T = options.steps ? *options.steps
                                        : truncation_horizon(a, options.cost_bound, options.epsilon, options.max_horizon);
    Rollout r;
    r.discount = a;
    r.truncation_bound = std::pow(a, static_cast<double>(T + 1)) / (1.0 - a) * options.cost_bound;
    Vector y = problem.initial_state;
    double weight = 1.0;
    for (std::size_t t = 0; t <= T; ++t) {
        Vector u;
        try {
            u = policy(y);
            if (!problem.control_region.contains(y, u)) {
                throw InadmissibleTransition("policy returned a control outside U(y)");
            }
            Vector next = step(problem, y, u);
            const double g = problem.cost(y, u);
            r.costs.push_back(g);
            r.truncated_value += weight * g;
            weight *= a;
            r.steps.push_back({t, std::move(y), std::move(u)});
            y = std::move(next);
        } catch (const Error& e) {
            throw RolloutAborted(std::string(e.what()) + " at t=" + std::to_string(t), std::move(r));
        }
    }
    return r;
}

/// sum_t alpha^t g_t accumulated backwards (Horner form).
inline double horner_value(const Rollout& r) {
    double v = 0.0;
    for (std::size_t i = r.costs.size(); i-- > 0;) v = r.costs[i] + r.discount * v;
    return v;
}

/// |V_N(y0) - mu / (1 - alpha)|
inline double gap_certificate(const Rollout& r, const DualCertificate& certificate) {
    return std::abs(r.truncated_value - certificate.mu / (1.0 - r.discount));
}

/// Smallest period p of the control sequence from from_t on, requiring at
/// least two full periods of evidence; nullopt when none exists.
inline std::optional<std::size_t> control_pattern(const Rollout& r, std::size_t from_t, double tol = 1e-9) {
    const std::size_t T = r.horizon();
    if (r.steps.empty() || from_t >= T) throw std::invalid_argument("control_pattern: from_t must be below the horizon");
    const std::size_t len = T - from_t + 1;
    for (std::size_t p = 1; 2 * p <= len; ++p) {
        bool ok = true;
        for (std::size_t t = from_t; t + p <= T && ok; ++t) {
            const auto& u0 = r.steps[t].control;
            const auto& u1 = r.steps[t + p].control;
            for (std::size_t k = 0; k < u0.size() && ok; ++k) ok = std::abs(u0[k] - u1[k]) <= tol;
        }
        if (ok) return p;
    }
    return std::nullopt;
}

inline Policy make_minimizer_policy(const DiscreteControlProblem& problem, const MonomialBasis& basis,
                                    const DualCertificate& certificate, PointSet control_grid,
                                    MinimizerOptions options = {}) {
    return [&problem, psi = Surrogate(basis, certificate), grid = std::move(control_grid),
            options = std::move(options)](std::span<const double> y) {
        return minimizer_control(problem, psi, y, grid, options);
    };
}

inline Policy make_heuristic_policy(AtomicMeasure measure) {
    return [measure = std::move(measure)](std::span<const double> y) { return heuristic_control(measure, y); };
}

} // namespace occlp
