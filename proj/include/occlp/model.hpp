#pragma once

// Discrete-time discounted control problems: dynamics, running cost, box
// regions, admissibility, and the registry of built-in problems.

#include "occlp/errors.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace occlp {

using Vector = std::vector<double>;

/// Tolerance band applied on box faces by every membership test.
inline constexpr double kBoxTolerance = 1e-12;

/// A list of equally sized points stored contiguously.
class PointSet {
public:
    PointSet() = default;
    explicit PointSet(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
    bool empty() const noexcept { return data_.empty(); }

    std::span<const double> operator[](std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }
    Vector point(std::size_t i) const {
        auto p = (*this)[i];
        return {p.begin(), p.end()};
    }

    void push_back(std::span<const double> p) {
        if (p.size() != dim_) throw std::invalid_argument("PointSet: dimension mismatch");
        data_.insert(data_.end(), p.begin(), p.end());
    }
    void reserve(std::size_t n) { data_.reserve(n * dim_); }

    const std::vector<double>& data() const noexcept { return data_; }

    bool operator==(const PointSet&) const = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

/// Axis-aligned box [lower, upper] in R^n.
struct Box {
    Vector lower;
    Vector upper;

    std::size_t dim() const noexcept { return lower.size(); }

    bool contains(std::span<const double> x, double tol = kBoxTolerance) const {
        if (x.size() != lower.size()) return false;
        for (std::size_t k = 0; k < x.size(); ++k) {
            if (!(x[k] >= lower[k] - tol && x[k] <= upper[k] + tol)) return false;
        }
        return true;
    }

    Vector clamp(std::span<const double> x) const {
        Vector out(x.begin(), x.end());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::min(upper[k], std::max(lower[k], out[k]));
        return out;
    }

    double width(std::size_t k) const { return upper[k] - lower[k]; }
};

/// Uniformly spaced nodes lo, ..., hi (n >= 2), or the midpoint when n == 1.
inline Vector linspace(double lo, double hi, std::size_t n) {
    if (n == 0) throw std::invalid_argument("linspace: need at least one point");
    if (n == 1) return {0.5 * (lo + hi)};
    Vector v(n);
    const double span = hi - lo;
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = lo + span * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    v.back() = hi;
    return v;
}

/// Tensor product of per-axis nodes in lexicographic order (first axis slowest).
inline PointSet tensor_product(const std::vector<Vector>& axes) {
    PointSet out(axes.size());
    if (axes.empty()) return out;
    std::size_t total = 1;
    for (const auto& a : axes) total *= a.size();
    if (total == 0) return out;
    out.reserve(total);
    std::vector<std::size_t> idx(axes.size(), 0);
    Vector p(axes.size());
    for (std::size_t n = 0; n < total; ++n) {
        for (std::size_t k = 0; k < axes.size(); ++k) p[k] = axes[k][idx[k]];
        out.push_back(p);
        for (std::size_t k = axes.size(); k-- > 0;) {
            if (++idx[k] < axes[k].size()) break;
            idx[k] = 0;
        }
    }
    return out;
}

/// Per-axis point counts; a single entry applies to every axis.
inline std::vector<std::size_t> expand_counts(const std::vector<std::size_t>& counts, std::size_t dim) {
    if (counts.size() == dim) return counts;
    if (counts.size() == 1) return std::vector<std::size_t>(dim, counts.front());
    throw std::invalid_argument("grid resolution has " + std::to_string(counts.size()) +
                                " entries for a " + std::to_string(dim) + "-dimensional box");
}

inline PointSet tensor_grid(const Box& box, const std::vector<std::size_t>& counts) {
    const auto per_axis = expand_counts(counts, box.dim());
    std::vector<Vector> axes;
    axes.reserve(box.dim());
    for (std::size_t k = 0; k < box.dim(); ++k) {
        axes.push_back(linspace(box.lower[k], box.upper[k], per_axis[k]));
    }
    return tensor_product(axes);
}

/// Control set U(y): a box or an explicit finite set, optionally cut down by a
/// state-dependent predicate.
class ControlRegion {
public:
    using Predicate = std::function<bool(std::span<const double> y, std::span<const double> u)>;

    static ControlRegion box(Box b, Predicate pred = {}) {
        ControlRegion r;
        r.dim_ = b.dim();
        r.box_ = std::move(b);
        r.pred_ = std::move(pred);
        return r;
    }
    static ControlRegion finite(PointSet points, Predicate pred = {}) {
        ControlRegion r;
        r.dim_ = points.dim();
        r.finite_ = std::move(points);
        r.pred_ = std::move(pred);
        return r;
    }

    std::size_t dim() const noexcept { return dim_; }
    bool is_finite() const noexcept { return finite_.has_value(); }
    const std::optional<Box>& bounds() const noexcept { return box_; }
    const std::optional<PointSet>& points() const noexcept { return finite_; }

    /// Membership in U(y).
    bool contains(std::span<const double> y, std::span<const double> u) const {
        if (box_ && !box_->contains(u)) return false;
        if (finite_) {
            bool found = false;
            for (std::size_t i = 0; i < finite_->size() && !found; ++i) {
                auto p = (*finite_)[i];
                found = std::equal(p.begin(), p.end(), u.begin(), u.end());
            }
            if (!found) return false;
        }
        return !pred_ || pred_(y, u);
    }

    /// Discretization: the tensor grid for a box, the set itself when finite.
    PointSet grid(const std::vector<std::size_t>& counts) const {
        if (finite_) return *finite_;
        return tensor_grid(*box_, counts);
    }

private:
    std::size_t dim_ = 0;
    std::optional<Box> box_;
    std::optional<PointSet> finite_;
    Predicate pred_;
};

/// y(t+1) = f(y(t), u(t)) with cost sum_t alpha^t g(y(t), u(t)).
/// Immutable once built; safe to share read-only across threads.
struct DiscreteControlProblem {
    using Dynamics = std::function<void(std::span<const double> y, std::span<const double> u,
                                        std::span<double> out)>;
    using Cost = std::function<double(std::span<const double> y, std::span<const double> u)>;

    std::string name;
    std::size_t state_dim = 0;
    std::size_t control_dim = 0;
    Dynamics dynamics;
    Cost cost;
    Box state_region;
    ControlRegion control_region;
    double discount = 0.0;
    Vector initial_state;

    Vector apply_dynamics(std::span<const double> y, std::span<const double> u) const {
        Vector out(state_dim);
        dynamics(y, u, out);
        return out;
    }

    /// Throws std::invalid_argument on inconsistent data.
    void validate() const {
        if (state_dim == 0) throw std::invalid_argument(name + ": state dimension must be positive");
        if (!(discount > 0.0 && discount < 1.0)) {
            throw std::invalid_argument(name + ": discount must lie in (0, 1)");
        }
        if (state_region.dim() != state_dim || initial_state.size() != state_dim) {
            throw std::invalid_argument(name + ": state dimension mismatch");
        }
        if (control_region.dim() != control_dim) {
            throw std::invalid_argument(name + ": control dimension mismatch");
        }
        if (!state_region.contains(initial_state)) {
            throw std::invalid_argument(name + ": initial state outside the state region");
        }
        if (!dynamics || !cost) throw std::invalid_argument(name + ": missing dynamics or cost");
    }
};

struct StateActionPoint {
    Vector state;
    Vector control;

    auto operator<=>(const StateActionPoint&) const = default;
    bool operator==(const StateActionPoint&) const = default;
};

/// (y, u) lies in the graph G: u in U(y) and f(y, u) in Y.
inline bool is_admissible(const DiscreteControlProblem& problem, std::span<const double> y,
                          std::span<const double> u) {
    if (!problem.control_region.contains(y, u)) return false;
    Vector next(problem.state_dim);
    problem.dynamics(y, u, next);
    return problem.state_region.contains(next);
}

/// The grid controls u with f(y, u) in Y, in grid order.
inline PointSet admissible_controls(const DiscreteControlProblem& problem, std::span<const double> y,
                                    const PointSet& control_grid) {
    if (!problem.state_region.contains(y)) {
        throw std::invalid_argument("admissible_controls: state outside the state region");
    }
    PointSet out(problem.control_dim);
    Vector next(problem.state_dim);
    for (std::size_t i = 0; i < control_grid.size(); ++i) {
        auto u = control_grid[i];
        if (!problem.control_region.contains(y, u)) continue;
        problem.dynamics(y, u, next);
        if (problem.state_region.contains(next)) out.push_back(u);
    }
    if (out.empty()) throw AssumptionIViolation(Vector(y.begin(), y.end()));
    return out;
}

/// Returns f(y, u); throws InadmissibleTransition when the result leaves Y.
inline Vector step(const DiscreteControlProblem& problem, std::span<const double> y,
                   std::span<const double> u) {
    Vector next = problem.apply_dynamics(y, u);
    if (!problem.state_region.contains(next)) {
        throw InadmissibleTransition("transition from " + detail::format_vector({y.begin(), y.end()}) +
                                     " under " + detail::format_vector({u.begin(), u.end()}) +
                                     " leaves the state region");
    }
    return next;
}

/// Assumption I at grid resolution: every state node has an admissible grid control.
inline void check_viability(const DiscreteControlProblem& problem, const PointSet& state_grid,
                            const PointSet& control_grid) {
    for (std::size_t i = 0; i < state_grid.size(); ++i) {
        (void)admissible_controls(problem, state_grid[i], control_grid);
    }
}

/// max |g| over state_grid x control_grid restricted to admissible pairs.
inline double max_abs_cost(const DiscreteControlProblem& problem, const PointSet& state_grid,
                           const PointSet& control_grid) {
    double m = 0.0;
    for (std::size_t i = 0; i < state_grid.size(); ++i) {
        for (std::size_t j = 0; j < control_grid.size(); ++j) {
            if (!is_admissible(problem, state_grid[i], control_grid[j])) continue;
            m = std::max(m, std::abs(problem.cost(state_grid[i], control_grid[j])));
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Built-in problems

struct ProblemParameters {
    std::optional<double> discount;
    std::optional<Vector> initial_state;
};

/// Two-dimensional linear system with a bilinear cost on [-1,1]^2.
inline DiscreteControlProblem make_example1(const ProblemParameters& params = {}) {
    DiscreteControlProblem p;
    p.name = "example1";
    p.state_dim = 2;
    p.control_dim = 2;
    p.dynamics = [](std::span<const double> y, std::span<const double> u, std::span<double> out) {
        out[0] = 0.5 * y[0] - 0.5 * u[0];
        out[1] = 0.5 * y[1] - 0.5 * u[1];
    };
    p.cost = [](std::span<const double> y, std::span<const double> u) {
        return -y[0] * u[1] + y[1] * u[0];
    };
    p.state_region = Box{{-1.0, -1.0}, {1.0, 1.0}};
    p.control_region = ControlRegion::box(Box{{-1.0, -1.0}, {1.0, 1.0}});
    p.discount = params.discount.value_or(0.9);
    p.initial_state = params.initial_state.value_or(Vector{0.5, 0.25});
    p.validate();
    return p;
}

/// f(y, u) = u, g(y, u) = y on [0,1]; the optimal control is u = 0 and V = g.
inline DiscreteControlProblem make_shift(const ProblemParameters& params = {}) {
    DiscreteControlProblem p;
    p.name = "shift";
    p.state_dim = 1;
    p.control_dim = 1;
    p.dynamics = [](std::span<const double>, std::span<const double> u, std::span<double> out) {
        out[0] = u[0];
    };
    p.cost = [](std::span<const double> y, std::span<const double>) { return y[0]; };
    p.state_region = Box{{0.0}, {1.0}};
    p.control_region = ControlRegion::box(Box{{0.0}, {1.0}});
    p.discount = params.discount.value_or(0.5);
    p.initial_state = params.initial_state.value_or(Vector{0.4});
    p.validate();
    return p;
}

/// Name -> factory map. New problem families register here at start-up.
class ProblemRegistry {
public:
    using Factory = std::function<DiscreteControlProblem(const ProblemParameters&)>;

    static ProblemRegistry& instance() {
        static ProblemRegistry registry;
        return registry;
    }

    void add(const std::string& name, Factory factory) { factories_[name] = std::move(factory); }

    bool contains(const std::string& name) const { return factories_.contains(name); }

    DiscreteControlProblem create(const std::string& name, const ProblemParameters& params) const {
        auto it = factories_.find(name);
        if (it == factories_.end()) throw UnknownProblem(name);
        return it->second(params);
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : factories_) out.push_back(k);
        return out;
    }

private:
    ProblemRegistry() {
        add("example1", make_example1);
        add("shift", make_shift);
    }
    std::map<std::string, Factory> factories_;
};

inline DiscreteControlProblem builtin_problem(const std::string& name, const ProblemParameters& params = {}) {
    return ProblemRegistry::instance().create(name, params);
}

} // namespace occlp
