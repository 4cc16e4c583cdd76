#pragma once

// Monomial test functions y_1^{i_1} ... y_m^{i_m} with a per-coordinate degree
// cap, and the coefficients they contribute to the occupational-measure LP.

#include "occlp/model.hpp"

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace occlp {

class MonomialBasis {
public:
    using Exponent = std::vector<unsigned>;

    MonomialBasis(std::size_t dim, unsigned max_degree) : dim_(dim), max_degree_(max_degree) {
        if (dim == 0) throw std::invalid_argument("MonomialBasis: dimension must be positive");
        std::vector<Vector> axes(dim);
        for (auto& a : axes) {
            for (unsigned d = 0; d <= max_degree; ++d) a.push_back(static_cast<double>(d));
        }
        const PointSet all = tensor_product(axes);
        exponents_.reserve(all.size());
        for (std::size_t i = 0; i < all.size(); ++i) {
            Exponent e(dim);
            for (std::size_t k = 0; k < dim; ++k) e[k] = static_cast<unsigned>(all[i][k]);
            exponents_.push_back(std::move(e));
        }
        // Graded order: total degree first, then y_1 before y_2 before ...
        std::stable_sort(exponents_.begin(), exponents_.end(), [](const Exponent& a, const Exponent& b) {
            const auto da = std::accumulate(a.begin(), a.end(), 0u);
            const auto db = std::accumulate(b.begin(), b.end(), 0u);
            if (da != db) return da < db;
            return a > b;
        });
        flat_.reserve(exponents_.size() * dim);
        for (const auto& e : exponents_) flat_.insert(flat_.end(), e.begin(), e.end());
    }

    std::size_t dim() const noexcept { return dim_; }
    unsigned max_degree() const noexcept { return max_degree_; }
    std::size_t size() const noexcept { return exponents_.size(); }
    const std::vector<Exponent>& exponents() const noexcept { return exponents_; }

    /// Writes phi_i(y) into out (size() entries). out[0] == 1.
    void evaluate_into(std::span<const double> y, std::span<double> out) const {
        const std::size_t stride = max_degree_ + 1;
        PowerTable table(dim_ * stride);
        double* powers = table.fill(y, stride);
        const unsigned* e = flat_.data();
        for (std::size_t i = 0; i < exponents_.size(); ++i) {
            double v = 1.0;
            for (std::size_t k = 0; k < dim_; ++k) v *= powers[k * stride + *e++];
            out[i] = v;
        }
    }

    Vector evaluate(std::span<const double> y) const {
        Vector out(size());
        evaluate_into(y, out);
        return out;
    }

    /// sum_i lambda_i phi_i(y)
    double combine(std::span<const double> lambda, std::span<const double> y) const {
        const std::size_t stride = max_degree_ + 1;
        PowerTable table(dim_ * stride);
        double* powers = table.fill(y, stride);
        double sum = 0.0;
        const unsigned* e = flat_.data();
        for (std::size_t i = 0; i < exponents_.size(); ++i) {
            double v = lambda[i];
            for (std::size_t k = 0; k < dim_; ++k) v *= powers[k * stride + *e++];
            sum += v;
        }
        return sum;
    }

private:
    // powers[k * (D+1) + d] = y_k^d; stack storage for the common small case.
    class PowerTable {
    public:
        explicit PowerTable(std::size_t n) {
            if (n > kStack) heap_.resize(n);
        }
        double* fill(std::span<const double> y, std::size_t stride) {
            double* p = heap_.empty() ? stack_ : heap_.data();
            for (std::size_t k = 0; k < y.size(); ++k) {
                double v = 1.0;
                for (std::size_t d = 0; d < stride; ++d) {
                    p[k * stride + d] = v;
                    v *= y[k];
                }
            }
            return p;
        }

    private:
        static constexpr std::size_t kStack = 64;
        double stack_[kStack];
        std::vector<double> heap_;
    };

    std::size_t dim_;
    unsigned max_degree_;
    std::vector<Exponent> exponents_;
    std::vector<unsigned> flat_; // exponents_, row-major
};

/// All N coefficients alpha (phi_i(f(y,u)) - phi_i(y)) + (1 - alpha)(phi_i(y0) - phi_i(y))
/// for one state-action pair, written into out.
inline void constraint_column(const MonomialBasis& basis, const DiscreteControlProblem& problem,
                              std::span<const double> y, std::span<const double> u, std::span<double> out) {
    const std::size_t n = basis.size();
    Vector next = problem.apply_dynamics(y, u);
    Vector at_next(n), at_y(n), at_y0(n);
    basis.evaluate_into(next, at_next);
    basis.evaluate_into(y, at_y);
    basis.evaluate_into(problem.initial_state, at_y0);
    const double a = problem.discount;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = a * (at_next[i] - at_y[i]) + (1.0 - a) * (at_y0[i] - at_y[i]);
    }
    out[0] = 0.0; // phi_0 == 1 annihilates the constraint exactly
}

/// Coefficient of test function `index` (0-based; index 0 is the constant) at p.
inline double constraint_coefficient(const MonomialBasis& basis, const DiscreteControlProblem& problem,
                                     const StateActionPoint& p, std::size_t index) {
    if (index >= basis.size()) throw std::out_of_range("constraint_coefficient: basis index out of range");
    Vector column(basis.size());
    constraint_column(basis, problem, p.state, p.control, column);
    return column[index];
}

} // namespace occlp
