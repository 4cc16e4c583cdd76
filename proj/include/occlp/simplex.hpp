#pragma once

// Dense revised simplex for standard-form LPs
//
//     minimize  c^T x   subject to  A x = b,  x >= 0,
//
// with an explicit basis inverse maintained by eta updates and refreshed by LU
// refactorization. Phase I uses one artificial variable per row. Dantzig
// pricing is used until a run of non-improving pivots trips the degeneracy
// counter, after which Bland's rule is applied until progress resumes. A
// previous optimal basis can be supplied to resume after columns were appended.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace occlp {

struct SimplexOptions {
    double pivot_tolerance = 1e-9;
    double optimality_tolerance = 1e-9;
    double feasibility_tolerance = 1e-9;
    std::size_t degeneracy_limit = 1000;
    std::size_t max_iterations = 2'000'000;
    std::size_t refactor_interval = 64;
};

enum class LpStatus { optimal, infeasible, unbounded, stalled };

/// Basic variable per row: a structural column index >= 0, or -(r+1) for the
/// artificial variable of row r.
using LpBasis = std::vector<std::ptrdiff_t>;

struct LpResult {
    LpStatus status = LpStatus::stalled;
    double objective = 0.0;
    std::vector<double> x;      // structural primal values
    std::vector<double> duals;  // one multiplier per row (objective = duals . b)
    LpBasis basis;
    std::size_t iterations = 0;
    std::size_t bland_pivots = 0;
};

/// Column-major dense constraint matrix view.
struct DenseLpView {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::span<const double> matrix; // rows * cols, column-major
    std::span<const double> cost;   // cols
    std::span<const double> rhs;    // rows
};

namespace detail {

class RevisedSimplex {
public:
    using Matrix = Eigen::MatrixXd;
    using Vec = Eigen::VectorXd;
    using ConstMap = Eigen::Map<const Eigen::MatrixXd>;

    RevisedSimplex(const DenseLpView& lp, const SimplexOptions& opt)
        : lp_(lp), opt_(opt), A_(lp.matrix.data(), static_cast<Eigen::Index>(lp.rows),
                                 static_cast<Eigen::Index>(lp.cols)) {
        if (lp.matrix.size() != lp.rows * lp.cols || lp.cost.size() != lp.cols || lp.rhs.size() != lp.rows) {
            throw std::invalid_argument("simplex: inconsistent LP dimensions");
        }
        const auto m = static_cast<Eigen::Index>(lp.rows);
        b_ = Vec(m);
        sign_ = Vec(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            b_(r) = lp.rhs[static_cast<std::size_t>(r)];
            sign_(r) = b_(r) < 0.0 ? -1.0 : 1.0;
        }
        in_basis_.assign(lp.cols, false);
    }

    LpResult run(const LpBasis* warm) {
        LpResult result;
        bool need_phase_one = true;
        if (warm && warm->size() == lp_.rows && try_install(*warm)) need_phase_one = false;
        if (need_phase_one) {
            install_artificial_basis();
            phase_ = 1;
            const LpStatus s = iterate(result);
            if (s == LpStatus::stalled) return finish(result, s);
            if (phase_one_objective() > opt_.feasibility_tolerance * std::max(1.0, b_.cwiseAbs().sum())) {
                return finish(result, LpStatus::infeasible);
            }
            drive_out_artificials();
        }
        phase_ = 2;
        return finish(result, iterate(result));
    }

private:
    double cost_of(std::ptrdiff_t var) const {
        if (var < 0) return phase_ == 1 ? 1.0 : 0.0;
        return phase_ == 1 ? 0.0 : lp_.cost[static_cast<std::size_t>(var)];
    }

    Vec column_of(std::ptrdiff_t var) const {
        const auto m = static_cast<Eigen::Index>(lp_.rows);
        if (var < 0) {
            Vec e = Vec::Zero(m);
            const auto r = static_cast<Eigen::Index>(-var - 1);
            e(r) = sign_(r);
            return e;
        }
        return A_.col(static_cast<Eigen::Index>(var));
    }

    void install_artificial_basis() {
        const auto m = static_cast<Eigen::Index>(lp_.rows);
        basis_.resize(lp_.rows);
        for (Eigen::Index r = 0; r < m; ++r) basis_[static_cast<std::size_t>(r)] = -(r + 1);
        std::fill(in_basis_.begin(), in_basis_.end(), false);
        binv_ = sign_.asDiagonal();
        xb_ = b_.cwiseAbs();
    }

    bool try_install(const LpBasis& warm) {
        std::vector<bool> seen(lp_.cols, false);
        for (auto v : warm) {
            if (v >= static_cast<std::ptrdiff_t>(lp_.cols)) return false;
            if (v >= 0) {
                if (seen[static_cast<std::size_t>(v)]) return false;
                seen[static_cast<std::size_t>(v)] = true;
            }
        }
        basis_ = warm;
        in_basis_ = seen;
        if (!refactor()) return false;
        for (std::size_t r = 0; r < basis_.size(); ++r) {
            if (xb_(static_cast<Eigen::Index>(r)) < -opt_.feasibility_tolerance) return false;
            // A basic artificial must sit at zero to keep the warm point feasible.
            if (basis_[r] < 0 && std::abs(xb_(static_cast<Eigen::Index>(r))) > opt_.feasibility_tolerance) {
                return false;
            }
        }
        return true;
    }

    bool refactor() {
        const auto m = static_cast<Eigen::Index>(lp_.rows);
        Matrix B(m, m);
        for (Eigen::Index r = 0; r < m; ++r) B.col(r) = column_of(basis_[static_cast<std::size_t>(r)]);
        Eigen::FullPivLU<Matrix> lu(B);
        if (!lu.isInvertible()) return false;
        binv_ = lu.inverse();
        xb_ = binv_ * b_;
        for (Eigen::Index r = 0; r < m; ++r) {
            if (std::abs(xb_(r)) < 1e-13) xb_(r) = 0.0;
        }
        since_refactor_ = 0;
        return true;
    }

    double phase_one_objective() const {
        double s = 0.0;
        for (std::size_t r = 0; r < basis_.size(); ++r) {
            if (basis_[r] < 0) s += xb_(static_cast<Eigen::Index>(r));
        }
        return s;
    }

    double objective() const {
        double s = 0.0;
        for (std::size_t r = 0; r < basis_.size(); ++r) s += cost_of(basis_[r]) * xb_(static_cast<Eigen::Index>(r));
        return s;
    }

    Vec duals() const {
        const auto m = static_cast<Eigen::Index>(lp_.rows);
        Vec cb(m);
        for (Eigen::Index r = 0; r < m; ++r) cb(r) = cost_of(basis_[static_cast<std::size_t>(r)]);
        return binv_.transpose() * cb;
    }

    void pivot(Eigen::Index leave_row, std::ptrdiff_t enter, const Vec& d, double theta) {
        xb_ -= theta * d;
        xb_(leave_row) = theta;
        for (Eigen::Index r = 0; r < xb_.size(); ++r) {
            if (xb_(r) < 0.0 && xb_(r) > -opt_.feasibility_tolerance) xb_(r) = 0.0;
        }
        const double piv = d(leave_row);
        binv_.row(leave_row) /= piv;
        for (Eigen::Index r = 0; r < binv_.rows(); ++r) {
            if (r == leave_row || d(r) == 0.0) continue;
            binv_.row(r) -= d(r) * binv_.row(leave_row);
        }
        const auto old = basis_[static_cast<std::size_t>(leave_row)];
        if (old >= 0) in_basis_[static_cast<std::size_t>(old)] = false;
        basis_[static_cast<std::size_t>(leave_row)] = enter;
        if (enter >= 0) in_basis_[static_cast<std::size_t>(enter)] = true;
        if (++since_refactor_ >= opt_.refactor_interval) {
            if (!refactor()) throw std::runtime_error("simplex: basis became singular");
        }
    }

    LpStatus iterate(LpResult& result) {
        const auto n = static_cast<Eigen::Index>(lp_.cols);
        std::size_t stagnant = 0;
        bool bland = false;
        double last_obj = objective();
        Vec reduced(n);
        Vec costs(n);
        for (Eigen::Index j = 0; j < n; ++j) costs(j) = cost_of(j);

        while (true) {
            if (result.iterations >= opt_.max_iterations) return LpStatus::stalled;
            const Vec pi = duals();
            reduced.noalias() = costs - A_.transpose() * pi;

            Eigen::Index enter = -1;
            double best = -opt_.optimality_tolerance;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (in_basis_[static_cast<std::size_t>(j)]) continue;
                if (reduced(j) < best) {
                    enter = j;
                    if (bland) break;
                    best = reduced(j);
                }
            }
            if (enter < 0) return LpStatus::optimal;

            const Vec d = binv_ * A_.col(enter);
            Eigen::Index leave = -1;
            double theta = std::numeric_limits<double>::infinity();
            for (Eigen::Index r = 0; r < d.size(); ++r) {
                const auto var = basis_[static_cast<std::size_t>(r)];
                double ratio;
                if (phase_ == 2 && var < 0 && std::abs(d(r)) > opt_.pivot_tolerance) {
                    ratio = 0.0; // artificial fixed at zero
                } else if (d(r) > opt_.pivot_tolerance) {
                    ratio = std::max(0.0, xb_(r)) / d(r);
                } else {
                    continue;
                }
                bool take = false;
                if (leave < 0 || ratio < theta - 1e-12) {
                    take = true;
                } else if (ratio <= theta + 1e-12) {
                    if (bland) {
                        take = var_order(var) < var_order(basis_[static_cast<std::size_t>(leave)]);
                    } else {
                        take = std::abs(d(r)) > std::abs(d(leave));
                    }
                }
                if (take) {
                    leave = r;
                    theta = std::min(theta, ratio);
                }
            }
            if (leave < 0) return LpStatus::unbounded;
            theta = std::max(0.0, xb_(leave)) / d(leave);
            if (phase_ == 2 && basis_[static_cast<std::size_t>(leave)] < 0) theta = 0.0;

            pivot(leave, enter, d, theta);
            ++result.iterations;
            if (bland) ++result.bland_pivots;

            const double obj = objective();
            if (obj < last_obj - 1e-12 * std::max(1.0, std::abs(last_obj))) {
                stagnant = 0;
                bland = false;
                last_obj = obj;
            } else if (++stagnant >= opt_.degeneracy_limit) {
                bland = true;
            }
        }
    }

    // Bland order: structural columns by index, artificials after them.
    std::ptrdiff_t var_order(std::ptrdiff_t var) const {
        return var >= 0 ? var : static_cast<std::ptrdiff_t>(lp_.cols) + (-var - 1);
    }

    void drive_out_artificials() {
        const auto n = static_cast<Eigen::Index>(lp_.cols);
        for (std::size_t r = 0; r < basis_.size(); ++r) {
            if (basis_[r] >= 0) continue;
            const auto row = static_cast<Eigen::Index>(r);
            const Vec alpha_row = (binv_.row(row) * A_).transpose();
            Eigen::Index best = -1;
            double best_abs = opt_.pivot_tolerance * 1e3;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (in_basis_[static_cast<std::size_t>(j)]) continue;
                if (std::abs(alpha_row(j)) > best_abs) {
                    best_abs = std::abs(alpha_row(j));
                    best = j;
                }
            }
            if (best < 0) continue; // redundant row; the artificial stays basic at zero
            const Vec d = binv_ * A_.col(best);
            pivot(row, best, d, std::max(0.0, xb_(row)) / d(row));
        }
        refactor();
    }

    LpResult finish(LpResult& result, LpStatus status) {
        result.status = status;
        if (status == LpStatus::optimal && phase_ == 2) refactor();
        result.basis = basis_;
        result.x.assign(lp_.cols, 0.0);
        for (std::size_t r = 0; r < basis_.size(); ++r) {
            if (basis_[r] >= 0) {
                result.x[static_cast<std::size_t>(basis_[r])] = std::max(0.0, xb_(static_cast<Eigen::Index>(r)));
            }
        }
        const Vec pi = duals();
        result.duals.assign(pi.data(), pi.data() + pi.size());
        result.objective = objective();
        return result;
    }

    const DenseLpView& lp_;
    SimplexOptions opt_;
    ConstMap A_;
    Vec b_;
    Vec sign_;
    LpBasis basis_;
    std::vector<bool> in_basis_;
    Matrix binv_;
    Vec xb_;
    int phase_ = 1;
    std::size_t since_refactor_ = 0;
};

} // namespace detail

/// Solves the LP; `warm` (optional) is a basis from an earlier solve of a
/// prefix of the same columns.
inline LpResult solve_simplex(const DenseLpView& lp, const SimplexOptions& options = {},
                              const LpBasis* warm = nullptr) {
    detail::RevisedSimplex solver(lp, options);
    return solver.run(warm);
}

} // namespace occlp
