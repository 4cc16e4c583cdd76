#include "occlp/simplex.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

using namespace occlp;

namespace {

struct Lp {
    std::size_t rows, cols;
    std::vector<double> a; // column-major
    std::vector<double> c, b;
    DenseLpView view() const { return {rows, cols, a, c, b}; }
    double at(std::size_t i, std::size_t j) const { return a[j * rows + i]; }
};

// Solves the square system by Gaussian elimination with partial pivoting.
std::optional<std::vector<double>> gauss(std::vector<std::vector<double>> m, std::vector<double> rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(m[i][k]) > std::abs(m[piv][k])) piv = i;
        }
        if (std::abs(m[piv][k]) < 1e-10) return std::nullopt;
        std::swap(m[k], m[piv]);
        std::swap(rhs[k], rhs[piv]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = m[i][k] / m[k][k];
            for (std::size_t j = k; j < n; ++j) m[i][j] -= f * m[k][j];
            rhs[i] -= f * rhs[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t k = n; k-- > 0;) {
        double s = rhs[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= m[k][j] * x[j];
        x[k] = s / m[k][k];
    }
    return x;
}

// Minimum over all basic feasible solutions, by enumeration.
std::optional<double> vertex_oracle(const Lp& lp) {
    std::optional<double> best;
    std::vector<std::size_t> pick(lp.rows);
    for (std::size_t i = 0; i < lp.rows; ++i) pick[i] = i;
    while (true) {
        std::vector<std::vector<double>> m(lp.rows, std::vector<double>(lp.rows));
        for (std::size_t i = 0; i < lp.rows; ++i) {
            for (std::size_t k = 0; k < lp.rows; ++k) m[i][k] = lp.at(i, pick[k]);
        }
        if (auto x = gauss(m, lp.b)) {
            bool feasible = true;
            double obj = 0.0;
            for (std::size_t k = 0; k < lp.rows; ++k) {
                feasible = feasible && (*x)[k] >= -1e-9;
                obj += lp.c[pick[k]] * (*x)[k];
            }
            if (feasible && (!best || obj < *best)) best = obj;
        }
        // next combination
        std::size_t k = lp.rows;
        while (k-- > 0) {
            if (pick[k] < lp.cols - lp.rows + k) break;
        }
        if (k == static_cast<std::size_t>(-1)) break;
        ++pick[k];
        for (std::size_t j = k + 1; j < lp.rows; ++j) pick[j] = pick[j - 1] + 1;
    }
    return best;
}

Lp random_lp(std::mt19937& rng, std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0), pos(0.0, 1.0);
    Lp lp{rows, cols, std::vector<double>(rows * cols), std::vector<double>(cols), std::vector<double>(rows, 0.0)};
    for (auto& v : lp.a) v = unif(rng);
    for (auto& v : lp.c) v = pos(rng); // c >= 0 keeps the LP bounded below
    std::vector<double> x0(cols);
    for (auto& v : x0) v = pos(rng);
    for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t i = 0; i < rows; ++i) lp.b[i] += lp.at(i, j) * x0[j];
    }
    return lp;
}

void expect_kkt(const Lp& lp, const LpResult& r, double tol) {
    // primal feasibility
    for (std::size_t i = 0; i < lp.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < lp.cols; ++j) s += lp.at(i, j) * r.x[j];
        EXPECT_NEAR(s, lp.b[i], tol);
    }
    double primal = 0.0, dual = 0.0;
    for (std::size_t j = 0; j < lp.cols; ++j) {
        EXPECT_GE(r.x[j], -tol);
        primal += lp.c[j] * r.x[j];
        double reduced = lp.c[j];
        for (std::size_t i = 0; i < lp.rows; ++i) reduced -= r.duals[i] * lp.at(i, j);
        EXPECT_GE(reduced, -tol) << "column " << j;
    }
    for (std::size_t i = 0; i < lp.rows; ++i) dual += r.duals[i] * lp.b[i];
    EXPECT_NEAR(primal, dual, tol);
    EXPECT_NEAR(primal, r.objective, tol);
}

} // namespace

TEST(Simplex, TinyKnownOptimum) {
    // min x1 + 2 x2 + 3 x3  s.t.  x1 + x2 + x3 = 1,  x1 - x2 = 0
    Lp lp{2, 3, {1, 1, 1, -1, 1, 0}, {1, 2, 3}, {1, 0}};
    const LpResult r = solve_simplex(lp.view());
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.objective, 1.5, 1e-12);
    EXPECT_NEAR(r.x[0], 0.5, 1e-12);
    EXPECT_NEAR(r.x[1], 0.5, 1e-12);
    expect_kkt(lp, r, 1e-10);
}

TEST(Simplex, RandomLpsMatchVertexEnumeration) {
    std::mt19937 rng(20240611);
    for (int trial = 0; trial < 40; ++trial) {
        const Lp lp = random_lp(rng, 3 + trial % 3, 9);
        const auto oracle = vertex_oracle(lp);
        ASSERT_TRUE(oracle.has_value());
        const LpResult r = solve_simplex(lp.view());
        ASSERT_EQ(r.status, LpStatus::optimal) << "trial " << trial;
        EXPECT_NEAR(r.objective, *oracle, 1e-8) << "trial " << trial;
        expect_kkt(lp, r, 1e-8);
    }
}

TEST(Simplex, Infeasible) {
    // x1 + x2 = 1 and x1 + x2 = 2
    Lp lp{2, 2, {1, 1, 1, 1}, {1, 1}, {1, 2}};
    EXPECT_EQ(solve_simplex(lp.view()).status, LpStatus::infeasible);
}

TEST(Simplex, Unbounded) {
    // min -x1  s.t.  x1 - x2 = 0
    Lp lp{1, 2, {1, -1}, {-1, 0}, {0}};
    EXPECT_EQ(solve_simplex(lp.view()).status, LpStatus::unbounded);
}

TEST(Simplex, NegativeRhsHandled) {
    // -x1 - x2 = -2, min x1 + 3 x2 -> x1 = 2
    Lp lp{1, 2, {-1, -1}, {1, 3}, {-2}};
    const LpResult r = solve_simplex(lp.view());
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.objective, 2.0, 1e-12);
}

TEST(Simplex, RedundantRowsKeepArtificialAtZero) {
    // second row duplicates the first
    Lp lp{2, 3, {1, 1, 1, 1, 1, 1}, {3, 1, 2}, {1, 1}};
    const LpResult r = solve_simplex(lp.view());
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.objective, 1.0, 1e-12);
    expect_kkt(lp, r, 1e-10);
}

TEST(Simplex, BlandRuleOnDegenerateCycler) {
    // Beale's cycling example in equality form with slacks:
    // min -3/4 x4 + 20 x5 - 1/2 x6 + 6 x7
    Lp lp{3, 7, {}, {0, 0, 0, -0.75, 20, -0.5, 6}, {0, 0, 1}};
    const double cols[7][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.25, 0.5, 0}, {-8, -12, 0}, {-1, -0.5, 1}, {9, 3, 0}};
    for (auto& col : cols) lp.a.insert(lp.a.end(), col, col + 3);
    SimplexOptions opt;
    opt.degeneracy_limit = 2;
    const LpResult r = solve_simplex(lp.view(), opt);
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.objective, -1.25, 1e-10);
    expect_kkt(lp, r, 1e-10);
}

TEST(Simplex, IterationLimitStalls) {
    std::mt19937 rng(3);
    const Lp lp = random_lp(rng, 5, 30);
    SimplexOptions opt;
    opt.max_iterations = 1;
    EXPECT_EQ(solve_simplex(lp.view(), opt).status, LpStatus::stalled);
}

TEST(Simplex, WarmStartAfterAppendingColumns) {
    std::mt19937 rng(11);
    Lp lp = random_lp(rng, 4, 12);
    const LpResult first = solve_simplex(lp.view());
    ASSERT_EQ(first.status, LpStatus::optimal);
    // add cheap columns
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int k = 0; k < 6; ++k) {
        for (std::size_t i = 0; i < lp.rows; ++i) lp.a.push_back(unif(rng));
        lp.c.push_back(0.01 * k);
        ++lp.cols;
    }
    const LpResult cold = solve_simplex(lp.view());
    const LpResult warm = solve_simplex(lp.view(), {}, &first.basis);
    ASSERT_EQ(warm.status, LpStatus::optimal);
    EXPECT_NEAR(warm.objective, cold.objective, 1e-9);
    EXPECT_LE(warm.iterations, cold.iterations);
    EXPECT_NEAR(warm.objective, *vertex_oracle(lp), 1e-8);
}

TEST(Simplex, Deterministic) {
    std::mt19937 rng(5);
    const Lp lp = random_lp(rng, 5, 40);
    const LpResult a = solve_simplex(lp.view()), b = solve_simplex(lp.view());
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.duals, b.duals);
    EXPECT_EQ(a.basis, b.basis);
}
