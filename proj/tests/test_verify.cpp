#include "occlp/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace occlp;

namespace {

DiscreteControlProblem shift(double alpha = 0.5, double y0 = 0.4) { return builtin_problem("shift", {alpha, Vector{y0}}); }

Rollout fixed_rollout(const DiscreteControlProblem& p, Vector u, std::size_t T) {
    RolloutOptions opt;
    opt.steps = T;
    return rollout(p, [u](std::span<const double>) { return u; }, opt);
}

ValueFunctionGrid shift_oracle(const DiscreteControlProblem& p) {
    return value_iteration(p, {11}, p.control_region.grid({11}), 1e-12, 1000).value;
}

} // namespace

TEST(ValueFunctionGrid, MultilinearReproducesBilinear) {
    const std::vector<Vector> axes{linspace(-1, 1, 5), linspace(0, 2, 3)};
    const PointSet nodes = tensor_product(axes);
    auto f = [](double x, double y) { return 1.0 + 2.0 * x - 3.0 * y + 0.5 * x * y; };
    Vector values;
    for (std::size_t i = 0; i < nodes.size(); ++i) values.push_back(f(nodes[i][0], nodes[i][1]));
    const ValueFunctionGrid g(axes, values, Interpolation::multilinear);
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> ux(-1, 1), uy(0, 2);
    for (int k = 0; k < 100; ++k) {
        const double x = ux(rng), y = uy(rng);
        EXPECT_NEAR(g(Vector{x, y}), f(x, y), 1e-12);
    }
    // clamped outside the box
    EXPECT_NEAR(g(Vector{3.0, 1.0}), f(1.0, 1.0), 1e-12);
}

TEST(ValueFunctionGrid, NearestNode) {
    const std::vector<Vector> axes{linspace(0, 1, 3)};
    const ValueFunctionGrid g(axes, {10.0, 20.0, 30.0}, Interpolation::nearest);
    EXPECT_EQ(g(Vector{0.2}), 10.0);
    EXPECT_EQ(g(Vector{0.3}), 20.0);
    EXPECT_EQ(g(Vector{0.9}), 30.0);
}

TEST(ValueIteration, ShiftEqualsCostAtNodes) {
    const auto p = shift();
    const ValueIterationResult r = value_iteration(p, {11}, p.control_region.grid({11}), 1e-12, 1000);
    const PointSet nodes = r.value.nodes();
    for (std::size_t n = 0; n < nodes.size(); ++n) EXPECT_NEAR(r.value.values()[n], nodes[n][0], 1e-12);
    EXPECT_NEAR(r.value(Vector{0.4}), 0.4, 1e-12);
}

TEST(ValueIteration, ConstantCost) {
    auto p = shift(0.8);
    p.cost = [](std::span<const double>, std::span<const double>) { return 3.0; };
    const ValueIterationResult r = value_iteration(p, {6}, p.control_region.grid({4}), 1e-10, 10000);
    for (double v : r.value.values()) EXPECT_NEAR(v, 3.0 / 0.2, 1e-9);
}

TEST(ValueIteration, StoppingRuleGuaranteesTolerance) {
    auto p = shift(0.8);
    p.cost = [](std::span<const double>, std::span<const double>) { return 3.0; };
    const double tol = 1e-4;
    const ValueIterationResult r = value_iteration(p, {6}, p.control_region.grid({4}), tol, 10000);
    EXPECT_LE(r.sup_differences.back(), tol * 0.2 / 0.8);
    for (double v : r.value.values()) EXPECT_LE(std::abs(v - 15.0), tol);
}

TEST(ValueIteration, ContractionRatio) {
    const auto p = builtin_problem("example1");
    const ValueIterationResult r = value_iteration(p, {11}, p.control_region.grid({5}), 1e-6, 10000);
    for (std::size_t k = 1; k < r.sup_differences.size(); ++k) {
        EXPECT_LE(r.sup_differences[k], p.discount * r.sup_differences[k - 1] + 1e-12) << "sweep " << k;
    }
}

TEST(ValueIteration, BoundedByCostOverOneMinusAlpha) {
    const auto p = builtin_problem("example1");
    const ValueIterationResult r = value_iteration(p, {11}, p.control_region.grid({5}), 1e-6, 10000);
    const double bound = max_abs_cost(p, r.value.nodes(), p.control_region.grid({5})) / (1.0 - p.discount);
    for (double v : r.value.values()) EXPECT_LE(std::abs(v), bound + 1e-9);
}

TEST(ValueIteration, NotConvergedCarriesLastIterate) {
    const auto p = builtin_problem("example1");
    try {
        value_iteration(p, {5}, p.control_region.grid({3}), 1e-12, 3);
        FAIL() << "expected ValueIterationNotConverged";
    } catch (const ValueIterationNotConverged& e) {
        EXPECT_EQ(e.last_iterate.iterations, 3u);
        EXPECT_EQ(e.last_iterate.sup_differences.size(), 3u);
        EXPECT_EQ(e.last_iterate.value.size(), 25u);
    }
}

TEST(ValueIteration, Errors) {
    const auto p = shift();
    EXPECT_THROW(value_iteration(p, {5}, p.control_region.grid({3}), 0.0, 10), std::invalid_argument);
    auto q = shift();
    q.dynamics = [](std::span<const double> y, std::span<const double> u, std::span<double> out) { out[0] = y[0] + u[0]; };
    // from y = 1 every control u > 0 leaves [0,1]
    PointSet controls(1);
    controls.push_back(std::vector<double>{0.5});
    EXPECT_THROW(value_iteration(q, {3}, controls, 1e-6, 10), AssumptionIViolation);
}

TEST(ValueIteration, NearestModeOnShift) {
    const auto p = shift();
    const auto r = value_iteration(p, {11}, p.control_region.grid({11}), 1e-12, 1000, Interpolation::nearest);
    EXPECT_NEAR(r.value(Vector{0.4}), 0.4, 1e-12);
}

TEST(Hamiltonian, ZeroSurrogateIsMinCost) {
    const auto p = builtin_problem("example1");
    auto zero = [](std::span<const double>) { return 0.0; };
    const PointSet grid = p.control_region.grid({3});
    const Vector y{0.5, 0.25};
    double expect = 1e300;
    for (std::size_t j = 0; j < grid.size(); ++j) expect = std::min(expect, p.cost(y, grid[j]));
    EXPECT_EQ(hamiltonian_min(p, zero, y, grid), expect);
}

TEST(Hamiltonian, ShiftClosedForm) {
    const auto p = shift();
    auto g = [](std::span<const double> y) { return y[0]; };
    // min_u 0.4 + 0.5 (u - 0.4) = 0.2 at u = 0, equal to (1 - alpha) V(0.4)
    EXPECT_NEAR(hamiltonian_min(p, g, Vector{0.4}, p.control_region.grid({11})), 0.2, 1e-15);
}

TEST(Hamiltonian, OracleFixedPoint) {
    const auto p = builtin_problem("example1");
    const PointSet controls = p.control_region.grid({5});
    const ValueIterationResult r = value_iteration(p, {9}, controls, 1e-10, 10000);
    const PointSet nodes = r.value.nodes();
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        const double h = hamiltonian_min(p, r.value, nodes[n], controls);
        EXPECT_NEAR(h - (1.0 - p.discount) * r.value.values()[n], 0.0, 1e-8);
    }
}

TEST(Hamiltonian, StateOutsideY) {
    const auto p = shift();
    auto zero = [](std::span<const double>) { return 0.0; };
    EXPECT_THROW(hamiltonian_min(p, zero, Vector{2.0}, p.control_region.grid({3})), std::invalid_argument);
}

TEST(OccupationalMeasure, StationaryRollout) {
    const auto p = builtin_problem("shift", {0.7, Vector{1.0}});
    const OccupationalMeasureApprox m = occupational_measure(fixed_rollout(p, {1.0}, 20), 0.7);
    ASSERT_EQ(m.atoms.size(), 1u);
    EXPECT_NEAR(m.atoms[0].weight, 1.0 - std::pow(0.7, 21), 1e-15);
    EXPECT_EQ(m.horizon, 20u);
}

TEST(OccupationalMeasure, ShiftOptimalRollout) {
    const auto p = shift();
    const OccupationalMeasureApprox m = occupational_measure(fixed_rollout(p, {0.0}, 30), 0.5);
    ASSERT_EQ(m.atoms.size(), 2u);
    EXPECT_EQ(m.atoms[0].point.state, (Vector{0.4}));
    EXPECT_EQ(m.atoms[0].weight, 0.5);
    EXPECT_EQ(m.atoms[1].point.state, (Vector{0.0}));
    EXPECT_NEAR(m.atoms[1].weight, 0.5 - std::pow(0.5, 31), 1e-15);
    EXPECT_NEAR(m.total_weight(), 1.0 - std::pow(0.5, 31), 1e-15);
}

TEST(OccupationalMeasure, EmptyRolloutRejected) {
    EXPECT_THROW(occupational_measure(Rollout{}, 0.5), std::invalid_argument);
}

TEST(OccupationalMeasure, TwoSidedIntegralIdentity) {
    const auto p = builtin_problem("example1");
    const MonomialBasis b(2, 7);
    // periodic bang-bang orbit revisits states
    Policy pol = [](std::span<const double> y) { return Vector{y[1] >= 0 ? -1.0 : 1.0, y[0] >= 0 ? 1.0 : -1.0}; };
    RolloutOptions opt;
    opt.steps = 50;
    const Rollout r = rollout(p, pol, opt);
    const OccupationalMeasureApprox m = occupational_measure(r, p.discount);
    Vector lhs(b.size(), 0.0), rhs(b.size(), 0.0);
    for (const auto& a : m.atoms) {
        const Vector v = b.evaluate(a.point.state);
        for (std::size_t i = 0; i < v.size(); ++i) lhs[i] += a.weight * v[i];
    }
    double w = 1.0;
    for (const auto& s : r.steps) {
        const Vector v = b.evaluate(s.state);
        for (std::size_t i = 0; i < v.size(); ++i) rhs[i] += (1.0 - p.discount) * w * v[i];
        w *= p.discount;
    }
    for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(lhs[i], rhs[i], 1e-12);
}

TEST(MeasureResiduals, TrajectoryClosedForm) {
    // The residual telescopes to (1 - alpha) alpha^{T+1} (phi(y(T+1)) - phi(y0)).
    const auto p = builtin_problem("example1");
    const MonomialBasis b(2, 3);
    Policy pol = [](std::span<const double> y) { return Vector{-y[1], 0.5 * y[0]}; };
    RolloutOptions opt;
    opt.steps = 12;
    const Rollout r = rollout(p, pol, opt);
    const OccupationalMeasureApprox m = occupational_measure(r, p.discount);
    const Vector res = measure_residuals(m, b, p);
    const Vector last = p.apply_dynamics(r.steps.back().state, r.steps.back().control);
    const Vector at_end = b.evaluate(last), at_0 = b.evaluate(p.initial_state);
    EXPECT_EQ(res[0], 0.0);
    for (std::size_t i = 1; i < b.size(); ++i) {
        const double expect = (1 - p.discount) * std::pow(p.discount, 13) * (at_end[i] - at_0[i]);
        EXPECT_NEAR(res[i], expect, 1e-14);
    }
    EXPECT_LE(max_abs(res), trajectory_residual_bound(m, b, p));
}

TEST(MeasureResiduals, ShiftDecaysGeometrically) {
    const auto p = shift();
    const MonomialBasis b(1, 3);
    double prev = 1.0;
    for (std::size_t T : {2u, 4u, 8u, 16u}) {
        const Vector res = measure_residuals(occupational_measure(fixed_rollout(p, {0.0}, T), 0.5), b, p);
        const double now = max_abs(res);
        EXPECT_LT(now, prev);
        EXPECT_NEAR(now, 0.5 * std::pow(0.5, static_cast<double>(T + 1)) * 0.4, 1e-15);
        prev = now;
    }
}

TEST(MeasureResiduals, LpSolutionsSatisfyConstraints) {
    const auto p = builtin_problem("example1");
    const MonomialBasis b(2, 3);
    const LpSolution s = solve(assemble(p, b, {{11}, {3}}));
    EXPECT_LE(max_abs(measure_residuals(s.measure, b, p)), 1e-9);
}

TEST(Optimality, ShiftExactCertificate) {
    const auto p = shift();
    const ValueFunctionGrid v = shift_oracle(p);
    auto g = [](std::span<const double> y) { return y[0]; };
    const Rollout r = fixed_rollout(p, {0.0}, 10);
    const OptimalityReport rep =
        check_optimality_conditions(p, r, g, v, tensor_grid(p.state_region, {11}), p.control_region.grid({11}), 1e-12);
    EXPECT_EQ(rep.max_stationarity(), 0.0);
    EXPECT_LE(rep.value_agreement, 1e-12);
    EXPECT_LE(rep.max_hamiltonian(), 1e-12);
    EXPECT_TRUE(rep.passed());
}

TEST(Optimality, PerturbedControlRaisesStationarity) {
    const auto p = shift();
    const ValueFunctionGrid v = shift_oracle(p);
    auto g = [](std::span<const double> y) { return y[0]; };
    Rollout r = fixed_rollout(p, {0.0}, 10);
    r.steps[3].control = {0.5};
    const OptimalityReport rep =
        check_optimality_conditions(p, r, g, v, tensor_grid(p.state_region, {11}), p.control_region.grid({11}), 1e-12);
    // g + alpha psi(u) - psi(y) = 0.5 u
    EXPECT_NEAR(rep.stationarity[3], 0.25, 1e-15);
    EXPECT_GT(rep.stationarity[3], rep.stationarity[2]);
    EXPECT_GT(rep.stationarity[3], rep.stationarity[4]);
    EXPECT_FALSE(rep.passed());
}

TEST(Optimality, StationarityNonnegative) {
    const auto p = builtin_problem("example1");
    const MonomialBasis b(2, 3);
    const LpSolution s = solve(assemble(p, b, {{11}, {3}}));
    const Surrogate psi(b, s.certificate);
    const PointSet controls = p.control_region.grid({5});
    const ValueIterationResult vi = value_iteration(p, {11}, controls, 1e-6, 10000);
    RolloutOptions opt;
    opt.steps = 20;
    const Rollout r = rollout(p, make_minimizer_policy(p, b, s.certificate, p.control_region.grid({21})), opt);
    const OptimalityReport rep =
        check_optimality_conditions(p, r, psi, vi.value, tensor_grid(p.state_region, {11}), controls, 1.0);
    for (double a : rep.stationarity) EXPECT_GE(a, 0.0);
    EXPECT_EQ(rep.stationarity.size(), 21u);
}

TEST(PsiBound, ExactValueFunction) {
    const auto p = shift();
    const ValueFunctionGrid v = shift_oracle(p);
    auto g = [](std::span<const double> y) { return y[0]; };
    EXPECT_NEAR(check_psi_bound(g, v, p), 0.0, 1e-12);
}

TEST(PsiBound, ShiftFamilyMember) {
    // psi(0) = 0, psi(y0) = g(y0), 0 <= psi <= g
    const auto p = shift();
    const ValueFunctionGrid v = shift_oracle(p);
    auto psi = [](std::span<const double> y) { return y[0] <= 0.4 ? y[0] : 0.4 + 0.5 * (y[0] - 0.4); };
    EXPECT_LE(check_psi_bound(psi, v, p), 1e-12);
    auto above = [](std::span<const double> y) { return y[0] + 0.1 * (y[0] - 0.4) * (y[0] - 0.4); };
    EXPECT_GT(check_psi_bound(above, v, p), 0.0);
}

TEST(ShiftedInequality, ExactAndConstantOffsets) {
    const auto p = shift();
    auto g = [](std::span<const double> y) { return y[0]; };
    const PointSet states = tensor_grid(p.state_region, {11});
    const PointSet controls = p.control_region.grid({11});
    EXPECT_NEAR(check_shifted_inequality(g, 0.4, p, states, controls), 0.0, 1e-15);
    // psi~ = V + c gives H - (1 - alpha) psi~ = -(1 - alpha) c everywhere
    for (double c : {0.1, 0.25}) {
        EXPECT_NEAR(check_shifted_inequality(g, 0.4 + c, p, states, controls), 0.5 * c, 1e-15);
        EXPECT_NEAR(check_shifted_inequality(g, 0.4 - c, p, states, controls), -0.5 * c, 1e-15);
    }
}

TEST(Report, TextAndVerdict) {
    VerificationReport rep;
    rep.add("first", 0.1, 0.2);
    rep.add("second", -0.0, 0.0);
    EXPECT_TRUE(rep.passed());
    rep.add("third", 0.3, 0.2);
    EXPECT_FALSE(rep.passed());
    const std::string text = rep.text();
    EXPECT_NE(text.find("PASS first"), std::string::npos);
    EXPECT_NE(text.find("FAIL third"), std::string::npos);
    EXPECT_EQ(text.find("-0.0"), std::string::npos);
    EXPECT_NE(text.find("RESULT FAIL"), std::string::npos);
}

TEST(Kappa, EstimateClampsNegativeParts) {
    EXPECT_NEAR((KappaEstimate{0.01, 0.02}.estimate()), 0.03, 1e-15);
    EXPECT_NEAR((KappaEstimate{-0.01, 0.02}.estimate()), 0.02, 1e-15);
}
