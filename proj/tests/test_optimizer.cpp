#include "hoc/optimizer.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <array>
#include <limits>
#include <numbers>

using namespace hoc;
using hoc::testing::FunctionProblem;

namespace {

RunResult run_valley(double k, int order, int threads = 1) {
  const AnisotropicValleyProblem problem(k);
  OptimizerConfig config;
  config.order = order;
  config.threads = threads;
  return run(problem.default_start(), problem, config);
}

bool same_trajectory(const RunResult& a, const RunResult& b) {
  if (a.trajectory.size() != b.trajectory.size() || a.x != b.x) return false;
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    const IterationRecord& ra = a.trajectory[i];
    const IterationRecord& rb = b.trajectory[i];
    if (ra.lambda_index != rb.lambda_index || ra.chosen_lambda != rb.chosen_lambda ||
        ra.residual_norm != rb.residual_norm || ra.step_norm != rb.step_norm ||
        ra.corrections_norms != rb.corrections_norms || ra.f_evaluations != rb.f_evaluations ||
        ra.accepted != rb.accepted) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("lambda grid shape") {
  for (double old : {1.0, 3.7e-5, 2.5e8}) {
    const LambdaSchedule schedule(old);
    CHECK(schedule.lambda(0) == old);
    CHECK(schedule.lambda(10) / old == doctest::Approx(1e4).epsilon(1e-15));
    CHECK(schedule.lambda(-10) / old == doctest::Approx(1e-4).epsilon(1e-15));
    for (int n = 1; n <= 10; ++n) {
      CHECK(schedule.lambda(n) * schedule.lambda(-n) == doctest::Approx(old * old).epsilon(1e-14));
      CHECK(schedule.lambda(n) > schedule.lambda(n - 1));
    }
    const auto grid = schedule.grid();
    REQUIRE(grid.size() == 21);
    CHECK(grid.front() == schedule.lambda(-10));
    CHECK(grid[10] == old);
    CHECK(grid.back() == schedule.lambda(10));
  }
  // (n/10)^3 exponent: n = 5 gives 10000^(1/8)
  CHECK(LambdaSchedule(1.0).lambda(5) == doctest::Approx(std::pow(1e4, 0.125)).epsilon(1e-15));
  CHECK_THROWS_AS((void)LambdaSchedule(1.0).lambda(11), InvalidInputError);
  CHECK_THROWS_AS(LambdaSchedule(0.0), InvalidInputError);
}

TEST_CASE("config validation") {
  OptimizerConfig config;
  CHECK_NOTHROW(config.validate());
  config.order = 5;
  CHECK_THROWS_AS(config.validate(), InvalidInputError);
  config = {};
  config.max_iterations = 0;
  CHECK_THROWS_AS(config.validate(), InvalidInputError);
  config = {};
  config.convergence_tol = 0.0;
  CHECK_THROWS_AS(config.validate(), InvalidInputError);
  config = {};
  config.threads = 0;
  CHECK_THROWS_AS(config.validate(), InvalidInputError);
}

TEST_CASE("affine problem converges in one Newton step at every order") {
  const auto problem = make_reference_affine_problem();
  for (int order = 1; order <= 4; ++order) {
    for (auto variant : {InverseVariant::newton, InverseVariant::gauss_newton}) {
      OptimizerConfig config;
      config.order = order;
      config.inverse_variant = variant;
      const RunResult result = run(problem->default_start(), *problem, config);
      CAPTURE(order);
      CHECK(result.converged);
      CHECK(result.iterations == 1);
      CHECK(result.residual_norm <= 1e-12);
    }
  }
}

TEST_CASE("affine problem under the damped grid converges quickly") {
  const auto problem = make_reference_affine_problem();
  OptimizerConfig config;
  const RunResult result = run(problem->default_start(), *problem, config);
  CHECK(result.converged);
  CHECK(result.iterations <= 4);
}

TEST_CASE("already converged start needs no iterations") {
  const AnisotropicValleyProblem problem(1e3);
  const RunResult result = run(Eigen::Vector2d(0, 0), problem, OptimizerConfig{});
  CHECK(result.converged);
  CHECK(result.iterations == 0);
  CHECK(result.trajectory.empty());
  CHECK(result.f_evaluations == 1);
}

TEST_CASE("valley iteration counts") {
  CHECK(run_valley(1.0, 1).iterations == 8);
  CHECK(run_valley(1e4, 4).iterations == 18);
  const RunResult deep = run_valley(1e6, 2);
  CHECK(deep.converged);
  CHECK(deep.iterations >= 300);
  CHECK(deep.iterations <= 500);
}

TEST_CASE("K = 1e12 at order 3 is censored at 20000" * doctest::may_fail()) {
  const RunResult result = run_valley(1e12, 3);
  CHECK_FALSE(result.converged);
}

TEST_CASE("accepted residuals decrease strictly and rejected ones hold") {
  for (int order = 1; order <= 4; ++order) {
    const RunResult result = run_valley(1e3, order);
    double previous = valley_eval(1e3, std::numbers::pi, std::numbers::e).norm();
    for (const IterationRecord& record : result.trajectory) {
      if (record.accepted) {
        CHECK(record.residual_norm < previous);
      } else {
        CHECK(record.residual_norm == previous);
      }
      previous = record.residual_norm;
    }
    CHECK(result.residual_norm <= 1e-9);
  }
}

TEST_CASE("identical runs are identical, with or without worker threads") {
  for (int order = 1; order <= 4; ++order) {
    const RunResult a = run_valley(1e3, order);
    const RunResult b = run_valley(1e3, order);
    const RunResult c = run_valley(1e3, order, 3);
    CAPTURE(order);
    CHECK(same_trajectory(a, b));
    CHECK(same_trajectory(a, c));
  }
}

TEST_CASE("higher orders never need more iterations") {
  for (double k : {10.0, 1e2, 1e3, 1e4}) {
    int previous = std::numeric_limits<int>::max();
    for (int order = 1; order <= 4; ++order) {
      const int iterations = run_valley(k, order).iterations;
      CAPTURE(k);
      CAPTURE(order);
      CHECK(iterations <= previous);
      previous = iterations;
    }
  }
}

TEST_CASE("quadratic endgame below |f| = 0.1" * doctest::may_fail()) {
  for (double k : {1.0, 1e2, 1e4, 1e6}) {
    for (int order = 1; order <= 4; ++order) {
      const RunResult result = run_valley(k, order);
      REQUIRE(result.converged);
      int first_below = -1;
      for (const IterationRecord& record : result.trajectory) {
        if (record.residual_norm < 0.1) {
          first_below = record.iteration;
          break;
        }
      }
      REQUIRE(first_below > 0);
      CAPTURE(k);
      CAPTURE(order);
      CAPTURE(first_below);
      CHECK(result.iterations - first_below <= 6);
    }
  }
}

TEST_CASE("no-improvement steps escalate lambda and abort after five") {
  // f = x^2 + 1 has J = 0 at x = 0: every candidate stays put
  const FunctionProblem flat(
      1, 1, [](const ParameterVector& v) { return ResidualVector::Constant(1, v(0) * v(0) + 1.0); },
      [](const ParameterVector& v) { return JacobianMatrix::Constant(1, 1, 2.0 * v(0)); });
  OptimizerConfig config;
  LambdaSchedule schedule(1.0);
  const StepResult one = step(ParameterVector::Zero(1), flat, schedule, config);
  CHECK_FALSE(one.record.accepted);
  CHECK(one.x == ParameterVector::Zero(1));
  CHECK(schedule.lambda_old() == 1e4);

  for (int order = 1; order <= 4; ++order) {
    config.order = order;
    const RunResult result = run(ParameterVector::Zero(1), flat, config);
    CHECK_FALSE(result.converged);
    CHECK(result.iterations == 5);
    CHECK(result.trajectory.size() == 5);
    for (const IterationRecord& record : result.trajectory) CHECK_FALSE(record.accepted);
  }
}

TEST_CASE("all candidates non-finite is a step failure") {
  const FunctionProblem poisoned(
      1, 1,
      [](const ParameterVector& v) {
        if (v(0) != 1.0) return ResidualVector::Constant(1, std::numeric_limits<double>::quiet_NaN());
        return ResidualVector::Constant(1, 2.0);
      },
      [](const ParameterVector&) { return JacobianMatrix::Constant(1, 1, 1.0); });
  for (int order = 1; order <= 4; ++order) {
    OptimizerConfig config;
    config.order = order;
    LambdaSchedule schedule;
    CHECK_THROWS_AS((void)step(ParameterVector::Constant(1, 1.0), poisoned, schedule, config), StepFailureError);
    CHECK_THROWS_AS((void)run(ParameterVector::Constant(1, 1.0), poisoned, config), StepFailureError);
  }
}

TEST_CASE("Newton variant reports singular Jacobians as step failures") {
  const FunctionProblem flat(
      1, 1, [](const ParameterVector& v) { return ResidualVector::Constant(1, v(0) * v(0) + 1.0); },
      [](const ParameterVector& v) { return JacobianMatrix::Constant(1, 1, 2.0 * v(0)); });
  OptimizerConfig config;
  config.inverse_variant = InverseVariant::newton;
  LambdaSchedule schedule;
  CHECK_THROWS_AS((void)step(ParameterVector::Zero(1), flat, schedule, config), StepFailureError);
}

TEST_CASE("evaluation accounting per iteration") {
  const AnisotropicValleyProblem problem(10.0);
  const std::array<int, 5> expected{0, 21, 42, 105, 189};
  for (int order = 1; order <= 4; ++order) {
    OptimizerConfig config;
    config.order = order;
    LambdaSchedule schedule;
    const ParameterVector x = problem.default_start();
    const StepResult known = step(x, problem.evaluate(x), problem, schedule, config);
    CHECK(known.record.f_evaluations == expected[static_cast<std::size_t>(order)]);
    CHECK(known.record.jacobian_evaluations == 1);
    CHECK(static_cast<int>(known.record.corrections_norms.size()) == order);

    LambdaSchedule fresh;
    CHECK(step(x, problem, fresh, config).record.f_evaluations == expected[static_cast<std::size_t>(order)] + 1);

    const RunResult result = run(x, problem, config);
    long long sum = 1;
    for (const IterationRecord& record : result.trajectory) sum += record.f_evaluations;
    CHECK(result.f_evaluations == sum);
    CHECK(result.jacobian_evaluations == result.iterations);
  }
}

TEST_CASE("accepted steps move lambda_old to the chosen lambda") {
  const AnisotropicValleyProblem problem(1e2);
  OptimizerConfig config;
  config.order = 2;
  LambdaSchedule schedule(1.0);
  const ParameterVector x = problem.default_start();
  const auto grid = schedule.grid();
  const StepResult result = step(x, problem, schedule, config);
  REQUIRE(result.record.accepted);
  CHECK(result.record.chosen_lambda == grid[static_cast<std::size_t>(result.record.lambda_index + 10)]);
  CHECK(schedule.lambda_old() == result.record.chosen_lambda);
  CHECK(problem.evaluate(result.x) == result.fx);
}

TEST_CASE("max_iterations caps the run") {
  const AnisotropicValleyProblem problem(1e6);
  OptimizerConfig config;
  config.max_iterations = 7;
  const RunResult result = run(problem.default_start(), problem, config);
  CHECK_FALSE(result.converged);
  CHECK(result.iterations == 7);
  CHECK(result.trajectory.size() == 7);
}
