#include "hoc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

namespace hoc {

LambdaSchedule::LambdaSchedule(double lambda_old) { set_lambda_old(lambda_old); }

void LambdaSchedule::set_lambda_old(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInputError("lambda_old must be positive and finite");
  lambda_old_ = lambda;
}

double LambdaSchedule::lambda(int n) const {
  if (n < -kHalfWidth || n > kHalfWidth) throw InvalidInputError("lambda grid index outside [-10, 10]");
  const double t = static_cast<double>(n) / kHalfWidth;
  return lambda_old_ * std::pow(kExponentBase, t * t * t);
}

std::vector<double> LambdaSchedule::grid() const {
  std::vector<double> out;
  out.reserve(kGridSize);
  for (int n = -kHalfWidth; n <= kHalfWidth; ++n) out.push_back(lambda(n));
  return out;
}

void OptimizerConfig::validate() const {
  if (order < 1 || order > kMaxCorrectionOrder) throw InvalidInputError("order must be in [1, 4]");
  if (max_iterations < 1) throw InvalidInputError("max_iterations must be >= 1");
  if (!(convergence_tol > 0.0)) throw InvalidInputError("convergence_tol must be > 0");
  if (!(initial_lambda > 0.0) || !std::isfinite(initial_lambda)) throw InvalidInputError("initial_lambda must be > 0");
  if (!(rejection_lambda_factor >= 1.0)) throw InvalidInputError("rejection_lambda_factor must be >= 1");
  if (max_consecutive_rejections < 1) throw InvalidInputError("max_consecutive_rejections must be >= 1");
  if (threads < 1) throw InvalidInputError("threads must be >= 1");
}

namespace {

struct Candidate {
  double lambda = 0.0;
  CorrectionSeries series;
  ParameterVector endpoint;
  ResidualVector value;
  double norm = std::numeric_limits<double>::infinity();
  int evaluations = 0;
};

Candidate evaluate_candidate(const StepContext& ctx, int order, double lambda) {
  Candidate candidate;
  candidate.lambda = lambda;
  try {
    const ParameterVector c1 = -ctx.inverse(ctx.fx);
    StencilEvaluationCache cache(ctx.problem, ctx.x, ctx.fx);
    try {
      candidate.series = compute_corrections(ctx, c1, order, cache);
    } catch (const StencilEvaluationError&) {
      candidate.evaluations = cache.evaluation_count();
      return candidate;
    }
    candidate.evaluations = candidate.series.evaluation_count;
    candidate.endpoint = ctx.x + candidate.series.step();
    ++candidate.evaluations;
    candidate.value = ctx.problem.evaluate(candidate.endpoint);
    if (candidate.value.allFinite()) candidate.norm = candidate.value.norm();
  } catch (const InvalidInputError&) {
    // non-finite c_1 or endpoint outside the problem's domain
  } catch (const SingularMatrixError&) {
  }
  return candidate;
}

template <typename Fn>
void for_each_index(int count, int threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = std::min(threads, count);
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&fn, w, workers, count] {
      for (int i = w; i < count; i += workers) fn(i);
    });
  }
}

}  // namespace

StepResult step(const ParameterVector& x, const ResidualVector& fx, const Problem& problem,
                LambdaSchedule& schedule, const OptimizerConfig& config, int iteration) {
  config.validate();
  require_finite(x, "step: x");
  require_finite(fx, "step: f(x)");

  const JacobianMatrix jacobian = problem.jacobian(x);
  require_finite(jacobian, "step: Jacobian");

  std::vector<Candidate> candidates;
  std::vector<int> grid_indices;
  if (config.inverse_variant == InverseVariant::levenberg_marquardt) {
    const auto factorization = std::make_shared<const DampedPseudoInverse>(jacobian);
    candidates.resize(LambdaSchedule::kGridSize);
    for (int n = -LambdaSchedule::kHalfWidth; n <= LambdaSchedule::kHalfWidth; ++n) grid_indices.push_back(n);
    for_each_index(LambdaSchedule::kGridSize, config.threads, [&](int i) {
      const double lambda = schedule.lambda(grid_indices[static_cast<std::size_t>(i)]);
      const StepContext ctx{problem, x, fx, jacobian, make_levenberg_marquardt_inverse(factorization, lambda)};
      candidates[static_cast<std::size_t>(i)] = evaluate_candidate(ctx, config.order, lambda);
    });
  } else {
    InverseApplier inverse;
    if (config.inverse_variant == InverseVariant::newton) {
      try {
        inverse = make_newton_inverse(jacobian);
      } catch (const SingularMatrixError& error) {
        throw StepFailureError(std::string("step: ") + error.what());
      }
    } else {
      inverse = make_gauss_newton_inverse(std::make_shared<const DampedPseudoInverse>(jacobian));
    }
    grid_indices.push_back(0);
    const StepContext ctx{problem, x, fx, jacobian, std::move(inverse)};
    candidates.push_back(evaluate_candidate(ctx, config.order, 0.0));
  }

  // strict comparison in index order keeps the lowest index on ties
  std::size_t best = candidates.size();
  int evaluations = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    evaluations += candidates[i].evaluations;
    if (!std::isfinite(candidates[i].norm)) continue;
    if (best == candidates.size() || candidates[i].norm < candidates[best].norm) best = i;
  }
  if (best == candidates.size()) throw StepFailureError("step: every candidate produced a non-finite result");

  const Candidate& chosen = candidates[best];
  const double current_norm = fx.norm();

  StepResult result;
  IterationRecord& record = result.record;
  record.iteration = iteration;
  record.lambda_index = grid_indices[best];
  record.chosen_lambda = chosen.lambda;
  record.f_evaluations = evaluations;
  record.jacobian_evaluations = 1;
  record.truncated = chosen.series.truncated;
  for (const auto& c : chosen.series.corrections) record.corrections_norms.push_back(c.norm());
  record.step_norm = chosen.series.step().norm();
  record.accepted = chosen.norm < current_norm;

  if (record.accepted) {
    result.x = chosen.endpoint;
    result.fx = chosen.value;
    record.residual_norm = chosen.norm;
    if (config.inverse_variant == InverseVariant::levenberg_marquardt) schedule.set_lambda_old(chosen.lambda);
  } else {
    result.x = x;
    result.fx = fx;
    record.residual_norm = current_norm;
    if (config.inverse_variant == InverseVariant::levenberg_marquardt) {
      schedule.set_lambda_old(schedule.lambda_old() * config.rejection_lambda_factor);
    }
  }
  return result;
}

StepResult step(const ParameterVector& x, const Problem& problem, LambdaSchedule& schedule,
                const OptimizerConfig& config, int iteration) {
  const ResidualVector fx = problem.evaluate(x);
  StepResult result = step(x, fx, problem, schedule, config, iteration);
  ++result.record.f_evaluations;
  return result;
}

RunResult run(const ParameterVector& x0, const Problem& problem, const OptimizerConfig& config) {
  config.validate();
  require_finite(x0, "run: x0");
  if (x0.size() != problem.input_dim()) throw InvalidInputError("run: x0 has the wrong dimension");

  RunResult out;
  out.x = x0;
  ResidualVector fx = problem.evaluate(x0);
  require_finite(fx, "run: f(x0)");
  out.f_evaluations = 1;
  out.residual_norm = fx.norm();
  if (out.residual_norm <= config.convergence_tol) {
    out.converged = true;
    return out;
  }

  LambdaSchedule schedule(config.initial_lambda);
  int consecutive_rejections = 0;
  for (int iteration = 1; iteration <= config.max_iterations; ++iteration) {
    StepResult result = step(out.x, fx, problem, schedule, config, iteration);
    out.iterations = iteration;
    out.f_evaluations += result.record.f_evaluations;
    out.jacobian_evaluations += result.record.jacobian_evaluations;
    consecutive_rejections = result.record.accepted ? 0 : consecutive_rejections + 1;
    out.residual_norm = result.record.residual_norm;
    out.trajectory.push_back(std::move(result.record));
    out.x = std::move(result.x);
    fx = std::move(result.fx);
    if (out.residual_norm <= config.convergence_tol) {
      out.converged = true;
      break;
    }
    if (consecutive_rejections >= config.max_consecutive_rejections) break;
  }
  return out;
}

}  // namespace hoc
