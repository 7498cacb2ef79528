#pragma once

#include "hoc/corrections.hpp"
#include "hoc/linalg.hpp"
#include "hoc/problems.hpp"

#include <stdexcept>
#include <vector>

namespace hoc {

/// Damping grid lambda_n = lambda_old * 10000^((n/10)^3), n = -10..10.
class LambdaSchedule {
 public:
  static constexpr int kHalfWidth = 10;
  static constexpr int kGridSize = 2 * kHalfWidth + 1;
  static constexpr double kExponentBase = 10000.0;

  explicit LambdaSchedule(double lambda_old = 1.0);

  [[nodiscard]] double lambda_old() const { return lambda_old_; }
  void set_lambda_old(double lambda);

  [[nodiscard]] double lambda(int n) const;
  /// Grid values in order n = -10, ..., 10.
  [[nodiscard]] std::vector<double> grid() const;

 private:
  double lambda_old_;
};

struct OptimizerConfig {
  /// 1 is plain Levenberg-Marquardt; 2..4 add stencil corrections.
  int order = 1;
  int max_iterations = 20000;
  /// Converged once |f| <= convergence_tol.
  double convergence_tol = 1e-9;
  InverseVariant inverse_variant = InverseVariant::levenberg_marquardt;
  double initial_lambda = 1.0;
  /// Factor applied to lambda_old after a step in which no candidate improved |f|.
  double rejection_lambda_factor = 1e4;
  /// The run stops after this many consecutive non-improving iterations.
  int max_consecutive_rejections = 5;
  /// Workers evaluating lambda candidates; results do not depend on it.
  int threads = 1;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  /// Grid index of the chosen candidate (0 for single-candidate variants).
  int lambda_index = 0;
  double chosen_lambda = 0.0;
  /// |f| after the iteration (unchanged when the step is rejected).
  double residual_norm = 0.0;
  double step_norm = 0.0;
  /// |c_1|, ..., |c_k| of the chosen candidate.
  std::vector<double> corrections_norms;
  /// f evaluations in this iteration: f(x), every stencil point and every
  /// candidate endpoint.
  int f_evaluations = 0;
  int jacobian_evaluations = 0;
  bool accepted = false;
  bool truncated = false;
};

class StepFailureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepResult {
  /// Next iterate and f there; equal to the inputs when the step is rejected.
  ParameterVector x;
  ResidualVector fx;
  IterationRecord record;
};

/// One iteration from x with known f(x): factor J(x) once, build the
/// corrected step for every lambda candidate, evaluate each endpoint and keep
/// the lowest |f| (ties go to the smaller grid index). The schedule's
/// lambda_old moves to the chosen lambda on acceptance and is multiplied by
/// rejection_lambda_factor otherwise. Newton and Gauss-Newton variants use a
/// single undamped candidate.
StepResult step(const ParameterVector& x, const ResidualVector& fx, const Problem& problem,
                LambdaSchedule& schedule, const OptimizerConfig& config, int iteration = 1);

/// As above, evaluating f(x) first (counted in the record).
StepResult step(const ParameterVector& x, const Problem& problem, LambdaSchedule& schedule,
                const OptimizerConfig& config, int iteration = 1);

struct RunResult {
  std::vector<IterationRecord> trajectory;
  bool converged = false;
  int iterations = 0;
  ParameterVector x;
  double residual_norm = 0.0;
  /// f and J evaluations including the initial f(x0).
  long long f_evaluations = 0;
  long long jacobian_evaluations = 0;
};

RunResult run(const ParameterVector& x0, const Problem& problem, const OptimizerConfig& config);

}  // namespace hoc
