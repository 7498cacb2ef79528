#pragma once

#include "hoc/linalg.hpp"
#include "hoc/problems.hpp"
#include "hoc/rational.hpp"

#include <array>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace hoc {

/// Highest correction order with a stencil scheme.
inline constexpr int kMaxCorrectionOrder = 4;

/// Corrections whose norm exceeds this multiple of |c_1| end the series.
inline constexpr double kCorrectionGrowthLimit = 1e3;

/// Stencil point x + a_1 c_1 + a_2 c_2 + a_3 c_3 with exact multipliers.
struct StencilOffset {
  std::array<Rational, 3> multipliers{};

  static StencilOffset base() { return {}; }
  static StencilOffset along(Rational a1, Rational a2 = 0, Rational a3 = 0) { return {{a1, a2, a3}}; }

  [[nodiscard]] std::string to_string() const;
  friend auto operator<=>(const StencilOffset&, const StencilOffset&) = default;
  friend bool operator==(const StencilOffset&, const StencilOffset&) = default;
};

class StencilEvaluationError : public std::runtime_error {
 public:
  StencilEvaluationError(StencilOffset offset, const std::string& reason);
  [[nodiscard]] const StencilOffset& offset() const { return offset_; }

 private:
  StencilOffset offset_;
};

/// Function values at stencil points of one step, keyed by exact offset so
/// coincident points are evaluated once. The base point is seeded with f(x)
/// and does not count as an evaluation.
class StencilEvaluationCache {
 public:
  StencilEvaluationCache(const Problem& problem, ParameterVector base, ResidualVector base_value);

  /// Sets c_k (k in 1..3). Offsets using direction k become resolvable.
  void set_direction(int k, ParameterVector direction);
  [[nodiscard]] bool has_direction(int k) const;

  [[nodiscard]] ParameterVector displacement(const StencilOffset& offset) const;
  /// f(x + a)
  const ResidualVector& value(const StencilOffset& offset);
  /// f_nl(x + a) = f(x + a) - (f(x) + J a)
  ResidualVector nonlinear_defect(const StencilOffset& offset, const JacobianMatrix& jacobian);

  [[nodiscard]] int evaluation_count() const { return evaluations_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] const ParameterVector& base_point() const { return base_; }

 private:
  const Problem* problem_;
  ParameterVector base_;
  std::array<ParameterVector, 3> directions_;
  std::array<bool, 3> known_{};
  std::map<StencilOffset, ResidualVector> values_;
  int evaluations_ = 0;
};

/// One term of a stencil combination: weight * f(x+a), or weight * f_nl(x+a).
struct StencilTerm {
  Rational weight;
  StencilOffset offset;
  bool nonlinear = false;
};

/// Finite-difference estimate of f^(d) c_(k1) ... c_(kd), with d = target.size().
struct StencilFormula {
  std::vector<int> target;
  std::vector<StencilTerm> terms;
};

/// Formulas that become computable once c_1..c_(solves - 1) are known; the
/// phase ends by solving for c_solves.
struct StencilPhase {
  int solves = 0;
  std::vector<StencilFormula> formulas;
};

/// Evaluates one stencil combination through the cache.
ResidualVector estimate(const StencilFormula& formula, StencilEvaluationCache& cache, const JacobianMatrix& jacobian);

/// Phase tables for orders 1..4 (order 1 has none). Order 2 needs one new
/// point, order 3 four, order 4 eight.
const std::vector<StencilPhase>& stencil_scheme(int order);

/// Weights over points x + a_j c_1 that estimate f^(target) c_1 ... c_1 from
/// f_nl values.
struct UnidirectionalStencil {
  std::vector<Rational> nodes;
  std::vector<Rational> weights;
  int target_order = 0;
};

/// The hard-coded along-c_1 stencils: for order 3 targeting 2 and 3, for
/// order 4 targeting 2, 3 and 4.
std::vector<UnidirectionalStencil> unidirectional_stencils(int order);

/// sum_j w_j a_j^k / k! for k = 2..max_order; entry k - 2 is the weight the
/// combination places on f^(k) c_1^k.
std::vector<Rational> taylor_moments(const UnidirectionalStencil& stencil, int max_order);

/// Solves the exact Taylor system for the weights of the given nodes that
/// isolate f^(target) and cancel the other orders 2 .. 1 + nodes.size().
std::vector<Rational> solve_unidirectional_weights(const std::vector<Rational>& nodes, int target_order);

/// Checks every hard-coded unidirectional stencil against the Taylor system.
/// Throws std::logic_error on mismatch.
void verify_stencil_weights();

struct StepContext {
  const Problem& problem;
  ParameterVector x;
  ResidualVector fx;
  JacobianMatrix jacobian;
  InverseApplier inverse;
};

/// Corrections c_1 ... c_order for one candidate step. The corrected step is
/// their sum.
struct CorrectionSeries {
  int requested_order = 1;
  std::vector<ParameterVector> corrections;
  /// New f evaluations made while building this series.
  int evaluation_count = 0;
  /// Set when a correction grew past kCorrectionGrowthLimit * |c_1| (or was
  /// non-finite) and the series was cut back to the previous order.
  bool truncated = false;

  [[nodiscard]] int order() const { return static_cast<int>(corrections.size()); }
  [[nodiscard]] ParameterVector step() const;
};

/// Runs the order's stencil phases starting from c_1. Every J^{-1} goes
/// through ctx.inverse.
CorrectionSeries compute_corrections(const StepContext& ctx, const ParameterVector& c1, int order,
                                     StencilEvaluationCache& cache);
CorrectionSeries compute_corrections(const StepContext& ctx, const ParameterVector& c1, int order);

CorrectionSeries correct_order2(const StepContext& ctx, const ParameterVector& c1);
CorrectionSeries correct_order3(const StepContext& ctx, const ParameterVector& c1);
CorrectionSeries correct_order4(const StepContext& ctx, const ParameterVector& c1);

/// c_n = -J^{-1} sum(rest) / n!, given estimates of each f^(d) c... product in
/// the order-n identity, keyed by c_orders.
ParameterVector solve_correction(int n, const std::map<std::vector<int>, ResidualVector>& estimates,
                                 const InverseApplier& inverse);

}  // namespace hoc
