#include "hoc/corrections.hpp"

#include "hoc/fdb_terms.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace hoc {

std::string StencilOffset::to_string() const {
  std::ostringstream os;
  os << "x";
  for (std::size_t k = 0; k < multipliers.size(); ++k) {
    if (multipliers[k] == Rational(0)) continue;
    os << " + ";
    if (multipliers[k] != Rational(1)) os << multipliers[k] << ' ';
    os << "c_" << (k + 1);
  }
  return os.str();
}

StencilEvaluationError::StencilEvaluationError(StencilOffset offset, const std::string& reason)
    : std::runtime_error("stencil evaluation failed at " + offset.to_string() + ": " + reason),
      offset_(std::move(offset)) {}

StencilEvaluationCache::StencilEvaluationCache(const Problem& problem, ParameterVector base,
                                               ResidualVector base_value)
    : problem_(&problem), base_(std::move(base)) {
  values_.emplace(StencilOffset::base(), std::move(base_value));
}

void StencilEvaluationCache::set_direction(int k, ParameterVector direction) {
  if (k < 1 || k > 3) throw InvalidInputError("stencil cache: direction index must be 1..3");
  if (direction.size() != base_.size()) throw InvalidInputError("stencil cache: direction dimension mismatch");
  const auto slot = static_cast<std::size_t>(k - 1);
  if (known_[slot] && directions_[slot] != direction) {
    // any cached point that used the old direction is stale
    std::erase_if(values_, [slot](const auto& entry) { return entry.first.multipliers[slot] != Rational(0); });
  }
  directions_[slot] = std::move(direction);
  known_[slot] = true;
}

bool StencilEvaluationCache::has_direction(int k) const {
  return k >= 1 && k <= 3 && known_[static_cast<std::size_t>(k - 1)];
}

ParameterVector StencilEvaluationCache::displacement(const StencilOffset& offset) const {
  ParameterVector out = ParameterVector::Zero(base_.size());
  for (std::size_t k = 0; k < 3; ++k) {
    const Rational& a = offset.multipliers[k];
    if (a == Rational(0)) continue;
    if (!known_[k]) throw std::logic_error("stencil offset " + offset.to_string() + " uses an unset direction");
    out += a.to_double() * directions_[k];
  }
  return out;
}

const ResidualVector& StencilEvaluationCache::value(const StencilOffset& offset) {
  if (auto it = values_.find(offset); it != values_.end()) return it->second;
  const ParameterVector point = base_ + displacement(offset);
  ResidualVector f;
  try {
    f = problem_->evaluate(point);
  } catch (const std::exception& error) {
    throw StencilEvaluationError(offset, error.what());
  }
  ++evaluations_;
  if (!f.allFinite()) throw StencilEvaluationError(offset, "non-finite function value");
  return values_.emplace(offset, std::move(f)).first->second;
}

ResidualVector StencilEvaluationCache::nonlinear_defect(const StencilOffset& offset, const JacobianMatrix& jacobian) {
  const ParameterVector a = displacement(offset);
  const ResidualVector& shifted = value(offset);
  const ResidualVector& base_value = values_.at(StencilOffset::base());
  return shifted - (base_value + jacobian * a);
}

namespace {

using Estimates = std::map<std::vector<int>, ResidualVector>;

StencilTerm f_at(Rational weight, Rational a1, Rational a2 = 0, Rational a3 = 0) {
  return {weight, StencilOffset::along(a1, a2, a3), false};
}

StencilTerm nl_at(Rational weight, Rational a1, Rational a2 = 0, Rational a3 = 0) {
  return {weight, StencilOffset::along(a1, a2, a3), true};
}

const Rational kHalf{1, 2};
const Rational kThreeHalves{3, 2};

// f^(2) c_1 c_k ~ f(x + c_1 + c_k) - f(x + c_k) - (f(x + c_1) - f(x))
StencilFormula cross_difference(int k) {
  Rational ak[3] = {0, 0, 0};
  ak[k - 1] = 1;
  return {{1, k},
          {f_at(1, 1, ak[1], ak[2]), f_at(-1, 0, ak[1], ak[2]), f_at(-1, 1), f_at(1, 0)}};
}

std::vector<StencilPhase> build_scheme(int order) {
  std::vector<StencilPhase> phases;
  switch (order) {
    case 1:
      break;
    case 2:
      phases.push_back({2, {{{1, 1}, {nl_at(2, 1)}}}});
      break;
    case 3:
      phases.push_back({2,
                        {{{1, 1}, {nl_at(16, kHalf), nl_at(-2, 1)}},
                         {{1, 1, 1}, {nl_at(-48, kHalf), nl_at(12, 1)}}}});
      phases.push_back({3, {cross_difference(2)}});
      break;
    case 4:
      phases.push_back({2,
                        {{{1, 1}, {nl_at(24, kHalf), nl_at(-6, 1), nl_at(Rational(8, 9), kThreeHalves)}},
                         {{1, 1, 1}, {nl_at(-120, kHalf), nl_at(48, 1), nl_at(-8, kThreeHalves)}},
                         {{1, 1, 1, 1}, {nl_at(192, kHalf), nl_at(-96, 1), nl_at(Rational(64, 3), kThreeHalves)}}}});
      phases.push_back({3,
                        {{{1, 1, 2},
                          {f_at(4, 0, 1), f_at(-8, kHalf, 1), f_at(4, 1, 1), f_at(-4, 0), f_at(8, kHalf),
                           f_at(-4, 1)}},
                         {{1, 2},
                          {f_at(-3, 0, 1), f_at(4, kHalf, 1), f_at(-1, 1, 1), f_at(3, 0), f_at(-4, kHalf),
                           f_at(1, 1)}},
                         {{2, 2}, {nl_at(2, 0, 1)}}}});
      phases.push_back({4, {cross_difference(3)}});
      break;
    default:
      throw InvalidInputError("correction order " + std::to_string(order) + " outside [1, " +
                              std::to_string(kMaxCorrectionOrder) + "]");
  }
  return phases;
}

const CorrectionIdentity& identity_for(int n) {
  static const std::array<CorrectionIdentity, kMaxCorrectionOrder + 1> identities = [] {
    std::array<CorrectionIdentity, kMaxCorrectionOrder + 1> out{};
    for (int k = 2; k <= kMaxCorrectionOrder; ++k) out[static_cast<std::size_t>(k)] = correction_identity_terms(k);
    return out;
  }();
  if (n < 2 || n > kMaxCorrectionOrder) throw InvalidInputError("no correction identity for order " + std::to_string(n));
  return identities[static_cast<std::size_t>(n)];
}

Rational power(const Rational& base, int exponent) {
  Rational out = 1;
  for (int i = 0; i < exponent; ++i) out *= base;
  return out;
}

void ensure_weights_verified() {
  static const bool verified = [] {
    verify_stencil_weights();
    return true;
  }();
  (void)verified;
}

}  // namespace

ResidualVector estimate(const StencilFormula& formula, StencilEvaluationCache& cache, const JacobianMatrix& jacobian) {
  ResidualVector out = ResidualVector::Zero(cache.value(StencilOffset::base()).size());
  for (const StencilTerm& term : formula.terms) {
    const double w = term.weight.to_double();
    if (term.nonlinear) {
      out += w * cache.nonlinear_defect(term.offset, jacobian);
    } else {
      out += w * cache.value(term.offset);
    }
  }
  return out;
}

const std::vector<StencilPhase>& stencil_scheme(int order) {
  static const std::array<std::vector<StencilPhase>, kMaxCorrectionOrder + 1> schemes = [] {
    std::array<std::vector<StencilPhase>, kMaxCorrectionOrder + 1> out;
    for (int k = 1; k <= kMaxCorrectionOrder; ++k) out[static_cast<std::size_t>(k)] = build_scheme(k);
    return out;
  }();
  if (order < 1 || order > kMaxCorrectionOrder) {
    throw InvalidInputError("correction order " + std::to_string(order) + " outside [1, " +
                            std::to_string(kMaxCorrectionOrder) + "]");
  }
  return schemes[static_cast<std::size_t>(order)];
}

std::vector<UnidirectionalStencil> unidirectional_stencils(int order) {
  std::vector<UnidirectionalStencil> out;
  if (order < 3 || order > kMaxCorrectionOrder) return out;
  const StencilPhase& phase = stencil_scheme(order).front();
  for (const StencilFormula& formula : phase.formulas) {
    UnidirectionalStencil stencil;
    stencil.target_order = static_cast<int>(formula.target.size());
    for (const StencilTerm& term : formula.terms) {
      stencil.nodes.push_back(term.offset.multipliers[0]);
      stencil.weights.push_back(term.weight);
    }
    out.push_back(std::move(stencil));
  }
  return out;
}

std::vector<Rational> taylor_moments(const UnidirectionalStencil& stencil, int max_order) {
  std::vector<Rational> moments;
  for (int k = 2; k <= max_order; ++k) {
    Rational sum = 0;
    for (std::size_t j = 0; j < stencil.nodes.size(); ++j) sum += stencil.weights[j] * power(stencil.nodes[j], k);
    moments.push_back(sum / factorial(k));
  }
  return moments;
}

std::vector<Rational> solve_unidirectional_weights(const std::vector<Rational>& nodes, int target_order) {
  // rows k = 2..n+1: sum_j w_j a_j^k / k! = [k == target]
  const std::size_t n = nodes.size();
  if (n == 0 || target_order < 2 || target_order > static_cast<int>(n) + 1) {
    throw InvalidInputError("unidirectional stencil: target order outside the node system");
  }
  std::vector<std::vector<Rational>> rows(n, std::vector<Rational>(n + 1));
  for (std::size_t r = 0; r < n; ++r) {
    const int k = static_cast<int>(r) + 2;
    for (std::size_t j = 0; j < n; ++j) rows[r][j] = power(nodes[j], k) / factorial(k);
    rows[r][n] = k == target_order ? 1 : 0;
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && rows[pivot][col] == Rational(0)) ++pivot;
    if (pivot == n) throw InvalidInputError("unidirectional stencil: nodes give a singular Taylor system");
    std::swap(rows[col], rows[pivot]);
    const Rational lead = rows[col][col];
    for (auto& entry : rows[col]) entry /= lead;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || rows[r][col] == Rational(0)) continue;
      const Rational factor = rows[r][col];
      for (std::size_t j = col; j <= n; ++j) rows[r][j] -= factor * rows[col][j];
    }
  }
  std::vector<Rational> weights(n);
  for (std::size_t j = 0; j < n; ++j) weights[j] = rows[j][n];
  return weights;
}

void verify_stencil_weights() {
  for (int order = 3; order <= kMaxCorrectionOrder; ++order) {
    for (const UnidirectionalStencil& stencil : unidirectional_stencils(order)) {
      const auto moments = taylor_moments(stencil, order);
      for (std::size_t i = 0; i < moments.size(); ++i) {
        const Rational expected = static_cast<int>(i) + 2 == stencil.target_order ? 1 : 0;
        if (moments[i] != expected) {
          throw std::logic_error("order-" + std::to_string(order) + " stencil for f^(" +
                                 std::to_string(stencil.target_order) + ") fails its Taylor check");
        }
      }
      if (solve_unidirectional_weights(stencil.nodes, stencil.target_order) != stencil.weights) {
        throw std::logic_error("order-" + std::to_string(order) + " stencil weights disagree with the Taylor inverse");
      }
    }
  }
}

ParameterVector CorrectionSeries::step() const {
  if (corrections.empty()) return {};
  ParameterVector total = corrections.front();
  for (std::size_t i = 1; i < corrections.size(); ++i) total += corrections[i];
  return total;
}

ParameterVector solve_correction(int n, const Estimates& estimates, const InverseApplier& inverse) {
  const CorrectionIdentity& identity = identity_for(n);
  ResidualVector sum;
  for (const CorrectionTerm& term : identity.rest) {
    const auto it = estimates.find(term.c_orders);
    if (it == estimates.end()) throw std::logic_error("missing derivative estimate for " + to_string(term));
    const double weight = (term.coefficient / identity.lead.coefficient).to_double();
    if (sum.size() == 0) {
      sum = weight * it->second;
    } else {
      sum += weight * it->second;
    }
  }
  return -inverse(sum);
}

CorrectionSeries compute_corrections(const StepContext& ctx, const ParameterVector& c1, int order,
                                     StencilEvaluationCache& cache) {
  const auto& phases = stencil_scheme(order);
  ensure_weights_verified();
  require_finite(c1, "correction: c_1");

  CorrectionSeries series;
  series.requested_order = order;
  series.corrections.push_back(c1);
  const int evaluations_before = cache.evaluation_count();
  cache.set_direction(1, c1);
  const double limit = kCorrectionGrowthLimit * c1.norm();

  Estimates estimates;
  for (const StencilPhase& phase : phases) {
    for (const StencilFormula& formula : phase.formulas) {
      estimates[formula.target] = estimate(formula, cache, ctx.jacobian);
    }
    ParameterVector next = solve_correction(phase.solves, estimates, ctx.inverse);
    if (!next.allFinite() || next.norm() > limit) {
      series.truncated = true;
      break;
    }
    if (phase.solves <= 3) cache.set_direction(phase.solves, next);
    series.corrections.push_back(std::move(next));
  }
  series.evaluation_count = cache.evaluation_count() - evaluations_before;
  return series;
}

CorrectionSeries compute_corrections(const StepContext& ctx, const ParameterVector& c1, int order) {
  StencilEvaluationCache cache(ctx.problem, ctx.x, ctx.fx);
  return compute_corrections(ctx, c1, order, cache);
}

CorrectionSeries correct_order2(const StepContext& ctx, const ParameterVector& c1) {
  return compute_corrections(ctx, c1, 2);
}

CorrectionSeries correct_order3(const StepContext& ctx, const ParameterVector& c1) {
  return compute_corrections(ctx, c1, 3);
}

CorrectionSeries correct_order4(const StepContext& ctx, const ParameterVector& c1) {
  return compute_corrections(ctx, c1, 4);
}

}  // namespace hoc
