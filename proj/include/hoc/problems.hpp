#pragma once

#include "hoc/linalg.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hoc {

/// A residual function f: R^p -> R^m with its analytic Jacobian.
/// Implementations are immutable and must tolerate concurrent calls.
class Problem {
 public:
  virtual ~Problem() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual int input_dim() const = 0;
  [[nodiscard]] virtual int output_dim() const = 0;
  [[nodiscard]] virtual ResidualVector evaluate(const ParameterVector& x) const = 0;
  [[nodiscard]] virtual JacobianMatrix jacobian(const ParameterVector& x) const = 0;
  /// Conventional starting point for benchmark runs.
  [[nodiscard]] virtual ParameterVector default_start() const = 0;
};

ResidualVector valley_eval(double anisotropy, double x, double y);
JacobianMatrix valley_jacobian(double anisotropy, double x, double y);

/// f(x, y) = (x + y^2, K (y - x^2)): a curved valley whose width shrinks as K
/// grows, with its root at the origin.
class AnisotropicValleyProblem final : public Problem {
 public:
  explicit AnisotropicValleyProblem(double anisotropy);

  [[nodiscard]] double anisotropy() const { return anisotropy_; }

  [[nodiscard]] std::string name() const override;
  [[nodiscard]] int input_dim() const override { return 2; }
  [[nodiscard]] int output_dim() const override { return 2; }
  [[nodiscard]] ResidualVector evaluate(const ParameterVector& x) const override;
  [[nodiscard]] JacobianMatrix jacobian(const ParameterVector& x) const override;
  /// (pi, e)
  [[nodiscard]] ParameterVector default_start() const override;

 private:
  double anisotropy_;
};

/// f(x) = A x - b.
class AffineProblem final : public Problem {
 public:
  AffineProblem(Eigen::MatrixXd matrix, Eigen::VectorXd offset);

  [[nodiscard]] std::string name() const override { return "affine"; }
  [[nodiscard]] int input_dim() const override { return static_cast<int>(matrix_.cols()); }
  [[nodiscard]] int output_dim() const override { return static_cast<int>(matrix_.rows()); }
  [[nodiscard]] ResidualVector evaluate(const ParameterVector& x) const override;
  [[nodiscard]] JacobianMatrix jacobian(const ParameterVector& x) const override;
  [[nodiscard]] ParameterVector default_start() const override;

 private:
  Eigen::MatrixXd matrix_;
  Eigen::VectorXd offset_;
};

/// Fixed 2-D affine instance used by the CLI: A = [[2, 1], [1, 3]], b = (1, 2).
std::shared_ptr<const AffineProblem> make_reference_affine_problem();

/// Polynomial map of total degree <= 4 written as a Taylor expansion about the
/// origin,
///
///   f(x) = sum_{l=0}^{degree} (1/l!) C_l[x, ..., x],
///
/// where C_l is an m x p^l coefficient tensor symmetric in its last l indices.
/// Derivative tensors of every order are available analytically, which makes
/// this the oracle for the finite-difference stencils.
class PolynomialMap final : public Problem {
 public:
  /// `tensors[l]` holds C_l flattened as index i * p^l + j1 * p^(l-1) + ... + jl.
  PolynomialMap(int input_dim, int output_dim, std::vector<std::vector<double>> tensors, std::string label);

  [[nodiscard]] int degree() const { return static_cast<int>(tensors_.size()) - 1; }

  [[nodiscard]] std::string name() const override { return label_; }
  [[nodiscard]] int input_dim() const override { return input_dim_; }
  [[nodiscard]] int output_dim() const override { return output_dim_; }
  [[nodiscard]] ResidualVector evaluate(const ParameterVector& x) const override;
  [[nodiscard]] JacobianMatrix jacobian(const ParameterVector& x) const override;
  [[nodiscard]] ParameterVector default_start() const override { return start_; }
  void set_default_start(ParameterVector start) { start_ = std::move(start); }

  /// f^(k)(x)[v_1, ..., v_k] for k = directions.size(); k = 0 gives f(x).
  [[nodiscard]] ResidualVector directional_derivative(const ParameterVector& x,
                                                      std::span<const ParameterVector> directions) const;

 private:
  // C_l contracted with `factors` in its trailing slots.
  [[nodiscard]] Eigen::VectorXd contract(int l, std::span<const ParameterVector* const> factors) const;

  int input_dim_;
  int output_dim_;
  std::vector<std::vector<double>> tensors_;
  std::string label_;
  ParameterVector start_;
};

/// Seeded member of the exactness family used by the stencil tests: f = A phi(x)
/// with phi_k(x) = x_k + q_k(x_1), q_k a polynomial of degree <= `degree` with
/// no constant or linear part (q_1 = 0), and A well conditioned. The natural
/// pathway of such a map is itself a polynomial in t of degree <= `degree`,
/// and every mixed difference used by the stencils is exact on it.
/// Coefficients of q_k and the off-diagonal part of A are drawn from [-1, 1].
std::shared_ptr<const PolynomialMap> polynomial_test_family(int degree, int dims, std::uint64_t seed);

/// Dense polynomial map with every tensor entry (symmetrised) drawn from
/// [-1, 1]; the linear part is shifted to keep the Jacobian at the origin
/// invertible when p = m.
std::shared_ptr<const PolynomialMap> random_polynomial_map(int degree, int input_dim, int output_dim,
                                                           std::uint64_t seed);

/// Maximum relative deviation between `problem.jacobian` and central
/// differences with step 1e-6 (1 + |x_j|).
double jacobian_consistency_error(const Problem& problem, const ParameterVector& x);

}  // namespace hoc
