#pragma once

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

namespace hoc {

/// Point in the input space of f (length p).
using ParameterVector = Eigen::VectorXd;
/// Value of f (length m). Its Euclidean norm is the figure of merit |f|.
using ResidualVector = Eigen::VectorXd;
/// m x p matrix of first derivatives, entry (i, j) = d f_i / d x_j.
using JacobianMatrix = Eigen::MatrixXd;

class InvalidInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws InvalidInputError naming `what` if any entry is NaN or infinite.
void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& values, const std::string& what);

/// Thin singular value decomposition J = U diag(sigma) V^T with sigma
/// non-increasing. U is m x k, V is p x k, k = min(m, p).
struct SingularValueDecomposition {
  Eigen::MatrixXd u;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd v;

  [[nodiscard]] Eigen::MatrixXd reconstruct() const;
  [[nodiscard]] double condition_number() const;
};

SingularValueDecomposition svd(const JacobianMatrix& jacobian);

/// Relative threshold below which singular values are treated as zero when
/// lambda = 0 (minimum-norm pseudo-inverse).
inline constexpr double kRankTolerance = 1e-14;

/// One SVD of J, reused for every damping value applied against it.
class DampedPseudoInverse {
 public:
  explicit DampedPseudoInverse(const JacobianMatrix& jacobian);

  /// (J^T J + lambda I)^{-1} J^T v, evaluated as V diag(s / (s^2 + lambda)) U^T v.
  /// At lambda = 0, singular values below kRankTolerance * sigma_max are dropped.
  [[nodiscard]] ParameterVector apply(double lambda, const ResidualVector& v) const;

  /// True when lambda = 0 would drop at least one singular direction.
  [[nodiscard]] bool rank_deficient() const;

  [[nodiscard]] const SingularValueDecomposition& decomposition() const { return svd_; }
  [[nodiscard]] Eigen::Index rows() const { return svd_.u.rows(); }
  [[nodiscard]] Eigen::Index cols() const { return svd_.v.rows(); }

 private:
  SingularValueDecomposition svd_;
};

ParameterVector damped_pseudo_inverse_apply(const JacobianMatrix& jacobian, double lambda,
                                            const ResidualVector& v);

/// Solves J y = v for square J. Throws SingularMatrixError when J is
/// numerically singular and InvalidInputError when J is not square.
ParameterVector newton_inverse_apply(const JacobianMatrix& jacobian, const ResidualVector& v);

/// An application of one of the J^{-1} variants to a residual-space vector.
/// Every J^{-1} occurrence within one correction series goes through the same
/// applier.
using InverseApplier = std::function<ParameterVector(const ResidualVector&)>;

enum class InverseVariant { newton, gauss_newton, levenberg_marquardt };

InverseVariant parse_inverse_variant(const std::string& name);
std::string to_string(InverseVariant variant);

/// [J^{-1}]_Newton; the LU factorization is computed once and shared by copies.
InverseApplier make_newton_inverse(const JacobianMatrix& jacobian);
/// [J^{-1}]_GN, the lambda = 0 limit of the damped inverse.
InverseApplier make_gauss_newton_inverse(std::shared_ptr<const DampedPseudoInverse> factorization);
/// [J^{-1}]_LM(lambda).
InverseApplier make_levenberg_marquardt_inverse(std::shared_ptr<const DampedPseudoInverse> factorization,
                                                double lambda);

}  // namespace hoc
