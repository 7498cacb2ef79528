#include "hoc/linalg.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <memory>

namespace hoc {

void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& values, const std::string& what) {
  if (!values.allFinite()) throw InvalidInputError(what + " contains non-finite entries");
}

Eigen::MatrixXd SingularValueDecomposition::reconstruct() const {
  return u * sigma.asDiagonal() * v.transpose();
}

double SingularValueDecomposition::condition_number() const {
  if (sigma.size() == 0) return 0.0;
  const double smallest = sigma(sigma.size() - 1);
  return smallest == 0.0 ? std::numeric_limits<double>::infinity() : sigma(0) / smallest;
}

SingularValueDecomposition svd(const JacobianMatrix& jacobian) {
  if (jacobian.size() == 0) throw InvalidInputError("svd: empty matrix");
  require_finite(jacobian, "svd: Jacobian");
  // JacobiSVD is the accurate variant; the matrices here are small.
  Eigen::JacobiSVD<Eigen::MatrixXd> solver(jacobian, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

DampedPseudoInverse::DampedPseudoInverse(const JacobianMatrix& jacobian) : svd_(svd(jacobian)) {}

ParameterVector DampedPseudoInverse::apply(double lambda, const ResidualVector& v) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidInputError("damped pseudo-inverse: lambda must be finite and non-negative");
  }
  if (v.size() != svd_.u.rows()) throw InvalidInputError("damped pseudo-inverse: dimension mismatch");

  Eigen::VectorXd rotated = svd_.u.transpose() * v;
  const double cutoff = svd_.sigma.size() > 0 ? kRankTolerance * svd_.sigma(0) : 0.0;
  for (Eigen::Index i = 0; i < rotated.size(); ++i) {
    const double s = svd_.sigma(i);
    if (lambda == 0.0) {
      rotated(i) = s > cutoff ? rotated(i) / s : 0.0;
    } else {
      rotated(i) *= s / (s * s + lambda);
    }
  }
  return svd_.v * rotated;
}

bool DampedPseudoInverse::rank_deficient() const {
  if (svd_.sigma.size() == 0) return true;
  const double cutoff = kRankTolerance * svd_.sigma(0);
  return svd_.v.rows() > svd_.sigma.size() || (svd_.sigma.array() <= cutoff).any();
}

ParameterVector damped_pseudo_inverse_apply(const JacobianMatrix& jacobian, double lambda,
                                            const ResidualVector& v) {
  return DampedPseudoInverse(jacobian).apply(lambda, v);
}

namespace {

std::shared_ptr<const Eigen::FullPivLU<Eigen::MatrixXd>> factor_square(const JacobianMatrix& jacobian) {
  if (jacobian.rows() != jacobian.cols() || jacobian.size() == 0) {
    throw InvalidInputError("Newton inverse requires a non-empty square Jacobian");
  }
  require_finite(jacobian, "Newton inverse: Jacobian");
  auto lu = std::make_shared<Eigen::FullPivLU<Eigen::MatrixXd>>(jacobian);
  if (!lu->isInvertible()) throw SingularMatrixError("Newton inverse: Jacobian is singular");
  return lu;
}

}  // namespace

ParameterVector newton_inverse_apply(const JacobianMatrix& jacobian, const ResidualVector& v) {
  if (v.size() != jacobian.rows()) throw InvalidInputError("Newton inverse: dimension mismatch");
  return factor_square(jacobian)->solve(v);
}

InverseVariant parse_inverse_variant(const std::string& name) {
  if (name == "newton") return InverseVariant::newton;
  if (name == "gauss_newton" || name == "gn") return InverseVariant::gauss_newton;
  if (name == "levenberg_marquardt" || name == "lm") return InverseVariant::levenberg_marquardt;
  throw InvalidInputError("unknown inverse variant '" + name + "'");
}

std::string to_string(InverseVariant variant) {
  switch (variant) {
    case InverseVariant::newton: return "newton";
    case InverseVariant::gauss_newton: return "gauss_newton";
    case InverseVariant::levenberg_marquardt: return "levenberg_marquardt";
  }
  return "unknown";
}

InverseApplier make_newton_inverse(const JacobianMatrix& jacobian) {
  auto lu = factor_square(jacobian);
  return [lu](const ResidualVector& v) -> ParameterVector {
    if (v.size() != lu->rows()) throw InvalidInputError("Newton inverse: dimension mismatch");
    return lu->solve(v);
  };
}

InverseApplier make_gauss_newton_inverse(std::shared_ptr<const DampedPseudoInverse> factorization) {
  return [f = std::move(factorization)](const ResidualVector& v) { return f->apply(0.0, v); };
}

InverseApplier make_levenberg_marquardt_inverse(std::shared_ptr<const DampedPseudoInverse> factorization,
                                                double lambda) {
  return [f = std::move(factorization), lambda](const ResidualVector& v) { return f->apply(lambda, v); };
}

}  // namespace hoc
