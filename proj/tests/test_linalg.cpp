#include "hoc/linalg.hpp"
#include "hoc/problems.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace hoc;
using hoc::testing::gauss_solve;
using hoc::testing::random_matrix;

namespace {

Eigen::Vector2d vec2(double a, double b) { return Eigen::Vector2d(a, b); }

}  // namespace

TEST_CASE("svd of the identity") {
  const auto d = svd(Eigen::MatrixXd::Identity(2, 2));
  CHECK(d.sigma(0) == doctest::Approx(1.0));
  CHECK(d.sigma(1) == doctest::Approx(1.0));
}

TEST_CASE("svd of an upper triangular 2x2 matches the closed form") {
  Eigen::MatrixXd j(2, 2);
  j << 1, 2, 0, 1;
  // eigenvalues of J^T J = [[1,2],[2,5]]: 3 +- 2 sqrt 2
  const double trace = 6.0;
  const double det = 1.0;
  const double disc = std::sqrt(trace * trace / 4.0 - det);
  const double s_max = std::sqrt(trace / 2.0 + disc);
  const double s_min = std::sqrt(trace / 2.0 - disc);
  const auto d = svd(j);
  CHECK(d.sigma(0) == doctest::Approx(s_max).epsilon(1e-14));
  CHECK(d.sigma(1) == doctest::Approx(s_min).epsilon(1e-14));
  CHECK((d.reconstruct() - j).norm() <= 1e-12);
  CHECK((d.u.transpose() * d.u - Eigen::MatrixXd::Identity(2, 2)).norm() <= 1e-12);
  CHECK((d.v.transpose() * d.v - Eigen::MatrixXd::Identity(2, 2)).norm() <= 1e-12);
}

TEST_CASE("svd of the valley Jacobian at K = 1e6") {
  const AnisotropicValleyProblem problem(1e6);
  const JacobianMatrix j = problem.jacobian(problem.default_start());
  const auto d = svd(j);
  CHECK(d.condition_number() > 1e5);
  CHECK((d.reconstruct() - j).norm() / j.norm() <= 1e-12);
}

TEST_CASE("svd of rectangular matrices is thin and reconstructs") {
  for (auto [rows, cols] : {std::pair{5, 3}, std::pair{3, 5}}) {
    const Eigen::MatrixXd j = random_matrix(rows, cols, 11);
    const auto d = svd(j);
    CHECK(d.sigma.size() == std::min(rows, cols));
    CHECK(d.u.rows() == rows);
    CHECK(d.v.rows() == cols);
    CHECK((d.reconstruct() - j).norm() <= 1e-12);
    for (Eigen::Index k = 1; k < d.sigma.size(); ++k) CHECK(d.sigma(k) <= d.sigma(k - 1));
  }
}

TEST_CASE("svd rejects non-finite input") {
  Eigen::MatrixXd j = Eigen::MatrixXd::Identity(2, 2);
  j(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)svd(j), InvalidInputError);
}

TEST_CASE("damped inverse small examples") {
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(2, 2);
  const ParameterVector gn = damped_pseudo_inverse_apply(identity, 0.0, vec2(1, 1));
  CHECK((gn - vec2(1, 1)).norm() <= 1e-15);
  const ParameterVector lm = damped_pseudo_inverse_apply(identity, 1.0, vec2(2, 0));
  CHECK((lm - vec2(1, 0)).norm() <= 1e-15);
}

TEST_CASE("damped inverse matches a direct normal-equation solve") {
  const Eigen::MatrixXd j = random_matrix(5, 3, 3) + 2.0 * Eigen::MatrixXd::Identity(5, 3);
  const Eigen::VectorXd v = random_matrix(5, 1, 4);
  const double lambda = 0.37;
  const Eigen::MatrixXd normal = j.transpose() * j + lambda * Eigen::MatrixXd::Identity(3, 3);
  const Eigen::VectorXd expected = gauss_solve(normal, j.transpose() * v);
  const ParameterVector got = damped_pseudo_inverse_apply(j, lambda, v);
  CHECK((got - expected).norm() / expected.norm() <= 1e-10);
}

TEST_CASE("damped inverse norm is non-increasing in lambda") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::MatrixXd j = random_matrix(4, 3, seed);
    const Eigen::VectorXd v = random_matrix(4, 1, seed + 100);
    const DampedPseudoInverse factor(j);
    double previous = factor.apply(0.0, v).norm();
    for (double lambda = 1e-6; lambda <= 1e6; lambda *= 3.0) {
      const double current = factor.apply(lambda, v).norm();
      CHECK(current <= previous * (1.0 + 1e-12));
      previous = current;
    }
  }
}

TEST_CASE("large lambda tends to the scaled gradient direction") {
  const Eigen::MatrixXd j = random_matrix(4, 3, 21);
  const Eigen::VectorXd v = random_matrix(4, 1, 22);
  const double lambda = 1e12 * j.squaredNorm();
  const ParameterVector step = lambda * damped_pseudo_inverse_apply(j, lambda, v);
  const Eigen::VectorXd gradient = j.transpose() * v;
  const double cosine = step.dot(gradient) / (step.norm() * gradient.norm());
  CHECK(cosine > 1.0 - 1e-6);
  CHECK((step - gradient).norm() / gradient.norm() <= 1e-6);
}

TEST_CASE("lambda = 0 on square nonsingular J equals the Newton solve") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Eigen::MatrixXd j = random_matrix(3, 3, seed) + 1.5 * Eigen::MatrixXd::Identity(3, 3);
    const Eigen::VectorXd v = random_matrix(3, 1, seed + 50);
    const ParameterVector gn = damped_pseudo_inverse_apply(j, 0.0, v);
    const ParameterVector newton = newton_inverse_apply(j, v);
    CHECK((gn - newton).norm() / newton.norm() <= 1e-8);
    CHECK((newton - gauss_solve(j, v)).norm() / newton.norm() <= 1e-12);
  }
}

TEST_CASE("rank-deficient J at lambda = 0 gives the minimum-norm solution") {
  Eigen::MatrixXd j(2, 2);
  j << 1, 1, 1, 1;
  const DampedPseudoInverse factor(j);
  CHECK(factor.rank_deficient());
  const ParameterVector y = factor.apply(0.0, vec2(2, 2));
  CHECK((y - vec2(1, 1)).norm() <= 1e-14);
  CHECK_FALSE(DampedPseudoInverse(Eigen::MatrixXd::Identity(2, 2)).rank_deficient());
}

TEST_CASE("damped inverse input validation") {
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS((void)damped_pseudo_inverse_apply(identity, -1.0, vec2(1, 1)), InvalidInputError);
  CHECK_THROWS_AS((void)damped_pseudo_inverse_apply(identity, 0.0, Eigen::Vector3d(1, 1, 1)), InvalidInputError);
  CHECK_THROWS_AS((void)damped_pseudo_inverse_apply(identity, std::nan(""), vec2(1, 1)), InvalidInputError);
}

TEST_CASE("Newton inverse examples") {
  const Eigen::Vector3d v(1, 2, 3);
  CHECK((newton_inverse_apply(Eigen::MatrixXd::Identity(3, 3), v) - v).norm() <= 1e-15);

  Eigen::MatrixXd j(2, 2);
  j << 1, 2, 0, 1;
  const ParameterVector y = newton_inverse_apply(j, vec2(1, 1));
  CHECK((y - vec2(-1, 1)).norm() <= 1e-15);
  CHECK((j * y - vec2(1, 1)).norm() <= 1e-15);

  Eigen::MatrixXd singular(2, 2);
  singular << 1, 1, 1, 1;
  CHECK_THROWS_AS((void)newton_inverse_apply(singular, vec2(1, 1)), SingularMatrixError);
  CHECK_THROWS_AS((void)newton_inverse_apply(random_matrix(3, 2, 1), Eigen::Vector3d(1, 1, 1)), InvalidInputError);
}

TEST_CASE("inverse appliers agree with the free functions") {
  const Eigen::MatrixXd j = random_matrix(3, 3, 5) + 2.0 * Eigen::MatrixXd::Identity(3, 3);
  const Eigen::VectorXd v = random_matrix(3, 1, 6);
  const auto factor = std::make_shared<const DampedPseudoInverse>(j);
  CHECK((make_newton_inverse(j)(v) - newton_inverse_apply(j, v)).norm() <= 1e-14);
  CHECK((make_gauss_newton_inverse(factor)(v) - damped_pseudo_inverse_apply(j, 0.0, v)).norm() <= 1e-14);
  CHECK((make_levenberg_marquardt_inverse(factor, 0.5)(v) - damped_pseudo_inverse_apply(j, 0.5, v)).norm() <= 1e-14);
}

TEST_CASE("inverse variant names round trip") {
  for (auto variant : {InverseVariant::newton, InverseVariant::gauss_newton, InverseVariant::levenberg_marquardt}) {
    CHECK(parse_inverse_variant(to_string(variant)) == variant);
  }
  CHECK(parse_inverse_variant("lm") == InverseVariant::levenberg_marquardt);
  CHECK(parse_inverse_variant("gn") == InverseVariant::gauss_newton);
  CHECK_THROWS_AS((void)parse_inverse_variant("cholesky"), InvalidInputError);
}
