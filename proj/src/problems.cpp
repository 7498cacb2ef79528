#include "hoc/problems.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace hoc {

ResidualVector valley_eval(double anisotropy, double x, double y) {
  ResidualVector f(2);
  f << x + y * y, anisotropy * (y - x * x);
  return f;
}

JacobianMatrix valley_jacobian(double anisotropy, double x, double y) {
  JacobianMatrix j(2, 2);
  j << 1.0, 2.0 * y, -2.0 * anisotropy * x, anisotropy;
  return j;
}

AnisotropicValleyProblem::AnisotropicValleyProblem(double anisotropy) : anisotropy_(anisotropy) {
  if (!(anisotropy > 0.0) || !std::isfinite(anisotropy)) {
    throw InvalidInputError("valley: anisotropy K must be positive and finite");
  }
}

std::string AnisotropicValleyProblem::name() const {
  std::ostringstream os;
  os << "valley(K=" << anisotropy_ << ')';
  return os.str();
}

ResidualVector AnisotropicValleyProblem::evaluate(const ParameterVector& x) const {
  if (x.size() != 2) throw InvalidInputError("valley: expected a 2-vector");
  return valley_eval(anisotropy_, x(0), x(1));
}

JacobianMatrix AnisotropicValleyProblem::jacobian(const ParameterVector& x) const {
  if (x.size() != 2) throw InvalidInputError("valley: expected a 2-vector");
  return valley_jacobian(anisotropy_, x(0), x(1));
}

ParameterVector AnisotropicValleyProblem::default_start() const {
  ParameterVector start(2);
  start << std::numbers::pi, std::numbers::e;
  return start;
}

AffineProblem::AffineProblem(Eigen::MatrixXd matrix, Eigen::VectorXd offset)
    : matrix_(std::move(matrix)), offset_(std::move(offset)) {
  if (matrix_.rows() != offset_.size() || matrix_.size() == 0) {
    throw InvalidInputError("affine: inconsistent dimensions");
  }
  require_finite(matrix_, "affine: matrix");
  require_finite(offset_, "affine: offset");
}

ResidualVector AffineProblem::evaluate(const ParameterVector& x) const {
  if (x.size() != matrix_.cols()) throw InvalidInputError("affine: dimension mismatch");
  return matrix_ * x - offset_;
}

JacobianMatrix AffineProblem::jacobian(const ParameterVector& x) const {
  if (x.size() != matrix_.cols()) throw InvalidInputError("affine: dimension mismatch");
  return matrix_;
}

ParameterVector AffineProblem::default_start() const {
  ParameterVector start = ParameterVector::Zero(matrix_.cols());
  start(0) = std::numbers::pi;
  if (start.size() > 1) start(1) = std::numbers::e;
  return start;
}

std::shared_ptr<const AffineProblem> make_reference_affine_problem() {
  Eigen::MatrixXd a(2, 2);
  a << 2.0, 1.0, 1.0, 3.0;
  Eigen::VectorXd b(2);
  b << 1.0, 2.0;
  return std::make_shared<AffineProblem>(a, b);
}

namespace {

std::size_t int_pow(std::size_t base, int exponent) {
  std::size_t out = 1;
  for (int i = 0; i < exponent; ++i) out *= base;
  return out;
}

double factorial_double(int n) {
  double out = 1.0;
  for (int i = 2; i <= n; ++i) out *= i;
  return out;
}

// Uniform on [-1, 1] from raw 64-bit draws, so the family does not depend on
// the standard library's distribution implementation.
class UnitSampler {
 public:
  explicit UnitSampler(std::uint64_t seed) : engine_(seed) {}
  double operator()() {
    const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return 2.0 * unit - 1.0;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

PolynomialMap::PolynomialMap(int input_dim, int output_dim, std::vector<std::vector<double>> tensors,
                             std::string label)
    : input_dim_(input_dim), output_dim_(output_dim), tensors_(std::move(tensors)), label_(std::move(label)) {
  if (input_dim_ < 1 || output_dim_ < 1) throw InvalidInputError("polynomial: dimensions must be >= 1");
  if (tensors_.empty() || tensors_.size() > 5) throw InvalidInputError("polynomial: degree must be in [0, 4]");
  for (std::size_t l = 0; l < tensors_.size(); ++l) {
    const std::size_t expected = static_cast<std::size_t>(output_dim_) * int_pow(input_dim_, static_cast<int>(l));
    if (tensors_[l].size() != expected) throw InvalidInputError("polynomial: tensor size mismatch");
  }
  start_ = ParameterVector::Zero(input_dim_);
}

Eigen::VectorXd PolynomialMap::contract(int l, std::span<const ParameterVector* const> factors) const {
  const std::size_t p = static_cast<std::size_t>(input_dim_);
  std::vector<double> current = tensors_[static_cast<std::size_t>(l)];
  std::size_t width = int_pow(p, l);
  for (int slot = l - 1; slot >= 0; --slot) {
    const ParameterVector& v = *factors[static_cast<std::size_t>(slot)];
    const std::size_t next_width = width / p;
    std::vector<double> next(static_cast<std::size_t>(output_dim_) * next_width, 0.0);
    for (std::size_t head = 0; head < next.size(); ++head) {
      double sum = 0.0;
      for (std::size_t j = 0; j < p; ++j) sum += current[head * p + j] * v(static_cast<Eigen::Index>(j));
      next[head] = sum;
    }
    current = std::move(next);
    width = next_width;
  }
  return Eigen::Map<const Eigen::VectorXd>(current.data(), output_dim_);
}

ResidualVector PolynomialMap::directional_derivative(const ParameterVector& x,
                                                     std::span<const ParameterVector> directions) const {
  if (x.size() != input_dim_) throw InvalidInputError("polynomial: dimension mismatch");
  for (const auto& d : directions) {
    if (d.size() != input_dim_) throw InvalidInputError("polynomial: direction dimension mismatch");
  }
  const int k = static_cast<int>(directions.size());
  ResidualVector out = ResidualVector::Zero(output_dim_);
  std::vector<const ParameterVector*> factors;
  for (int l = k; l <= degree(); ++l) {
    factors.clear();
    for (const auto& d : directions) factors.push_back(&d);
    for (int i = 0; i < l - k; ++i) factors.push_back(&x);
    out += contract(l, factors) / factorial_double(l - k);
  }
  return out;
}

ResidualVector PolynomialMap::evaluate(const ParameterVector& x) const {
  return directional_derivative(x, {});
}

JacobianMatrix PolynomialMap::jacobian(const ParameterVector& x) const {
  JacobianMatrix j(output_dim_, input_dim_);
  std::vector<ParameterVector> basis(1);
  for (int col = 0; col < input_dim_; ++col) {
    basis[0] = ParameterVector::Unit(input_dim_, col);
    j.col(col) = directional_derivative(x, basis);
  }
  return j;
}

std::shared_ptr<const PolynomialMap> polynomial_test_family(int degree, int dims, std::uint64_t seed) {
  if (degree < 1 || degree > 4) throw InvalidInputError("polynomial family: degree must be in [1, 4]");
  if (dims < 1) throw InvalidInputError("polynomial family: dims must be >= 1");
  UnitSampler sample(seed);
  const auto p = static_cast<std::size_t>(dims);

  Eigen::MatrixXd mix(dims, dims);
  for (int i = 0; i < dims; ++i) {
    for (int j = 0; j < dims; ++j) mix(i, j) = i == j ? dims + 0.5 * sample() : sample();
  }

  std::vector<std::vector<double>> tensors(static_cast<std::size_t>(degree) + 1);
  tensors[0].resize(p);
  for (auto& value : tensors[0]) value = sample();
  tensors[1].resize(p * p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) tensors[1][i * p + j] = mix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  // q_k(x_1) = sum_l a_kl x_1^l lives only in the all-zero index of C_l.
  for (int l = 2; l <= degree; ++l) {
    Eigen::VectorXd inner = Eigen::VectorXd::Zero(dims);
    for (int k = 1; k < dims; ++k) inner(k) = factorial_double(l) * sample();
    const Eigen::VectorXd outer = mix * inner;
    const std::size_t width = int_pow(p, l);
    tensors[static_cast<std::size_t>(l)].assign(p * width, 0.0);
    for (std::size_t i = 0; i < p; ++i) tensors[static_cast<std::size_t>(l)][i * width] = outer(static_cast<Eigen::Index>(i));
  }

  std::ostringstream label;
  label << "poly(degree=" << degree << ",dims=" << dims << ",seed=" << seed << ')';
  auto map = std::make_shared<PolynomialMap>(dims, dims, std::move(tensors), label.str());
  ParameterVector start(dims);
  for (int i = 0; i < dims; ++i) start(i) = sample();
  map->set_default_start(std::move(start));
  return map;
}

std::shared_ptr<const PolynomialMap> random_polynomial_map(int degree, int input_dim, int output_dim,
                                                           std::uint64_t seed) {
  if (degree < 1 || degree > 4) throw InvalidInputError("random polynomial: degree must be in [1, 4]");
  UnitSampler sample(seed);
  const auto p = static_cast<std::size_t>(input_dim);
  const auto m = static_cast<std::size_t>(output_dim);
  std::vector<std::vector<double>> tensors(static_cast<std::size_t>(degree) + 1);
  for (int l = 0; l <= degree; ++l) {
    const std::size_t width = int_pow(p, l);
    auto& tensor = tensors[static_cast<std::size_t>(l)];
    tensor.resize(m * width);
    for (std::size_t i = 0; i < m; ++i) {
      // one draw per multiset of trailing indices keeps C_l symmetric
      std::map<std::vector<std::size_t>, double> drawn;
      for (std::size_t flat = 0; flat < width; ++flat) {
        std::vector<std::size_t> index(static_cast<std::size_t>(l));
        std::size_t rest = flat;
        for (int s = l - 1; s >= 0; --s) {
          index[static_cast<std::size_t>(s)] = rest % p;
          rest /= p;
        }
        std::sort(index.begin(), index.end());
        auto [it, inserted] = drawn.try_emplace(index, 0.0);
        if (inserted) it->second = sample();
        tensor[i * width + flat] = it->second;
      }
    }
  }
  if (p == m) {
    for (std::size_t i = 0; i < p; ++i) tensors[1][i * p + i] += static_cast<double>(p) + 1.0;
  }
  std::ostringstream label;
  label << "random_poly(degree=" << degree << ",p=" << input_dim << ",m=" << output_dim << ",seed=" << seed << ')';
  auto map = std::make_shared<PolynomialMap>(input_dim, output_dim, std::move(tensors), label.str());
  ParameterVector start(input_dim);
  for (int i = 0; i < input_dim; ++i) start(i) = 0.5 * sample();
  map->set_default_start(std::move(start));
  return map;
}

double jacobian_consistency_error(const Problem& problem, const ParameterVector& x) {
  const JacobianMatrix analytic = problem.jacobian(x);
  JacobianMatrix numeric(analytic.rows(), analytic.cols());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x(j)));
    ParameterVector plus = x;
    ParameterVector minus = x;
    plus(j) += h;
    minus(j) -= h;
    numeric.col(j) = (problem.evaluate(plus) - problem.evaluate(minus)) / (plus(j) - minus(j));
  }
  const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
  return (numeric - analytic).cwiseAbs().maxCoeff() / scale;
}

}  // namespace hoc
