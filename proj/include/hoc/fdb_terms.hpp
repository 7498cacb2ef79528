#pragma once

#include "hoc/rational.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hoc {

/// One term coefficient * f^(f_order)(x) x^(k1) x^(k2) ... of d^n/dt^n f(x(t)).
/// `x_orders` is non-decreasing, has f_order entries, and sums to n.
struct DerivativeTerm {
  std::int64_t coefficient = 0;
  int f_order = 0;
  std::vector<int> x_orders;

  friend bool operator==(const DerivativeTerm&, const DerivativeTerm&) = default;
};

/// The same term rewritten in terms of the finite-step corrections c_k,
/// i.e. coefficient * f^(f_order) c_(k1) c_(k2) ...
struct CorrectionTerm {
  Rational coefficient;
  int f_order = 0;
  std::vector<int> c_orders;

  friend bool operator==(const CorrectionTerm&, const CorrectionTerm&) = default;
};

/// The identity sum_terms = 0 at order n, split into the n! f^(1) c_n term and
/// everything else. c_n = -J^{-1} (sum over rest) / lead.coefficient.
struct CorrectionIdentity {
  int order = 0;
  CorrectionTerm lead;
  std::vector<CorrectionTerm> rest;
};

inline constexpr int kMaxTermOrder = 12;

/// Terms of d^n/dt^n f(x(t)) for 1 <= n <= 12, generated by repeatedly
/// applying d/dt f^(d) = f^(d+1) x' and d/dt x^(k) = x^(k+1) under the product
/// rule and collecting like terms. Sorted by f_order descending, then
/// x_orders lexicographically.
std::vector<DerivativeTerm> derivative_terms(int n);

/// Finite-step form of derivative_terms(n) for 2 <= n <= 12: each coefficient
/// is multiplied by the product of k! over its x_orders.
CorrectionIdentity correction_identity_terms(int n);

/// Human-readable form, e.g. "6 f^(3) x^(1) x^(1) x^(2)".
std::string to_string(const DerivativeTerm& term);
std::string to_string(const CorrectionTerm& term);
/// "f^(2) x^(1) x^(1) + f^(1) x^(2) = 0"
std::string format_derivative_equation(int n);
/// "c_2 = -1/2 J^-1 (f^(2) c_1 c_1)"
std::string format_correction_formula(int n);

}  // namespace hoc
