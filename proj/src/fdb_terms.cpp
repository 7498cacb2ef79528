#include "hoc/fdb_terms.hpp"

#include "hoc/linalg.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <utility>

namespace hoc {

namespace {

// Key ordering matches the printing convention: higher f derivatives first.
struct TermKey {
  int f_order;
  std::vector<int> x_orders;

  bool operator<(const TermKey& other) const {
    if (f_order != other.f_order) return f_order > other.f_order;
    return x_orders < other.x_orders;
  }
};

using TermMap = std::map<TermKey, std::int64_t>;

void add_term(TermMap& out, int f_order, std::vector<int> x_orders, std::int64_t coefficient) {
  std::sort(x_orders.begin(), x_orders.end());
  out[TermKey{f_order, std::move(x_orders)}] += coefficient;
}

TermMap differentiate(const TermMap& terms) {
  TermMap out;
  for (const auto& [key, coefficient] : terms) {
    // chain rule on f^(d): one more f derivative and one more x' factor
    std::vector<int> grown = key.x_orders;
    grown.push_back(1);
    add_term(out, key.f_order + 1, std::move(grown), coefficient);
    // product rule over each x factor
    for (std::size_t i = 0; i < key.x_orders.size(); ++i) {
      std::vector<int> bumped = key.x_orders;
      ++bumped[i];
      add_term(out, key.f_order, std::move(bumped), coefficient);
    }
  }
  return out;
}

void check_order(int n, int lowest) {
  if (n < lowest || n > kMaxTermOrder) {
    throw InvalidInputError("derivative order " + std::to_string(n) + " outside [" + std::to_string(lowest) +
                            ", " + std::to_string(kMaxTermOrder) + "]");
  }
}

const std::vector<std::vector<DerivativeTerm>>& term_table() {
  static const std::vector<std::vector<DerivativeTerm>> table = [] {
    std::vector<std::vector<DerivativeTerm>> rows(kMaxTermOrder + 1);
    TermMap current;
    current[TermKey{1, {1}}] = 1;
    for (int n = 1; n <= kMaxTermOrder; ++n) {
      if (n > 1) current = differentiate(current);
      for (const auto& [key, coefficient] : current) {
        rows[n].push_back(DerivativeTerm{coefficient, key.f_order, key.x_orders});
      }
    }
    return rows;
  }();
  return table;
}

std::string join_factors(const std::vector<int>& orders, char symbol) {
  std::ostringstream os;
  for (int k : orders) os << ' ' << symbol << "^(" << k << ')';
  return os.str();
}

}  // namespace

std::vector<DerivativeTerm> derivative_terms(int n) {
  check_order(n, 1);
  return term_table()[n];
}

CorrectionIdentity correction_identity_terms(int n) {
  check_order(n, 2);
  CorrectionIdentity identity;
  identity.order = n;
  for (const DerivativeTerm& term : derivative_terms(n)) {
    Rational coefficient = term.coefficient;
    for (int k : term.x_orders) coefficient *= factorial(k);
    CorrectionTerm rewritten{coefficient, term.f_order, term.x_orders};
    if (term.f_order == 1) {
      identity.lead = std::move(rewritten);
    } else {
      identity.rest.push_back(std::move(rewritten));
    }
  }
  return identity;
}

std::string to_string(const DerivativeTerm& term) {
  std::ostringstream os;
  if (term.coefficient != 1) os << term.coefficient << ' ';
  os << "f^(" << term.f_order << ')' << join_factors(term.x_orders, 'x');
  return os.str();
}

std::string to_string(const CorrectionTerm& term) {
  std::ostringstream os;
  if (term.coefficient != Rational(1)) os << term.coefficient << ' ';
  os << "f^(" << term.f_order << ')';
  for (int k : term.c_orders) os << " c_" << k;
  return os.str();
}

std::string format_derivative_equation(int n) {
  std::ostringstream os;
  const auto terms = derivative_terms(n);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i > 0) os << " + ";
    os << to_string(terms[i]);
  }
  os << " = 0";
  return os.str();
}

std::string format_correction_formula(int n) {
  const CorrectionIdentity identity = correction_identity_terms(n);
  std::ostringstream os;
  os << "c_" << n << " = -" << (Rational(1) / identity.lead.coefficient) << " J^-1 (";
  for (std::size_t i = 0; i < identity.rest.size(); ++i) {
    if (i > 0) os << " + ";
    os << to_string(identity.rest[i]);
  }
  os << ')';
  return os.str();
}

}  // namespace hoc
