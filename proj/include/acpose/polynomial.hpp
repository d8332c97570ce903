#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace acpose {

// Dense univariate polynomial, coefficients in ascending degree. The zero
// polynomial is the empty coefficient list.
class UnivariatePoly {
 public:
  UnivariatePoly() = default;
  explicit UnivariatePoly(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }
  UnivariatePoly(std::initializer_list<double> coeffs) : c_(coeffs) { trim(); }

  static UnivariatePoly constant(double v) { return UnivariatePoly({v}); }

  const std::vector<double> &coeffs() const { return c_; }
  bool is_zero() const { return c_.empty(); }
  int degree() const { return static_cast<int>(c_.size()) - 1; }

  double coeff(int i) const {
    return (i >= 0 && i < static_cast<int>(c_.size())) ? c_[static_cast<size_t>(i)] : 0.0;
  }

  double max_abs_coeff() const {
    double m = 0.0;
    for (double v : c_) m = std::max(m, std::abs(v));
    return m;
  }

  // Power-form evaluation; Horner cancels badly near roots which hurts the
  // bisection and polish steps.
  double operator()(double x) const {
    double acc = 0.0, xn = 1.0;
    for (double v : c_) {
      acc += v * xn;
      xn *= x;
    }
    return acc;
  }

  UnivariatePoly derivative() const {
    if (c_.size() <= 1) return UnivariatePoly();
    std::vector<double> d(c_.size() - 1);
    for (size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * static_cast<double>(i);
    return UnivariatePoly(std::move(d));
  }

  UnivariatePoly operator+(const UnivariatePoly &o) const {
    std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
    for (size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
    for (size_t i = 0; i < o.c_.size(); ++i) r[i] += o.c_[i];
    return UnivariatePoly(std::move(r));
  }

  UnivariatePoly operator-(const UnivariatePoly &o) const {
    std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
    for (size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
    for (size_t i = 0; i < o.c_.size(); ++i) r[i] -= o.c_[i];
    return UnivariatePoly(std::move(r));
  }

  UnivariatePoly operator*(const UnivariatePoly &o) const {
    if (is_zero() || o.is_zero()) return UnivariatePoly();
    std::vector<double> r(c_.size() + o.c_.size() - 1, 0.0);
    for (size_t i = 0; i < c_.size(); ++i)
      for (size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
    return UnivariatePoly(std::move(r));
  }

  UnivariatePoly operator*(double s) const {
    std::vector<double> r = c_;
    for (double &v : r) v *= s;
    return UnivariatePoly(std::move(r));
  }

  UnivariatePoly operator-() const { return *this * -1.0; }

  UnivariatePoly &operator+=(const UnivariatePoly &o) { return *this = *this + o; }
  UnivariatePoly &operator-=(const UnivariatePoly &o) { return *this = *this - o; }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
  }

  std::vector<double> c_;
};

inline UnivariatePoly operator*(double s, const UnivariatePoly &p) { return p * s; }

// Quotient and remainder of p / d, standard long division.
inline void poly_divmod(const UnivariatePoly &p, const UnivariatePoly &d, UnivariatePoly *quot,
                        UnivariatePoly *rem) {
  if (d.is_zero()) throw std::invalid_argument("polynomial division by zero");
  std::vector<double> r(p.coeffs());
  const int dd = d.degree();
  const double lead = d.coeff(dd);
  std::vector<double> q;
  if (p.degree() >= dd) q.assign(static_cast<size_t>(p.degree() - dd + 1), 0.0);
  for (int i = p.degree(); i >= dd; --i) {
    const double f = r[static_cast<size_t>(i)] / lead;
    q[static_cast<size_t>(i - dd)] = f;
    for (int j = 0; j <= dd; ++j) r[static_cast<size_t>(i - dd + j)] -= f * d.coeff(j);
    r[static_cast<size_t>(i)] = 0.0;
  }
  if (quot) *quot = UnivariatePoly(std::move(q));
  if (rem) {
    r.resize(static_cast<size_t>(std::max(dd, 0)));
    *rem = UnivariatePoly(std::move(r));
  }
}

// Square matrix with polynomial entries, the intermediate the minimal solvers
// reduce to. Entries stay at degree <= 2 for the systems built here.
struct PolynomialMatrix {
  int n = 0;
  std::vector<UnivariatePoly> entries;  // row-major, n*n

  PolynomialMatrix() = default;
  explicit PolynomialMatrix(int dim) : n(dim), entries(static_cast<size_t>(dim * dim)) {}

  UnivariatePoly &at(int r, int c) { return entries[static_cast<size_t>(r * n + c)]; }
  const UnivariatePoly &at(int r, int c) const { return entries[static_cast<size_t>(r * n + c)]; }

  int max_entry_degree() const {
    int d = -1;
    for (const auto &e : entries) d = std::max(d, e.degree());
    return d;
  }

  Eigen::MatrixXd eval(double q) const {
    Eigen::MatrixXd M(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) M(r, c) = at(r, c)(q);
    return M;
  }
};

}  // namespace acpose
