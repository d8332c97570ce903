#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "acpose/polynomial.hpp"

namespace acpose {

enum class RootMethod { CompanionMatrix, SturmBisection };

struct RealRoot {
  double value = 0.0;
  double derivative_magnitude = 0.0;  // |p'(root)|, conditioning hint
};

struct RealRootSet {
  std::vector<RealRoot> roots;  // sorted ascending, multiplicity-collapsed

  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(roots.size());
    for (const RealRoot &r : roots) v.push_back(r.value);
    return v;
  }
};

// Determinant by cofactor expansion with polynomial arithmetic. For the 3x3
// and 4x4 systems with quadratic entries this yields degree <= 6 and <= 8.
inline UnivariatePoly det_poly(const PolynomialMatrix &m) {
  if (m.n == 1) return m.at(0, 0);
  if (m.n == 2) return m.at(0, 0) * m.at(1, 1) - m.at(0, 1) * m.at(1, 0);
  UnivariatePoly det;
  double sign = 1.0;
  for (int c = 0; c < m.n; ++c) {
    PolynomialMatrix minor(m.n - 1);
    for (int r = 1; r < m.n; ++r) {
      int cc = 0;
      for (int k = 0; k < m.n; ++k) {
        if (k == c) continue;
        minor.at(r - 1, cc++) = m.at(r, k);
      }
    }
    det += sign * (m.at(0, c) * det_poly(minor));
    sign = -sign;
  }
  return det;
}

struct PolyQuotient {
  UnivariatePoly quotient;
  UnivariatePoly remainder;
  double remainder_rel = 0.0;  // max |remainder| / max |input|
  bool divisible = true;       // false when remainder_rel > 1e-6
};

// Exact quotient by (q^2 + 1). Determinants of the assembled constraint
// systems carry this factor structurally; noise only leaves a small
// remainder, which is reported rather than treated as an error.
inline PolyQuotient quotient_by_q2_plus_1(const UnivariatePoly &p) {
  PolyQuotient out;
  poly_divmod(p, UnivariatePoly({1.0, 0.0, 1.0}), &out.quotient, &out.remainder);
  const double scale = p.max_abs_coeff();
  out.remainder_rel = scale > 0.0 ? out.remainder.max_abs_coeff() / scale : 0.0;
  out.divisible = out.remainder_rel <= 1e-6;
  return out;
}

namespace detail {

// Newton applied to p/p' (Schroeder's step); quadratically convergent for
// roots of any multiplicity. The constraint systems hit genuine double roots
// in their scale-degenerate configurations, where plain Newton stalls.
inline double newton_polish(const UnivariatePoly &p, const UnivariatePoly &dp,
                            const UnivariatePoly &ddp, double x, int iters = 3) {
  for (int i = 0; i < iters; ++i) {
    const double f = p(x), d = dp(x);
    const double denom = d * d - f * ddp(x);
    const double step = denom != 0.0 ? f * d / denom : (d != 0.0 ? f / d : 0.0);
    if (!std::isfinite(step)) break;
    x -= step;
  }
  return x;
}

// Drops leading coefficients that are negligible against the largest one;
// they correspond to roots escaping to infinity.
inline std::vector<double> effective_coeffs(const UnivariatePoly &p, double rel_tol = 1e-13) {
  std::vector<double> c = p.coeffs();
  const double scale = p.max_abs_coeff();
  while (c.size() > 1 && std::abs(c.back()) < rel_tol * scale) c.pop_back();
  return c;
}

inline std::vector<double> companion_real_roots(const std::vector<double> &c) {
  const int n = static_cast<int>(c.size()) - 1;  // degree
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[static_cast<size_t>(i)] / c.back();
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
  std::vector<double> roots;
  for (int i = 0; i < n; ++i) {
    const std::complex<double> z = es.eigenvalues()(i);
    // Conjugate pairs hugging the real axis are perturbed real roots; double
    // roots split by about sqrt(eps), so the band is generous and the
    // residual gate below does the actual filtering.
    if (std::abs(z.imag()) <= 1e-5 * (1.0 + std::abs(z.real()))) roots.push_back(z.real());
  }
  return roots;
}

// Sturm chain with per-element normalization to keep coefficients tame.
inline std::vector<UnivariatePoly> sturm_chain(const UnivariatePoly &p) {
  std::vector<UnivariatePoly> chain;
  chain.push_back(p);
  chain.push_back(p.derivative());
  while (!chain.back().is_zero() && chain.back().degree() > 0) {
    UnivariatePoly rem;
    poly_divmod(chain[chain.size() - 2], chain.back(), nullptr, &rem);
    rem = -rem;
    const double m = rem.max_abs_coeff();
    if (m > 0.0) rem = rem * (1.0 / m);
    if (rem.is_zero()) break;
    chain.push_back(rem);
  }
  return chain;
}

inline int sturm_sign_changes(const std::vector<UnivariatePoly> &chain, double x) {
  int changes = 0, prev = 0;
  for (const UnivariatePoly &q : chain) {
    const double v = q(x);
    const int s = (v > 0.0) - (v < 0.0);
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++changes;
    prev = s;
  }
  return changes;
}

inline void sturm_isolate(const std::vector<UnivariatePoly> &chain, double a, double b, int na,
                          int nb, int depth, std::vector<std::pair<double, double>> *brackets) {
  const int count = na - nb;
  if (count <= 0) return;
  if (count == 1 || depth > 60 || (b - a) < 1e-14 * (1.0 + std::abs(a) + std::abs(b))) {
    brackets->emplace_back(a, b);
    return;
  }
  const double mid = 0.5 * (a + b);
  const int nm = sturm_sign_changes(chain, mid);
  sturm_isolate(chain, a, mid, na, nm, depth + 1, brackets);
  sturm_isolate(chain, mid, b, nm, nb, depth + 1, brackets);
}

inline std::vector<double> sturm_real_roots(const std::vector<double> &c, double lo, double hi) {
  const UnivariatePoly p{std::vector<double>(c)};
  const auto chain = sturm_chain(p);
  std::vector<std::pair<double, double>> brackets;
  sturm_isolate(chain, lo, hi, sturm_sign_changes(chain, lo), sturm_sign_changes(chain, hi), 0,
                &brackets);
  std::vector<double> roots;
  for (auto [a, b] : brackets) {
    double fa = p(a);
    for (int i = 0; i < 200 && (b - a) > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
      const double mid = 0.5 * (a + b);
      const double fm = p(mid);
      if ((fa <= 0.0) == (fm <= 0.0)) {
        a = mid;
        fa = fm;
      } else {
        b = mid;
      }
    }
    roots.push_back(0.5 * (a + b));
  }
  return roots;
}

}  // namespace detail

// All real roots inside [-1e4, 1e4]; q_y = tan(theta/2) for |theta| < pi
// keeps any admissible root far inside that window. Roots are Newton
// polished; returned roots satisfy |p(r)| <= 1e-7 * max|coeff|.
inline RealRootSet real_roots(const UnivariatePoly &p,
                              RootMethod method = RootMethod::CompanionMatrix) {
  if (p.is_zero()) throw std::invalid_argument("cannot extract roots of the zero polynomial");
  constexpr double kWindow = 1e4;

  // Normalize by the largest coefficient so metric-scale inputs do not skew
  // conditioning.
  const double scale = p.max_abs_coeff();
  UnivariatePoly pn = p * (1.0 / scale);
  std::vector<double> c = detail::effective_coeffs(pn);
  RealRootSet out;
  if (c.size() <= 1) return out;

  std::vector<double> raw = (method == RootMethod::CompanionMatrix)
                                ? detail::companion_real_roots(c)
                                : detail::sturm_real_roots(c, -kWindow, kWindow);

  const UnivariatePoly dp = pn.derivative();
  const UnivariatePoly ddp = dp.derivative();
  std::vector<double> polished;
  for (double r : raw) {
    r = detail::newton_polish(pn, dp, ddp, r);
    if (!std::isfinite(r) || std::abs(r) > kWindow) continue;
    if (std::abs(pn(r)) > 1e-7) continue;
    polished.push_back(r);
  }
  std::sort(polished.begin(), polished.end());
  for (double r : polished) {
    if (!out.roots.empty() &&
        std::abs(r - out.roots.back().value) <= 1e-9 * (1.0 + std::abs(r)))
      continue;  // collapse multiple roots
    out.roots.push_back({r, std::abs(dp(r))});
  }
  return out;
}

}  // namespace acpose
