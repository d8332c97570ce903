#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "acpose/polynomial.hpp"
#include "acpose/roots.hpp"

using namespace acpose;

namespace {

UnivariatePoly random_quadratic(std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  return UnivariatePoly{u(rng), u(rng), u(rng)};
}

// Evaluate the determinant numerically at sample points and interpolate the
// coefficients back through a Vandermonde solve.
UnivariatePoly interpolated_det(const PolynomialMatrix &m, int degree) {
  const int npts = degree + 1 + 6;  // oversampled, solved least squares
  Eigen::MatrixXd V(npts, degree + 1);
  Eigen::VectorXd y(npts);
  for (int i = 0; i < npts; ++i) {
    const double q = -1.5 + 3.0 * i / (npts - 1);
    double p = 1.0;
    for (int j = 0; j <= degree; ++j) {
      V(i, j) = p;
      p *= q;
    }
    y(i) = m.eval(q).determinant();
  }
  const Eigen::VectorXd c = V.colPivHouseholderQr().solve(y);
  std::vector<double> coeffs(c.data(), c.data() + c.size());
  return UnivariatePoly(std::move(coeffs));
}

double root_set_distance(const std::vector<double> &a, const std::vector<double> &b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

TEST_CASE("polynomial arithmetic basics") {
  const UnivariatePoly p{1.0, 2.0};        // 1 + 2q
  const UnivariatePoly q{-1.0, 0.0, 3.0};  // -1 + 3q^2
  REQUIRE((p + q).coeffs() == std::vector<double>{0.0, 2.0, 3.0});
  REQUIRE((p * q).coeffs() == std::vector<double>{-1.0, -2.0, 3.0, 6.0});
  REQUIRE((p - p).is_zero());
  REQUIRE(p(2.0) == 5.0);
  REQUIRE(q.derivative().coeffs() == std::vector<double>{0.0, 6.0});
}

TEST_CASE("poly_divmod reconstructs the input") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> pc(7), dc(3);
    for (double &v : pc) v = u(rng);
    for (double &v : dc) v = u(rng);
    dc.back() = dc.back() < 0 ? dc.back() - 0.5 : dc.back() + 0.5;
    const UnivariatePoly p(std::move(pc)), d(std::move(dc));
    UnivariatePoly quot, rem;
    poly_divmod(p, d, &quot, &rem);
    const UnivariatePoly back = quot * d + rem;
    REQUIRE((back - p).max_abs_coeff() < 1e-12 * std::max(1.0, p.max_abs_coeff()));
    REQUIRE(rem.degree() < d.degree());
  }
}

TEST_CASE("determinant of polynomial matrices") {
  SECTION("diagonal of (q^2+1) cubes") {
    PolynomialMatrix m(3);
    for (int i = 0; i < 3; ++i) m.at(i, i) = UnivariatePoly{1.0, 0.0, 1.0};
    const UnivariatePoly det = det_poly(m);
    // (q^2+1)^3 = 1 + 3q^2 + 3q^4 + q^6
    REQUIRE(det.coeffs() == std::vector<double>{1.0, 0.0, 3.0, 0.0, 3.0, 0.0, 1.0});
  }

  SECTION("matches evaluate-and-interpolate oracle") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = trial % 2 == 0 ? 3 : 4;
      PolynomialMatrix m(n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) m.at(r, c) = random_quadratic(rng);
      const UnivariatePoly det = det_poly(m);
      REQUIRE(det.degree() <= 2 * n);
      const UnivariatePoly interp = interpolated_det(m, 2 * n);
      const double scale = std::max(1.0, det.max_abs_coeff());
      REQUIRE((det - interp).max_abs_coeff() < 1e-10 * scale);
    }
  }
}

TEST_CASE("quotient by q^2 + 1") {
  SECTION("exact factor") {
    const UnivariatePoly p = UnivariatePoly{1.0, 0.0, 1.0} * UnivariatePoly{-2.0, 1.0};
    const PolyQuotient q = quotient_by_q2_plus_1(p);
    REQUIRE(q.quotient.coeffs() == std::vector<double>{-2.0, 1.0});
    REQUIRE(q.remainder.max_abs_coeff() == 0.0);
    REQUIRE(q.divisible);
  }

  SECTION("q^4 leaves remainder, re-multiplication reconstructs") {
    const UnivariatePoly p{0.0, 0.0, 0.0, 0.0, 1.0};
    const PolyQuotient q = quotient_by_q2_plus_1(p);
    REQUIRE(q.quotient.coeffs() == std::vector<double>{-1.0, 0.0, 1.0});
    const UnivariatePoly back = q.quotient * UnivariatePoly{1.0, 0.0, 1.0} + q.remainder;
    REQUIRE((back - p).max_abs_coeff() < 1e-12);
    REQUIRE_FALSE(q.divisible);
  }

  SECTION("random re-multiplication round trip") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
      std::vector<double> pc(9);
      for (double &v : pc) v = u(rng);
      const UnivariatePoly p(std::move(pc));
      const PolyQuotient q = quotient_by_q2_plus_1(p);
      const UnivariatePoly back = q.quotient * UnivariatePoly{1.0, 0.0, 1.0} + q.remainder;
      REQUIRE((back - p).max_abs_coeff() < 1e-12);
    }
  }
}

TEST_CASE("real root extraction") {
  SECTION("factorable quartic") {
    // q^4 - 5q^2 + 4 = (q-1)(q+1)(q-2)(q+2)
    const UnivariatePoly p{4.0, 0.0, -5.0, 0.0, 1.0};
    for (RootMethod m : {RootMethod::CompanionMatrix, RootMethod::SturmBisection}) {
      const auto roots = real_roots(p, m).values();
      REQUIRE(roots.size() == 4);
      const std::vector<double> expected{-2.0, -1.0, 1.0, 2.0};
      for (size_t i = 0; i < 4; ++i) REQUIRE(std::abs(roots[i] - expected[i]) < 1e-10);
    }
  }

  SECTION("no real roots") {
    const UnivariatePoly p{1.0, 0.0, 1.0};
    REQUIRE(real_roots(p, RootMethod::CompanionMatrix).roots.empty());
    REQUIRE(real_roots(p, RootMethod::SturmBisection).roots.empty());
  }

  SECTION("zero polynomial rejected, constants have no roots") {
    REQUIRE_THROWS_AS(real_roots(UnivariatePoly()), std::invalid_argument);
    REQUIRE(real_roots(UnivariatePoly{3.0}).roots.empty());
  }

  SECTION("returned roots satisfy the residual bound") {
    std::mt19937_64 rng(24);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 300; ++i) {
      std::vector<double> pc(i % 2 == 0 ? 5 : 7);
      for (double &v : pc) v = u(rng);
      const UnivariatePoly p(std::move(pc));
      if (p.degree() < 1) continue;
      const auto rs = real_roots(p);
      REQUIRE(rs.roots.size() <= static_cast<size_t>(p.degree()));
      for (const RealRoot &r : rs.roots)
        REQUIRE(std::abs(p(r.value)) <= 1e-7 * p.max_abs_coeff());
    }
  }

  SECTION("companion and Sturm agree on well-separated roots") {
    std::mt19937_64 rng(25);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    int compared = 0;
    for (int i = 0; i < 1000; ++i) {
      // Build from explicit roots so separation is controllable.
      const int deg = i % 2 == 0 ? 4 : 6;
      std::vector<double> roots;
      bool ok = true;
      for (int k = 0; k < deg && ok; ++k) {
        const double r = u(rng);
        for (double prev : roots)
          if (std::abs(prev - r) < 0.15) ok = false;
        roots.push_back(r);
      }
      if (!ok) continue;
      UnivariatePoly p{1.0};
      const int real_count = deg - 2;  // leave one conjugate pair complex
      for (int k = 0; k < real_count; ++k) p = p * UnivariatePoly{-roots[static_cast<size_t>(k)], 1.0};
      p = p * UnivariatePoly{1.0 + std::abs(u(rng)), 0.3 * u(rng), 1.0};
      const auto a = real_roots(p, RootMethod::CompanionMatrix).values();
      const auto b = real_roots(p, RootMethod::SturmBisection).values();
      REQUIRE(root_set_distance(a, b) < 1e-7);
      ++compared;
    }
    REQUIRE(compared > 500);
  }

  SECTION("scale invariance of root finding") {
    const UnivariatePoly p{4.0, 0.0, -5.0, 0.0, 1.0};
    const auto a = real_roots(p).values();
    const auto b = real_roots(p * 3.7e6).values();
    REQUIRE(root_set_distance(a, b) < 1e-10);
  }
}
