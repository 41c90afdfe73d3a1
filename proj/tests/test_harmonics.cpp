#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "spheremetrics/harmonics.hpp"
#include "spheremetrics/measures.hpp"
#include "support.hpp"

using namespace spheremetrics;
using testsupport::integrate;

namespace {

constexpr double kPi = 3.14159265358979323846;

double lambda_by_quadrature(LegendreIndex idx, int alpha, int order = 256) {
  const QuadratureRule rule = weighted_rule(idx.d, order);
  auto f = [&](double t) {
    if (t <= 0.0) return 0.0;
    const double p = alpha == 0 ? 1.0 : std::pow(t, alpha);
    return legendre_eval(idx, t) * p;
  };
  return sphere_surface_ratio(idx.d) * weighted_integral(f, idx.d, rule);
}

}  // namespace

TEST_CASE("activation evaluates one-sided powers") {
  const ActivationSpec relu = ActivationSpec::relu();
  CHECK(relu(2.5) == doctest::Approx(2.5));
  CHECK(relu(-2.5) == doctest::Approx(0.0));
  CHECK(relu.right_derivative(1.0) == doctest::Approx(1.0));
  CHECK(relu.right_derivative(0.0) == doctest::Approx(1.0));
  CHECK(relu.right_derivative(-1.0) == doctest::Approx(0.0));

  const ActivationSpec step{0, 1.0, -0.5};
  CHECK(step(0.3) == doctest::Approx(1.0));
  CHECK(step(-0.3) == doctest::Approx(-0.5));
  CHECK(step(0.0) == doctest::Approx(0.0));

  const ActivationSpec sq{2, 2.0, 1.0};
  CHECK(sq(3.0) == doctest::Approx(18.0));
  CHECK(sq(-3.0) == doctest::Approx(9.0));
  CHECK(sq.right_derivative(3.0) == doctest::Approx(12.0));
}

TEST_CASE("ipow multiplies by squaring") {
  CHECK(ipow(2.0, 10) == doctest::Approx(1024.0));
  CHECK(ipow(3.0, 0) == doctest::Approx(1.0));
  CHECK(ipow(2.0, -2) == doctest::Approx(0.25));
  CHECK(ipow(-2.0, 3) == doctest::Approx(-8.0));
}

TEST_CASE("gauss jacobi integrates polynomials exactly") {
  Eigen::VectorXd nodes, weights;
  gauss_jacobi(10, 2.0, 1.0, nodes, weights);
  REQUIRE(nodes.size() == 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(nodes[i] > -1.0);
    CHECK(nodes[i] < 1.0);
    CHECK(weights[i] > 0.0);
    if (i) CHECK(nodes[i] > nodes[i - 1]);
  }
  for (int m = 0; m <= 17; ++m) {
    double got = 0.0;
    for (int i = 0; i < 10; ++i) got += weights[i] * ipow(nodes[i], m);
    const double want = integrate(
        [&](double u) {
          return std::pow(1.0 - u, 2.0) * (1.0 + u) * ipow(u, m);
        },
        -1.0, 1.0, 1e-13);
    CHECK(got == doctest::Approx(want).epsilon(1e-11));
  }
}

TEST_CASE("weighted rule moments match the sphere marginals") {
  for (int d : {2, 3, 4, 5, 8, 12}) {
    const QuadratureRule& rule = cached_weighted_rule(d);
    const double ssr = sphere_surface_ratio(d);
    const double total = weighted_integral([](double) { return 1.0; }, d, rule);
    CHECK(total * ssr == doctest::Approx(1.0).epsilon(1e-12));
    const double t2 = weighted_integral([](double t) { return t * t; }, d, rule);
    CHECK(t2 * ssr == doctest::Approx(1.0 / d).epsilon(1e-12));
    const double t4 =
        weighted_integral([](double t) { return t * t * t * t; }, d, rule);
    CHECK(t4 * ssr ==
          doctest::Approx(3.0 / (static_cast<double>(d) * (d + 2.0)))
              .epsilon(1e-12));
    // Half-interval exactness despite the kink of t -> (t)_+ at 0.
    const double half =
        weighted_integral([](double t) { return t > 0.0 ? t : 0.0; }, d, rule);
    CHECK(half == doctest::Approx(1.0 / (d - 1.0)).epsilon(1e-12));
  }
  CHECK(&cached_weighted_rule(5) == &cached_weighted_rule(5));
}

TEST_CASE("sphere surface ratio closed values") {
  CHECK(sphere_surface_ratio(2) == doctest::Approx(1.0 / kPi).epsilon(1e-14));
  CHECK(sphere_surface_ratio(3) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(sphere_surface_ratio(4) == doctest::Approx(2.0 / kPi).epsilon(1e-14));
  CHECK(sphere_surface_ratio(5) == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("legendre values, parity, and classical cases") {
  for (int k : {0, 1, 2, 3, 5, 8}) {
    for (int d : {2, 3, 4, 7, 11}) {
      const LegendreIndex idx{k, d};
      CHECK(legendre_eval(idx, 1.0) == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(legendre_eval(idx, -1.0) ==
            doctest::Approx(k % 2 == 0 ? 1.0 : -1.0).epsilon(1e-13));
      for (double t : {-0.9, -0.37, 0.12, 0.63, 0.98}) {
        const double v = legendre_eval(idx, t);
        CHECK(std::abs(v) <= 1.0 + 1e-12);
        CHECK(legendre_eval(idx, -t) ==
              doctest::Approx(k % 2 == 0 ? v : -v).epsilon(1e-12));
      }
    }
  }
  for (double t : {-0.8, -0.21, 0.0, 0.44, 0.97}) {
    CHECK(legendre_eval({2, 3}, t) ==
          doctest::Approx((3.0 * t * t - 1.0) / 2.0).epsilon(1e-14));
    CHECK(legendre_eval({3, 3}, t) ==
          doctest::Approx((5.0 * t * t * t - 3.0 * t) / 2.0).epsilon(1e-14));
    for (int k : {1, 2, 5, 9})
      CHECK(legendre_eval({k, 2}, t) ==
            doctest::Approx(std::cos(k * std::acos(t))).epsilon(1e-12));
  }
}

TEST_CASE("legendre recurrence holds pointwise") {
  for (int d : {2, 3, 6, 13}) {
    for (int k : {1, 2, 4, 7, 11}) {
      for (double t : {-0.77, -0.18, 0.05, 0.5, 0.93}) {
        const double lhs = (k + d - 2.0) * legendre_eval({k + 1, d}, t);
        const double rhs = (2.0 * k + d - 2.0) * t * legendre_eval({k, d}, t) -
                           k * legendre_eval({k - 1, d}, t);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("legendre orthogonality and second moment") {
  for (int d : {3, 5, 10}) {
    const QuadratureRule& rule = cached_weighted_rule(d);
    const double ssr = sphere_surface_ratio(d);
    for (int k = 0; k <= 8; ++k) {
      for (int j = 0; j <= k; ++j) {
        const double ip = ssr * weighted_integral(
                                    [&](double t) {
                                      return legendre_eval({k, d}, t) *
                                             legendre_eval({j, d}, t);
                                    },
                                    d, rule);
        if (j == k) {
          const double n = static_cast<double>(harmonic_dimension({k, d}));
          CHECK(ip == doctest::Approx(1.0 / n).epsilon(1e-10));
        } else {
          CHECK(std::abs(ip) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("legendre derivatives match finite differences and shift") {
  const double h = 1e-6;
  for (int d : {3, 4, 8}) {
    for (int k : {1, 2, 4, 6}) {
      for (double t : {-0.6, 0.1, 0.52}) {
        const double fd = (legendre_eval({k, d}, t + h) -
                           legendre_eval({k, d}, t - h)) /
                          (2.0 * h);
        CHECK(legendre_derivative({k, d}, t, 1) ==
              doctest::Approx(fd).epsilon(1e-7));
        const double fd2 = (legendre_derivative({k, d}, t + h, 1) -
                            legendre_derivative({k, d}, t - h, 1)) /
                           (2.0 * h);
        CHECK(legendre_derivative({k, d}, t, 2) ==
              doctest::Approx(fd2).epsilon(1e-6));
      }
      // Endpoint slope k(k+d-2)/(d-1) from the index shift at t=1.
      CHECK(legendre_derivative({k, d}, 1.0, 1) ==
            doctest::Approx(k * (k + d - 2.0) / (d - 1.0)).epsilon(1e-12));
      CHECK(legendre_derivative({k, d}, 0.3, k + 1) == 0.0);
    }
  }
}

TEST_CASE("legendre roots are simple, sorted, and complete") {
  for (int d : {2, 3, 5, 9}) {
    for (int k : {1, 2, 3, 6, 10}) {
      const std::vector<double> roots = legendre_roots({k, d});
      REQUIRE(static_cast<int>(roots.size()) == k);
      for (std::size_t i = 0; i < roots.size(); ++i) {
        CHECK(std::abs(legendre_eval({k, d}, roots[i])) < 1e-9);
        CHECK(roots[i] > -1.0);
        CHECK(roots[i] < 1.0);
        if (i) CHECK(roots[i] > roots[i - 1] + 1e-12);
      }
    }
  }
  CHECK(legendre_roots({0, 4}).empty());
}

TEST_CASE("harmonic dimension closed form") {
  CHECK(harmonic_dimension({0, 7}) == 1);
  CHECK(harmonic_dimension({1, 7}) == 7);
  CHECK(harmonic_dimension({2, 3}) == 5);
  CHECK(harmonic_dimension({4, 3}) == 9);
  CHECK(harmonic_dimension({4, 10}) == 660);
  CHECK(harmonic_dimension({5, 8}) == 672);
  CHECK(harmonic_dimension({6, 10}) == 4290);
  for (int k : {0, 1, 3, 6})
    for (int d : {3, 8, 15})
      CHECK(std::exp(log_harmonic_dimension({k, d})) ==
            doctest::Approx(static_cast<double>(harmonic_dimension({k, d})))
                .epsilon(1e-11));
}

TEST_CASE("solid harmonic restricts, scales, and is harmonic") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const int d = 3 + trial % 3;
    const LegendreIndex idx{2 + trial % 3, d};
    Eigen::VectorXd theta(d);
    fill_unit_vector(rng, theta.data(), d);

    CHECK(legendre_harmonic_eval(idx, theta) ==
          doctest::Approx(legendre_eval(idx, theta[d - 1])).epsilon(1e-12));
    const double c = 1.7;
    CHECK(legendre_harmonic_eval(idx, c * theta) ==
          doctest::Approx(ipow(c, idx.k) * legendre_harmonic_eval(idx, theta))
              .epsilon(1e-12));

    const double h = 1e-3;
    double lap = 0.0;
    for (int i = 0; i < d; ++i) {
      Eigen::VectorXd xp = theta, xm = theta;
      xp[i] += h;
      xm[i] -= h;
      lap += (legendre_harmonic_eval(idx, xp) + legendre_harmonic_eval(idx, xm) -
              2.0 * legendre_harmonic_eval(idx, theta)) /
             (h * h);
    }
    CHECK(std::abs(lap) < 1e-3);
  }
  Eigen::VectorXd axis = Eigen::VectorXd::Zero(5);
  axis[4] = 1.0;
  CHECK(legendre_harmonic_eval({3, 5}, axis) == doctest::Approx(1.0));
}

TEST_CASE("harmonic gradients satisfy euler and tangency") {
  Rng rng(29);
  for (int trial = 0; trial < 6; ++trial) {
    const int d = 3 + trial % 4;
    const LegendreIndex idx{1 + trial, d};
    Eigen::VectorXd theta(d);
    fill_unit_vector(rng, theta.data(), d);
    const HarmonicGradient g = legendre_harmonic_grad(idx, theta);

    CHECK(g.euclidean.dot(theta) ==
          doctest::Approx(idx.k * legendre_harmonic_eval(idx, theta))
              .epsilon(1e-10));
    CHECK(std::abs(g.riemannian.dot(theta)) < 1e-10);
    const Eigen::VectorXd proj =
        g.euclidean - g.euclidean.dot(theta) * theta;
    CHECK((g.riemannian - proj).norm() < 1e-10);

    const double h = 1e-6;
    for (int i = 0; i < d; ++i) {
      Eigen::VectorXd xp = theta, xm = theta;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (legendre_harmonic_eval(idx, xp) -
                         legendre_harmonic_eval(idx, xm)) /
                        (2.0 * h);
      CHECK(g.euclidean[i] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
  Eigen::VectorXd bad = Eigen::VectorXd::Constant(4, 0.7);
  CHECK_THROWS_AS(legendre_harmonic_grad({2, 4}, bad), std::invalid_argument);
}

TEST_CASE("energy identities on the sphere via quadrature") {
  struct Case {
    int k, d;
  };
  for (Case c : {Case{2, 3}, Case{3, 5}, Case{5, 8}, Case{4, 4}}) {
    const LegendreIndex idx{c.k, c.d};
    const QuadratureRule& rule = cached_weighted_rule(c.d);
    const double ssr = sphere_surface_ratio(c.d);
    const double n = static_cast<double>(harmonic_dimension(idx));

    const double el2 = ssr * weighted_integral(
                                 [&](double t) {
                                   const double p = legendre_eval(idx, t);
                                   return p * p;
                                 },
                                 c.d, rule);
    CHECK(el2 == doctest::Approx(1.0 / n).epsilon(1e-10));

    const double riem = ssr * weighted_integral(
                                  [&](double t) {
                                    const double dp =
                                        legendre_derivative(idx, t, 1);
                                    return dp * dp * (1.0 - t * t);
                                  },
                                  c.d, rule);
    CHECK(riem ==
          doctest::Approx(c.k * (c.k + c.d - 2.0) / n).epsilon(1e-10));

    const double euc = ssr * weighted_integral(
                                 [&](double t) {
                                   const double p = legendre_eval(idx, t);
                                   const double dp =
                                       legendre_derivative(idx, t, 1);
                                   return dp * dp * (1.0 - t * t) +
                                          c.k * c.k * p * p;
                                 },
                                 c.d, rule);
    CHECK(euc ==
          doctest::Approx(c.k * (2.0 * c.k + c.d - 2.0) / n).epsilon(1e-10));
  }
}

TEST_CASE("lambda coefficients match frozen constants") {
  CHECK(lambda_coefficient({1, 3}, 0) == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(lambda_coefficient({2, 3}, 1) ==
        doctest::Approx(0.0625).epsilon(1e-13));
  CHECK(lambda_coefficient({3, 3}, 0) ==
        doctest::Approx(-0.0625).epsilon(1e-13));
  CHECK(lambda_coefficient({0, 3}, 0) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(lambda_coefficient({0, 3}, 1) == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(lambda_coefficient({1, 3}, 2) == doctest::Approx(0.125).epsilon(1e-13));
  CHECK(lambda_coefficient({3, 3}, 2) ==
        doctest::Approx(1.0 / 48.0).epsilon(1e-13));
  CHECK(lambda_coefficient({4, 5}, 1) ==
        doctest::Approx(-0.00390625).epsilon(1e-13));
  CHECK(lambda_coefficient({7, 6}, 0) ==
        doctest::Approx(-0.003674573000678680190912).epsilon(1e-12));
  CHECK(lambda_coefficient({2, 4}, 2) ==
        doctest::Approx(1.0 / 24.0).epsilon(1e-13));
  CHECK(lambda_coefficient({2, 2}, 1) ==
        doctest::Approx(0.1061032953945968905126).epsilon(1e-12));
}

TEST_CASE("lambda parity zeros are exact") {
  CHECK(lambda_coefficient({3, 3}, 1) == 0.0);
  CHECK(lambda_coefficient({5, 12}, 3) == 0.0);
  CHECK(lambda_coefficient({4, 6}, 0) == 0.0);
  CHECK(lambda_coefficient({2, 7}, 0) == 0.0);
  CHECK(lambda_coefficient({6, 4}, 2) == 0.0);
}

TEST_CASE("lambda closed form agrees with quadrature") {
  for (int d : {2, 3, 5, 8, 12, 20}) {
    for (int alpha = 0; alpha <= 3; ++alpha) {
      for (int k = 0; k <= 12; ++k) {
        const double closed = lambda_coefficient({k, d}, alpha);
        if (k > alpha && (k - alpha) % 2 == 0) {
          CHECK(closed == 0.0);
          continue;
        }
        const double quad = lambda_by_quadrature({k, d}, alpha);
        const double rel = std::abs(closed - quad) / std::abs(quad);
        INFO("k=", k, " d=", d, " alpha=", alpha, " closed=", closed,
             " quad=", quad);
        CHECK(rel < 1e-8);
      }
    }
  }
}

TEST_CASE("lambda index shift identity") {
  for (int d : {3, 4, 7}) {
    for (int alpha = 0; alpha <= 2; ++alpha) {
      for (int k : {1, 2, 3, 5, 8}) {
        const double lhs = lambda_coefficient({k - 1, d}, alpha);
        const double rhs = lambda_coefficient({k, d}, alpha + 1) *
                           (k + d + alpha - 1.0) / (alpha + 1.0);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
      }
    }
  }
  // Spot check on frozen values: lambda_{2,3}^{(1)} from lambda_{3,3}^{(2)}.
  CHECK(lambda_coefficient({2, 3}, 1) ==
        doctest::Approx(lambda_coefficient({3, 3}, 2) * 6.0 / 2.0)
            .epsilon(1e-13));
}

TEST_CASE("absolute integral splits at the roots") {
  CHECK(legendre_abs_integral({1, 3}) == doctest::Approx(1.0).epsilon(1e-11));
  CHECK(legendre_abs_integral({2, 3}) ==
        doctest::Approx(4.0 * std::sqrt(3.0) / 9.0).epsilon(1e-11));
  CHECK(legendre_abs_integral({3, 3}) == doctest::Approx(0.65).epsilon(1e-11));
  // Against the sampled |P| with the weighted rule split by sign changes.
  for (int d : {4, 6}) {
    for (int k : {2, 5}) {
      double brute = 0.0;
      const int m = 200000;
      for (int i = 0; i < m; ++i) {
        const double t = -1.0 + 2.0 * (i + 0.5) / m;
        brute += std::abs(legendre_eval({k, d}, t)) *
                 std::pow(1.0 - t * t, (d - 3.0) / 2.0) * (2.0 / m);
      }
      CHECK(legendre_abs_integral({k, d}) ==
            doctest::Approx(brute).epsilon(1e-3));
    }
  }
}

TEST_CASE("normalization gamma frozen values") {
  CHECK(normalization_gamma({1, 3}) == doctest::Approx(4.0).epsilon(1e-11));
  CHECK(normalization_gamma({2, 3}) ==
        doctest::Approx(3.0 * std::sqrt(3.0)).epsilon(1e-11));
  CHECK(normalization_gamma({3, 4}) ==
        doctest::Approx(9.759677134264297564149).epsilon(1e-11));
  CHECK(normalization_gamma({2, 4}) ==
        doctest::Approx(7.255197456936871402376).epsilon(1e-11));
  for (int d : {3, 5}) {
    for (int k : {1, 2, 4}) {
      const double direct = 2.0 / (sphere_surface_ratio(d) *
                                   legendre_abs_integral({k, d}));
      CHECK(normalization_gamma({k, d}) ==
            doctest::Approx(direct).epsilon(1e-11));
      CHECK(normalization_gamma({k, d}, cached_weighted_rule(d)) ==
            doctest::Approx(direct).epsilon(1e-9));
    }
  }
}
