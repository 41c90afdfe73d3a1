#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

namespace spheremetrics {

// Gegenbauer/Legendre polynomial index: degree k on the sphere S^{d-1}.
// These are the polynomials orthogonal on [-1,1] under (1-t^2)^{(d-3)/2},
// normalized so P_{k,d}(1) = 1; d = 2 recovers the Chebyshev polynomials.
struct LegendreIndex {
  int k = 0;
  int d = 3;
};

// Activation a*(x)_+^alpha + b*(-x)_+^alpha. alpha = 0 means step functions.
struct ActivationSpec {
  int alpha = 1;
  double a = 1.0;
  double b = 0.0;

  double operator()(double x) const;
  // One-sided derivative from the right; kink conventions matter only at 0.
  double right_derivative(double x) const;

  static ActivationSpec relu() { return ActivationSpec{1, 1.0, 0.0}; }
};

// Nodes/weights for integrals against (1-t^2)^{(d-3)/2} dt on [-1,1].
// Assembled from two half-interval Jacobi rules so integrands with a kink
// at 0 (one-sided activations) keep spectral accuracy.
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  int order = 0;                 // points per half-interval
  double weight_exponent = 0.0;  // (d-3)/2, already folded into weights
};

// Gauss rule for \int_{-1}^1 g(u) (1-u)^a (1+u)^b du (Golub–Welsch).
void gauss_jacobi(int n, double a, double b, Eigen::VectorXd& nodes,
                  Eigen::VectorXd& weights);

QuadratureRule weighted_rule(int d, int order = 256);

// Shared cache of rules keyed by (d, order); reference stays valid.
const QuadratureRule& cached_weighted_rule(int d, int order = 256);

// Integer power by squaring; negative n inverts. Deterministic across libms.
double ipow(double x, long long n);

double legendre_eval(LegendreIndex idx, double t);

// j-th derivative, via the index shift
//   P_{k,d}^{(j)}(t) = c_{k,d,j} P_{k-j,d+2j}(t);  exact zero for j > k.
double legendre_derivative(LegendreIndex idx, double t, int j);

// Roots of P_{k,d}, ascending (empty for k = 0).
std::vector<double> legendre_roots(LegendreIndex idx);

// Dimension N_{k,d} of the degree-k spherical harmonic space on S^{d-1}.
double log_harmonic_dimension(LegendreIndex idx);
long long harmonic_dimension(LegendreIndex idx);

// Solid harmonic ||x||^k P_{k,d}(<e_d,x>/||x||), where e_d is the last
// coordinate axis; continuous extension 0 at the origin for k >= 1.
double legendre_harmonic_eval(LegendreIndex idx, const Eigen::VectorXd& x);

struct HarmonicGradient {
  Eigen::VectorXd euclidean;   // gradient of the solid harmonic in R^d
  Eigen::VectorXd riemannian;  // tangential gradient on the sphere
};

// Both gradients at a unit vector (||theta|| within 1e-12 of 1, else throws).
HarmonicGradient legendre_harmonic_grad(LegendreIndex idx,
                                        const Eigen::VectorXd& theta);

// \int f(t) (1-t^2)^{(d-3)/2} dt with the supplied rule (must match d).
double weighted_integral(const std::function<double(double)>& f, int d,
                         const QuadratureRule& rule);

// |S^{d-2}| / |S^{d-1}| = Gamma(d/2) / (sqrt(pi) Gamma((d-1)/2)).
double sphere_surface_ratio(int d);

// \int |P_{k,d}| (1-t^2)^{(d-3)/2} dt, split at the roots of P so every
// piece is smooth (a single global rule cannot reach 1e-8 here).
double legendre_abs_integral(LegendreIndex idx, int order = 64);

// gamma_{k,d} = 2 / (sphere_surface_ratio(d) * \int |P_{k,d}| dweight):
// the scale that makes (gamma L)_+ and (gamma (-L))_+ probability densities.
double normalization_gamma(LegendreIndex idx);
double normalization_gamma(LegendreIndex idx, const QuadratureRule& rule);

// Funk–Hecke coefficient of (t)_+^alpha against P_{k,d}:
//   sphere_surface_ratio(d) * \int P_{k,d}(t) (t)_+^alpha dweight.
// Exact zero for k > alpha with k = alpha (mod 2); Gamma closed form for
// k >= alpha+1; quadrature for k <= alpha where the closed form degenerates.
double lambda_coefficient(LegendreIndex idx, int alpha);

}  // namespace spheremetrics
