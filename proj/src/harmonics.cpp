#include "spheremetrics/harmonics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace spheremetrics {

namespace {

constexpr double kPi = 3.14159265358979323846;

double pos_pow(double x, int alpha) {
  if (x <= 0.0) return 0.0;
  return alpha == 0 ? 1.0 : ipow(x, alpha);
}

void check_index(LegendreIndex idx) {
  if (idx.d < 2) throw std::domain_error("legendre index requires d >= 2");
  if (idx.k < 0) throw std::domain_error("legendre index requires k >= 0");
}

double clamp_unit(double t) {
  if (t > 1.0) {
    if (t > 1.0 + 1e-12) throw std::domain_error("legendre argument outside [-1,1]");
    return 1.0;
  }
  if (t < -1.0) {
    if (t < -1.0 - 1e-12) throw std::domain_error("legendre argument outside [-1,1]");
    return -1.0;
  }
  return t;
}

// x^{n/2} for integer n, x > 0; sqrt is exactly rounded so this stays
// deterministic across libm versions (pow(x, 0.5*n) need not be).
double half_pow(double x, long long n) { return ipow(std::sqrt(x), n); }

}  // namespace

double ipow(double x, long long n) {
  if (n < 0) return 1.0 / ipow(x, -n);
  double result = 1.0;
  double base = x;
  while (n > 0) {
    if (n & 1) result *= base;
    base *= base;
    n >>= 1;
  }
  return result;
}

double ActivationSpec::operator()(double x) const {
  return a * pos_pow(x, alpha) + b * pos_pow(-x, alpha);
}

double ActivationSpec::right_derivative(double x) const {
  if (alpha == 0) return 0.0;
  if (x > 0.0) return a * alpha * pos_pow(x, alpha - 1);
  if (x < 0.0) return -b * alpha * pos_pow(-x, alpha - 1);
  return alpha == 1 ? a : 0.0;
}

void gauss_jacobi(int n, double a, double b, Eigen::VectorXd& nodes,
                  Eigen::VectorXd& weights) {
  if (n < 1) throw std::invalid_argument("gauss_jacobi needs n >= 1");
  if (a <= -1.0 || b <= -1.0)
    throw std::invalid_argument("gauss_jacobi needs exponents > -1");
  const double apb = a + b;
  Eigen::VectorXd diag(n), sub(std::max(n - 1, 0));
  diag[0] = (b - a) / (apb + 2.0);
  for (int m = 1; m < n; ++m) {
    const double den = (2.0 * m + apb) * (2.0 * m + apb + 2.0);
    diag[m] = (b * b - a * a) / den;
    const double d2 = (2.0 * m + apb) * (2.0 * m + apb);
    if (m == 1) {
      // (m + apb) cancels (2m + apb - 1) exactly at m = 1; the raw quotient
      // is 0/0 when a + b = -1.
      sub[0] = std::sqrt(4.0 * (1.0 + a) * (1.0 + b) / (d2 * (apb + 3.0)));
    } else {
      const double num = 4.0 * m * (m + a) * (m + b) * (m + apb);
      sub[m - 1] = std::sqrt(num / (d2 * (2.0 * m + apb + 1.0) * (2.0 * m + apb - 1.0)));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("gauss_jacobi eigen decomposition failed");
  const double mu0 = std::exp((apb + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) +
                              std::lgamma(b + 1.0) - std::lgamma(apb + 2.0));
  nodes = solver.eigenvalues();
  weights = mu0 * solver.eigenvectors().row(0).array().square();
}

QuadratureRule weighted_rule(int d, int order) {
  if (d < 2) throw std::domain_error("weighted_rule requires d >= 2");
  if (order < 1) throw std::invalid_argument("weighted_rule requires order >= 1");
  const double lam = (d - 3) / 2.0;
  Eigen::VectorXd u, wu;
  gauss_jacobi(order, lam, 0.0, u, wu);
  QuadratureRule rule;
  rule.order = order;
  rule.weight_exponent = lam;
  rule.nodes.resize(2 * order);
  rule.weights.resize(2 * order);
  // Map u in (-1,1) to the right half t = (1+u)/2 in (0,1); the left half is
  // the mirror image since the weight is even.
  for (int i = 0; i < order; ++i) {
    const double t = (1.0 + u[i]) / 2.0;
    const double w = wu[i] * half_pow((3.0 + u[i]) / 4.0, d - 3) * 0.5;
    rule.nodes[order + i] = t;
    rule.weights[order + i] = w;
    rule.nodes[order - 1 - i] = -t;
    rule.weights[order - 1 - i] = w;
  }
  return rule;
}

const QuadratureRule& cached_weighted_rule(int d, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{d, order}];
  if (!slot) slot = std::make_unique<QuadratureRule>(weighted_rule(d, order));
  return *slot;
}

double legendre_eval(LegendreIndex idx, double t) {
  check_index(idx);
  t = clamp_unit(t);
  if (idx.k == 0) return 1.0;
  double prev = 1.0;
  double cur = t;
  for (int k = 1; k < idx.k; ++k) {
    const double next =
        ((2.0 * k + idx.d - 2.0) * t * cur - k * prev) / (k + idx.d - 2.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

double legendre_derivative(LegendreIndex idx, double t, int j) {
  check_index(idx);
  if (j < 0) throw std::invalid_argument("derivative order must be >= 0");
  if (j == 0) return legendre_eval(idx, t);
  if (j > idx.k) return 0.0;
  const int k = idx.k, d = idx.d;
  double c;
  if (j == 1) {
    c = static_cast<double>(k) * (k + d - 2.0) / (d - 1.0);
  } else {
    c = std::exp(std::lgamma(k + 1.0) - std::lgamma(k - j + 1.0) +
                 std::lgamma(k + j + d - 2.0) - std::lgamma(k + d - 2.0) +
                 std::lgamma((d - 1.0) / 2.0) - j * std::log(2.0) -
                 std::lgamma(j + (d - 1.0) / 2.0));
  }
  return c * legendre_eval({k - j, d + 2 * j}, t);
}

std::vector<double> legendre_roots(LegendreIndex idx) {
  check_index(idx);
  if (idx.k == 0) return {};
  // P_{k,d} is proportional to the degree-k orthogonal polynomial of the
  // weight (1-t^2)^{(d-3)/2}, so its roots are the k-point Gauss nodes.
  const double lam = (idx.d - 3) / 2.0;
  Eigen::VectorXd nodes, weights;
  gauss_jacobi(idx.k, lam, lam, nodes, weights);
  std::vector<double> roots(nodes.data(), nodes.data() + nodes.size());
  std::sort(roots.begin(), roots.end());
  return roots;
}

double log_harmonic_dimension(LegendreIndex idx) {
  check_index(idx);
  if (idx.k == 0) return 0.0;
  const double k = idx.k, d = idx.d;
  return std::log(2.0 * k + d - 2.0) + std::lgamma(k + d - 2.0) -
         std::lgamma(k + 1.0) - std::lgamma(d - 1.0);
}

long long harmonic_dimension(LegendreIndex idx) {
  const double logn = log_harmonic_dimension(idx);
  if (logn > 62.0 * std::log(2.0))
    throw std::overflow_error("harmonic dimension exceeds 2^62");
  return std::llround(std::exp(logn));
}

double legendre_harmonic_eval(LegendreIndex idx, const Eigen::VectorXd& x) {
  check_index(idx);
  if (x.size() != idx.d)
    throw std::invalid_argument("point dimension does not match index");
  const double r = x.norm();
  if (r == 0.0) return idx.k == 0 ? 1.0 : 0.0;
  const double t = clamp_unit(x[idx.d - 1] / r);
  return ipow(r, idx.k) * legendre_eval(idx, t);
}

HarmonicGradient legendre_harmonic_grad(LegendreIndex idx,
                                        const Eigen::VectorXd& theta) {
  check_index(idx);
  if (theta.size() != idx.d)
    throw std::invalid_argument("point dimension does not match index");
  if (std::abs(theta.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("gradient requires a unit vector");
  const int k = idx.k, d = idx.d;
  HarmonicGradient grad;
  if (k == 0) {
    grad.euclidean = Eigen::VectorXd::Zero(d);
    grad.riemannian = Eigen::VectorXd::Zero(d);
    return grad;
  }
  const double t = clamp_unit(theta[d - 1]);
  const double slope = k * (k + d - 2.0) / (d - 1.0) * legendre_eval({k - 1, d + 2}, t);
  // Tangential part: slope * (e_d - t * theta); radial part adds k P theta.
  grad.riemannian = -slope * t * theta;
  grad.riemannian[d - 1] += slope;
  grad.euclidean = grad.riemannian + (k * legendre_eval(idx, t)) * theta;
  return grad;
}

double weighted_integral(const std::function<double(double)>& f, int d,
                         const QuadratureRule& rule) {
  if (rule.weight_exponent != (d - 3) / 2.0)
    throw std::invalid_argument("quadrature rule was built for a different d");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i)
    sum += rule.weights[i] * f(rule.nodes[i]);
  return sum;
}

double sphere_surface_ratio(int d) {
  if (d < 2) throw std::domain_error("sphere_surface_ratio requires d >= 2");
  return std::exp(std::lgamma(d / 2.0) - std::lgamma((d - 1) / 2.0)) /
         std::sqrt(kPi);
}

double legendre_abs_integral(LegendreIndex idx, int order) {
  check_index(idx);
  // Substituting t = cos(phi) turns the weight into sin(phi)^{d-2}, smooth
  // for every d >= 2; splitting at the roots of P removes the |.| kinks.
  std::vector<double> cuts{0.0};
  {
    auto roots = legendre_roots(idx);
    for (auto it = roots.rbegin(); it != roots.rend(); ++it)
      cuts.push_back(std::acos(clamp_unit(*it)));
  }
  cuts.push_back(kPi);
  std::sort(cuts.begin(), cuts.end());
  Eigen::VectorXd gl_nodes, gl_weights;
  gauss_jacobi(order, 0.0, 0.0, gl_nodes, gl_weights);
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double lo = cuts[s], hi = cuts[s + 1];
    const double half = (hi - lo) / 2.0, mid = (hi + lo) / 2.0;
    double piece = 0.0;
    for (int i = 0; i < order; ++i) {
      const double phi = mid + half * gl_nodes[i];
      const double sp = std::sin(phi);
      piece += gl_weights[i] * std::abs(legendre_eval(idx, std::cos(phi))) *
               ipow(sp, idx.d - 2);
    }
    total += half * piece;
  }
  return total;
}

double normalization_gamma(LegendreIndex idx) {
  const double mass = sphere_surface_ratio(idx.d) * legendre_abs_integral(idx);
  if (!(mass > 1e-280))
    throw std::runtime_error("normalization gamma: degenerate |P| mass");
  return 2.0 / mass;
}

double normalization_gamma(LegendreIndex idx, const QuadratureRule& rule) {
  const double mass = sphere_surface_ratio(idx.d) *
                      legendre_abs_integral(idx, std::max(16, rule.order));
  if (!(mass > 1e-280))
    throw std::runtime_error("normalization gamma: degenerate |P| mass");
  return 2.0 / mass;
}

double lambda_coefficient(LegendreIndex idx, int alpha) {
  check_index(idx);
  if (alpha < 0) throw std::invalid_argument("alpha must be >= 0");
  const int k = idx.k, d = idx.d;
  if (k > alpha) {
    if ((k - alpha) % 2 == 0) return 0.0;
    const double logv = std::lgamma(d / 2.0) - 0.5 * std::log(kPi) +
                        std::lgamma(alpha + 1.0) - k * std::log(2.0) +
                        std::lgamma(static_cast<double>(k - alpha)) -
                        std::lgamma((k - alpha + 1) / 2.0) -
                        std::lgamma((k + d + alpha) / 2.0);
    const double sign = ((k - 1 - alpha) / 2) % 2 == 0 ? 1.0 : -1.0;
    return sign * std::exp(logv);
  }
  // k <= alpha: the integrand P_{k,d}(t) t^alpha is a polynomial on [0,1],
  // integrated exactly by the half-interval rule.
  const QuadratureRule& rule = cached_weighted_rule(d);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
    const double t = rule.nodes[i];
    if (t <= 0.0) continue;
    sum += rule.weights[i] * legendre_eval(idx, t) * ipow(t, alpha);
  }
  return sphere_surface_ratio(d) * sum;
}

}  // namespace spheremetrics
